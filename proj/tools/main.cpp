// kllab: runs named scenarios and writes their results.
//
//   kllab list
//   kllab run <scenario|file>... [--out DIR] [--seed N] [--budget X] [--set key=value]...
//   kllab show <scenario|file>
//   kllab dump-language [--alphabet N]
//
// Exit status: 0 success, 1 configuration error, 2 a theorem property failed.

#include <cstdlib>
#include <future>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "kllab/scenarios.hpp"
#include "kllab/toylang.hpp"

namespace sc = kllab::scenarios;

namespace {

constexpr int kOk = 0, kConfig = 1, kAssertion = 2;

struct RunArgs {
  std::vector<std::string> scenarios;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> budget;
  std::vector<std::string> overrides;
  bool no_plots = false;
};

int run(const RunArgs& args) {
  std::vector<sc::Scenario> loaded;
  try {
    for (const auto& name : args.scenarios) {
      sc::Scenario s = sc::Scenario::load(name);
      for (const auto& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw kllab::ConfigError("--set expects key=value, got '" + kv + "'");
        s.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (args.seed) s.set_seed(*args.seed);
      if (args.budget) s.set_budget(*args.budget);
      loaded.push_back(std::move(s));
    }
  } catch (const kllab::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  }

  std::string out = args.out;
  if (out.empty()) {
    const char* env = std::getenv("KLLAB_OUT");
    out = env && *env ? env : "results";
  }

  std::vector<std::future<sc::RunResult>> jobs;
  for (const auto& s : loaded) jobs.push_back(std::async(std::launch::async, [&s] { return s.run(); }));
  int status = kOk;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    try {
      const sc::RunResult r = jobs[i].get();
      const auto dir = sc::write_result(r, out, !args.no_plots);
      std::cout << r.scenario << ": " << (r.passed() ? "ok" : "FAILED") << " -> " << dir.string() << "\n";
      for (const auto& a : r.assertions)
        if (!a.passed) std::cout << "  assertion failed: " << a.name << " (" << a.detail << ")\n";
      if (!r.passed() && status == kOk) status = kAssertion;
    } catch (const kllab::ConfigError& e) {
      std::cerr << "configuration error: " << e.what() << "\n";
      status = kConfig;
    } catch (const std::exception& e) {
      std::cerr << loaded[i].name() << ": error: " << e.what() << "\n";
      status = kConfig;
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"KL-regularization experiments over Bayesian imitators"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "run one or more scenarios (built-in names or YAML files)");
  run_cmd->add_option("scenario", run_args.scenarios, "scenario names or files")->required();
  run_cmd->add_option("--out", run_args.out, "output directory (default: $KLLAB_OUT or ./results)");
  run_cmd->add_option("--seed", run_args.seed, "override the scenario seed");
  run_cmd->add_option("--budget", run_args.budget, "replace the budget list with one budget");
  run_cmd->add_option("--set", run_args.overrides, "override a key, e.g. --set horizon=4")->take_all();
  run_cmd->add_flag("--no-plots", run_args.no_plots, "skip SVG output");

  auto* list_cmd = app.add_subcommand("list", "list built-in scenarios");

  std::string show_name;
  auto* show_cmd = app.add_subcommand("show", "print a scenario's YAML");
  show_cmd->add_option("scenario", show_name)->required();

  int alphabet = 2;
  auto* dump_cmd = app.add_subcommand("dump-language", "print the program language's tag table");
  dump_cmd->add_option("--alphabet", alphabet, "alphabet size")->check(CLI::Range(2, 8));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (*run_cmd) return run(run_args);
  if (*list_cmd) {
    for (const auto& b : sc::builtins()) std::cout << b.name << "  " << b.description << "\n";
    return kOk;
  }
  if (*show_cmd) {
    try {
      std::cout << sc::Scenario::load(show_name).yaml();
    } catch (const kllab::ConfigError& e) {
      std::cerr << "configuration error: " << e.what() << "\n";
      return kConfig;
    }
    return kOk;
  }
  if (*dump_cmd) {
    std::cout << kllab::toylang::Language(alphabet).tag_table();
    return kOk;
  }
  return kOk;
}
