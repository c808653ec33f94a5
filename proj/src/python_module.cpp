#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kllab/divergence.hpp"
#include "kllab/mixer.hpp"
#include "kllab/optimizers.hpp"
#include "kllab/pessimist.hpp"
#include "kllab/scenarios.hpp"
#include "kllab/toylang.hpp"

namespace py = pybind11;
using namespace kllab;

namespace {

py::dict solution_dict(const ConstrainedSolution& s) {
  py::dict d;
  d["value"] = s.achieved_value;
  d["constraint"] = s.achieved_constraint;
  d["multiplier"] = s.multiplier;
  d["certified"] = s.certified;
  d["expected_kl"] = s.expected_kl;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "KL-regularized imitation toolkit: mixtures, planners, divergences and the pessimistic imitator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_RuntimeError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
  py::register_exception<GradientUndefinedError>(m, "GradientUndefinedError", PyExc_ArithmeticError);
  py::register_exception<toylang::EncodingError>(m, "EncodingError", PyExc_ValueError);

  py::class_<History>(m, "History")
      .def(py::init<>())
      .def(py::init<std::vector<Symbol>>(), py::arg("symbols"))
      .def("symbols", &History::vector)
      .def("__len__", &History::size)
      .def("__repr__", [](const History& h) { return "History(" + h.str() + ")"; });
  py::implicitly_convertible<std::vector<Symbol>, History>();

  py::class_<SemiDistribution, std::shared_ptr<SemiDistribution>>(m, "SemiDistribution")
      .def_property_readonly("alphabet_size", &SemiDistribution::alphabet_size)
      .def("predict", &SemiDistribution::predict, py::arg("context"))
      .def("describe", &SemiDistribution::describe)
      .def("probability", [](const SemiDistribution& d, const History& h) { return joint_probability(d, h); });
  py::class_<UniformPredictor, SemiDistribution, std::shared_ptr<UniformPredictor>>(m, "UniformPredictor")
      .def(py::init<int>(), py::arg("alphabet_size"));
  py::class_<StationaryPredictor, SemiDistribution, std::shared_ptr<StationaryPredictor>>(m, "StationaryPredictor")
      .def(py::init<Distribution, Distribution>(), py::arg("action"), py::arg("observation"));
  py::class_<TabularPredictor, SemiDistribution, std::shared_ptr<TabularPredictor>>(m, "TabularPredictor")
      .def(py::init<int, int, std::vector<Distribution>, std::vector<Distribution>>(), py::arg("alphabet_size"),
           py::arg("order"), py::arg("action_rows"), py::arg("observation_rows"));
  py::class_<MixturePredictor, SemiDistribution, std::shared_ptr<MixturePredictor>>(m, "MixturePredictor")
      .def(py::init([](const ModelClassPosterior& cls) { return std::make_shared<MixturePredictor>(cls); }),
           py::arg("model_class"));

  py::class_<ModelClassPosterior>(m, "ModelClass")
      .def(py::init([](const std::vector<std::shared_ptr<SemiDistribution>>& models, std::vector<double> prior) {
             return ModelClassPosterior({models.begin(), models.end()}, std::move(prior));
           }),
           py::arg("models"), py::arg("prior"))
      .def_property_readonly("prior", &ModelClassPosterior::prior)
      .def("condition", &ModelClassPosterior::condition, py::arg("history"))
      .def("action_posterior", [](const ModelClassPosterior& c) { return c.posterior(Stream::action); })
      .def("observation_posterior", [](const ModelClassPosterior& c) { return c.posterior(Stream::observation); })
      .def("joint_posterior", &ModelClassPosterior::joint_posterior)
      .def("predict", [](const ModelClassPosterior& c) { return c.predict(); });

  py::class_<UtilityFunction>(m, "Utility")
      .def_static("observation_reward", &UtilityFunction::observation_reward_sum, py::arg("horizon"),
                  py::arg("reward"))
      .def_static("action_reward", &UtilityFunction::action_reward_sum, py::arg("horizon"), py::arg("reward"))
      .def_property_readonly("horizon", &UtilityFunction::horizon)
      .def("__call__", [](const UtilityFunction& u, const History& h) { return u(h); });

  m.def("stepwise_kl", &stepwise_kl, py::arg("p"), py::arg("q"));
  m.def(
      "lifetime_kl",
      [](const SemiDistribution& pi, const SemiDistribution& beta, const History& start, int horizon) {
        return lifetime_kl(pi, beta, start, horizon).value;
      },
      py::arg("policy"), py::arg("base"), py::arg("start"), py::arg("horizon"));
  m.def(
      "expected_lifetime_kl",
      [](const SemiDistribution& pi, const SemiDistribution& beta, const SemiDistribution& env, const History& start,
         int last_step) { return expected_lifetime_kl(pi, beta, env, start, last_step); },
      py::arg("policy"), py::arg("base"), py::arg("env"), py::arg("start"), py::arg("last_step"));
  m.def(
      "lifetime_tvd",
      [](const SemiDistribution& pi, const SemiDistribution& beta, const History& start, int horizon) {
        return lifetime_tvd(pi, beta, start, horizon).value;
      },
      py::arg("policy"), py::arg("base"), py::arg("start"), py::arg("horizon"));

  m.def(
      "optimal_value",
      [](const SemiDistribution& env, const UtilityFunction& u, const History& start) {
        return optimal_value(env, u, start);
      },
      py::arg("env"), py::arg("utility"), py::arg("start") = History{});
  m.def(
      "policy_value",
      [](const SemiDistribution& env, const SemiDistribution& pi, const UtilityFunction& u, const History& start) {
        return policy_value(env, pi, u, start);
      },
      py::arg("env"), py::arg("policy"), py::arg("utility"), py::arg("start") = History{});
  m.def(
      "kl_constrained_optimize",
      [](const SemiDistribution& env, const SemiDistribution& beta, const UtilityFunction& u, const History& start,
         double budget) { return solution_dict(kl_constrained_optimize(env, beta, u, start, budget)); },
      py::arg("env"), py::arg("base"), py::arg("utility"), py::arg("start"), py::arg("budget"));

  m.def("mixed_kl", &mixed_kl, py::arg("proposed"), py::arg("base"), py::arg("alpha"));
  m.def(
      "solve_alpha",
      [](Distribution a, Distribution b, double target) {
        const auto s = solve_alpha({std::move(a), std::move(b), target});
        return py::make_tuple(s.alpha, s.achieved_kl);
      },
      py::arg("proposed"), py::arg("base"), py::arg("target_kl"));
  m.def(
      "alpha_gradients",
      [](Distribution a, Distribution b, double target, double alpha) {
        const auto g = alpha_gradients({std::move(a), std::move(b), target}, alpha);
        return py::make_tuple(g.d_target, g.d_proposed);
      },
      py::arg("proposed"), py::arg("base"), py::arg("target_kl"), py::arg("alpha"));
  py::class_<KLBudgetLedger>(m, "KLBudgetLedger")
      .def(py::init<double>(), py::arg("total_nats"))
      .def_property_readonly("total", &KLBudgetLedger::total)
      .def_property_readonly("spent", &KLBudgetLedger::spent)
      .def_property_readonly("remaining", &KLBudgetLedger::remaining)
      .def("step", &KLBudgetLedger::step, py::arg("policy_prob"), py::arg("base_prob"))
      .def("step_target", &KLBudgetLedger::step_target, py::arg("activation"));

  m.def(
      "top_set", [](const std::vector<double>& w, double alpha) { return top_set(w, alpha).members; },
      py::arg("posterior"), py::arg("alpha"));
  m.def(
      "pessimistic_predict",
      [](const ModelClassPosterior& state, double alpha) {
        const auto p = pessimistic_predict(state, alpha);
        return py::make_tuple(p.minimum, p.help_mass);
      },
      py::arg("state"), py::arg("alpha"));

  py::class_<toylang::Language>(m, "Language")
      .def(py::init<int>(), py::arg("alphabet_size"))
      .def("kraft_sum", &toylang::Language::kraft_sum, py::arg("depth"))
      .def_property_readonly("max_program_length", &toylang::Language::max_program_length)
      .def("integer_length", &toylang::Language::integer_length, py::arg("value"))
      .def("timestep_event_length", &toylang::Language::timestep_event_length, py::arg("t"))
      .def("tag_table", &toylang::Language::tag_table);

  m.def("builtin_scenarios", [] {
    std::vector<std::string> names;
    for (const auto& b : scenarios::builtins()) names.push_back(b.name);
    return names;
  });
  m.def(
      "run_scenario",
      [](const std::string& name, std::optional<std::uint64_t> seed) {
        auto s = scenarios::Scenario::load(name);
        if (seed) s.set_seed(*seed);
        scenarios::RunResult r;
        {
          py::gil_scoped_release release;
          r = s.run();
        }
        return r.summary_json();
      },
      py::arg("name"), py::arg("seed") = py::none(),
      "Runs a built-in scenario or YAML file and returns its summary as JSON text.");
}
