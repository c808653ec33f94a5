#pragma once

// Named, seeded experiments driven by YAML scenario files, and their
// serialization to summary.json, CSV tables and SVG plots.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kllab/mixture.hpp"

namespace kllab::scenarios {

struct Record {
  std::string name;
  double value = 0.0;
  std::string unit;  // nats, bits, probability, utility, count, ...
};

struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Table {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const;
};

struct Plot {
  std::string name;  // file stem
  std::string svg;
};

struct RunResult {
  std::string scenario;
  std::string experiment;
  std::string description;
  std::optional<std::uint64_t> seed;
  std::vector<Record> records;
  std::vector<Assertion> assertions;
  std::vector<Table> tables;
  std::vector<Plot> plots;

  bool passed() const;
  const Record* record(const std::string& name) const;
  const Table* table(const std::string& name) const;
  std::string summary_json() const;
};

struct BuiltIn {
  std::string name;
  std::string description;
  std::string yaml;
};

/// The built-in scenarios, in listing order.
const std::vector<BuiltIn>& builtins();

/// Parsed scenario text plus command-line overrides.
class Scenario {
 public:
  /// Built-in name, else a path to a YAML file. Throws ConfigError.
  static Scenario load(const std::string& name_or_path);
  static Scenario parse(const std::string& text, const std::string& origin);

  /// Sets a dotted key to a YAML scalar or flow value.
  void set(const std::string& dotted_key, const std::string& value);
  void set_seed(std::uint64_t seed);
  /// Replaces the budget list with a single budget; ConfigError when the
  /// scenario has no budgets.
  void set_budget(double budget);

  const std::string& name() const { return name_; }
  const std::string& origin() const { return origin_; }
  std::string yaml() const;

  /// Runs the experiment. Throws ConfigError for invalid settings; theorem
  /// property violations are failed assertions in the result, not throws.
  RunResult run() const;

 private:
  struct Impl;
  Scenario() = default;
  std::shared_ptr<Impl> impl_;
  std::string name_;
  std::string origin_;
};

/// Writes summary.json, tables and (optionally) plots into out_dir/<name>.
/// The directory is assembled next to its destination and renamed into place.
std::filesystem::path write_result(const RunResult& r, const std::filesystem::path& out_dir,
                                   bool plots = true);

/// Shortest round-trip decimal; "inf", "-inf", "nan" for non-finite values.
std::string format_number(double x);

/// Version stamp written into every summary.
std::string toolchain_stamp();

}  // namespace kllab::scenarios
