#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "slicedim/config.hpp"

namespace slicedim {

/// A pass/fail decision against a configured threshold. `lo`/`hi` bound the
/// accepted interval; a missing side is unbounded. Strict bounds exclude the
/// endpoint.
struct Verdict {
  std::string name;
  double value = 0.0;
  std::optional<double> lo;
  std::optional<double> hi;
  bool strict = false;
  bool passed = false;
  std::string note;
};

Verdict make_verdict(std::string name, double value, std::optional<double> lo, std::optional<double> hi,
                     bool strict = false);

/// Rows of text cells written as CSV.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void write_csv(std::ostream& out) const;
};

/// Shortest round-trip decimal representation.
std::string format_number(double x);

/// An extra artifact (construct writes the IFS, measure and cover).
struct Artifact {
  std::string name;
  std::string content;
};

struct ExperimentReport {
  Scenario scenario = Scenario::slice;
  nlohmann::json summary = nlohmann::json::object();
  nlohmann::json audit;  ///< null when no audit ran
  std::vector<Verdict> verdicts;
  std::vector<std::string> warnings;
  Table samples;
  Table scaling;
  std::vector<Artifact> artifacts;

  bool passed() const;
  nlohmann::json to_json() const;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Frostman constant, lower density and L2 density stability for the
/// scenario's sets; `certified` is true when every check passes.
nlohmann::json assumption_audit(const ExperimentConfig& config, const ProgressFn& progress = {});

ExperimentReport slice_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});
ExperimentReport product_slice_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});
ExperimentReport intersection_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});
ExperimentReport identity_check_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});
ExperimentReport audit_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});
ExperimentReport construct_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});
ExperimentReport energy_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});
ExperimentReport spherical_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

/// Dispatches on config.scenario.
ExperimentReport run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

/// Linear-interpolation quantile of unsorted data; NaN when empty.
double quantile(std::vector<double> values, double q);

}  // namespace slicedim
