#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridflex/dispatch.hpp"
#include "gridflex/network.hpp"
#include "gridflex/results.hpp"
#include "gridflex/stochastic.hpp"

namespace gridflex {

/// Per-interval load multipliers: row = scenario, column = interval.
struct ScenarioSet {
  Eigen::MatrixXd multipliers;
  std::uint64_t seed = 0;
  bool outlier_included = false;
};

enum class AssessMode { Det, Sto, Both };

struct RunConfig {
  int intervals = 24;
  double interval_minutes = 5.0;
  double delta_d_fraction = 0.5;  // half-width = fraction * nominal load
  double beta = 0.05;
  AssessMode mode = AssessMode::Both;
  bool include_storage = true;
  int scenario_count = 1;      // 1 with no outlier = single-scenario mode
  bool include_outlier = false;
  std::uint64_t seed = 0;
  DispatchConfig dispatch;  // ess_energy_step_hours is overridden per interval
  DroOptions dro;
};

/// Startup dispatch fixing p_prev for a first interval: ramp limits are
/// lifted so any point inside capacity is reachable; stored energy starts at
/// each unit's e_initial.
IntervalState startup_state(const Network& net, const DispatchConfig& cfg);

/// scenario_count rows over cfg.intervals columns; when the outlier flag is
/// set the last row is all 1.09 and the uniform draws fill the rest.
ScenarioSet generate_scenarios(const RunConfig& cfg, int count,
                               std::uint64_t seed);

struct ScenarioTraceRow {
  int interval = 0;  // 1-based
  int scenario = 0;  // 1-based
  std::optional<double> lambda_det;
  std::optional<double> lambda_sto;
};

struct RunOutput {
  std::vector<IntervalResult> results;
  std::vector<ScenarioTraceRow> trace;  // per-scenario detail (multi-scenario)
  bool completed = true;
  std::string diagnostic;  // set when the run halts early
};

/// Sequential dispatch over cfg.intervals intervals. Each interval fixes the
/// trajectory with a nominal dispatch at the case loads, assesses the
/// tolerated hyperbox (per scenario when a scenario set is given, reporting
/// the minimum), then advances ramp and storage state from the nominal
/// dispatch. An infeasible nominal dispatch halts the run with the results
/// collected so far.
RunOutput run_sequence(const Network& net, const RunConfig& cfg,
                       const ScenarioSet* scenarios = nullptr);

struct EssSensitivity {
  RunOutput with_storage;
  RunOutput without_storage;
};

/// Two runs differing only in whether storage participates.
EssSensitivity run_ess_sensitivity(const Network& net, const RunConfig& cfg,
                                   const ScenarioSet* scenarios = nullptr);

}  // namespace gridflex
