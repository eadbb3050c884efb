/*
 Copyright 2026 The ccm-track Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccmtrack/bench/reference.hpp"
#include "ccmtrack/ccm/training.hpp"
#include "ccmtrack/online/runner.hpp"

namespace ccmtrack::bench {

enum class RmseSelector { kFullState, kPosition };

/// Full state for TSR and the test plants, (p_x, p_z) for PVTOL.
RmseSelector default_selector(const std::string& model_id);

/// sqrt(mean_k ||sel(x_k) - sel(x*_k)||^2). Throws std::invalid_argument on
/// an empty log.
double rmse(const online::TrajectoryLog& log, RmseSelector selector);

/// 100 (1 - rmse_ol / rmse_ccm).
double improvement_pct(double rmse_ccm, double rmse_ol);

struct ExperimentConfig {
  std::string model_id = "tsr";
  /// "benchmark" (true disturbance) or "zero-disturbance".
  std::string scenario = "benchmark";
  /// Seconds; 0 picks the model default (TSR 15, PVTOL 10).
  double horizon = 0.0;
  std::uint64_t seed = 0;
  online::OnlineConfig online;
  std::filesystem::path ccm_path;
  std::filesystem::path output_dir;
  /// Uniform samples for the tube sup.
  int tube_samples = 100000;
  /// Runs the two paired simulations concurrently when >= 2.
  int threads = 1;

  /// Defaults for a benchmark: buffer 20 (TSR) or 10 (PVTOL).
  static ExperimentConfig defaults_for(const std::string& model_id);
  double effective_horizon() const;
  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

struct TimingStat {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  int repeats = 0;
};

struct MetricsReport {
  double rmse_ccm = 0.0;
  double rmse_ol = 0.0;
  double improvement_pct = 0.0;
  /// TSR only: final (z1, z2) of the online run within 0.01 of the target.
  std::optional<bool> deployment_reached;
  /// Fraction of u_ccm steps inside the nominal tube.
  double tube_containment = 0.0;
  double tube_radius_nominal = 0.0;
  double tube_radius_refined = 0.0;
  double estimation_error_bound = 0.0;
  /// Post-warm-up mean of ||H - h|| / (1 + ||h||) on the online run.
  double relative_estimation_error = 0.0;
  /// Fraction of updates whose window loss did not increase.
  double descent_fraction = 0.0;
  double max_control_gap = 0.0;
  bool completed_ccm = true;
  bool completed_ol = true;
  std::string input_digest_ccm;
  std::string input_digest_ol;
  std::map<int, TimingStat> timing;
};

struct ExperimentResult {
  MetricsReport metrics;
  ReferenceTrajectory reference;
  online::TrajectoryLog log_ccm;
  online::TrajectoryLog log_ol;
};

/// True disturbance of a benchmark ("tsr" or "pvtol"). Throws
/// std::invalid_argument for other ids.
sysmodels::DisturbanceField benchmark_disturbance(const std::string& model_id);
/// Zero field for the "zero-disturbance" scenario, else the benchmark field.
sysmodels::DisturbanceField scenario_disturbance(const ExperimentConfig& config, int control_dim);

/// Reference for the model, seeded by config.seed.
ReferenceTrajectory make_reference(const ExperimentConfig& config);
/// Standard initial displacement from x*(0).
Vector initial_offset(const std::string& model_id, int state_dim);

/// Paired runs (u_ccm only, then with online learning) sharing reference, seed,
/// initial state and disturbance, followed by the tube analysis.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const ccm::CCMCheckpoint& ckpt);
/// Loads the checkpoint from config.ccm_path.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Wall time of one update_disturbance call per buffer capacity, after two
/// untimed warm-up calls.
std::map<int, TimingStat> timing_bench(const sysmodels::ControlAffineModel& model,
                                       const std::vector<int>& capacities,
                                       int repeats, std::uint64_t seed,
                                       const online::OnlineConfig& online = {});

/// Rounded to 6 significant digits; timing only when present.
nlohmann::json metrics_json(const MetricsReport& report);

/// Writes log_ccm.csv, log_ol.csv and metrics.json into config.output_dir.
void write_outputs(const ExperimentConfig& config, const ExperimentResult& result);

/// FNV-1a digest of a run's inputs (reference, initial state, seed,
/// disturbance name), as 16 hex digits.
std::string input_digest(const ReferenceTrajectory& ref, const Vector& x0,
                         std::uint64_t seed, const std::string& disturbance);

}  // namespace ccmtrack::bench
