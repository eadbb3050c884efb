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
#include <functional>
#include <string>
#include <vector>

#include "ccmtrack/ccm/loss.hpp"

namespace ccmtrack::ccm {

struct CCMHyperParams {
  double lambda = 0.5;
  double alpha_lo = 0.1;
  double alpha_hi = 10.0;
  double sigma = 0.01;
  int penalty_samples = 32;
  bool worst_direction = true;
  int batch_size = 1024;
  int steps = 10000;
  int dataset_size = 130000;
  double learning_rate = 1e-3;
  /// Cosine decay of the learning rate to lr_floor * learning_rate at the
  /// last step; 1 keeps it constant.
  double lr_floor = 1.0;
  std::vector<int> hidden{128, 128};
  /// Fraction of the training set drawn with x near x*: x = x* + d, d
  /// uniform within near_radius times the state box half-widths, clipped to
  /// the box. 0 gives the plain uniform set.
  double near_fraction = 0.0;
  double near_radius = 0.1;
  /// Inner dimension of the controller gain factors; 0 means n.
  int controller_inner = 0;
  std::uint64_t seed = 0;

  LossWeights weights() const {
    return {lambda, alpha_lo, alpha_hi, sigma, worst_direction};
  }
  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

/// N tuples drawn uniformly from state box x state box x control box.
SampleBatch sample_dataset(const sysmodels::ControlAffineModel& model, int count,
                           std::mt19937_64& rng);
/// Same, with the last round(near_fraction N) tuples drawn near the diagonal
/// (see CCMHyperParams::near_fraction).
SampleBatch sample_dataset(const sysmodels::ControlAffineModel& model, int count,
                           std::mt19937_64& rng, double near_fraction, double near_radius);

/// Raised when the training loss stops being finite.
class TrainingDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainingReport {
  std::vector<double> loss_trace;
  /// Fraction of a fixed held-out set whose max eig(M) exceeds alpha_hi,
  /// before and after training.
  double upper_violation_initial = 0.0;
  double upper_violation_final = 0.0;
  double seconds = 0.0;
  std::string mode = "single-threaded";
};

struct TrainedCCM {
  MetricNet metric;
  TrackingController controller;
  TrainingReport report;
};

/// Optional per-step observer (step, loss).
using TrainingObserver = std::function<void(int, double)>;

/// Minibatch Adam over all three networks on the empirical loss. Penalty
/// directions are redrawn every step and shared across the batch.
TrainedCCM train_ccm(const sysmodels::ControlAffineModel& model,
                     const CCMHyperParams& hyper,
                     const TrainingObserver& observer = {});

/// Same, starting from the given networks instead of a fresh initialization.
TrainedCCM train_ccm(const sysmodels::ControlAffineModel& model,
                     const CCMHyperParams& hyper, MetricNet metric,
                     TrackingController controller,
                     const TrainingObserver& observer = {});

struct ContractionAudit {
  double violation_rate = 0.0;
  double worst_max_eig = 0.0;
  double alpha_lo_emp = 0.0;
  double alpha_hi_emp = 0.0;
  double mean_penalty = 0.0;
  int samples = 0;
};

/// Exact eigenvalue audit of psi on fresh uniform samples. A sample violates
/// the condition when max eig(psi) >= 0.
ContractionAudit verify_contraction(const sysmodels::ControlAffineModel& model,
                                    const MetricNet& metric,
                                    const TrackingController& ctrl,
                                    double lambda, int n_samples,
                                    std::mt19937_64& rng);

/// Fraction of samples with max eig(M(x)) > alpha_hi.
double upper_bound_violation(const MetricNet& metric, const Matrix& xs,
                             double alpha_hi);

struct CCMMetadata {
  std::string model_id;
  double lambda = 0.5;
  double alpha_lo = 0.1;
  double alpha_hi = 10.0;
  double sigma = 0.01;
  int dataset_size = 0;
  std::uint64_t seed = 0;
  double violation_rate = -1.0;
  double alpha_lo_emp = 0.0;
  double alpha_hi_emp = 0.0;
};

struct CCMCheckpoint {
  MetricNet metric;
  TrackingController controller;
  CCMMetadata meta;
};

/// Writes metric.json, controller_w1.json, controller_w2.json and meta.json
/// into dir (created if missing).
void save_ccm(const std::filesystem::path& dir, const CCMCheckpoint& ckpt);
/// Throws std::runtime_error if any document is missing or malformed.
CCMCheckpoint load_ccm(const std::filesystem::path& dir);

}  // namespace ccmtrack::ccm
