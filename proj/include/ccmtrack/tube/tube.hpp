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

#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccmtrack/ccm/metric.hpp"
#include "ccmtrack/online/trajectory_log.hpp"
#include "ccmtrack/sysmodels/model.hpp"

namespace ccmtrack::tube {

using sysmodels::Matrix;
using sysmodels::Vector;

/// Ellipsoidal tube {x : (x - x*)^T M_lower (x - x*) <= c_bar^2}.
struct TubeEstimate {
  double overshoot = 1.0;
  double c_bar = 0.0;
  Matrix m_lower;
  /// "nominal" (input-matrix bound) or "refined" (estimation-error bound).
  std::string provenance = "nominal";
  int samples = 0;
  double lambda = 0.5;
  double alpha_lo = 0.0;
  double alpha_hi = 0.0;
  /// H_bar for nominal tubes, e_H for refined ones.
  double bound_used = 0.0;
};

struct ConstraintBox {
  sysmodels::Box state;
  sysmodels::Box control;
};

/// sqrt(alpha_hi / alpha_lo). Throws std::invalid_argument unless
/// 0 < alpha_lo <= alpha_hi.
double overshoot(double alpha_lo, double alpha_hi);

/// Principal square root of a symmetric positive definite matrix.
Matrix metric_sqrt(const Matrix& m);

struct SupOptions {
  int n_samples = 100000;
  /// Extra states (for example the visited states of a run) added to the
  /// uniform samples.
  std::vector<Vector> extra_states;
  /// Multiplier applied to the sampled maximum.
  double inflation = 1.05;
};

/// Sampled maximum over the state box (plus extra states) of the largest
/// singular value of Theta(x) B(x), or of Theta(x) alone when
/// with_input_matrix is false. Throws std::runtime_error if the metric is
/// not positive definite at a sample.
double sampled_gain_sup(const sysmodels::ControlAffineModel& model,
                        const ccm::MetricNet& metric, bool with_input_matrix,
                        const SupOptions& options, std::mt19937_64& rng);

/// inflation * sup sigma_max(Theta B) * H_bar / lambda.
double tube_radius(const sysmodels::ControlAffineModel& model,
                   const ccm::MetricNet& metric, double lambda, double h_bar,
                   const SupOptions& options, std::mt19937_64& rng);

/// inflation * sup sigma_max(Theta) * e_H / lambda, or with Theta B when
/// with_input_matrix is set.
double refined_tube_radius(const sysmodels::ControlAffineModel& model,
                           const ccm::MetricNet& metric, double lambda,
                           double e_h, const SupOptions& options,
                           std::mt19937_64& rng, bool with_input_matrix = false);

/// Radius from a precomputed sup; exact in bound and 1/lambda.
double radius_from_sup(double sup, double bound, double lambda);

/// Quantile of ||H_hat - h|| over log rows from index skip on.
/// Throws std::invalid_argument if no rows remain.
double estimation_error_bound(const online::TrajectoryLog& log, int skip,
                              double quantile = 0.99);

/// Tube with M_lower = alpha_lo I in n dimensions.
TubeEstimate make_tube(int state_dim, double c_bar, double alpha_lo,
                       double alpha_hi, double lambda, double bound_used,
                       const std::string& provenance, int samples);

/// (x - x*)^T M_lower (x - x*) <= c_bar^2.
bool rci_contains(const TubeEstimate& tube, const Vector& x, const Vector& x_ref);

/// Fraction of log rows whose state lies in the tube around the reference.
double containment_fraction(const TubeEstimate& tube, const online::TrajectoryLog& log);

struct TightenedConstraints {
  ConstraintBox box;
  Vector state_margin;
  Vector control_margin;
  /// False when some axis has lower > upper after tightening.
  bool feasible = true;
};

/// Shrinks each state axis by c_bar sqrt((M_lower^-1)_ii) and each control
/// axis by the sampled max of |k_i(x, x*)| over x in the tube around x*,
/// with x* drawn from the state box.
TightenedConstraints tighten_constraints(const ConstraintBox& box,
                                         const TubeEstimate& tube,
                                         const ccm::TrackingController& ctrl,
                                         int n_samples, std::mt19937_64& rng);

nlohmann::json to_json(const sysmodels::Box& box);

/// {provenance, R, c_bar, alpha_lo, alpha_hi, lambda, bound_used, samples,
///  tightened_state_box, tightened_control_box, feasible}.
nlohmann::json tube_report(const TubeEstimate& tube, const TightenedConstraints& tight);

}  // namespace ccmtrack::tube
