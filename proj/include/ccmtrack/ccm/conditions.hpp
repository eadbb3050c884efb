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
#include <vector>

#include "ccmtrack/ccm/metric.hpp"
#include "ccmtrack/sysmodels/model.hpp"

namespace ccmtrack::ccm {

/// X + X^T.
Matrix hat(const Matrix& x);

/// count x dim matrix of unit row vectors drawn uniformly from the sphere.
Matrix unit_directions(int dim, int count, std::mt19937_64& rng);

/// Sampled PSD penalty: mean over the rows v of max(0, -v^T A v). A is
/// symmetrized first. With include_worst the eigenvector of the smallest
/// eigenvalue joins the sampled directions.
double psd_penalty_sampled(const Matrix& a, const Matrix& directions,
                           bool include_worst = false);
double psd_penalty_sampled(const Matrix& a, int count, std::mt19937_64& rng);

/// Exact PSD penalty: sum of max(0, -eig_i(A)).
double psd_penalty_exact(const Matrix& a);

/// Orthonormal basis of the null space of B^T (n x (n - m)). Returns
/// [I; 0] when the top n - m rows of B vanish. Throws std::runtime_error if
/// B is rank deficient.
Matrix annihilator(const Matrix& b);

/// Left-hand side of the closed-loop contraction condition
/// psi = dM/dt + hat(M (A + B K)) + 2 lambda M, where dM/dt is taken along
/// the closed-loop nominal velocity and A is evaluated at the controller
/// output.
Matrix ccm_lhs(const sysmodels::ControlAffineModel& model,
               const MetricNet& metric, const TrackingController& ctrl,
               const Vector& x, const Vector& x_ref, const Vector& u_ref,
               double lambda);

/// B_perp^T [W d_f M W + hat(df/dx W) + 2 lambda W] B_perp, using
/// d_f W = -W (d_f M) W.
Matrix dual_condition_c1(const sysmodels::ControlAffineModel& model,
                         const MetricNet& metric, const Vector& x,
                         double lambda);

/// One block per input column:
/// B_perp^T [-W (d_{b_i} M) W - hat(db_i/dx W)] B_perp.
std::vector<Matrix> dual_condition_c2(const sysmodels::ControlAffineModel& model,
                                      const MetricNet& metric, const Vector& x);

struct LossWeights {
  double lambda = 0.5;
  double alpha_lo = 0.1;
  double alpha_hi = 10.0;
  double sigma = 0.01;
  /// Add each matrix's least-favourable eigenvector to the sampled
  /// penalty directions (held constant when differentiating).
  bool worst_direction = true;
};

/// Per-sample loss terms with fixed penalty directions.
struct SampleLoss {
  double ccm = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double metric = 0.0;
  double total() const { return ccm + c1 + c2 + metric; }
};

/// Reference (non-differentiable) evaluation of the four loss terms for one
/// sample. full_dirs has n columns, reduced_dirs n - m columns.
SampleLoss sample_loss(const sysmodels::ControlAffineModel& model,
                       const MetricNet& metric, const TrackingController& ctrl,
                       const Vector& x, const Vector& x_ref,
                       const Vector& u_ref, const LossWeights& weights,
                       const Matrix& full_dirs, const Matrix& reduced_dirs);

}  // namespace ccmtrack::ccm
