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

#include "ccmtrack/tube/tube.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ccmtrack::tube {

namespace {

constexpr Eigen::Index kChunk = 4096;

std::vector<double> to_vector(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Largest squared singular value of Theta B (or Theta) for each column of xs.
// sigma_max(Theta B)^2 = lambda_max(B^T M B) for any factor with
// Theta^T Theta = M.
double chunk_sup(const sysmodels::ControlAffineModel& model,
                 const ccm::MetricNet& metric, bool with_input_matrix,
                 const Matrix& xs) {
  const int n = metric.state_dim();
  const Matrix factors = metric.net.forward(xs);
  double best = 0.0;
  for (Eigen::Index j = 0; j < xs.cols(); ++j) {
    const Matrix f = factors.col(j).reshaped(n, n);
    Matrix m = f.transpose() * f;
    m.diagonal().array() += metric.alpha_lo;
    Matrix target = m;
    if (with_input_matrix) {
      const Matrix b = model.input_matrix(xs.col(j));
      target = b.transpose() * m * b;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(target, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success || !eig.eigenvalues().allFinite()) {
      throw std::runtime_error("sampled_gain_sup: metric factorization failed");
    }
    best = std::max(best, eig.eigenvalues().maxCoeff());
  }
  return best;
}

}  // namespace

double overshoot(double alpha_lo, double alpha_hi) {
  if (!(alpha_lo > 0.0) || !(alpha_hi >= alpha_lo)) {
    throw std::invalid_argument("overshoot: need 0 < alpha_lo <= alpha_hi");
  }
  return std::sqrt(alpha_hi / alpha_lo);
}

Matrix metric_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
    throw std::runtime_error("metric_sqrt: matrix is not positive definite");
  }
  return eig.operatorSqrt();
}

double sampled_gain_sup(const sysmodels::ControlAffineModel& model,
                        const ccm::MetricNet& metric, bool with_input_matrix,
                        const SupOptions& options, std::mt19937_64& rng) {
  if (options.n_samples < 0) throw std::invalid_argument("sampled_gain_sup: negative sample count");
  const int n = metric.state_dim();
  double best = 0.0;
  for (int start = 0; start < options.n_samples; start += kChunk) {
    const auto count = std::min<Eigen::Index>(kChunk, options.n_samples - start);
    Matrix xs(n, count);
    for (Eigen::Index j = 0; j < count; ++j) xs.col(j) = model.state_box().sample(rng);
    best = std::max(best, chunk_sup(model, metric, with_input_matrix, xs));
  }
  for (std::size_t start = 0; start < options.extra_states.size(); start += kChunk) {
    const auto count = std::min<std::size_t>(kChunk, options.extra_states.size() - start);
    Matrix xs(n, static_cast<Eigen::Index>(count));
    for (std::size_t j = 0; j < count; ++j) {
      xs.col(static_cast<Eigen::Index>(j)) = options.extra_states[start + j];
    }
    best = std::max(best, chunk_sup(model, metric, with_input_matrix, xs));
  }
  return options.inflation * std::sqrt(best);
}

double radius_from_sup(double sup, double bound, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("tube radius: lambda must be > 0");
  if (!(bound >= 0.0)) throw std::invalid_argument("tube radius: bound must be >= 0");
  return sup * (bound / lambda);
}

double tube_radius(const sysmodels::ControlAffineModel& model,
                   const ccm::MetricNet& metric, double lambda, double h_bar,
                   const SupOptions& options, std::mt19937_64& rng) {
  return radius_from_sup(sampled_gain_sup(model, metric, true, options, rng), h_bar, lambda);
}

double refined_tube_radius(const sysmodels::ControlAffineModel& model,
                           const ccm::MetricNet& metric, double lambda,
                           double e_h, const SupOptions& options,
                           std::mt19937_64& rng, bool with_input_matrix) {
  return radius_from_sup(sampled_gain_sup(model, metric, with_input_matrix, options, rng),
                         e_h, lambda);
}

double estimation_error_bound(const online::TrajectoryLog& log, int skip,
                              double quantile) {
  if (!(quantile > 0.0 && quantile <= 1.0)) {
    throw std::invalid_argument("estimation_error_bound: quantile must be in (0, 1]");
  }
  std::vector<double> errors;
  for (std::size_t k = static_cast<std::size_t>(std::max(skip, 0)); k < log.rows.size(); ++k) {
    errors.push_back((log.rows[k].h_hat - log.rows[k].h_true).norm());
  }
  if (errors.empty()) throw std::invalid_argument("estimation_error_bound: no rows after skip");
  std::sort(errors.begin(), errors.end());
  const auto rank = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(errors.size())));
  return errors[std::max<std::size_t>(rank, 1) - 1];
}

TubeEstimate make_tube(int state_dim, double c_bar, double alpha_lo,
                       double alpha_hi, double lambda, double bound_used,
                       const std::string& provenance, int samples) {
  TubeEstimate tube;
  tube.overshoot = overshoot(alpha_lo, alpha_hi);
  if (!(c_bar >= 0.0)) throw std::invalid_argument("make_tube: c_bar must be >= 0");
  tube.c_bar = c_bar;
  tube.m_lower = alpha_lo * Matrix::Identity(state_dim, state_dim);
  tube.provenance = provenance;
  tube.samples = samples;
  tube.lambda = lambda;
  tube.alpha_lo = alpha_lo;
  tube.alpha_hi = alpha_hi;
  tube.bound_used = bound_used;
  return tube;
}

bool rci_contains(const TubeEstimate& tube, const Vector& x, const Vector& x_ref) {
  const Vector e = x - x_ref;
  return e.dot(tube.m_lower * e) <= tube.c_bar * tube.c_bar;
}

double containment_fraction(const TubeEstimate& tube, const online::TrajectoryLog& log) {
  if (log.rows.empty()) return 0.0;
  std::size_t inside = 0;
  for (const auto& row : log.rows) {
    if (rci_contains(tube, row.x, row.x_ref)) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(log.rows.size());
}

TightenedConstraints tighten_constraints(const ConstraintBox& box,
                                         const TubeEstimate& tube,
                                         const ccm::TrackingController& ctrl,
                                         int n_samples, std::mt19937_64& rng) {
  const int n = box.state.dim();
  const int m = box.control.dim();
  if (tube.m_lower.rows() != n || ctrl.state_dim != n || ctrl.control_dim != m) {
    throw std::invalid_argument("tighten_constraints: dimension mismatch");
  }
  if (!std::isfinite(tube.c_bar)) throw std::invalid_argument("tighten_constraints: radius not finite");

  TightenedConstraints out;
  const Matrix m_inv = tube.m_lower.inverse();
  out.state_margin = tube.c_bar * m_inv.diagonal().cwiseSqrt();

  // x = x* + Theta^-1 y with |y| <= c_bar stays in the tube.
  const Matrix theta_inv = metric_sqrt(tube.m_lower).inverse();
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  out.control_margin = Vector::Zero(m);
  for (int s = 0; s < n_samples && tube.c_bar > 0.0; ++s) {
    const Vector x_ref = box.state.sample(rng);
    Vector dir(n);
    for (int i = 0; i < n; ++i) dir(i) = normal(rng);
    if (dir.norm() == 0.0) continue;
    // Alternate boundary and interior points.
    const double r = s % 2 == 0 ? 1.0 : std::pow(unit(rng), 1.0 / n);
    const Vector x = x_ref + theta_inv * (tube.c_bar * r / dir.norm() * dir);
    out.control_margin = out.control_margin.cwiseMax(ctrl.feedback(x, x_ref).cwiseAbs());
  }

  // Assigned field-wise: an infeasible result is reported, not thrown.
  out.box.state.lower = box.state.lower + out.state_margin;
  out.box.state.upper = box.state.upper - out.state_margin;
  out.box.control.lower = box.control.lower + out.control_margin;
  out.box.control.upper = box.control.upper - out.control_margin;
  out.feasible = (out.box.state.lower.array() <= out.box.state.upper.array()).all() &&
                 (out.box.control.lower.array() <= out.box.control.upper.array()).all();
  return out;
}

nlohmann::json to_json(const sysmodels::Box& box) {
  return {{"lower", to_vector(box.lower)}, {"upper", to_vector(box.upper)}};
}

nlohmann::json tube_report(const TubeEstimate& tube, const TightenedConstraints& tight) {
  return {{"provenance", tube.provenance},
          {"R", tube.overshoot},
          {"c_bar", tube.c_bar},
          {"alpha_lo", tube.alpha_lo},
          {"alpha_hi", tube.alpha_hi},
          {"lambda", tube.lambda},
          {"bound_used", tube.bound_used},
          {"samples", tube.samples},
          {"tightened_state_box", to_json(tight.box.state)},
          {"tightened_control_box", to_json(tight.box.control)},
          {"feasible", tight.feasible}};
}

}  // namespace ccmtrack::tube
