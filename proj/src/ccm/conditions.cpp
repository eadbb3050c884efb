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

#include "ccmtrack/ccm/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ccmtrack::ccm {

Matrix hat(const Matrix& x) { return x + x.transpose(); }

Matrix unit_directions(int dim, int count, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix dirs(count, dim);
  if (dim == 0) return dirs;
  for (int k = 0; k < count; ++k) {
    double norm = 0.0;
    do {
      for (int i = 0; i < dim; ++i) dirs(k, i) = normal(rng);
      norm = dirs.row(k).norm();
    } while (norm < 1e-12);
    dirs.row(k) /= norm;
  }
  return dirs;
}

double psd_penalty_sampled(const Matrix& a, const Matrix& directions,
                           bool include_worst) {
  if (directions.cols() != a.rows() || a.rows() != a.cols()) {
    throw std::invalid_argument("psd_penalty_sampled: shape mismatch");
  }
  const Matrix sym = 0.5 * hat(a);
  double total = 0.0;
  for (Eigen::Index k = 0; k < directions.rows(); ++k) {
    const Vector v = directions.row(k).transpose();
    total += std::max(0.0, -v.dot(sym * v));
  }
  Eigen::Index count = directions.rows();
  if (include_worst) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    const Vector v = eig.eigenvectors().col(0);
    total += std::max(0.0, -v.dot(sym * v));
    ++count;
  }
  return total / static_cast<double>(count);
}

double psd_penalty_sampled(const Matrix& a, int count, std::mt19937_64& rng) {
  return psd_penalty_sampled(a, unit_directions(static_cast<int>(a.rows()), count, rng));
}

double psd_penalty_exact(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * hat(a), Eigen::EigenvaluesOnly);
  return (-eig.eigenvalues().array()).max(0.0).sum();
}

Matrix annihilator(const Matrix& b) {
  const Eigen::Index n = b.rows();
  const Eigen::Index m = b.cols();
  Eigen::FullPivLU<Matrix> lu(b);
  if (lu.rank() < m) throw std::runtime_error("annihilator: B is rank deficient");
  const Eigen::Index r = n - m;
  if (r == 0) return Matrix(n, 0);
  if (b.topRows(r).cwiseAbs().maxCoeff() == 0.0) {
    Matrix perp = Matrix::Zero(n, r);
    perp.topRows(r).setIdentity();
    return perp;
  }
  Eigen::HouseholderQR<Matrix> qr(b);
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  return q.rightCols(r);
}

Matrix ccm_lhs(const sysmodels::ControlAffineModel& model,
               const MetricNet& metric, const TrackingController& ctrl,
               const Vector& x, const Vector& x_ref, const Vector& u_ref,
               double lambda) {
  const Vector u = ctrl.eval(x, x_ref, u_ref);
  const Matrix b = model.input_matrix(x);
  const Vector xdot = model.drift(x) + b * u;
  const Matrix m = metric.eval(x);
  const Matrix a_cl = sysmodels::jacobian_A(model, x, u) + b * ctrl.gain(x, x_ref);
  return metric.derivative(x, xdot) + hat(m * a_cl) + 2.0 * lambda * m;
}

Matrix dual_condition_c1(const sysmodels::ControlAffineModel& model,
                         const MetricNet& metric, const Vector& x,
                         double lambda) {
  const Matrix perp = annihilator(model.input_matrix(x));
  const Matrix w = dual_metric(metric, x);
  const Matrix df_m = metric.derivative(x, model.drift(x));
  const Matrix inner =
      w * df_m * w + hat(model.drift_jacobian(x) * w) + 2.0 * lambda * w;
  return perp.transpose() * inner * perp;
}

std::vector<Matrix> dual_condition_c2(const sysmodels::ControlAffineModel& model,
                                      const MetricNet& metric, const Vector& x) {
  const Matrix b = model.input_matrix(x);
  const Matrix perp = annihilator(b);
  const Matrix w = dual_metric(metric, x);
  const std::vector<Matrix> db = model.input_jacobians(x);
  std::vector<Matrix> blocks;
  for (Eigen::Index i = 0; i < b.cols(); ++i) {
    const Matrix db_m = metric.derivative(x, b.col(i));
    Matrix inner = -(w * db_m * w) - hat(db[i] * w);
    blocks.push_back(perp.transpose() * inner * perp);
  }
  return blocks;
}

SampleLoss sample_loss(const sysmodels::ControlAffineModel& model,
                       const MetricNet& metric, const TrackingController& ctrl,
                       const Vector& x, const Vector& x_ref,
                       const Vector& u_ref, const LossWeights& weights,
                       const Matrix& full_dirs, const Matrix& reduced_dirs) {
  const Eigen::Index n = x.size();
  const Matrix eye = Matrix::Identity(n, n);
  SampleLoss out;
  const Matrix psi = ccm_lhs(model, metric, ctrl, x, x_ref, u_ref, weights.lambda);
  const bool worst = weights.worst_direction;
  out.ccm = psd_penalty_sampled(-psi - weights.sigma * eye, full_dirs, worst);
  out.metric =
      psd_penalty_sampled(weights.alpha_hi * eye - metric.eval(x), full_dirs, worst);
  if (reduced_dirs.cols() > 0) {
    out.c1 = psd_penalty_sampled(-dual_condition_c1(model, metric, x, weights.lambda),
                                 reduced_dirs, worst);
    double sq = 0.0;
    for (const Matrix& block : dual_condition_c2(model, metric, x)) {
      sq += block.squaredNorm();
    }
    out.c2 = std::sqrt(sq);
  }
  return out;
}

}  // namespace ccmtrack::ccm
