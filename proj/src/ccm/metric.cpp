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

#include "ccmtrack/ccm/metric.hpp"

#include <cmath>
#include <stdexcept>

namespace ccmtrack::ccm {

namespace {

std::vector<int> layer_widths(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> widths{in};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(out);
  return widths;
}

Vector stacked(const Vector& x, const Vector& x_ref) {
  Vector z(x.size() + x_ref.size());
  z << x, x_ref;
  return z;
}

}  // namespace

MetricNet MetricNet::create(int state_dim, double alpha_lo,
                            const std::vector<int>& hidden,
                            std::mt19937_64& rng) {
  if (alpha_lo <= 0.0) throw std::invalid_argument("MetricNet: alpha_lo must be > 0");
  MetricNet metric;
  metric.alpha_lo = alpha_lo;
  metric.net = diffnet::DenseNet::glorot(
      layer_widths(state_dim, hidden, state_dim * state_dim), rng);
  return metric;
}

Matrix MetricNet::factor(const Vector& x) const {
  const int n = state_dim();
  return net.evaluate(x).reshaped(n, n);
}

Matrix MetricNet::eval(const Vector& x) const {
  const Matrix m = factor(x);
  Matrix out = m.transpose() * m;
  out.diagonal().array() += alpha_lo;
  return out;
}

Matrix MetricNet::derivative(const Vector& x, const Vector& v) const {
  const int n = state_dim();
  const auto res = net.forward_tangents(Matrix(x), {Matrix(v)});
  const Matrix m = res.output.reshaped(n, n);
  const Matrix dm = res.tangents[0].reshaped(n, n);
  const Matrix p = m.transpose() * dm;
  return p + p.transpose();
}

Matrix metric_eval(const MetricNet& metric, const Vector& x) {
  return metric.eval(x);
}

Matrix dual_metric(const MetricNet& metric, const Vector& x) {
  const Matrix m = metric.eval(x);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) {
    throw std::runtime_error("dual_metric: metric is ill-conditioned");
  }
  Matrix w = m.llt().solve(Matrix::Identity(m.rows(), m.cols()));
  return 0.5 * (w + w.transpose());
}

TrackingController TrackingController::create(int state_dim, int control_dim,
                                              int inner_dim,
                                              const std::vector<int>& hidden,
                                              std::mt19937_64& rng) {
  if (state_dim <= 0 || control_dim <= 0 || inner_dim <= 0) {
    throw std::invalid_argument("TrackingController: dimensions must be positive");
  }
  TrackingController ctrl;
  ctrl.state_dim = state_dim;
  ctrl.control_dim = control_dim;
  ctrl.inner_dim = inner_dim;
  ctrl.w1 = diffnet::DenseNet::glorot(
      layer_widths(2 * state_dim, hidden, inner_dim * state_dim), rng);
  ctrl.w2 = diffnet::DenseNet::glorot(
      layer_widths(2 * state_dim, hidden, control_dim * inner_dim), rng);
  return ctrl;
}

Vector TrackingController::feedback(const Vector& x, const Vector& x_ref) const {
  const Vector z = stacked(x, x_ref);
  const Matrix w1m = w1.evaluate(z).reshaped(inner_dim, state_dim);
  const Matrix w2m = w2.evaluate(z).reshaped(control_dim, inner_dim);
  return w2m * (w1m * (x - x_ref)).array().tanh().matrix();
}

Vector TrackingController::eval(const Vector& x, const Vector& x_ref,
                                const Vector& u_ref) const {
  if (x.size() != state_dim || x_ref.size() != state_dim ||
      u_ref.size() != control_dim) {
    throw std::invalid_argument("TrackingController: argument size mismatch");
  }
  return u_ref + feedback(x, x_ref);
}

Matrix TrackingController::gain(const Vector& x, const Vector& x_ref) const {
  const int n = state_dim;
  const Vector z = stacked(x, x_ref);
  std::vector<Matrix> dirs;
  for (int j = 0; j < n; ++j) dirs.push_back(Matrix::Identity(2 * n, 2 * n).col(j));
  const auto r1 = w1.forward_tangents(Matrix(z), dirs);
  const auto r2 = w2.forward_tangents(Matrix(z), dirs);
  const Matrix w1m = r1.output.reshaped(inner_dim, n);
  const Matrix w2m = r2.output.reshaped(control_dim, inner_dim);
  const Vector e = x - x_ref;
  const Vector s = (w1m * e).array().tanh();
  const Vector slope = 1.0 - s.array().square();
  Matrix k(control_dim, n);
  for (int j = 0; j < n; ++j) {
    const Matrix dw1 = r1.tangents[j].reshaped(inner_dim, n);
    const Matrix dw2 = r2.tangents[j].reshaped(control_dim, inner_dim);
    const Vector inner = dw1 * e + w1m.col(j);
    k.col(j) = dw2 * s + w2m * slope.cwiseProduct(inner);
  }
  return k;
}

Vector controller_eval(const TrackingController& ctrl, const Vector& x,
                       const Vector& x_ref, const Vector& u_ref) {
  return ctrl.eval(x, x_ref, u_ref);
}

}  // namespace ccmtrack::ccm
