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

#include "ccmtrack/diffnet/dense_net.hpp"

namespace ccmtrack::ccm {

using diffnet::Matrix;
using diffnet::Vector;

/// M(x) = alpha_lo I + m(x)^T m(x), where the inner net maps x to an n x n
/// factor stored column-major.
struct MetricNet {
  double alpha_lo = 0.1;
  diffnet::DenseNet net;

  /// Inner net [n, hidden..., n*n] with Glorot initialization.
  static MetricNet create(int state_dim, double alpha_lo,
                          const std::vector<int>& hidden, std::mt19937_64& rng);

  int state_dim() const { return net.input_dim(); }

  Matrix factor(const Vector& x) const;
  Matrix eval(const Vector& x) const;
  /// Directional derivative of M along v.
  Matrix derivative(const Vector& x, const Vector& v) const;
};

Matrix metric_eval(const MetricNet& metric, const Vector& x);

/// W = M^{-1}. Throws std::runtime_error if M is numerically singular
/// (condition number above 1e12).
Matrix dual_metric(const MetricNet& metric, const Vector& x);

/// u = u* + w2(x, x*) tanh(w1(x, x*) (x - x*)).
///
/// w1 maps [x; x*] to an inner x n matrix and w2 to an m x inner matrix,
/// both column-major.
struct TrackingController {
  int state_dim = 0;
  int control_dim = 0;
  int inner_dim = 0;
  diffnet::DenseNet w1;
  diffnet::DenseNet w2;

  static TrackingController create(int state_dim, int control_dim,
                                   int inner_dim, const std::vector<int>& hidden,
                                   std::mt19937_64& rng);

  Vector eval(const Vector& x, const Vector& x_ref, const Vector& u_ref) const;
  /// Feedback part k(x, x*) = u - u*.
  Vector feedback(const Vector& x, const Vector& x_ref) const;
  /// K = dk/dx (m x n), with x* held fixed.
  Matrix gain(const Vector& x, const Vector& x_ref) const;
};

Vector controller_eval(const TrackingController& ctrl, const Vector& x,
                       const Vector& x_ref, const Vector& u_ref);

}  // namespace ccmtrack::ccm
