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

#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ccmtrack::sysmodels {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a state leaves the region where the dynamics are defined.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned box [lower, upper].
struct Box {
  Vector lower;
  Vector upper;

  Box() = default;
  Box(Vector lo, Vector hi);

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vector& v, double tol = 0.0) const;
  Vector sample(std::mt19937_64& rng) const;
  Vector width() const { return upper - lower; }
};

/// Control-affine system  x' = f(x) + B(x) u.
///
/// Implementations supply the drift, the input matrix and their state
/// Jacobians. The boxes bound the region used for sampling training data.
class ControlAffineModel {
 public:
  virtual ~ControlAffineModel() = default;

  virtual std::string id() const = 0;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;

  /// Drift f(x). Throws DomainError outside the model domain.
  virtual Vector drift(const Vector& x) const = 0;
  /// Input matrix B(x), n x m.
  virtual Matrix input_matrix(const Vector& x) const = 0;
  /// df/dx, n x n.
  virtual Matrix drift_jacobian(const Vector& x) const = 0;
  /// d b_i / dx for each input column i (m matrices, each n x n).
  virtual std::vector<Matrix> input_jacobians(const Vector& x) const;
  /// True when B does not depend on x (all input Jacobians vanish).
  virtual bool constant_input_matrix() const { return false; }
  /// Throws DomainError if x is outside the set where f is defined.
  virtual void check_domain(const Vector& /*x*/) const {}

  const Box& state_box() const { return state_box_; }
  const Box& control_box() const { return control_box_; }

  /// f(x) + B(x) u.
  Vector dynamics(const Vector& x, const Vector& u) const;

 protected:
  Box state_box_;
  Box control_box_;
};

using ModelPtr = std::shared_ptr<const ControlAffineModel>;

/// A(x, u) = df/dx + sum_i (d b_i/dx) u_i, the differential dynamics matrix.
Matrix jacobian_A(const ControlAffineModel& model, const Vector& x,
                  const Vector& u);

/// Central finite-difference Jacobian of the drift (test oracle helper).
Matrix finite_difference_jacobian(const ControlAffineModel& model,
                                  const Vector& x, double step = 1e-6);

}  // namespace ccmtrack::sysmodels
