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

#include <string>

#include "ccmtrack/sysmodels/model.hpp"

namespace ccmtrack::sysmodels {

/// Tethered space robot in dimensionless form.
/// State (z1, z2, z3, z4) = (in-plane angle, tether length - 1, their rates).
class TsrModel final : public ControlAffineModel {
 public:
  TsrModel();

  std::string id() const override { return "tsr"; }
  int state_dim() const override { return 4; }
  int control_dim() const override { return 2; }

  Vector drift(const Vector& x) const override;
  Matrix input_matrix(const Vector& x) const override;
  Matrix drift_jacobian(const Vector& x) const override;
  bool constant_input_matrix() const override { return true; }
  void check_domain(const Vector& x) const override;

  /// z2 + 1 must stay above this margin.
  static constexpr double kLengthMargin = 1e-6;
};

/// Planar VTOL with body-frame velocities.
/// State (p_x, p_z, phi, v_x, v_z, phi_dot); inputs are the two rotor thrusts.
class PvtolModel final : public ControlAffineModel {
 public:
  static constexpr double kMass = 0.486;
  static constexpr double kInertia = 0.00383;
  static constexpr double kArm = 0.25;
  static constexpr double kGravity = 9.81;

  PvtolModel();

  std::string id() const override { return "pvtol"; }
  int state_dim() const override { return 6; }
  int control_dim() const override { return 2; }

  Vector drift(const Vector& x) const override;
  Matrix input_matrix(const Vector& x) const override;
  Matrix drift_jacobian(const Vector& x) const override;
  bool constant_input_matrix() const override { return true; }

  /// Per-rotor thrust that holds the vehicle level and still.
  static double hover_thrust() { return 0.5 * kMass * kGravity; }
};

/// Linear plant x' = A x + B u.
class LinearModel final : public ControlAffineModel {
 public:
  LinearModel(std::string name, Matrix a, Matrix b, Box state_box,
              Box control_box);

  std::string id() const override { return name_; }
  int state_dim() const override { return static_cast<int>(a_.rows()); }
  int control_dim() const override { return static_cast<int>(b_.cols()); }

  Vector drift(const Vector& x) const override;
  Matrix input_matrix(const Vector& x) const override;
  Matrix drift_jacobian(const Vector& x) const override;
  bool constant_input_matrix() const override { return true; }

 private:
  std::string name_;
  Matrix a_;
  Matrix b_;
};

/// Two-state test plant x1' = x2, x2' = x1 + u (unstable open loop).
ModelPtr linear_test_model();
/// Scalar plant x' = a x + u on [-box, box].
ModelPtr scalar_model(double a, double box = 2.0);

/// Model lookup by id: "tsr", "pvtol", "linear-test".
ModelPtr make_model(const std::string& id);

}  // namespace ccmtrack::sysmodels
