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

#include "ccmtrack/sysmodels/systems.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace ccmtrack::sysmodels {

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) out[i++] = e;
  return out;
}

}  // namespace

// ---------------------------------------------------------------- TSR

TsrModel::TsrModel() {
  state_box_ = Box(vec({-0.8, -0.95, -1.0, -1.0}), vec({0.8, 0.0, 1.0, 1.0}));
  control_box_ = Box(vec({-3.0, -3.0}), vec({3.0, 0.0}));
}

void TsrModel::check_domain(const Vector& x) const {
  if (!(x[1] + 1.0 > kLengthMargin)) {
    std::ostringstream msg;
    msg << "tsr: tether length collapsed (z2 = " << x[1] << ")";
    throw DomainError(msg.str());
  }
}

Vector TsrModel::drift(const Vector& x) const {
  check_domain(x);
  const double z1 = x[0], z2 = x[1], z3 = x[2], z4 = x[3];
  const double len = z2 + 1.0;
  const double c = std::cos(z1), s = std::sin(z1);
  Vector f(4);
  f[0] = z3;
  f[1] = z4;
  f[2] = -2.0 * z4 / len * (z3 + 1.0) - 3.0 * s * c;
  f[3] = len * ((z3 + 1.0) * (z3 + 1.0) + 3.0 * c * c - 1.0);
  return f;
}

Matrix TsrModel::input_matrix(const Vector&) const {
  Matrix b = Matrix::Zero(4, 2);
  b(2, 0) = 1.0;
  b(3, 1) = 1.0;
  return b;
}

Matrix TsrModel::drift_jacobian(const Vector& x) const {
  check_domain(x);
  const double z1 = x[0], z2 = x[1], z3 = x[2], z4 = x[3];
  const double len = z2 + 1.0;
  const double c = std::cos(z1);
  Matrix j = Matrix::Zero(4, 4);
  j(0, 2) = 1.0;
  j(1, 3) = 1.0;
  j(2, 0) = -3.0 * std::cos(2.0 * z1);
  j(2, 1) = 2.0 * z4 * (z3 + 1.0) / (len * len);
  j(2, 2) = -2.0 * z4 / len;
  j(2, 3) = -2.0 * (z3 + 1.0) / len;
  j(3, 0) = -3.0 * len * std::sin(2.0 * z1);
  j(3, 1) = (z3 + 1.0) * (z3 + 1.0) + 3.0 * c * c - 1.0;
  j(3, 2) = 2.0 * len * (z3 + 1.0);
  return j;
}

// ---------------------------------------------------------------- PVTOL

PvtolModel::PvtolModel() {
  const double pi3 = std::numbers::pi / 3.0;
  state_box_ = Box(vec({-5.0, -5.0, -pi3, -2.0, -2.0, -1.0}),
                   vec({5.0, 5.0, pi3, 2.0, 2.0, 1.0}));
  const double max_thrust = 2.0 * kMass * kGravity;
  control_box_ = Box(vec({0.0, 0.0}), vec({max_thrust, max_thrust}));
}

Vector PvtolModel::drift(const Vector& x) const {
  const double phi = x[2], vx = x[3], vz = x[4], dphi = x[5];
  const double c = std::cos(phi), s = std::sin(phi);
  Vector f(6);
  f[0] = vx * c - vz * s;
  f[1] = vx * s + vz * c;
  f[2] = dphi;
  f[3] = vz * dphi - kGravity * s;
  f[4] = -vx * dphi - kGravity * c;
  f[5] = 0.0;
  return f;
}

Matrix PvtolModel::input_matrix(const Vector&) const {
  Matrix b = Matrix::Zero(6, 2);
  b(4, 0) = 1.0 / kMass;
  b(4, 1) = 1.0 / kMass;
  b(5, 0) = kArm / kInertia;
  b(5, 1) = -kArm / kInertia;
  return b;
}

Matrix PvtolModel::drift_jacobian(const Vector& x) const {
  const double phi = x[2], vx = x[3], vz = x[4], dphi = x[5];
  const double c = std::cos(phi), s = std::sin(phi);
  Matrix j = Matrix::Zero(6, 6);
  j(0, 2) = -vx * s - vz * c;
  j(0, 3) = c;
  j(0, 4) = -s;
  j(1, 2) = vx * c - vz * s;
  j(1, 3) = s;
  j(1, 4) = c;
  j(2, 5) = 1.0;
  j(3, 2) = -kGravity * c;
  j(3, 4) = dphi;
  j(3, 5) = vz;
  j(4, 2) = kGravity * s;
  j(4, 3) = -dphi;
  j(4, 5) = -vx;
  return j;
}

// ---------------------------------------------------------------- linear

LinearModel::LinearModel(std::string name, Matrix a, Matrix b, Box state_box,
                         Box control_box)
    : name_(std::move(name)), a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() != a_.cols() || b_.rows() != a_.rows()) {
    throw std::invalid_argument("LinearModel: inconsistent A/B shapes");
  }
  state_box_ = std::move(state_box);
  control_box_ = std::move(control_box);
}

Vector LinearModel::drift(const Vector& x) const { return a_ * x; }

Matrix LinearModel::input_matrix(const Vector&) const { return b_; }

Matrix LinearModel::drift_jacobian(const Vector&) const { return a_; }

ModelPtr linear_test_model() {
  Matrix a(2, 2);
  a << 0.0, 1.0, 1.0, 0.0;
  Matrix b(2, 1);
  b << 0.0, 1.0;
  return std::make_shared<LinearModel>(
      "linear-test", a, b, Box(vec({-2.0, -2.0}), vec({2.0, 2.0})),
      Box(vec({-2.0}), vec({2.0})));
}

ModelPtr scalar_model(double a, double box) {
  return std::make_shared<LinearModel>(
      "scalar", Matrix::Constant(1, 1, a), Matrix::Ones(1, 1),
      Box(vec({-box}), vec({box})), Box(vec({-box}), vec({box})));
}

ModelPtr make_model(const std::string& id) {
  if (id == "tsr") return std::make_shared<TsrModel>();
  if (id == "pvtol") return std::make_shared<PvtolModel>();
  if (id == "linear-test") return linear_test_model();
  throw std::invalid_argument("unknown model id '" + id + "'");
}

}  // namespace ccmtrack::sysmodels
