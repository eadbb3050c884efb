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

#include "ccmtrack/sysmodels/model.hpp"

#include <sstream>

namespace ccmtrack::sysmodels {

Box::Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) {
    throw std::invalid_argument("Box: bound dimensions differ");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (lower[i] > upper[i]) {
      std::ostringstream msg;
      msg << "Box: lower > upper on axis " << i;
      throw std::invalid_argument(msg.str());
    }
  }
}

bool Box::contains(const Vector& v, double tol) const {
  if (v.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] < lower[i] - tol || v[i] > upper[i] + tol) return false;
  }
  return true;
}

Vector Box::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector v(lower.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = lower[i] + (upper[i] - lower[i]) * unit(rng);
  }
  return v;
}

std::vector<Matrix> ControlAffineModel::input_jacobians(const Vector&) const {
  const int n = state_dim();
  return std::vector<Matrix>(control_dim(), Matrix::Zero(n, n));
}

Vector ControlAffineModel::dynamics(const Vector& x, const Vector& u) const {
  return drift(x) + input_matrix(x) * u;
}

Matrix jacobian_A(const ControlAffineModel& model, const Vector& x,
                  const Vector& u) {
  model.check_domain(x);
  if (model.constant_input_matrix()) return model.drift_jacobian(x);
  Matrix a = model.drift_jacobian(x);
  const auto db = model.input_jacobians(x);
  for (int i = 0; i < model.control_dim(); ++i) a += db[i] * u[i];
  return a;
}

Matrix finite_difference_jacobian(const ControlAffineModel& model,
                                  const Vector& x, double step) {
  const int n = model.state_dim();
  Matrix jac(n, n);
  for (int j = 0; j < n; ++j) {
    Vector xp = x, xm = x;
    xp[j] += step;
    xm[j] -= step;
    jac.col(j) = (model.drift(xp) - model.drift(xm)) / (2.0 * step);
  }
  return jac;
}

}  // namespace ccmtrack::sysmodels
