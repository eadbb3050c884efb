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

#include "ccmtrack/sysmodels/integrator.hpp"

#include <stdexcept>

namespace ccmtrack::sysmodels {

namespace {

Vector rate(const ControlAffineModel& model, const Vector& x, const Vector& u,
            double t, const DisturbanceField* disturbance) {
  if (disturbance == nullptr) return model.dynamics(x, u);
  return model.dynamics(x, u + disturbance->h(t, x));
}

}  // namespace

Vector rk4_step(const ControlAffineModel& model, const Vector& x,
                const Vector& u, double t, double dt,
                const DisturbanceField* disturbance) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be > 0");
  const double half = 0.5 * dt;
  // Every product is materialized before the addition so the rounding does
  // not depend on whether the compiler fuses multiply-adds; rollouts that
  // replay this scheme reproduce it bitwise.
  const Vector k1 = rate(model, x, u, t, disturbance);
  const Vector s1 = half * k1;
  const Vector k2 = rate(model, x + s1, u, t + half, disturbance);
  const Vector s2 = half * k2;
  const Vector k3 = rate(model, x + s2, u, t + half, disturbance);
  const Vector s3 = dt * k3;
  const Vector k4 = rate(model, x + s3, u, t + dt, disturbance);
  const Vector sum = k1 + 2.0 * k2 + 2.0 * k3 + k4;
  const Vector step = (dt / 6.0) * sum;
  return x + step;
}

}  // namespace ccmtrack::sysmodels
