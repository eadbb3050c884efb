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

#include "ccmtrack/sysmodels/disturbance.hpp"

#include <cmath>

namespace ccmtrack::sysmodels {

DisturbanceField tsr_disturbance() {
  DisturbanceField d;
  d.name = "tsr";
  // On the TSR domain sin z2 <= 0, so |h| <= sqrt(0.552^2 + 0.2^2) < 0.6.
  d.upper_bound = 0.6;
  d.h = [](double t, const Vector& x) {
    Vector h(2);
    h[0] = 0.3 * (std::cos(t) + std::sin(x[1]));
    h[1] = 0.2 * std::cos(x[0]);
    return h;
  };
  return d;
}

DisturbanceField pvtol_disturbance() {
  DisturbanceField d;
  d.name = "pvtol";
  // Euclidean sup is sqrt(12^2 + 4^2) ~= 12.65.
  d.upper_bound = 13.0;
  d.h = [](double t, const Vector& x) {
    Vector h(2);
    h[0] = 4.0 * (std::cos(t) + std::sin(x[1]) + std::cos(x[3]));
    h[1] = 2.0 * (std::sin(x[0]) + std::cos(x[4]));
    return h;
  };
  return d;
}

DisturbanceField constant_disturbance(const Vector& value) {
  DisturbanceField d;
  d.name = "constant";
  d.upper_bound = value.norm();
  d.h = [value](double, const Vector&) { return value; };
  return d;
}

DisturbanceField zero_disturbance(int control_dim) {
  DisturbanceField d = constant_disturbance(Vector::Zero(control_dim));
  d.name = "zero";
  return d;
}

}  // namespace ccmtrack::sysmodels
