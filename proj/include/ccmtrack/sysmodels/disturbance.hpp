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

#include <functional>
#include <string>

#include "ccmtrack/sysmodels/model.hpp"

namespace ccmtrack::sysmodels {

/// Matched external disturbance h(t, x) entering through B, with a known
/// bound on its Euclidean norm.
struct DisturbanceField {
  std::function<Vector(double, const Vector&)> h;
  double upper_bound = 0.0;
  std::string name;

  Vector operator()(double t, const Vector& x) const { return h(t, x); }
};

/// TSR: h = [0.3 (cos t + sin z2), 0.2 cos z1].
DisturbanceField tsr_disturbance();
/// PVTOL: h = [4 (cos t + sin p_z + cos v_x), 2 (sin p_x + cos v_z)].
DisturbanceField pvtol_disturbance();
DisturbanceField constant_disturbance(const Vector& value);
DisturbanceField zero_disturbance(int control_dim);

}  // namespace ccmtrack::sysmodels
