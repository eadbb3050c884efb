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

#include "ccmtrack/sysmodels/disturbance.hpp"
#include "ccmtrack/sysmodels/model.hpp"

namespace ccmtrack::sysmodels {

/// Default control interval and integration step.
inline constexpr double kDefaultStep = 0.01;

/// One classical RK4 step of x' = f(x) + B(x)(u + h(t, x)) with the control
/// held constant over the step. Passing no disturbance integrates the
/// nominal dynamics.
Vector rk4_step(const ControlAffineModel& model, const Vector& x,
                const Vector& u, double t, double dt,
                const DisturbanceField* disturbance = nullptr);

}  // namespace ccmtrack::sysmodels
