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

#include <cstdint>
#include <stdexcept>

#include "ccmtrack/online/runner.hpp"
#include "ccmtrack/sysmodels/model.hpp"

namespace ccmtrack::bench {

using online::ReferenceTrajectory;
using sysmodels::Matrix;
using sysmodels::Vector;

/// Raised when a generator cannot meet its terminal or box requirements.
class ReferenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TsrReferenceOptions {
  double horizon = 15.0;
  double dt = 0.01;
  /// Initial (z1, z2); the target is the origin.
  double z1_start = 0.3;
  double z2_start = -0.9;
  double kp = 1.0;
  double kd = 2.0;
  double terminal_tolerance = 0.005;
};

/// Deployment plan from rest at (z1, z2) to the origin: PD guidance with
/// drift cancellation, controls clamped to the TSR control box (u2 <= 0).
/// The plan is deterministic; the seed is stored as metadata.
ReferenceTrajectory gen_reference_tsr(std::uint64_t seed,
                                      const TsrReferenceOptions& options = {});

struct PvtolReferenceOptions {
  double horizon = 10.0;
  double dt = 0.01;
  /// Sinusoid components per position axis.
  int harmonics = 3;
  double amplitude_min = 0.3;
  double amplitude_max = 1.0;
  double frequency_min = 0.2;
  double frequency_max = 0.8;
  int max_attempts = 200;
};

/// Random plan: the nominal PVTOL flown by a position/attitude guidance law
/// toward a smooth random sinusoidal target path starting at hover. Draws
/// whose states leave the model's state box are rejected.
ReferenceTrajectory gen_reference_pvtol(std::uint64_t seed,
                                        const PvtolReferenceOptions& options = {});

/// Largest one-step residual ||rk4(x_k, u_k) - x_{k+1}|| over the plan.
double feasibility_residual(const sysmodels::ControlAffineModel& model,
                            const ReferenceTrajectory& ref, double dt);

}  // namespace ccmtrack::bench
