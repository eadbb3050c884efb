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
#include <random>
#include <string>
#include <vector>

#include "ccmtrack/ccm/metric.hpp"
#include "ccmtrack/online/estimator.hpp"
#include "ccmtrack/online/trajectory_log.hpp"
#include "ccmtrack/sysmodels/disturbance.hpp"

namespace ccmtrack::online {

/// Sampled nominal plan; x[k + 1] is one RK4 step from x[k] under u[k].
struct ReferenceTrajectory {
  std::vector<double> t;
  std::vector<Vector> x;
  std::vector<Vector> u;
  std::uint64_t seed = 0;
  std::string method;

  int size() const { return static_cast<int>(t.size()); }
};

struct OnlineConfig {
  /// Apply u_ol once the buffer is full; false gives the plain CCM run.
  bool enabled = true;
  int capacity = 20;
  int epochs = 2;
  double learning_rate = 3e-3;
  /// Adam first-moment decay for the online updates.
  double beta1 = 0.5;
  double dt = 0.01;
  std::vector<int> hidden{128, 128};
  double time_scale = 0.1;
  /// Use balanced_output_map(model) as the estimate's output map.
  bool balance_output = true;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

/// Closed loop over the reference: measure, update H when the buffer is
/// full, apply u_ccm or u_ccm - H, record, step the plant under the true
/// disturbance. A domain violation ends the run with a partial log.
TrajectoryLog run_online(const sysmodels::ControlAffineModel& model,
                         const sysmodels::DisturbanceField& disturbance,
                         const ccm::TrackingController& ctrl,
                         const ReferenceTrajectory& reference,
                         const Vector& x0, const OnlineConfig& config,
                         std::mt19937_64& rng);

/// Same loop with a caller-owned estimator (kept after the run).
TrajectoryLog run_online(const sysmodels::ControlAffineModel& model,
                         const sysmodels::DisturbanceField& disturbance,
                         const ccm::TrackingController& ctrl,
                         const ReferenceTrajectory& reference,
                         const Vector& x0, const OnlineConfig& config,
                         DisturbanceNet& h);

}  // namespace ccmtrack::online
