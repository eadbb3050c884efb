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

#include "ccmtrack/online/runner.hpp"

#include <chrono>
#include <stdexcept>

#include "ccmtrack/sysmodels/integrator.hpp"

namespace ccmtrack::online {

void OnlineConfig::validate() const {
  if (capacity < 2) throw std::invalid_argument("capacity must be >= 2");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must be in [0, 1)");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  if (!(time_scale > 0.0)) throw std::invalid_argument("time_scale must be > 0");
}

TrajectoryLog run_online(const sysmodels::ControlAffineModel& model,
                         const sysmodels::DisturbanceField& disturbance,
                         const ccm::TrackingController& ctrl,
                         const ReferenceTrajectory& reference,
                         const Vector& x0, const OnlineConfig& config,
                         std::mt19937_64& rng) {
  DisturbanceNet h = DisturbanceNet::create(model.state_dim(), model.control_dim(),
                                            config.hidden, rng);
  h.time_scale = config.time_scale;
  if (config.balance_output) h.output_map = balanced_output_map(model);
  return run_online(model, disturbance, ctrl, reference, x0, config, h);
}

TrajectoryLog run_online(const sysmodels::ControlAffineModel& model,
                         const sysmodels::DisturbanceField& disturbance,
                         const ccm::TrackingController& ctrl,
                         const ReferenceTrajectory& reference,
                         const Vector& x0, const OnlineConfig& config,
                         DisturbanceNet& h) {
  config.validate();
  const int n = model.state_dim();
  const int m = model.control_dim();
  if (x0.size() != n || h.state_dim() != n || h.control_dim() != m) {
    throw std::invalid_argument("run_online: dimension mismatch");
  }
  if (reference.size() == 0) throw std::invalid_argument("run_online: empty reference");

  TrajectoryLog log;
  log.state_dim = n;
  log.control_dim = m;
  log.rows.reserve(static_cast<std::size_t>(reference.size()));
  MemoryBuffer buffer(config.capacity);
  diffnet::AdamOptions adam_options;
  adam_options.learning_rate = config.learning_rate;
  adam_options.beta1 = config.beta1;
  diffnet::AdamState adam(adam_options);
  const UpdateOptions update{config.epochs, config.dt};

  Vector x = x0;
  for (int k = 0; k < reference.size(); ++k) {
    const double t = reference.t[static_cast<std::size_t>(k)];
    const Vector& xr = reference.x[static_cast<std::size_t>(k)];
    const Vector& ur = reference.u[static_cast<std::size_t>(k)];
    LogRow row;
    row.t = t;
    row.x = x;
    row.x_ref = xr;
    row.u_ccm = ctrl.eval(x, xr, ur);
    row.h_true = disturbance(t, x);
    if (config.enabled && buffer.full()) {
      const auto start = std::chrono::steady_clock::now();
      const UpdateResult r = update_disturbance(h, adam, buffer, model, update);
      const auto stop = std::chrono::steady_clock::now();
      log.update_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
      log.loss_before.push_back(r.loss_before);
      log.loss_after.push_back(r.loss_after);
      if (!r.accepted) ++log.rejected_updates;
      row.h_hat = h.eval(t, x);
      row.u = control_ol(row.u_ccm, row.h_hat);
    } else {
      row.h_hat = Vector::Zero(m);
      row.u = row.u_ccm;
    }
    buffer.push(t, x, row.u);
    log.rows.push_back(row);
    try {
      x = sysmodels::rk4_step(model, x, row.u, t, config.dt, &disturbance);
      if (!x.allFinite()) throw sysmodels::DomainError("non-finite state");
    } catch (const sysmodels::DomainError& e) {
      log.completed = false;
      log.failure = "step " + std::to_string(k) + ": " + e.what();
      break;
    }
  }
  return log;
}

}  // namespace ccmtrack::online
