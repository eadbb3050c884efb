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
#include <random>
#include <stdexcept>
#include <vector>

#include "ccmtrack/diffnet/adam.hpp"
#include "ccmtrack/diffnet/dense_net.hpp"
#include "ccmtrack/online/buffer.hpp"
#include "ccmtrack/sysmodels/model.hpp"

namespace ccmtrack::online {

/// Disturbance estimate H(t, x) = T net([t * time_scale; x]).
struct DisturbanceNet {
  diffnet::DenseNet net;
  double time_scale = 0.1;
  /// Fixed m x m output map T; empty means identity.
  Matrix output_map;

  /// Glorot hidden layers with a zero output layer, so H starts at 0.
  static DisturbanceNet create(int state_dim, int control_dim,
                               const std::vector<int>& hidden,
                               std::mt19937_64& rng);

  int state_dim() const { return net.input_dim() - 1; }
  int control_dim() const { return net.output_dim(); }
  Vector eval(double t, const Vector& x) const;
};

/// Output map that gives B T equal singular values (their geometric mean),
/// with B taken at the state-box center. Empty when B^T B is already a
/// multiple of the identity.
Matrix balanced_output_map(const sysmodels::ControlAffineModel& model);

/// Any disturbance estimate (t, x) -> R^m.
using EstimateFn = std::function<Vector(double, const Vector&)>;

EstimateFn as_estimate(const DisturbanceNet& h);

struct VirtualState {
  double t = 0.0;
  Vector xi;
};

/// Raised when a virtual rollout leaves the model domain.
class RolloutDomainError : public sysmodels::DomainError {
 public:
  RolloutDomainError(int step, const std::string& what);
  int step() const { return step_; }

 private:
  int step_;
};

/// RK4 rollout of xi' = f(xi) + B(xi)(u_k + H(t, xi)) with zero-order-hold
/// controls, from the anchor at t0. Returns controls.size() + 1 states,
/// the first being the anchor.
std::vector<VirtualState> virtual_rollout(const sysmodels::ControlAffineModel& model,
                                          const Vector& anchor,
                                          const std::vector<Vector>& controls,
                                          double t0, double dt,
                                          const EstimateFn& estimate);

/// Sum over the window of ||xi_i - x_i||^2, rolling out from the oldest
/// buffered state with the buffered controls. Throws std::invalid_argument
/// unless the buffer is full.
double window_loss(const MemoryBuffer& buffer,
                   const sysmodels::ControlAffineModel& model,
                   const DisturbanceNet& h, double dt);

/// Window loss and its gradient w.r.t. the parameters of h (same order as
/// DenseNet::parameters()).
struct WindowGradient {
  double loss = 0.0;
  std::vector<Matrix> grads;
};
WindowGradient window_loss_gradient(const MemoryBuffer& buffer,
                                    const sysmodels::ControlAffineModel& model,
                                    const DisturbanceNet& h, double dt);

struct UpdateOptions {
  int epochs = 2;
  double dt = 0.01;
};

struct UpdateResult {
  double loss_before = 0.0;
  double loss_after = 0.0;
  /// False when a non-finite loss or gradient, or a domain violation,
  /// aborted the update; h is then left untouched.
  bool accepted = true;
};

/// Runs options.epochs Adam steps on the window loss.
UpdateResult update_disturbance(DisturbanceNet& h, diffnet::AdamState& adam,
                                const MemoryBuffer& buffer,
                                const sysmodels::ControlAffineModel& model,
                                const UpdateOptions& options);

/// u_ccm - H.
Vector control_ol(const Vector& u_ccm, const Vector& h_hat);
Vector control_ol(const Vector& u_ccm, const DisturbanceNet& h, double t,
                  const Vector& x);

}  // namespace ccmtrack::online
