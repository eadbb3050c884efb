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

#include "ccmtrack/online/estimator.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "ccmtrack/diffnet/ops.hpp"

namespace ccmtrack::online {

namespace {

using diffnet::Tape;
using diffnet::Var;

Vector net_input(double t, double scale, const Vector& x) {
  Vector y(x.size() + 1);
  y << t * scale, x;
  return y;
}

// f(xi) + B(xi) w with adjoints A(xi, w)^T g and B(xi)^T g.
Var record_dynamics(Tape& tape, const sysmodels::ControlAffineModel& model,
                    const Var& xi, const Var& w) {
  const Vector xv = xi.value();
  const Vector wv = w.value();
  Vector value = model.dynamics(xv, wv);
  return tape.record(std::move(value), {xi, w},
                     [&model, xi, w, xv, wv](Tape& tp, const Matrix& g, const Matrix&) {
                       if (tp.requires_grad(xi)) {
                         tp.accumulate(xi, sysmodels::jacobian_A(model, xv, wv).transpose() * g);
                       }
                       if (tp.requires_grad(w)) {
                         tp.accumulate(w, model.input_matrix(xv).transpose() * g);
                       }
                     });
}

void check_window(const MemoryBuffer& buffer, const DisturbanceNet& h) {
  if (!buffer.full()) throw std::invalid_argument("window_loss: buffer not full");
  if (buffer.oldest().x.size() != h.state_dim() ||
      buffer.oldest().u.size() != h.control_dim()) {
    throw std::invalid_argument("window_loss: dimension mismatch");
  }
}

Var record_window_loss(Tape& tape, const sysmodels::ControlAffineModel& model,
                       const DisturbanceNet& h, const diffnet::NetVars& vars,
                       const MemoryBuffer& buffer, double dt) {
  const double half = 0.5 * dt;
  auto rate = [&](const Var& xi, double t, const Var& u) {
    const Var y = diffnet::vstack({tape.constant(Matrix::Constant(1, 1, t * h.time_scale)), xi});
    Var out = diffnet::record_forward(h.net, vars, y);
    if (h.output_map.size() > 0) out = diffnet::matmul(tape.constant(h.output_map), out);
    return record_dynamics(tape, model, xi, out + u);
  };
  Var xi = tape.constant(buffer.oldest().x);
  std::vector<Var> gaps;
  for (int k = 0; k + 1 < buffer.size(); ++k) {
    const double t = buffer.oldest().t + static_cast<double>(k) * dt;
    const Var u = tape.constant(buffer[k].u);
    try {
      const Var k1 = rate(xi, t, u);
      const Var k2 = rate(xi + half * k1, t + half, u);
      const Var k3 = rate(xi + half * k2, t + half, u);
      const Var k4 = rate(xi + dt * k3, t + dt, u);
      xi = xi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } catch (const sysmodels::DomainError& e) {
      throw RolloutDomainError(k, e.what());
    }
    const Var diff = xi - tape.constant(buffer[k + 1].x);
    gaps.push_back(diffnet::sum(diffnet::cwise_mul(diff, diff)));
  }
  return diffnet::sum(diffnet::vstack(gaps));
}

bool all_finite(const std::vector<Matrix>& grads) {
  for (const Matrix& g : grads) {
    if (!g.allFinite()) return false;
  }
  return true;
}

}  // namespace

DisturbanceNet DisturbanceNet::create(int state_dim, int control_dim,
                                      const std::vector<int>& hidden,
                                      std::mt19937_64& rng) {
  std::vector<int> widths{state_dim + 1};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(control_dim);
  DisturbanceNet h;
  h.net = diffnet::DenseNet::glorot(widths, rng, diffnet::Activation::kTanh, true);
  return h;
}

Vector DisturbanceNet::eval(double t, const Vector& x) const {
  if (output_map.size() > 0) return output_map * net.evaluate(net_input(t, time_scale, x));
  return net.evaluate(net_input(t, time_scale, x));
}

Matrix balanced_output_map(const sysmodels::ControlAffineModel& model) {
  const auto& box = model.state_box();
  const Matrix b = model.input_matrix(0.5 * (box.lower + box.upper));
  const Matrix gram = b.transpose() * b;
  const double mean_diag = gram.diagonal().mean();
  if (gram == mean_diag * Matrix::Identity(gram.rows(), gram.cols())) return {};
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Vector s = eig.eigenvalues().cwiseSqrt();
  if (!(s.minCoeff() > 0.0)) throw std::invalid_argument("balanced_output_map: B is rank deficient");
  const double g = std::exp(s.array().log().mean());
  return eig.eigenvectors() * (g / s.array()).matrix().asDiagonal() * eig.eigenvectors().transpose();
}

EstimateFn as_estimate(const DisturbanceNet& h) {
  return [&h](double t, const Vector& x) { return h.eval(t, x); };
}

RolloutDomainError::RolloutDomainError(int step, const std::string& what)
    : sysmodels::DomainError("virtual rollout step " + std::to_string(step) + ": " + what),
      step_(step) {}

std::vector<VirtualState> virtual_rollout(const sysmodels::ControlAffineModel& model,
                                          const Vector& anchor,
                                          const std::vector<Vector>& controls,
                                          double t0, double dt,
                                          const EstimateFn& estimate) {
  if (controls.empty()) throw std::invalid_argument("virtual_rollout: no controls");
  const double half = 0.5 * dt;
  auto rate = [&](const Vector& xi, double t, const Vector& u) {
    return model.dynamics(xi, u + estimate(t, xi));
  };
  std::vector<VirtualState> out;
  out.reserve(controls.size() + 1);
  out.push_back({t0, anchor});
  for (std::size_t k = 0; k < controls.size(); ++k) {
    const Vector& xi = out.back().xi;
    const double t = out.back().t;
    const Vector& u = controls[k];
    Vector next;
    try {
      // Same stage arithmetic as sysmodels::rk4_step.
      const Vector k1 = rate(xi, t, u);
      const Vector s1 = half * k1;
      const Vector k2 = rate(xi + s1, t + half, u);
      const Vector s2 = half * k2;
      const Vector k3 = rate(xi + s2, t + half, u);
      const Vector s3 = dt * k3;
      const Vector k4 = rate(xi + s3, t + dt, u);
      const Vector sum = k1 + 2.0 * k2 + 2.0 * k3 + k4;
      const Vector step = (dt / 6.0) * sum;
      next = xi + step;
    } catch (const sysmodels::DomainError& e) {
      throw RolloutDomainError(static_cast<int>(k), e.what());
    }
    out.push_back({t0 + static_cast<double>(k + 1) * dt, std::move(next)});
  }
  return out;
}

double window_loss(const MemoryBuffer& buffer,
                   const sysmodels::ControlAffineModel& model,
                   const DisturbanceNet& h, double dt) {
  check_window(buffer, h);
  std::vector<Vector> controls;
  for (int k = 0; k + 1 < buffer.size(); ++k) controls.push_back(buffer[k].u);
  const auto rollout = virtual_rollout(model, buffer.oldest().x, controls,
                                       buffer.oldest().t, dt, as_estimate(h));
  double loss = 0.0;
  for (int k = 1; k < buffer.size(); ++k) loss += (rollout[k].xi - buffer[k].x).squaredNorm();
  return loss;
}

WindowGradient window_loss_gradient(const MemoryBuffer& buffer,
                                    const sysmodels::ControlAffineModel& model,
                                    const DisturbanceNet& h, double dt) {
  check_window(buffer, h);
  Tape tape;
  tape.reserve(static_cast<std::size_t>(buffer.size()) * 160);
  const diffnet::NetVars vars = diffnet::bind(tape, h.net);
  const Var loss = record_window_loss(tape, model, h, vars, buffer, dt);
  WindowGradient out;
  out.loss = loss.value()(0, 0);
  out.grads = diffnet::grad(tape, loss, vars);
  return out;
}

UpdateResult update_disturbance(DisturbanceNet& h, diffnet::AdamState& adam,
                                const MemoryBuffer& buffer,
                                const sysmodels::ControlAffineModel& model,
                                const UpdateOptions& options) {
  if (options.epochs < 1) throw std::invalid_argument("update_disturbance: epochs must be >= 1");
  const DisturbanceNet saved = h;
  const diffnet::AdamState saved_adam = adam;
  UpdateResult result;
  try {
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
      const WindowGradient wg = window_loss_gradient(buffer, model, h, options.dt);
      if (epoch == 0) result.loss_before = wg.loss;
      if (!std::isfinite(wg.loss) || !all_finite(wg.grads)) {
        result.accepted = false;
        break;
      }
      diffnet::adam_update(adam, h.net.parameters(), wg.grads);
    }
    if (result.accepted) {
      result.loss_after = window_loss(buffer, model, h, options.dt);
      result.accepted = std::isfinite(result.loss_after) && h.net.all_finite();
    }
  } catch (const sysmodels::DomainError&) {
    result.accepted = false;
  }
  if (!result.accepted) {
    h = saved;
    adam = saved_adam;
    result.loss_after = result.loss_before;
  }
  return result;
}

Vector control_ol(const Vector& u_ccm, const Vector& h_hat) {
  if (u_ccm.size() != h_hat.size()) throw std::invalid_argument("control_ol: size mismatch");
  return u_ccm - h_hat;
}

Vector control_ol(const Vector& u_ccm, const DisturbanceNet& h, double t,
                  const Vector& x) {
  return control_ol(u_ccm, h.eval(t, x));
}

}  // namespace ccmtrack::online
