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

#include "ccmtrack/bench/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "ccmtrack/sysmodels/integrator.hpp"
#include "ccmtrack/sysmodels/systems.hpp"

namespace ccmtrack::bench {

namespace {

int step_count(double horizon, double dt) {
  if (!(dt > 0.0) || !(horizon > dt)) throw std::invalid_argument("reference: bad horizon or dt");
  return static_cast<int>(std::llround(horizon / dt));
}

struct Sinusoid {
  double amplitude;
  double omega;
  double phase;
};

// p(t) = sum a (sin(w t + phi) - sin phi), so p(0) = 0; returns p, p', p''.
struct PathPoint {
  double p = 0.0;
  double v = 0.0;
  double a = 0.0;
};

PathPoint eval_path(const std::vector<Sinusoid>& terms, double t) {
  PathPoint out;
  for (const Sinusoid& s : terms) {
    const double arg = s.omega * t + s.phase;
    out.p += s.amplitude * (std::sin(arg) - std::sin(s.phase));
    out.v += s.amplitude * s.omega * std::cos(arg);
    out.a -= s.amplitude * s.omega * s.omega * std::sin(arg);
  }
  return out;
}

}  // namespace

ReferenceTrajectory gen_reference_tsr(std::uint64_t seed, const TsrReferenceOptions& options) {
  const sysmodels::TsrModel model;
  const int steps = step_count(options.horizon, options.dt);
  const sysmodels::Box& ubox = model.control_box();
  ReferenceTrajectory ref;
  ref.seed = seed;
  ref.method = "tsr-pd-guidance";
  Vector x = Vector::Zero(4);
  x << options.z1_start, options.z2_start, 0.0, 0.0;
  for (int k = 0; k < steps; ++k) {
    const Vector f = model.drift(x);
    Vector u(2);
    for (int i = 0; i < 2; ++i) {
      const double accel = -options.kp * x(i) - options.kd * x(i + 2);
      u(i) = std::clamp(accel - f(i + 2), ubox.lower(i), ubox.upper(i));
    }
    ref.t.push_back(k * options.dt);
    ref.x.push_back(x);
    ref.u.push_back(u);
    x = sysmodels::rk4_step(model, x, u, k * options.dt, options.dt);
  }
  const Vector& last = ref.x.back();
  if (std::max(std::abs(last(0)), std::abs(last(1))) >= options.terminal_tolerance) {
    throw ReferenceError("tsr reference: terminal tolerance not met");
  }
  return ref;
}

ReferenceTrajectory gen_reference_pvtol(std::uint64_t seed, const PvtolReferenceOptions& options) {
  using P = sysmodels::PvtolModel;
  const P model;
  const int steps = step_count(options.horizon, options.dt);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(options.amplitude_min, options.amplitude_max);
  std::uniform_real_distribution<double> freq(options.frequency_min, options.frequency_max);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

  // Guidance gains: position loop (rad/s ~ 1) well inside the attitude loop.
  constexpr double kp = 1.0;
  constexpr double kd = 2.0;
  constexpr double kp_att = 25.0;
  constexpr double kd_att = 10.0;

  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    std::vector<Sinusoid> path_x;
    std::vector<Sinusoid> path_z;
    for (int i = 0; i < options.harmonics; ++i) {
      path_x.push_back({amp(rng), freq(rng), phase(rng)});
      path_z.push_back({amp(rng), freq(rng), phase(rng)});
    }

    ReferenceTrajectory ref;
    ref.seed = seed;
    ref.method = "pvtol-guided-sinusoid";
    Vector x = Vector::Zero(6);
    bool inside = true;
    for (int k = 0; k < steps && inside; ++k) {
      const double t = k * options.dt;
      const PathPoint px = eval_path(path_x, t);
      const PathPoint pz = eval_path(path_z, t);
      const double phi = x(2);
      const double c = std::cos(phi);
      const double s = std::sin(phi);
      const double vel_x = x(3) * c - x(4) * s;
      const double vel_z = x(3) * s + x(4) * c;
      const double ax = px.a + kp * (px.p - x(0)) + kd * (px.v - vel_x);
      const double az = pz.a + kp * (pz.p - x(1)) + kd * (pz.v - vel_z);
      const double thrust = P::kMass * std::hypot(ax, az + P::kGravity);
      const double phi_des = std::atan2(-ax, az + P::kGravity);
      const double torque_acc = kp_att * (phi_des - phi) - kd_att * x(5);
      const double diff = torque_acc * P::kInertia / P::kArm;
      Vector u(2);
      u << 0.5 * (thrust + diff), 0.5 * (thrust - diff);
      ref.t.push_back(t);
      ref.x.push_back(x);
      ref.u.push_back(u);
      inside = model.state_box().contains(x) && model.control_box().contains(u);
      x = sysmodels::rk4_step(model, x, u, t, options.dt);
    }
    if (inside) return ref;
  }
  throw ReferenceError("pvtol reference: rejection budget exhausted");
}

double feasibility_residual(const sysmodels::ControlAffineModel& model,
                            const ReferenceTrajectory& ref, double dt) {
  double worst = 0.0;
  for (int k = 0; k + 1 < ref.size(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    const Vector next = sysmodels::rk4_step(model, ref.x[i], ref.u[i], ref.t[i], dt);
    worst = std::max(worst, (next - ref.x[i + 1]).norm());
  }
  return worst;
}

}  // namespace ccmtrack::bench
