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

#include "ccmtrack/bench/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <future>

#include "ccmtrack/sysmodels/integrator.hpp"
#include "ccmtrack/sysmodels/systems.hpp"
#include "ccmtrack/tube/tube.hpp"

namespace ccmtrack::bench {

namespace {

double round6(double v) {
  if (!std::isfinite(v)) return v;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::strtod(buf, nullptr);
}

class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ULL;
    }
  }
  void vec(const Vector& v) { bytes(v.data(), sizeof(double) * static_cast<std::size_t>(v.size())); }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace

sysmodels::DisturbanceField benchmark_disturbance(const std::string& model_id) {
  if (model_id == "tsr") return sysmodels::tsr_disturbance();
  if (model_id == "pvtol") return sysmodels::pvtol_disturbance();
  throw std::invalid_argument("no benchmark disturbance for model " + model_id);
}

sysmodels::DisturbanceField scenario_disturbance(const ExperimentConfig& config, int m) {
  if (config.scenario == "zero-disturbance") return sysmodels::zero_disturbance(m);
  return benchmark_disturbance(config.model_id);
}

RmseSelector default_selector(const std::string& model_id) {
  return model_id == "pvtol" ? RmseSelector::kPosition : RmseSelector::kFullState;
}

double rmse(const online::TrajectoryLog& log, RmseSelector selector) {
  if (log.rows.empty()) throw std::invalid_argument("rmse: empty log");
  double total = 0.0;
  for (const auto& row : log.rows) {
    const Vector e = row.x - row.x_ref;
    total += selector == RmseSelector::kPosition ? e.head(2).squaredNorm() : e.squaredNorm();
  }
  return std::sqrt(total / static_cast<double>(log.rows.size()));
}

double improvement_pct(double rmse_ccm, double rmse_ol) {
  return 100.0 * (1.0 - rmse_ol / rmse_ccm);
}

ExperimentConfig ExperimentConfig::defaults_for(const std::string& model_id) {
  ExperimentConfig config;
  config.model_id = model_id;
  config.online.capacity = model_id == "pvtol" ? 10 : 20;
  return config;
}

double ExperimentConfig::effective_horizon() const {
  if (horizon > 0.0) return horizon;
  return model_id == "pvtol" ? 10.0 : 15.0;
}

void ExperimentConfig::validate() const {
  online.validate();
  if (model_id != "tsr" && model_id != "pvtol") {
    throw std::invalid_argument("model must be tsr or pvtol");
  }
  if (scenario != "benchmark" && scenario != "zero-disturbance") {
    throw std::invalid_argument("scenario must be benchmark or zero-disturbance");
  }
  if (horizon < 0.0) throw std::invalid_argument("horizon must be >= 0");
  const double steps = effective_horizon() / online.dt;
  if (steps <= online.capacity) throw std::invalid_argument("horizon must exceed the warm-up length");
  if (tube_samples < 1) throw std::invalid_argument("tube_samples must be >= 1");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
}

ReferenceTrajectory make_reference(const ExperimentConfig& config) {
  if (config.model_id == "tsr") {
    // The deployment plan has its own length; shorter runs use a prefix.
    TsrReferenceOptions options;
    options.horizon = std::max(options.horizon, config.effective_horizon());
    options.dt = config.online.dt;
    ReferenceTrajectory ref = gen_reference_tsr(config.seed, options);
    const auto steps = static_cast<std::size_t>(std::llround(config.effective_horizon() / options.dt));
    ref.t.resize(steps);
    ref.x.resize(steps);
    ref.u.resize(steps);
    return ref;
  }
  PvtolReferenceOptions options;
  options.horizon = config.effective_horizon();
  options.dt = config.online.dt;
  return gen_reference_pvtol(config.seed, options);
}

Vector initial_offset(const std::string& model_id, int state_dim) {
  Vector offset = Vector::Zero(state_dim);
  if (model_id == "tsr") {
    offset(0) = 0.05;
    offset(1) = 0.05;
  } else if (model_id == "pvtol") {
    offset(0) = 1.0;
    offset(1) = 1.0;
  }
  return offset;
}

std::string input_digest(const ReferenceTrajectory& ref, const Vector& x0,
                         std::uint64_t seed, const std::string& disturbance) {
  Fnv1a h;
  for (int k = 0; k < ref.size(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    h.bytes(&ref.t[i], sizeof(double));
    h.vec(ref.x[i]);
    h.vec(ref.u[i]);
  }
  h.vec(x0);
  h.bytes(&seed, sizeof(seed));
  h.bytes(disturbance.data(), disturbance.size());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h.value()));
  return buf;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ccm::CCMCheckpoint& ckpt) {
  config.validate();
  const auto model = sysmodels::make_model(config.model_id);
  if (ckpt.meta.model_id != config.model_id) {
    throw std::invalid_argument("checkpoint is for model " + ckpt.meta.model_id);
  }
  const int n = model->state_dim();
  const int m = model->control_dim();
  const auto disturbance = scenario_disturbance(config, m);

  ExperimentResult result;
  result.reference = make_reference(config);
  const Vector x0 = result.reference.x.front() + initial_offset(config.model_id, n);

  auto run = [&](bool enabled) {
    online::OnlineConfig oc = config.online;
    oc.enabled = enabled;
    std::mt19937_64 rng(config.seed);
    return online::run_online(*model, disturbance, ckpt.controller, result.reference, x0, oc, rng);
  };
  if (config.threads >= 2) {
    auto ccm_run = std::async(std::launch::async, run, false);
    result.log_ol = run(true);
    result.log_ccm = ccm_run.get();
  } else {
    result.log_ccm = run(false);
    result.log_ol = run(true);
  }

  MetricsReport& r = result.metrics;
  const std::string dist_name = disturbance.name;
  r.input_digest_ccm = input_digest(result.reference, x0, config.seed, dist_name);
  r.input_digest_ol = input_digest(result.reference, x0, config.seed, dist_name);
  r.completed_ccm = result.log_ccm.completed;
  r.completed_ol = result.log_ol.completed;
  const RmseSelector selector = default_selector(config.model_id);
  r.rmse_ccm = rmse(result.log_ccm, selector);
  r.rmse_ol = rmse(result.log_ol, selector);
  r.improvement_pct = improvement_pct(r.rmse_ccm, r.rmse_ol);
  if (config.model_id == "tsr") {
    const Vector& last = result.log_ol.rows.back().x;
    r.deployment_reached = std::max(std::abs(last(0)), std::abs(last(1))) < 0.01;
  }

  for (const auto& row : result.log_ol.rows) {
    r.max_control_gap = std::max(r.max_control_gap, (row.u - row.u_ccm).norm());
  }
  const int skip = config.online.capacity;
  double rel = 0.0;
  int count = 0;
  for (std::size_t k = static_cast<std::size_t>(skip); k < result.log_ol.rows.size(); ++k) {
    const auto& row = result.log_ol.rows[k];
    rel += (row.h_hat - row.h_true).norm() / (1.0 + row.h_true.norm());
    ++count;
  }
  r.relative_estimation_error = count > 0 ? rel / count : 0.0;
  if (!result.log_ol.loss_before.empty()) {
    int descents = 0;
    for (std::size_t i = 0; i < result.log_ol.loss_before.size(); ++i) {
      if (result.log_ol.loss_after[i] <= result.log_ol.loss_before[i]) ++descents;
    }
    r.descent_fraction = static_cast<double>(descents) / static_cast<double>(result.log_ol.loss_before.size());
  }

  // Tube analysis: sup over uniform samples plus the visited states.
  tube::SupOptions sup;
  sup.n_samples = config.tube_samples;
  for (const auto& row : result.log_ccm.rows) sup.extra_states.push_back(row.x);
  for (const auto& row : result.log_ol.rows) sup.extra_states.push_back(row.x);
  const double lambda = ckpt.meta.lambda;
  std::mt19937_64 tube_rng(config.seed ^ 0x7475626500000000ULL);
  const double nominal_sup = tube::sampled_gain_sup(*model, ckpt.metric, true, sup, tube_rng);
  std::mt19937_64 refined_rng(config.seed ^ 0x7475626500000000ULL);
  const double refined_sup = tube::sampled_gain_sup(*model, ckpt.metric, false, sup, refined_rng);
  r.tube_radius_nominal = tube::radius_from_sup(nominal_sup, disturbance.upper_bound, lambda);
  r.estimation_error_bound =
      static_cast<int>(result.log_ol.rows.size()) > skip
          ? tube::estimation_error_bound(result.log_ol, skip, 0.99)
          : 0.0;
  r.tube_radius_refined = tube::radius_from_sup(refined_sup, r.estimation_error_bound, lambda);
  const double alpha_lo = ckpt.meta.alpha_lo_emp > 0.0 ? ckpt.meta.alpha_lo_emp : ckpt.meta.alpha_lo;
  const double alpha_hi = std::max(alpha_lo, ckpt.meta.alpha_hi_emp > 0.0 ? ckpt.meta.alpha_hi_emp
                                                                         : ckpt.meta.alpha_hi);
  const auto nominal = tube::make_tube(n, r.tube_radius_nominal, alpha_lo, alpha_hi, lambda,
                                       disturbance.upper_bound, "nominal", config.tube_samples);
  r.tube_containment = tube::containment_fraction(nominal, result.log_ccm);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.ccm_path.empty()) throw std::invalid_argument("missing CCM checkpoint path");
  return run_experiment(config, ccm::load_ccm(config.ccm_path));
}

std::map<int, TimingStat> timing_bench(const sysmodels::ControlAffineModel& model,
                                       const std::vector<int>& capacities, int repeats,
                                       std::uint64_t seed, const online::OnlineConfig& online) {
  if (repeats < 1) throw std::invalid_argument("timing_bench: repeats must be >= 1");
  ExperimentConfig config = ExperimentConfig::defaults_for(model.id());
  config.seed = seed;
  const ReferenceTrajectory ref = make_reference(config);
  const sysmodels::DisturbanceField dist = benchmark_disturbance(model.id());

  std::map<int, TimingStat> out;
  for (int capacity : capacities) {
    if (capacity > ref.size()) throw std::invalid_argument("timing_bench: capacity exceeds reference");
    // Window recorded under compensated reference controls, u = u* - h.
    online::MemoryBuffer buffer(capacity);
    Vector x = ref.x.front();
    for (int k = 0; k < capacity; ++k) {
      const auto i = static_cast<std::size_t>(k);
      const Vector u = ref.u[i] - dist(ref.t[i], x);
      buffer.push(ref.t[i], x, u);
      x = sysmodels::rk4_step(model, x, u, ref.t[i], online.dt, &dist);
    }
    std::mt19937_64 rng(seed);
    online::DisturbanceNet h =
        online::DisturbanceNet::create(model.state_dim(), model.control_dim(), online.hidden, rng);
    h.time_scale = online.time_scale;
    if (online.balance_output) h.output_map = online::balanced_output_map(model);
    diffnet::AdamOptions adam_options;
    adam_options.learning_rate = online.learning_rate;
    adam_options.beta1 = online.beta1;
    diffnet::AdamState adam(adam_options);
    const online::UpdateOptions options{online.epochs, online.dt};
    for (int w = 0; w < 2; ++w) online::update_disturbance(h, adam, buffer, model, options);
    std::vector<double> ms;
    for (int r = 0; r < repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      online::update_disturbance(h, adam, buffer, model, options);
      const auto stop = std::chrono::steady_clock::now();
      ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    }
    double mean = 0.0;
    for (double v : ms) mean += v;
    mean /= static_cast<double>(ms.size());
    double var = 0.0;
    for (double v : ms) var += (v - mean) * (v - mean);
    const double sd = ms.size() > 1 ? std::sqrt(var / static_cast<double>(ms.size() - 1)) : 0.0;
    out[capacity] = {mean, sd, repeats};
  }
  return out;
}

nlohmann::json metrics_json(const MetricsReport& r) {
  nlohmann::json doc;
  doc["rmse_ccm"] = round6(r.rmse_ccm);
  doc["rmse_ol"] = round6(r.rmse_ol);
  doc["improvement_pct"] = round6(r.improvement_pct);
  doc["tube_containment"] = round6(r.tube_containment);
  doc["deployment_reached"] = r.deployment_reached ? nlohmann::json(*r.deployment_reached)
                                                   : nlohmann::json(nullptr);
  doc["tube_radius_nominal"] = round6(r.tube_radius_nominal);
  doc["tube_radius_refined"] = round6(r.tube_radius_refined);
  doc["estimation_error_bound"] = round6(r.estimation_error_bound);
  doc["relative_estimation_error"] = round6(r.relative_estimation_error);
  doc["descent_fraction"] = round6(r.descent_fraction);
  doc["max_control_gap"] = round6(r.max_control_gap);
  doc["completed"] = {{"ccm", r.completed_ccm}, {"ol", r.completed_ol}};
  doc["input_digest"] = {{"ccm", r.input_digest_ccm}, {"ol", r.input_digest_ol}};
  if (!r.timing.empty()) {
    nlohmann::json timing = nlohmann::json::object();
    for (const auto& [capacity, stat] : r.timing) {
      timing[std::to_string(capacity)] = {{"mean_ms", round6(stat.mean_ms)},
                                          {"std_ms", round6(stat.std_ms)},
                                          {"repeats", stat.repeats}};
    }
    doc["timing"] = timing;
  }
  return doc;
}

void write_outputs(const ExperimentConfig& config, const ExperimentResult& result) {
  std::filesystem::create_directories(config.output_dir);
  online::write_csv(config.output_dir / "log_ccm.csv", result.log_ccm);
  online::write_csv(config.output_dir / "log_ol.csv", result.log_ol);
  std::ofstream file(config.output_dir / "metrics.json", std::ios::binary);
  if (!file) throw std::runtime_error("cannot write metrics.json");
  file << metrics_json(result.metrics).dump(2) << '\n';
}

}  // namespace ccmtrack::bench
