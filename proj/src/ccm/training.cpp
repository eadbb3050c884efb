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

#include "ccmtrack/ccm/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "ccmtrack/diffnet/adam.hpp"
#include "ccmtrack/diffnet/checkpoint.hpp"

namespace ccmtrack::ccm {

using nlohmann::json;

void CCMHyperParams::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (!(alpha_lo > 0.0 && alpha_lo < alpha_hi)) {
    throw std::invalid_argument("need 0 < alpha_lo < alpha_hi");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (penalty_samples <= 0 || batch_size <= 0 || steps < 0 || dataset_size <= 0) {
    throw std::invalid_argument("sample counts must be positive");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(lr_floor > 0.0 && lr_floor <= 1.0)) throw std::invalid_argument("lr_floor must be in (0, 1]");
  if (!(near_fraction >= 0.0 && near_fraction <= 1.0)) {
    throw std::invalid_argument("near_fraction must be in [0, 1]");
  }
  if (!(near_radius > 0.0)) throw std::invalid_argument("near_radius must be > 0");
  if (controller_inner < 0) throw std::invalid_argument("controller_inner must be >= 0");
}

SampleBatch sample_dataset(const sysmodels::ControlAffineModel& model, int count,
                           std::mt19937_64& rng) {
  return sample_dataset(model, count, rng, 0.0, 0.0);
}

SampleBatch sample_dataset(const sysmodels::ControlAffineModel& model, int count,
                           std::mt19937_64& rng, double near_fraction, double near_radius) {
  if (!(near_fraction >= 0.0 && near_fraction <= 1.0)) {
    throw std::invalid_argument("near_fraction must be in [0, 1]");
  }
  const int n = model.state_dim();
  const int m = model.control_dim();
  const auto& box = model.state_box();
  const int near = static_cast<int>(std::lround(near_fraction * count));
  SampleBatch data{Matrix(n, count), Matrix(n, count), Matrix(m, count)};
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int j = 0; j < count; ++j) {
    if (j < count - near) {
      data.x.col(j) = box.sample(rng);
      data.x_ref.col(j) = box.sample(rng);
    } else {
      data.x_ref.col(j) = box.sample(rng);
      for (int i = 0; i < n; ++i) {
        const double half = 0.5 * (box.upper[i] - box.lower[i]);
        const double v = data.x_ref(i, j) + near_radius * half * unit(rng);
        data.x(i, j) = std::clamp(v, box.lower[i], box.upper[i]);
      }
    }
    data.u_ref.col(j) = model.control_box().sample(rng);
  }
  return data;
}

double upper_bound_violation(const MetricNet& metric, const Matrix& xs,
                             double alpha_hi) {
  if (xs.cols() == 0) return 0.0;
  int above = 0;
  for (Eigen::Index j = 0; j < xs.cols(); ++j) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(metric.eval(xs.col(j)),
                                              Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().maxCoeff() > alpha_hi) ++above;
  }
  return static_cast<double>(above) / static_cast<double>(xs.cols());
}

namespace {

TrainedCCM run_training(const sysmodels::ControlAffineModel& model,
                        const CCMHyperParams& hyper, TrainedCCM out,
                        std::mt19937_64& rng, const TrainingObserver& observer) {
  const auto start = std::chrono::steady_clock::now();
  const int n = model.state_dim();
  const int m = model.control_dim();

  const SampleBatch data =
      sample_dataset(model, hyper.dataset_size, rng, hyper.near_fraction, hyper.near_radius);
  Matrix holdout(n, 1000);
  for (Eigen::Index j = 0; j < holdout.cols(); ++j) {
    holdout.col(j) = model.state_box().sample(rng);
  }
  out.report.upper_violation_initial =
      upper_bound_violation(out.metric, holdout, hyper.alpha_hi);

  std::vector<Matrix*> params;
  for (Matrix* p : out.metric.net.parameters()) params.push_back(p);
  for (Matrix* p : out.controller.w1.parameters()) params.push_back(p);
  for (Matrix* p : out.controller.w2.parameters()) params.push_back(p);
  diffnet::AdamState adam(diffnet::AdamOptions{hyper.learning_rate});

  const int batch = std::min(hyper.batch_size, hyper.dataset_size);
  std::vector<int> order(hyper.dataset_size);
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  const LossWeights weights = hyper.weights();

  out.report.loss_trace.reserve(hyper.steps);
  for (int step = 0; step < hyper.steps; ++step) {
    if (cursor + batch > order.size()) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    SampleBatch mb{Matrix(n, batch), Matrix(n, batch), Matrix(m, batch)};
    for (int j = 0; j < batch; ++j) {
      const int k = order[cursor + j];
      mb.x.col(j) = data.x.col(k);
      mb.x_ref.col(j) = data.x_ref.col(k);
      mb.u_ref.col(j) = data.u_ref.col(k);
    }
    cursor += batch;
    const PenaltyDirections dirs =
        PenaltyDirections::sample(n, m, hyper.penalty_samples, rng);
    const LossGradient lg =
        loss_and_gradient(model, out.metric, out.controller, mb, weights, dirs);
    if (!std::isfinite(lg.total)) {
      std::ostringstream msg;
      msg << "train_ccm: loss is not finite at step " << step << " (ccm=" << lg.ccm
          << ", c1=" << lg.c1 << ", c2=" << lg.c2 << ", metric=" << lg.metric << ")";
      throw TrainingDivergence(msg.str());
    }
    out.report.loss_trace.push_back(lg.total);
    if (observer) observer(step, lg.total);
    if (hyper.lr_floor < 1.0 && hyper.steps > 1) {
      const double progress = static_cast<double>(step) / static_cast<double>(hyper.steps - 1);
      const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
      adam.options.learning_rate =
          hyper.learning_rate * (hyper.lr_floor + (1.0 - hyper.lr_floor) * cosine);
    }
    diffnet::adam_update(adam, params, lg.grads);
  }

  out.report.upper_violation_final =
      upper_bound_violation(out.metric, holdout, hyper.alpha_hi);
  out.report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace

TrainedCCM train_ccm(const sysmodels::ControlAffineModel& model,
                     const CCMHyperParams& hyper,
                     const TrainingObserver& observer) {
  hyper.validate();
  std::mt19937_64 rng(hyper.seed);
  const int n = model.state_dim();
  TrainedCCM init;
  init.metric = MetricNet::create(n, hyper.alpha_lo, hyper.hidden, rng);
  init.controller = TrackingController::create(
      n, model.control_dim(), hyper.controller_inner > 0 ? hyper.controller_inner : n,
      hyper.hidden, rng);
  return run_training(model, hyper, std::move(init), rng, observer);
}

TrainedCCM train_ccm(const sysmodels::ControlAffineModel& model,
                     const CCMHyperParams& hyper, MetricNet metric,
                     TrackingController controller,
                     const TrainingObserver& observer) {
  hyper.validate();
  if (metric.state_dim() != model.state_dim() ||
      controller.state_dim != model.state_dim() ||
      controller.control_dim != model.control_dim()) {
    throw std::invalid_argument("train_ccm: network shapes do not match the model");
  }
  std::mt19937_64 rng(hyper.seed);
  TrainedCCM init;
  init.metric = std::move(metric);
  init.metric.alpha_lo = hyper.alpha_lo;
  init.controller = std::move(controller);
  return run_training(model, hyper, std::move(init), rng, observer);
}

ContractionAudit verify_contraction(const sysmodels::ControlAffineModel& model,
                                    const MetricNet& metric,
                                    const TrackingController& ctrl,
                                    double lambda, int n_samples,
                                    std::mt19937_64& rng) {
  ContractionAudit audit;
  audit.samples = n_samples;
  if (n_samples <= 0) return audit;
  const SampleBatch data = sample_dataset(model, n_samples, rng);
  const int n = model.state_dim();
  // Chunked to bound tape memory.
  Matrix psi(n * n, n_samples);
  constexpr int kChunk = 1024;
  for (int start = 0; start < n_samples; start += kChunk) {
    const int len = std::min(kChunk, n_samples - start);
    const SampleBatch part{data.x.middleCols(start, len),
                           data.x_ref.middleCols(start, len),
                           data.u_ref.middleCols(start, len)};
    psi.middleCols(start, len) = batched_ccm_lhs(model, metric, ctrl, part, lambda);
  }
  int violations = 0;
  double penalty = 0.0;
  audit.worst_max_eig = -std::numeric_limits<double>::infinity();
  audit.alpha_lo_emp = std::numeric_limits<double>::infinity();
  audit.alpha_hi_emp = 0.0;
  for (int j = 0; j < n_samples; ++j) {
    const Matrix p = psi.col(j).reshaped(n, n);
    Eigen::SelfAdjointEigenSolver<Matrix> eig_psi(0.5 * (p + p.transpose()),
                                                  Eigen::EigenvaluesOnly);
    const double top = eig_psi.eigenvalues().maxCoeff();
    if (top >= 0.0) ++violations;
    audit.worst_max_eig = std::max(audit.worst_max_eig, top);
    penalty += psd_penalty_exact(-p);
    Eigen::SelfAdjointEigenSolver<Matrix> eig_m(metric.eval(data.x.col(j)),
                                                Eigen::EigenvaluesOnly);
    audit.alpha_lo_emp = std::min(audit.alpha_lo_emp, eig_m.eigenvalues().minCoeff());
    audit.alpha_hi_emp = std::max(audit.alpha_hi_emp, eig_m.eigenvalues().maxCoeff());
  }
  audit.violation_rate = static_cast<double>(violations) / n_samples;
  audit.mean_penalty = penalty / n_samples;
  return audit;
}

namespace {

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace

void save_ccm(const std::filesystem::path& dir, const CCMCheckpoint& ckpt) {
  std::filesystem::create_directories(dir);
  const std::uint64_t seed = ckpt.meta.seed;
  diffnet::save_checkpoint(dir / "metric.json", ckpt.metric.net, seed);
  diffnet::save_checkpoint(dir / "controller_w1.json", ckpt.controller.w1, seed);
  diffnet::save_checkpoint(dir / "controller_w2.json", ckpt.controller.w2, seed);
  const CCMMetadata& m = ckpt.meta;
  json meta{{"model_id", m.model_id},
            {"lambda", m.lambda},
            {"alpha_lo", m.alpha_lo},
            {"alpha_hi", m.alpha_hi},
            {"sigma", m.sigma},
            {"dataset_size", m.dataset_size},
            {"seed", m.seed},
            {"violation_rate", m.violation_rate},
            {"alpha_lo_emp", m.alpha_lo_emp},
            {"alpha_hi_emp", m.alpha_hi_emp},
            {"state_dim", ckpt.controller.state_dim},
            {"control_dim", ckpt.controller.control_dim},
            {"controller_inner", ckpt.controller.inner_dim}};
  write_json(dir / "meta.json", meta);
}

CCMCheckpoint load_ccm(const std::filesystem::path& dir) {
  CCMCheckpoint ckpt;
  const json meta = read_json(dir / "meta.json");
  try {
    CCMMetadata& m = ckpt.meta;
    m.model_id = meta.at("model_id").get<std::string>();
    m.lambda = meta.at("lambda").get<double>();
    m.alpha_lo = meta.at("alpha_lo").get<double>();
    m.alpha_hi = meta.at("alpha_hi").get<double>();
    m.sigma = meta.at("sigma").get<double>();
    m.dataset_size = meta.at("dataset_size").get<int>();
    m.seed = meta.at("seed").get<std::uint64_t>();
    m.violation_rate = meta.value("violation_rate", -1.0);
    m.alpha_lo_emp = meta.value("alpha_lo_emp", 0.0);
    m.alpha_hi_emp = meta.value("alpha_hi_emp", 0.0);
    ckpt.controller.state_dim = meta.at("state_dim").get<int>();
    ckpt.controller.control_dim = meta.at("control_dim").get<int>();
    ckpt.controller.inner_dim = meta.at("controller_inner").get<int>();
  } catch (const json::exception& e) {
    throw std::runtime_error("meta.json: " + std::string(e.what()));
  }
  ckpt.metric.alpha_lo = ckpt.meta.alpha_lo;
  ckpt.metric.net = diffnet::from_json(read_json(dir / "metric.json"));
  ckpt.controller.w1 = diffnet::from_json(read_json(dir / "controller_w1.json"));
  ckpt.controller.w2 = diffnet::from_json(read_json(dir / "controller_w2.json"));
  const int n = ckpt.controller.state_dim;
  const int m = ckpt.controller.control_dim;
  const int c = ckpt.controller.inner_dim;
  if (ckpt.metric.net.input_dim() != n || ckpt.metric.net.output_dim() != n * n ||
      ckpt.controller.w1.input_dim() != 2 * n ||
      ckpt.controller.w1.output_dim() != c * n ||
      ckpt.controller.w2.input_dim() != 2 * n ||
      ckpt.controller.w2.output_dim() != m * c) {
    throw std::runtime_error("CCM checkpoint: network shapes disagree with meta.json");
  }
  return ckpt;
}

}  // namespace ccmtrack::ccm
