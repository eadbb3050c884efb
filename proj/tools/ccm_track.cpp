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

// ccm-track: train, simulate, bench, tube and verify from the command line.
//
// Every flag may also come from a JSON file given with --config; keys are
// flag names without the leading dashes. Flags on the command line win.
// Exit status: 0 success, 1 usage or validation error, 2 runtime failure.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccmtrack/bench/experiment.hpp"
#include "ccmtrack/ccm/training.hpp"
#include "ccmtrack/online/trajectory_log.hpp"
#include "ccmtrack/sysmodels/systems.hpp"
#include "ccmtrack/tube/tube.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ccmtrack;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

int env_threads() {
  const char* raw = std::getenv("CCM_TRACK_THREADS");
  if (raw == nullptr || *raw == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024) {
    throw std::invalid_argument("CCM_TRACK_THREADS must be a positive integer");
  }
  return static_cast<int>(v);
}

void write_json(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  file << doc.dump(2) << '\n';
}

json box_json(const sysmodels::Box& box) { return tube::to_json(box); }

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string model;
  int samples = 130000;
  int steps = 10000;
  int batch = 1024;
  std::uint64_t seed = 0;
  std::string out;
  double lambda = 0.5;
  double lr = 1e-3;
  int penalty_samples = 32;
  int audit_samples = 10000;
};

int run_train(const TrainArgs& a) {
  const auto model = sysmodels::make_model(a.model);
  ccm::CCMHyperParams hyper;
  hyper.lambda = a.lambda;
  hyper.dataset_size = a.samples;
  hyper.steps = a.steps;
  hyper.batch_size = a.batch;
  hyper.seed = a.seed;
  hyper.learning_rate = a.lr;
  hyper.penalty_samples = a.penalty_samples;
  hyper.validate();
  if (a.audit_samples < 1) throw std::invalid_argument("--audit-samples must be >= 1");

  const int every = std::max(1, a.steps / 20);
  auto trained = ccm::train_ccm(*model, hyper, [&](int step, double loss) {
    if (step % every == 0 || step + 1 == a.steps) {
      std::fprintf(stderr, "step %d loss %.6g\n", step, loss);
    }
  });

  std::mt19937_64 audit_rng(a.seed ^ 0x6175646974ULL);
  const auto audit = ccm::verify_contraction(*model, trained.metric, trained.controller,
                                             hyper.lambda, a.audit_samples, audit_rng);
  ccm::CCMCheckpoint ckpt{trained.metric, trained.controller, {}};
  ckpt.meta.model_id = a.model;
  ckpt.meta.lambda = hyper.lambda;
  ckpt.meta.alpha_lo = hyper.alpha_lo;
  ckpt.meta.alpha_hi = hyper.alpha_hi;
  ckpt.meta.sigma = hyper.sigma;
  ckpt.meta.dataset_size = hyper.dataset_size;
  ckpt.meta.seed = hyper.seed;
  ckpt.meta.violation_rate = audit.violation_rate;
  ckpt.meta.alpha_lo_emp = audit.alpha_lo_emp;
  ckpt.meta.alpha_hi_emp = audit.alpha_hi_emp;
  ccm::save_ccm(a.out, ckpt);

  json report;
  report["loss_trace"] = trained.report.loss_trace;
  report["upper_violation_initial"] = trained.report.upper_violation_initial;
  report["upper_violation_final"] = trained.report.upper_violation_final;
  report["mode"] = trained.report.mode;
  report["audit"] = {{"violation_rate", audit.violation_rate},
                     {"worst_max_eig", audit.worst_max_eig},
                     {"alpha_lo_emp", audit.alpha_lo_emp},
                     {"alpha_hi_emp", audit.alpha_hi_emp},
                     {"samples", audit.samples}};
  write_json(fs::path(a.out) / "training.json", report);
  std::printf("trained %s in %.1f s: violation rate %.4f, alpha_emp [%.4g, %.4g]\n",
              a.model.c_str(), trained.report.seconds, audit.violation_rate,
              audit.alpha_lo_emp, audit.alpha_hi_emp);
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string model;
  std::string ccm;
  bool online = true;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string scenario = "benchmark";
  int capacity = 0;
  int epochs = 2;
  double lr = online::OnlineConfig{}.learning_rate;
  double beta1 = online::OnlineConfig{}.beta1;
  int tube_samples = 100000;
};

int run_simulate(const SimulateArgs& a) {
  const auto ckpt = ccm::load_ccm(a.ccm);
  const std::string model_id = a.model.empty() ? ckpt.meta.model_id : a.model;
  bench::ExperimentConfig config = bench::ExperimentConfig::defaults_for(model_id);
  config.scenario = a.scenario;
  config.horizon = a.horizon;
  config.seed = a.seed;
  config.online.enabled = a.online;
  if (a.capacity > 0) config.online.capacity = a.capacity;
  config.online.epochs = a.epochs;
  config.online.learning_rate = a.lr;
  config.online.beta1 = a.beta1;
  config.ccm_path = a.ccm;
  config.output_dir = a.out;
  config.tube_samples = a.tube_samples;
  config.threads = env_threads();
  config.validate();

  const auto result = bench::run_experiment(config, ckpt);
  bench::write_outputs(config, result);
  const auto& m = result.metrics;
  std::printf("rmse_ccm %.6g rmse_ol %.6g improvement %.2f%% containment %.3f\n", m.rmse_ccm,
              m.rmse_ol, m.improvement_pct, m.tube_containment);
  if (m.deployment_reached) {
    std::printf("deployment %s\n", *m.deployment_reached ? "reached" : "not reached");
  }
  return (m.completed_ccm && m.completed_ol) ? kExitOk : kExitRuntime;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string model = "tsr";
  std::vector<int> capacities{10, 20, 40};
  int repeats = 20;
  std::uint64_t seed = 0;
  std::string out;
};

int run_bench(const BenchArgs& a) {
  const auto model = sysmodels::make_model(a.model);
  if (a.capacities.empty()) throw std::invalid_argument("--capacities is empty");
  for (int c : a.capacities) {
    if (c < 2) throw std::invalid_argument("--capacities entries must be >= 2");
  }
  const auto timing = bench::timing_bench(*model, a.capacities, a.repeats, a.seed);
  std::printf("%10s %12s %12s\n", "capacity", "mean [ms]", "std [ms]");
  for (const auto& [capacity, stat] : timing) {
    std::printf("%10d %12.4f %12.4f\n", capacity, stat.mean_ms, stat.std_ms);
  }
  if (!a.out.empty()) {
    bench::MetricsReport report;
    report.timing = timing;
    json doc;
    doc["model"] = a.model;
    doc["timing"] = bench::metrics_json(report)["timing"];
    write_json(a.out, doc);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- tube

struct TubeArgs {
  std::string ccm;
  std::string log;
  int samples = 100000;
  int skip = -1;
  std::uint64_t seed = 0;
  std::string out;
};

int run_tube(const TubeArgs& a) {
  if (a.samples < 1) throw std::invalid_argument("--samples must be >= 1");
  const auto ckpt = ccm::load_ccm(a.ccm);
  const auto model = sysmodels::make_model(ckpt.meta.model_id);
  const auto disturbance = bench::benchmark_disturbance(ckpt.meta.model_id);
  const double lambda = ckpt.meta.lambda;
  const double alpha_lo = ckpt.meta.alpha_lo_emp > 0.0 ? ckpt.meta.alpha_lo_emp : ckpt.meta.alpha_lo;
  const double alpha_hi = std::max(alpha_lo, ckpt.meta.alpha_hi_emp > 0.0 ? ckpt.meta.alpha_hi_emp
                                                                         : ckpt.meta.alpha_hi);
  const int n = model->state_dim();

  tube::SupOptions sup;
  sup.n_samples = a.samples;
  online::TrajectoryLog log;
  const bool have_log = !a.log.empty();
  if (have_log) {
    log = online::read_csv(a.log);
    if (log.state_dim != n) throw std::invalid_argument("--log does not match the checkpoint model");
    for (const auto& row : log.rows) sup.extra_states.push_back(row.x);
  }

  const tube::ConstraintBox box{model->state_box(), model->control_box()};
  json doc;
  std::mt19937_64 rng(a.seed);
  const double nominal_sup = tube::sampled_gain_sup(*model, ckpt.metric, true, sup, rng);
  const double c_nominal = tube::radius_from_sup(nominal_sup, disturbance.upper_bound, lambda);
  const auto nominal = tube::make_tube(n, c_nominal, alpha_lo, alpha_hi, lambda,
                                       disturbance.upper_bound, "nominal", a.samples);
  std::mt19937_64 tight_rng(a.seed + 1);
  doc["nominal"] = tube::tube_report(
      nominal, tube::tighten_constraints(box, nominal, ckpt.controller, a.samples, tight_rng));
  std::printf("nominal radius %.6g\n", c_nominal);

  if (have_log) {
    const int skip = a.skip >= 0 ? a.skip
                                 : bench::ExperimentConfig::defaults_for(ckpt.meta.model_id)
                                       .online.capacity;
    const double e_h = tube::estimation_error_bound(log, skip, 0.99);
    std::mt19937_64 refined_rng(a.seed);
    const double refined_sup = tube::sampled_gain_sup(*model, ckpt.metric, false, sup, refined_rng);
    const double c_refined = tube::radius_from_sup(refined_sup, e_h, lambda);
    const auto refined = tube::make_tube(n, c_refined, alpha_lo, alpha_hi, lambda, e_h,
                                         "refined", a.samples);
    std::mt19937_64 refined_tight_rng(a.seed + 1);
    doc["refined"] = tube::tube_report(
        refined, tube::tighten_constraints(box, refined, ckpt.controller, a.samples,
                                           refined_tight_rng));
    doc["containment_nominal"] = tube::containment_fraction(nominal, log);
    std::printf("refined radius %.6g (e_H %.6g)\n", c_refined, e_h);
  }
  doc["state_box"] = box_json(box.state);
  doc["control_box"] = box_json(box.control);
  if (!a.out.empty()) write_json(a.out, doc);
  return kExitOk;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
  std::string ccm;
  int samples = 10000;
  std::uint64_t seed = 0;
  std::string out;
};

int run_verify(const VerifyArgs& a) {
  if (a.samples < 1) throw std::invalid_argument("--samples must be >= 1");
  const auto ckpt = ccm::load_ccm(a.ccm);
  const auto model = sysmodels::make_model(ckpt.meta.model_id);
  std::mt19937_64 rng(a.seed);
  const auto audit = ccm::verify_contraction(*model, ckpt.metric, ckpt.controller,
                                             ckpt.meta.lambda, a.samples, rng);
  const json doc = {{"model", ckpt.meta.model_id},
                    {"lambda", ckpt.meta.lambda},
                    {"violation_rate", audit.violation_rate},
                    {"worst_max_eig", audit.worst_max_eig},
                    {"alpha_lo_emp", audit.alpha_lo_emp},
                    {"alpha_hi_emp", audit.alpha_hi_emp},
                    {"mean_penalty", audit.mean_penalty},
                    {"samples", audit.samples}};
  std::printf("%s\n", doc.dump(2).c_str());
  if (!a.out.empty()) write_json(a.out, doc);
  return kExitOk;
}

// ---------------------------------------------------------------- config

std::string json_token(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string joined;
    for (const auto& e : v) {
      if (!joined.empty()) joined += ',';
      joined += json_token(e);
    }
    return joined;
  }
  return v.dump();
}

// Locates --config and returns the remaining user tokens.
std::vector<std::string> split_config(const std::vector<std::string>& args, std::string& path) {
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a file");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  return rest;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    if (flag == "--online" && a == "--no-online") return true;
  }
  return false;
}

// Tokens for the config file entries that the command line leaves unset.
std::vector<std::string> config_tokens(const fs::path& path, const CLI::App& sub,
                                       const std::vector<std::string>& user) {
  std::ifstream file(path);
  if (!file) throw std::invalid_argument("cannot read config file " + path.string());
  json doc;
  try {
    doc = json::parse(file);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config file " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("config file must hold a JSON object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : doc.items()) {
    std::string name = key;
    for (char& c : name) {
      if (c == '_') c = '-';
    }
    const std::string flag = "--" + name;
    if (sub.get_option_no_throw(flag) == nullptr) {
      throw std::invalid_argument("config key '" + key + "' is not a flag of " + sub.get_name());
    }
    if (given_on_command_line(user, flag)) continue;
    if (value.is_boolean()) {
      if (name != "online") throw std::invalid_argument("config key '" + key + "' is not boolean");
      tokens.push_back(value.get<bool>() ? "--online" : "--no-online");
    } else {
      tokens.push_back(flag);
      tokens.push_back(json_token(value));
    }
  }
  return tokens;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural contraction-metric tracking with online disturbance learning", "ccm-track"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a CCM metric and controller");
  train_cmd->add_option("--model", train.model, "tsr | pvtol | linear-test")->required();
  train_cmd->add_option("--samples", train.samples, "Dataset size");
  train_cmd->add_option("--steps", train.steps, "Adam steps");
  train_cmd->add_option("--batch", train.batch, "Minibatch size");
  train_cmd->add_option("--seed", train.seed, "RNG seed");
  train_cmd->add_option("--out", train.out, "Checkpoint directory")->required();
  train_cmd->add_option("--lambda", train.lambda, "Contraction rate");
  train_cmd->add_option("--lr", train.lr, "Adam learning rate");
  train_cmd->add_option("--penalty-samples", train.penalty_samples, "Directions per PSD penalty");
  train_cmd->add_option("--audit-samples", train.audit_samples, "Samples for the post-training audit");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Paired tracking runs with and without online learning");
  sim_cmd->add_option("--model", sim.model, "Model id (default: from the checkpoint)");
  sim_cmd->add_option("--ccm", sim.ccm, "Checkpoint directory")->required();
  sim_cmd->add_flag("--online,!--no-online", sim.online, "Enable online learning (default on)");
  sim_cmd->add_option("--horizon", sim.horizon, "Seconds (0: model default)");
  sim_cmd->add_option("--seed", sim.seed, "Reference and network seed");
  sim_cmd->add_option("--out", sim.out, "Output directory")->required();
  sim_cmd->add_option("--scenario", sim.scenario, "benchmark | zero-disturbance");
  sim_cmd->add_option("--capacity", sim.capacity, "Buffer capacity (0: model default)");
  sim_cmd->add_option("--epochs", sim.epochs, "Epochs per control interval");
  sim_cmd->add_option("--lr", sim.lr, "Online learning rate");
  sim_cmd->add_option("--beta1", sim.beta1, "Online Adam first-moment decay");
  sim_cmd->add_option("--tube-samples", sim.tube_samples, "Uniform samples for the tube sup");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Timing of one online update per buffer capacity");
  bench_cmd->add_option("--model", bench_args.model, "tsr | pvtol");
  bench_cmd->add_option("--capacities", bench_args.capacities, "Buffer capacities")->delimiter(',');
  bench_cmd->add_option("--repeats", bench_args.repeats, "Timed calls per capacity");
  bench_cmd->add_option("--seed", bench_args.seed, "RNG seed");
  bench_cmd->add_option("--out", bench_args.out, "Timing JSON file");

  TubeArgs tube_args;
  auto* tube_cmd = app.add_subcommand("tube", "Nominal and refined tubes with tightened constraints");
  tube_cmd->add_option("--ccm", tube_args.ccm, "Checkpoint directory")->required();
  tube_cmd->add_option("--log", tube_args.log, "Online run log (CSV) for the refined tube");
  tube_cmd->add_option("--samples", tube_args.samples, "Uniform samples for the sup");
  tube_cmd->add_option("--skip", tube_args.skip, "Warm-up rows excluded from e_H (default: capacity)");
  tube_cmd->add_option("--seed", tube_args.seed, "RNG seed");
  tube_cmd->add_option("--out", tube_args.out, "Tube report JSON file");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Exact eigenvalue contraction audit");
  verify_cmd->add_option("--ccm", verify.ccm, "Checkpoint directory")->required();
  verify_cmd->add_option("--samples", verify.samples, "Fresh uniform samples");
  verify_cmd->add_option("--seed", verify.seed, "RNG seed");
  verify_cmd->add_option("--out", verify.out, "Audit JSON file");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string config_path;
    std::vector<std::string> user = split_config(args, config_path);
    if (!config_path.empty()) {
      if (user.empty()) throw CLI::CallForHelp();
      CLI::App* sub = app.get_subcommand_no_throw(user.front());
      if (sub == nullptr) throw CLI::ExtrasError({user.front()});
      const std::vector<std::string> rest(user.begin() + 1, user.end());
      std::vector<std::string> merged{user.front()};
      const auto extra = config_tokens(config_path, *sub, rest);
      merged.insert(merged.end(), extra.begin(), extra.end());
      merged.insert(merged.end(), rest.begin(), rest.end());
      user = merged;
    }
    std::reverse(user.begin(), user.end());
    app.parse(user);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return run_train(train);
    if (sim_cmd->parsed()) return run_simulate(sim);
    if (bench_cmd->parsed()) return run_bench(bench_args);
    if (tube_cmd->parsed()) return run_tube(tube_args);
    if (verify_cmd->parsed()) return run_verify(verify);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
