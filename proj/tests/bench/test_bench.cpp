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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "ccmtrack/bench/experiment.hpp"
#include "ccmtrack/sysmodels/systems.hpp"

namespace bench = ccmtrack::bench;
namespace ccm = ccmtrack::ccm;
namespace diffnet = ccmtrack::diffnet;
namespace online = ccmtrack::online;
namespace sysmodels = ccmtrack::sysmodels;
using Vector = Eigen::VectorXd;

namespace {

online::LogRow row(std::initializer_list<double> x, std::initializer_list<double> xr) {
  online::LogRow r;
  r.x = Eigen::Map<const Vector>(x.begin(), static_cast<Eigen::Index>(x.size()));
  r.x_ref = Eigen::Map<const Vector>(xr.begin(), static_cast<Eigen::Index>(xr.size()));
  return r;
}

// Small nets; the controller applies u* (zero feedback) so runs are cheap.
ccm::CCMCheckpoint small_checkpoint(const std::string& model_id) {
  const auto model = sysmodels::make_model(model_id);
  const int n = model->state_dim();
  const int m = model->control_dim();
  std::mt19937_64 rng(1);
  ccm::CCMCheckpoint ckpt;
  ckpt.metric = ccm::MetricNet::create(n, 0.1, {8}, rng);
  ckpt.controller = ccm::TrackingController::create(n, m, n, {8}, rng);
  ckpt.controller.w2 = diffnet::DenseNet({2 * n, 8, m * n});
  ckpt.meta.model_id = model_id;
  ckpt.meta.alpha_lo_emp = 0.1;
  ckpt.meta.alpha_hi_emp = 10.0;
  return ckpt;
}

bench::ExperimentConfig small_config(const std::string& model_id) {
  auto config = bench::ExperimentConfig::defaults_for(model_id);
  config.horizon = 0.6;
  config.online.hidden = {16, 16};
  config.tube_samples = 200;
  config.seed = 3;
  return config;
}

}  // namespace

TEST(Rmse, IdenticalTrajectoriesGiveZero) {
  online::TrajectoryLog log;
  log.rows = {row({1, 2}, {1, 2}), row({-3, 0.5}, {-3, 0.5})};
  EXPECT_EQ(bench::rmse(log, bench::RmseSelector::kFullState), 0.0);
}

TEST(Rmse, ConstantOffsetOnOneAxis) {
  online::TrajectoryLog log;
  for (int k = 0; k < 7; ++k) log.rows.push_back(row({0.1 * k, -0.25, 3}, {0.1 * k, 0.0, 3}));
  EXPECT_DOUBLE_EQ(bench::rmse(log, bench::RmseSelector::kFullState), 0.25);
}

TEST(Rmse, HandComputedThreeRowLog) {
  online::TrajectoryLog log;
  log.rows = {row({1, 2, 9}, {0, 0, 0}), row({0, 0, 0}, {0, 0, 0}), row({3, 0, 1}, {1, 1, 1})};
  // Full state: squared errors 86, 0, 5.  Position: 5, 0, 5.
  EXPECT_DOUBLE_EQ(bench::rmse(log, bench::RmseSelector::kFullState), std::sqrt(91.0 / 3.0));
  EXPECT_DOUBLE_EQ(bench::rmse(log, bench::RmseSelector::kPosition), std::sqrt(10.0 / 3.0));
  EXPECT_THROW(bench::rmse(online::TrajectoryLog{}, bench::RmseSelector::kFullState),
               std::invalid_argument);
}

TEST(Rmse, SelectorFollowsModel) {
  EXPECT_EQ(bench::default_selector("pvtol"), bench::RmseSelector::kPosition);
  EXPECT_EQ(bench::default_selector("tsr"), bench::RmseSelector::kFullState);
}

TEST(ImprovementPct, MatchesDefinition) {
  EXPECT_DOUBLE_EQ(bench::improvement_pct(0.04, 0.01), 75.0);
  EXPECT_DOUBLE_EQ(bench::improvement_pct(0.02, 0.02), 0.0);
  EXPECT_DOUBLE_EQ(bench::improvement_pct(0.01, 0.02), -100.0);
}

TEST(TsrReference, FeasibleDeploymentWithNonPositiveTension) {
  const auto ref = bench::gen_reference_tsr(0);
  const auto model = sysmodels::make_model("tsr");
  ASSERT_EQ(ref.size(), 1500);
  EXPECT_DOUBLE_EQ(ref.x.front()(0), 0.3);
  EXPECT_DOUBLE_EQ(ref.x.front()(1), -0.9);
  EXPECT_LT(bench::feasibility_residual(*model, ref, 0.01), 1e-6);
  const Vector& last = ref.x.back();
  EXPECT_LT(std::max(std::abs(last(0)), std::abs(last(1))), 0.005);
  for (const Vector& u : ref.u) {
    ASSERT_LE(u(1), 0.0);
    ASSERT_TRUE(model->control_box().contains(u));
  }
}

TEST(TsrReference, ShortHorizonMissesTerminalTolerance) {
  bench::TsrReferenceOptions options;
  options.horizon = 2.0;
  EXPECT_THROW(bench::gen_reference_tsr(0, options), bench::ReferenceError);
}

TEST(PvtolReference, FeasibleAndInsideSamplingBox) {
  const auto model = sysmodels::make_model("pvtol");
  for (std::uint64_t seed : {0, 1, 2}) {
    const auto ref = bench::gen_reference_pvtol(seed);
    ASSERT_EQ(ref.size(), 1000);
    EXPECT_LT(bench::feasibility_residual(*model, ref, 0.01), 1e-6);
    for (const Vector& x : ref.x) ASSERT_TRUE(model->state_box().contains(x));
  }
}

TEST(PvtolReference, SeedsGiveDifferentPlans) {
  const auto a = bench::gen_reference_pvtol(11);
  const auto b = bench::gen_reference_pvtol(12);
  const auto a2 = bench::gen_reference_pvtol(11);
  double gap = 0.0;
  for (int k = 0; k < a.size(); ++k) {
    gap = std::max(gap, (a.x[static_cast<std::size_t>(k)] - b.x[static_cast<std::size_t>(k)]).cwiseAbs().maxCoeff());
    ASSERT_EQ(a.x[static_cast<std::size_t>(k)], a2.x[static_cast<std::size_t>(k)]);
  }
  EXPECT_GT(gap, 0.1);
}

TEST(PvtolReference, ExhaustedRejectionBudgetThrows) {
  bench::PvtolReferenceOptions options;
  options.amplitude_min = 40.0;
  options.amplitude_max = 50.0;
  options.max_attempts = 3;
  EXPECT_THROW(bench::gen_reference_pvtol(0, options), bench::ReferenceError);
}

TEST(InputDigest, SensitiveToEveryInput) {
  const auto ref = bench::gen_reference_tsr(0);
  const Vector x0 = ref.x.front();
  const std::string base = bench::input_digest(ref, x0, 1, "tsr");
  EXPECT_EQ(base.size(), 16u);
  EXPECT_EQ(base, bench::input_digest(ref, x0, 1, "tsr"));
  EXPECT_NE(base, bench::input_digest(ref, x0, 2, "tsr"));
  EXPECT_NE(base, bench::input_digest(ref, x0 * 1.0001, 1, "tsr"));
  EXPECT_NE(base, bench::input_digest(ref, x0, 1, "zero"));
}

TEST(MetricsJson, RoundsToSixSignificantDigits) {
  bench::MetricsReport r;
  r.rmse_ccm = 0.0123456789;
  r.rmse_ol = 0.00304;
  r.improvement_pct = bench::improvement_pct(r.rmse_ccm, r.rmse_ol);
  r.deployment_reached = true;
  const auto doc = bench::metrics_json(r);
  EXPECT_DOUBLE_EQ(doc["rmse_ccm"].get<double>(), 0.0123457);
  EXPECT_EQ(doc["deployment_reached"], true);
  EXPECT_FALSE(doc.contains("timing"));
  r.timing[10] = {3.86, 0.23, 50};
  EXPECT_DOUBLE_EQ(bench::metrics_json(r)["timing"]["10"]["mean_ms"].get<double>(), 3.86);
  r.deployment_reached.reset();
  EXPECT_TRUE(bench::metrics_json(r)["deployment_reached"].is_null());
}

TEST(ExperimentConfig, ValidatesSettings) {
  auto config = bench::ExperimentConfig::defaults_for("pvtol");
  EXPECT_EQ(config.online.capacity, 10);
  EXPECT_EQ(bench::ExperimentConfig::defaults_for("tsr").online.capacity, 20);
  EXPECT_NO_THROW(config.validate());
  config.horizon = 0.05;
  EXPECT_THROW(config.validate(), std::invalid_argument);
  config = bench::ExperimentConfig::defaults_for("quadrotor");
  EXPECT_THROW(config.validate(), std::invalid_argument);
  config = bench::ExperimentConfig::defaults_for("tsr");
  config.scenario = "storm";
  EXPECT_THROW(config.validate(), std::invalid_argument);
}

TEST(RunExperiment, PairedRunsShareInputsAndAreDeterministic) {
  for (const char* id : {"tsr", "pvtol"}) {
    const auto ckpt = small_checkpoint(id);
    auto config = small_config(id);
    const auto a = bench::run_experiment(config, ckpt);
    config.threads = 2;
    const auto b = bench::run_experiment(config, ckpt);
    EXPECT_EQ(a.metrics.input_digest_ccm, a.metrics.input_digest_ol) << id;
    EXPECT_EQ(a.log_ccm.rows.size(), 60u) << id;
    EXPECT_EQ(online::to_csv(a.log_ccm), online::to_csv(b.log_ccm)) << id;
    EXPECT_EQ(online::to_csv(a.log_ol), online::to_csv(b.log_ol)) << id;
    EXPECT_EQ(bench::metrics_json(a.metrics).dump(), bench::metrics_json(b.metrics).dump()) << id;
    EXPECT_LT((a.log_ccm.rows.front().x - a.reference.x.front() -
               bench::initial_offset(id, static_cast<int>(a.reference.x.front().size())))
                  .norm(),
              1e-12);
    EXPECT_EQ(a.metrics.deployment_reached.has_value(), std::string(id) == "tsr");
  }
}

TEST(RunExperiment, ZeroDisturbanceIsNeutral) {
  const auto ckpt = small_checkpoint("tsr");
  auto config = small_config("tsr");
  config.scenario = "zero-disturbance";
  const auto result = bench::run_experiment(config, ckpt);
  EXPECT_LE(std::abs(result.metrics.improvement_pct), 5.0);
  EXPECT_LT(result.metrics.max_control_gap, 1e-3);
}

TEST(RunExperiment, RejectsMismatchedCheckpoint) {
  EXPECT_THROW(bench::run_experiment(small_config("tsr"), small_checkpoint("pvtol")),
               std::invalid_argument);
  auto config = small_config("tsr");
  EXPECT_THROW(bench::run_experiment(config), std::invalid_argument);
}

TEST(RunExperiment, WritesLogsAndMetrics) {
  auto config = small_config("tsr");
  config.output_dir = std::filesystem::temp_directory_path() / "ccmtrack_bench_outputs";
  std::filesystem::remove_all(config.output_dir);
  const auto result = bench::run_experiment(config, small_checkpoint("tsr"));
  bench::write_outputs(config, result);
  for (const char* f : {"log_ccm.csv", "log_ol.csv", "metrics.json"}) {
    EXPECT_TRUE(std::filesystem::exists(config.output_dir / f)) << f;
  }
  const auto back = online::read_csv(config.output_dir / "log_ol.csv");
  EXPECT_EQ(online::to_csv(back), online::to_csv(result.log_ol));
  std::ifstream in(config.output_dir / "metrics.json");
  const auto doc = nlohmann::json::parse(in);
  for (const char* key : {"rmse_ccm", "rmse_ol", "improvement_pct", "tube_containment",
                          "deployment_reached"}) {
    EXPECT_TRUE(doc.contains(key)) << key;
  }
  std::filesystem::remove_all(config.output_dir);
}

TEST(TimingBench, ReportsEveryCapacity) {
  const auto model = sysmodels::make_model("tsr");
  online::OnlineConfig oc;
  oc.hidden = {16, 16};
  const auto table = bench::timing_bench(*model, {10, 20}, 5, 0, oc);
  ASSERT_EQ(table.size(), 2u);
  for (const auto& [capacity, stat] : table) {
    EXPECT_GT(stat.mean_ms, 0.0) << capacity;
    EXPECT_EQ(stat.repeats, 5);
  }
}
