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
#include <random>

#include <gtest/gtest.h>

#include "ccmtrack/online/runner.hpp"
#include "ccmtrack/sysmodels/integrator.hpp"
#include "ccmtrack/sysmodels/systems.hpp"
#include "../support/gradcheck.hpp"

namespace sysmodels = ccmtrack::sysmodels;
namespace online = ccmtrack::online;
namespace diffnet = ccmtrack::diffnet;
namespace ccm = ccmtrack::ccm;
using Matrix = Eigen::MatrixXd;
using online::DisturbanceNet;
using online::MemoryBuffer;
using online::Vector;

namespace {

// H with zero weights and the given output bias: a constant estimate.
DisturbanceNet constant_estimate(int n, const Vector& value) {
  DisturbanceNet h;
  h.net = diffnet::DenseNet({n + 1, 8, static_cast<int>(value.size())});
  h.net.bias(1) = value;
  return h;
}

// Fills a buffer with the actual plant under a constant control (zero by
// default) and the given disturbance.
MemoryBuffer record_window(const sysmodels::ControlAffineModel& model,
                           const sysmodels::DisturbanceField& dist, Vector x,
                           int capacity, double dt, double t0 = 0.0,
                           Vector u = Vector()) {
  MemoryBuffer buffer(capacity);
  if (u.size() == 0) u = Vector::Zero(model.control_dim());
  for (int k = 0; k < capacity; ++k) {
    const double t = t0 + k * dt;
    buffer.push(t, x, u);
    x = sysmodels::rk4_step(model, x, u, t, dt, &dist);
  }
  return buffer;
}

// Reference that stays at the origin with zero control.
online::ReferenceTrajectory resting_reference(int n, int m, int steps, double dt) {
  online::ReferenceTrajectory ref;
  for (int k = 0; k < steps; ++k) {
    ref.t.push_back(k * dt);
    ref.x.push_back(Vector::Zero(n));
    ref.u.push_back(Vector::Zero(m));
  }
  return ref;
}

// Controller whose feedback term vanishes (w2 = 0), so u = u*.
ccm::TrackingController open_loop_controller(int n, int m) {
  std::mt19937_64 rng(0);
  ccm::TrackingController ctrl = ccm::TrackingController::create(n, m, n, {4}, rng);
  ctrl.w2 = diffnet::DenseNet({2 * n, 4, m * n});
  return ctrl;
}

}  // namespace

TEST(MemoryBuffer, PushGrowsUntilCapacity) {
  MemoryBuffer buffer(3);
  EXPECT_TRUE(buffer.empty());
  buffer.push(0.0, Vector::Zero(2), Vector::Zero(1));
  EXPECT_EQ(buffer.size(), 1);
  EXPECT_FALSE(buffer.full());
}

TEST(MemoryBuffer, EvictsOldestAndKeepsOrder) {
  MemoryBuffer buffer(3);
  for (int k = 0; k < 4; ++k) buffer.push(0.1 * k, Vector::Constant(1, k), Vector::Zero(1));
  ASSERT_EQ(buffer.size(), 3);
  EXPECT_TRUE(buffer.full());
  for (int i = 0; i < 3; ++i) EXPECT_EQ(buffer[i].x(0), i + 1);
  EXPECT_DOUBLE_EQ(buffer.oldest().t, 0.1);
}

TEST(MemoryBuffer, RejectsNonIncreasingTimestamps) {
  MemoryBuffer buffer(3);
  buffer.push(1.0, Vector::Zero(1), Vector::Zero(1));
  EXPECT_THROW(buffer.push(1.0, Vector::Zero(1), Vector::Zero(1)), std::invalid_argument);
  EXPECT_THROW(buffer.push(0.5, Vector::Zero(1), Vector::Zero(1)), std::invalid_argument);
  EXPECT_THROW(MemoryBuffer(1), std::invalid_argument);
}

TEST(DisturbanceNet, ZeroOutputLayerGivesZeroEstimate) {
  std::mt19937_64 rng(1);
  const DisturbanceNet h = DisturbanceNet::create(4, 2, {128, 128}, rng);
  EXPECT_EQ(h.net.widths(), (std::vector<int>{5, 128, 128, 2}));
  for (int trial = 0; trial < 10; ++trial) {
    EXPECT_EQ(h.eval(trial * 0.7, Vector::Random(4)), Vector::Zero(2));
  }
}

TEST(DisturbanceNet, BalancedOutputMapEqualizesInputGains) {
  const auto pvtol = sysmodels::make_model("pvtol");
  const Matrix t = online::balanced_output_map(*pvtol);
  ASSERT_EQ(t.rows(), 2);
  const Matrix b = pvtol->input_matrix(Vector::Zero(6));
  Eigen::JacobiSVD<Matrix> before(b);
  Eigen::JacobiSVD<Matrix> after(b * t);
  const double g = std::sqrt(before.singularValues().prod());
  EXPECT_NEAR(after.singularValues()(0), g, 1e-9 * g);
  EXPECT_NEAR(after.singularValues()(1), g, 1e-9 * g);
  EXPECT_EQ(online::balanced_output_map(*sysmodels::make_model("tsr")).size(), 0);
  EXPECT_EQ(online::balanced_output_map(*sysmodels::scalar_model(-1.0)).size(), 0);
}

TEST(DisturbanceNet, OutputMapScalesEstimate) {
  std::mt19937_64 rng(12);
  DisturbanceNet h = DisturbanceNet::create(3, 2, {8}, rng);
  for (Matrix* p : h.net.parameters()) p->setRandom();
  const Vector x = Vector::Random(3);
  const Vector plain = h.eval(0.4, x);
  h.output_map = (Matrix(2, 2) << 2.0, 1.0, 0.0, -1.0).finished();
  EXPECT_TRUE(h.eval(0.4, x).isApprox(h.output_map * plain, 1e-14));
}

TEST(ControlOl, SubtractsEstimate) {
  const Vector u_ccm = (Vector(2) << 1.0, 2.0).finished();
  const Vector h = (Vector(2) << 0.3, -0.2).finished();
  const Vector u = online::control_ol(u_ccm, h);
  EXPECT_NEAR(u(0), 0.7, 1e-15);
  EXPECT_NEAR(u(1), 2.2, 1e-15);
  EXPECT_EQ(online::control_ol(u_ccm, Vector::Zero(2)), u_ccm);
}

TEST(ControlOl, PerfectEstimateRecoversNominalLoop) {
  const auto model = sysmodels::make_model("linear-test");
  const Vector d = (Vector(1) << 0.4).finished();
  const auto dist = sysmodels::constant_disturbance(d);
  const DisturbanceNet h = constant_estimate(2, d);
  Vector x = (Vector(2) << 0.5, -0.3).finished();
  Vector nominal = x;
  for (int k = 0; k < 300; ++k) {
    const double t = 0.01 * k;
    const Vector u_ccm = -3.0 * x.head(1) - 3.0 * x.tail(1);
    const Vector u_nom = -3.0 * nominal.head(1) - 3.0 * nominal.tail(1);
    x = sysmodels::rk4_step(*model, x, online::control_ol(u_ccm, h, t, x), t, 0.01, &dist);
    nominal = sysmodels::rk4_step(*model, nominal, u_nom, t, 0.01);
    ASSERT_LT((x - nominal).norm(), 1e-12);
  }
}

TEST(VirtualRollout, ZeroEstimateReproducesNominalSteps) {
  const auto model = sysmodels::make_model("tsr");
  std::mt19937_64 rng(2);
  std::vector<Vector> controls;
  for (int k = 0; k < 20; ++k) controls.push_back(0.1 * Vector::Random(2));
  const Vector x0 = (Vector(4) << 0.3, -0.5, 0.1, 0.05).finished();
  const auto rollout = online::virtual_rollout(
      *model, x0, controls, 0.0, 0.01,
      [](double, const Vector&) { return Vector::Zero(2); });
  ASSERT_EQ(rollout.size(), 21u);
  EXPECT_EQ(rollout[0].xi, x0);
  Vector x = x0;
  for (int k = 0; k < 20; ++k) {
    x = sysmodels::rk4_step(*model, x, controls[k], 0.01 * k, 0.01);
    EXPECT_LT((rollout[k + 1].xi - x).norm(), 1e-14);
  }
}

TEST(VirtualRollout, TrueDisturbanceReproducesActualWindow) {
  for (const char* id : {"tsr", "pvtol"}) {
    const auto model = sysmodels::make_model(id);
    const auto dist = std::string(id) == "tsr" ? sysmodels::tsr_disturbance()
                                               : sysmodels::pvtol_disturbance();
    const int n = model->state_dim();
    std::vector<Vector> controls;
    std::vector<Vector> actual;
    Vector x = Vector::Zero(n);
    if (n == 4) x << 0.3, -0.5, 0.0, 0.0;
    actual.push_back(x);
    const Vector u = std::string(id) == "tsr"
                         ? Vector::Zero(2)
                         : Vector::Constant(2, sysmodels::PvtolModel::hover_thrust());
    for (int k = 0; k < 40; ++k) {
      controls.push_back(u);
      x = sysmodels::rk4_step(*model, x, u, 1.0 + 0.01 * k, 0.01, &dist);
      actual.push_back(x);
    }
    const auto rollout = online::virtual_rollout(*model, actual[0], controls, 1.0, 0.01,
                                                 dist.h);
    for (std::size_t k = 0; k < actual.size(); ++k) {
      EXPECT_LT((rollout[k].xi - actual[k]).norm(), 1e-8) << id << " step " << k;
    }
  }
}

TEST(VirtualRollout, ScalarGapMatchesVariationOfConstants) {
  const double a = -0.8;
  const double d = 0.5;
  const auto model = sysmodels::scalar_model(a);
  const auto dist = sysmodels::constant_disturbance(Vector::Constant(1, d));
  const Vector x0 = Vector::Constant(1, 0.7);
  const MemoryBuffer buffer = record_window(*model, dist, x0, 30, 0.01);
  std::vector<Vector> controls(29, Vector::Zero(1));
  const auto rollout = online::virtual_rollout(
      *model, x0, controls, 0.0, 0.01, [](double, const Vector&) { return Vector::Zero(1); });
  double previous = 0.0;
  for (int k = 1; k < 30; ++k) {
    const double t = 0.01 * k;
    const double expected = d * (std::exp(a * t) - 1.0) / a;
    const double gap = buffer[k].x(0) - rollout[static_cast<std::size_t>(k)].xi(0);
    EXPECT_NEAR(gap, expected, 1e-11);
    EXPECT_GT(gap, previous);
    previous = gap;
  }
}

TEST(VirtualRollout, ReportsDomainViolationStep) {
  const auto model = sysmodels::make_model("tsr");
  const Vector x0 = (Vector(4) << 0.0, -0.99, 0.0, -5.0).finished();
  std::vector<Vector> controls(50, Vector::Zero(2));
  try {
    online::virtual_rollout(*model, x0, controls, 0.0, 0.01,
                            [](double, const Vector&) { return Vector::Zero(2); });
    FAIL() << "expected a domain error";
  } catch (const online::RolloutDomainError& e) {
    EXPECT_GE(e.step(), 0);
    EXPECT_LT(e.step(), 50);
  }
}

TEST(WindowLoss, ExactEstimateGivesZeroLoss) {
  const auto model = sysmodels::scalar_model(-1.0);
  const Vector d = Vector::Constant(1, 0.5);
  const MemoryBuffer buffer =
      record_window(*model, sysmodels::constant_disturbance(d), Vector::Constant(1, 0.3), 20, 0.01);
  EXPECT_LT(online::window_loss(buffer, *model, constant_estimate(1, d), 0.01), 1e-10);
}

TEST(WindowLoss, ZeroEstimateUnderDisturbanceIsPositive) {
  const auto model = sysmodels::make_model("tsr");
  const Vector x0 = (Vector(4) << 0.3, -0.5, 0.0, 0.0).finished();
  const MemoryBuffer buffer = record_window(*model, sysmodels::tsr_disturbance(), x0, 20, 0.01);
  EXPECT_GT(online::window_loss(buffer, *model, constant_estimate(4, Vector::Zero(2)), 0.01), 0.0);
}

TEST(WindowLoss, ConstantEstimateSweepMinimizedAtTruth) {
  const auto model = sysmodels::scalar_model(-1.0);
  const MemoryBuffer buffer = record_window(
      *model, sysmodels::constant_disturbance(Vector::Constant(1, 0.5)), Vector::Constant(1, 0.3),
      20, 0.01);
  std::vector<double> losses;
  for (int i = 0; i <= 40; ++i) {
    const double c = 0.025 * i;
    losses.push_back(online::window_loss(buffer, *model,
                                         constant_estimate(1, Vector::Constant(1, c)), 0.01));
  }
  const auto best = std::min_element(losses.begin(), losses.end()) - losses.begin();
  EXPECT_EQ(best, 20);
  for (std::size_t i = 1; i + 1 < losses.size(); ++i) {
    EXPECT_GE(losses[i - 1] + losses[i + 1] - 2.0 * losses[i], -1e-15);
  }
}

TEST(WindowLoss, RequiresFullBuffer) {
  const auto model = sysmodels::scalar_model(-1.0);
  MemoryBuffer buffer(5);
  buffer.push(0.0, Vector::Zero(1), Vector::Zero(1));
  EXPECT_THROW(online::window_loss(buffer, *model, constant_estimate(1, Vector::Zero(1)), 0.01),
               std::invalid_argument);
}

TEST(WindowLoss, TapeValueMatchesPlainEvaluation) {
  const auto model = sysmodels::make_model("pvtol");
  std::mt19937_64 rng(3);
  DisturbanceNet h = DisturbanceNet::create(6, 2, {16, 16}, rng);
  for (Matrix* p : h.net.parameters()) p->setRandom();
  h.output_map = online::balanced_output_map(*model);
  const MemoryBuffer buffer =
      record_window(*model, sysmodels::pvtol_disturbance(), Vector::Zero(6), 10, 0.01, 2.0);
  const double plain = online::window_loss(buffer, *model, h, 0.01);
  const auto wg = online::window_loss_gradient(buffer, *model, h, 0.01);
  EXPECT_NEAR(wg.loss, plain, 1e-12 * std::max(1.0, plain));
}

TEST(WindowLoss, GradientMatchesFiniteDifferences) {
  for (const char* id : {"tsr", "pvtol"}) {
    const auto model = sysmodels::make_model(id);
    const int n = model->state_dim();
    std::mt19937_64 rng(4);
    DisturbanceNet h = DisturbanceNet::create(n, 2, {8, 8}, rng);
    std::normal_distribution<double> normal(0.0, 0.3);
    for (Matrix* p : h.net.parameters()) {
      for (Eigen::Index i = 0; i < p->size(); ++i) p->data()[i] = normal(rng);
    }
    h.output_map = online::balanced_output_map(*model);
    Vector x0 = Vector::Zero(n);
    if (n == 4) x0 << 0.3, -0.5, 0.0, 0.0;
    const auto dist = n == 4 ? sysmodels::tsr_disturbance() : sysmodels::pvtol_disturbance();
    const Vector u = n == 4 ? Vector::Zero(2)
                            : Vector::Constant(2, sysmodels::PvtolModel::hover_thrust());
    const MemoryBuffer buffer = record_window(*model, dist, x0, 12, 0.01, 0.0, u);
    const auto wg = online::window_loss_gradient(buffer, *model, h, 0.01);
    const auto numeric = ccmtrack::testing::finite_difference_gradient(
        [&] { return online::window_loss(buffer, *model, h, 0.01); }, h.net.parameters(), 1e-6);
    // Central differences of a loss of size L carry roundoff near 1e-16 L / step.
    const double floor = 1e-9 * std::max(1.0, wg.loss);
    EXPECT_EQ(ccmtrack::testing::count_mismatches(wg.grads, numeric, 1e-4, floor), 0) << id;
  }
}

TEST(UpdateDisturbance, RunsRequestedEpochs) {
  const auto model = sysmodels::scalar_model(-1.0);
  const MemoryBuffer buffer = record_window(
      *model, sysmodels::constant_disturbance(Vector::Constant(1, 0.5)), Vector::Constant(1, 0.3),
      10, 0.01);
  std::mt19937_64 rng(5);
  DisturbanceNet h = DisturbanceNet::create(1, 1, {16, 16}, rng);
  diffnet::AdamState adam(diffnet::AdamOptions{1e-2});
  const auto r = online::update_disturbance(h, adam, buffer, *model, {3, 0.01});
  EXPECT_TRUE(r.accepted);
  EXPECT_EQ(adam.step, 3);
  EXPECT_LT(r.loss_after, r.loss_before);
}

TEST(UpdateDisturbance, NonFiniteWindowKeepsParameters) {
  const auto model = sysmodels::scalar_model(-1.0);
  MemoryBuffer buffer(4);
  for (int k = 0; k < 4; ++k) {
    buffer.push(0.01 * k, Vector::Constant(1, k == 2 ? std::nan("") : 0.1), Vector::Zero(1));
  }
  std::mt19937_64 rng(6);
  DisturbanceNet h = DisturbanceNet::create(1, 1, {8}, rng);
  const DisturbanceNet before = h;
  diffnet::AdamState adam(diffnet::AdamOptions{1e-2});
  const auto r = online::update_disturbance(h, adam, buffer, *model, {2, 0.01});
  EXPECT_FALSE(r.accepted);
  EXPECT_EQ(adam.step, 0);
  for (int l = 0; l < h.net.num_layers(); ++l) {
    EXPECT_EQ(h.net.weight(l), before.net.weight(l));
    EXPECT_EQ(h.net.bias(l), before.net.bias(l));
  }
}

TEST(RunOnline, WarmUpAppliesCcmControlExactly) {
  const auto model = sysmodels::make_model("linear-test");
  const auto ctrl = open_loop_controller(2, 1);
  const auto ref = resting_reference(2, 1, 60, 0.01);
  online::OnlineConfig config;
  config.capacity = 10;
  std::mt19937_64 rng(7);
  const auto log = online::run_online(*model, sysmodels::constant_disturbance(Vector::Constant(1, 0.3)),
                                      ctrl, ref, Vector::Constant(2, 0.05), config, rng);
  ASSERT_EQ(log.rows.size(), 60u);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(log.rows[k].u, log.rows[k].u_ccm);
  EXPECT_EQ(log.update_ms.size(), 50u);
}

TEST(RunOnline, ZeroDisturbanceStaysNeutral) {
  const auto model = sysmodels::make_model("linear-test");
  const auto ctrl = open_loop_controller(2, 1);
  const auto ref = resting_reference(2, 1, 500, 0.01);
  online::OnlineConfig config;
  config.capacity = 10;
  const auto zero = sysmodels::zero_disturbance(1);
  std::mt19937_64 rng(8);
  const auto with_ol = online::run_online(*model, zero, ctrl, ref, Vector::Constant(2, 0.01),
                                          config, rng);
  config.enabled = false;
  const auto plain = online::run_online(*model, zero, ctrl, ref, Vector::Constant(2, 0.01),
                                        config, rng);
  ASSERT_EQ(with_ol.rows.size(), plain.rows.size());
  for (std::size_t k = 0; k < plain.rows.size(); ++k) {
    ASSERT_LT((with_ol.rows[k].u - with_ol.rows[k].u_ccm).norm(), 1e-3);
    ASSERT_LT((with_ol.rows[k].x - plain.rows[k].x).norm(), 1e-8);
  }
}

TEST(RunOnline, LearnsConstantDisturbanceOnScalarPlant) {
  const auto model = sysmodels::scalar_model(-1.0);
  const auto ctrl = open_loop_controller(1, 1);
  const auto ref = resting_reference(1, 1, 220, 0.01);
  online::OnlineConfig config;
  config.capacity = 20;
  std::mt19937_64 rng(9);
  const auto log = online::run_online(*model,
                                      sysmodels::constant_disturbance(Vector::Constant(1, 0.5)),
                                      ctrl, ref, Vector::Constant(1, 0.2), config, rng);
  ASSERT_TRUE(log.completed);
  double err = 0.0;
  int count = 0;
  for (std::size_t k = 20 + 200 - 1; k < log.rows.size(); ++k) {
    err += std::abs(log.rows[k].h_hat(0) - 0.5);
    ++count;
  }
  ASSERT_GT(count, 0);
  EXPECT_LT(err / count, 0.1);
}

TEST(TrajectoryLog, CsvRoundTripIsExact) {
  online::TrajectoryLog log;
  log.state_dim = 2;
  log.control_dim = 1;
  std::mt19937_64 rng(10);
  std::normal_distribution<double> normal;
  for (int k = 0; k < 5; ++k) {
    online::LogRow row;
    row.t = 0.01 * k;
    row.x = Vector::Random(2) * 1e3;
    row.x_ref = Vector::Random(2) * 1e-7;
    row.u = Vector::Constant(1, normal(rng));
    row.u_ccm = Vector::Constant(1, normal(rng));
    row.h_hat = Vector::Constant(1, 1.0 / 3.0);
    row.h_true = Vector::Constant(1, -0.0);
    log.rows.push_back(row);
  }
  const auto path = std::filesystem::temp_directory_path() / "ccmtrack_log_roundtrip.csv";
  online::write_csv(path, log);
  const auto back = online::read_csv(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.rows.size(), log.rows.size());
  for (std::size_t k = 0; k < log.rows.size(); ++k) {
    EXPECT_EQ(back.rows[k].t, log.rows[k].t);
    EXPECT_EQ(back.rows[k].x, log.rows[k].x);
    EXPECT_EQ(back.rows[k].x_ref, log.rows[k].x_ref);
    EXPECT_EQ(back.rows[k].u, log.rows[k].u);
    EXPECT_EQ(back.rows[k].u_ccm, log.rows[k].u_ccm);
    EXPECT_EQ(back.rows[k].h_hat, log.rows[k].h_hat);
  }
  EXPECT_EQ(online::to_csv(back), online::to_csv(log));
}

TEST(TrajectoryLog, HeaderNamesEveryColumn) {
  EXPECT_EQ(online::csv_header(2, 1), "t,x_0,x_1,xref_0,xref_1,u_0,u_ccm_0,Hhat_0,htrue_0");
}
