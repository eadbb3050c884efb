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
#include <cstring>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "ccmtrack/sysmodels/disturbance.hpp"
#include "ccmtrack/sysmodels/systems.hpp"

using namespace ccmtrack::sysmodels;

namespace {

Vector v(std::initializer_list<double> e) {
  Vector out(static_cast<Eigen::Index>(e.size()));
  Eigen::Index i = 0;
  for (double x : e) out[i++] = x;
  return out;
}

double max_rel_err(const Matrix& a, const Matrix& b) {
  return ((a - b).cwiseAbs().array() / (b.cwiseAbs().array() + 1.0)).maxCoeff();
}

}  // namespace

TEST(TsrModel, DriftAtOrigin) {
  TsrModel tsr;
  EXPECT_TRUE(tsr.drift(Vector::Zero(4)).isApprox(v({0, 0, 0, 3})));
}

TEST(TsrModel, DriftVanishesAtRightAngleHalfLength) {
  TsrModel tsr;
  const Vector f = tsr.drift(v({std::numbers::pi / 2, -0.5, 0, 0}));
  EXPECT_LT(f.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(TsrModel, CollapsedTetherIsDomainViolation) {
  TsrModel tsr;
  EXPECT_THROW(tsr.drift(v({0, -1.0, 0, 0})), DomainError);
  EXPECT_THROW(tsr.drift_jacobian(v({0, -1.2, 0, 0})), DomainError);
  EXPECT_NO_THROW(tsr.drift(v({0, -0.999, 0, 0})));
}

TEST(TsrModel, InputMatrixIsConstantSelector) {
  TsrModel tsr;
  Matrix expected(4, 2);
  expected << 0, 0, 0, 0, 1, 0, 0, 1;
  EXPECT_EQ(tsr.input_matrix(Vector::Zero(4)), expected);
}

TEST(PvtolModel, HoverIsEquilibrium) {
  PvtolModel pvtol;
  const Vector u = Vector::Constant(2, PvtolModel::hover_thrust());
  EXPECT_LT(pvtol.dynamics(Vector::Zero(6), u).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(PvtolModel, InputMatrixHasFullColumnRank) {
  PvtolModel pvtol;
  Eigen::FullPivLU<Matrix> lu(pvtol.input_matrix(Vector::Zero(6)));
  EXPECT_EQ(lu.rank(), 2);
  // First n - m rows are zero: the sparse structure the dual conditions use.
  EXPECT_EQ(pvtol.input_matrix(Vector::Zero(6)).topRows(4).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Models, AnalyticJacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  for (const char* id : {"tsr", "pvtol", "linear-test"}) {
    const ModelPtr model = make_model(id);
    for (int k = 0; k < 100; ++k) {
      const Vector x = model->state_box().sample(rng);
      const Matrix fd = finite_difference_jacobian(*model, x, 1e-6);
      EXPECT_LT(max_rel_err(model->drift_jacobian(x), fd), 1e-5) << id;
    }
  }
}

TEST(Models, JacobianAIsDriftJacobianForConstantInputMatrix) {
  std::mt19937_64 rng(3);
  for (const char* id : {"tsr", "pvtol", "linear-test"}) {
    const ModelPtr model = make_model(id);
    for (int k = 0; k < 20; ++k) {
      const Vector x = model->state_box().sample(rng);
      const Vector u = model->control_box().sample(rng);
      const Matrix a = jacobian_A(*model, x, u);
      const Matrix j = model->drift_jacobian(x);
      ASSERT_EQ(a.size(), j.size());
      EXPECT_EQ(0, std::memcmp(a.data(), j.data(), sizeof(double) * a.size())) << id;
    }
  }
}

TEST(Models, TsrJacobianAtReferencePoint) {
  TsrModel tsr;
  const Vector x = v({0.1, -0.2, 0, 0});
  const Matrix a = jacobian_A(tsr, x, Vector::Zero(2));
  EXPECT_LT(max_rel_err(a, finite_difference_jacobian(tsr, x)), 1e-5);
}

TEST(Models, LinearPlantJacobianIsSystemMatrix) {
  const ModelPtr lin = linear_test_model();
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  std::mt19937_64 rng(1);
  for (int k = 0; k < 5; ++k) {
    EXPECT_EQ(jacobian_A(*lin, lin->state_box().sample(rng),
                         lin->control_box().sample(rng)),
              a);
  }
}

TEST(Models, LookupRejectsUnknownId) {
  EXPECT_THROW(make_model("quadrotor"), std::invalid_argument);
}

TEST(Disturbance, TsrValues) {
  const auto d = tsr_disturbance();
  EXPECT_TRUE(d(0.0, Vector::Zero(4)).isApprox(v({0.3, 0.2})));
  const Vector h = d(std::numbers::pi / 2, Vector::Zero(4));
  EXPECT_NEAR(h[0], 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(h[1], 0.2);
  const Vector g = d(0.0, v({0, -0.5, 0, 0}));
  EXPECT_NEAR(g[0], 0.1561723384187391, 1e-15);
  EXPECT_DOUBLE_EQ(g[1], 0.2);
}

TEST(Disturbance, PvtolValues) {
  const auto d = pvtol_disturbance();
  EXPECT_TRUE(d(0.0, Vector::Zero(6)).isApprox(v({8.0, 2.0})));
  const Vector h = d(std::numbers::pi, Vector::Zero(6));
  EXPECT_NEAR(h[0], 0.0, 1e-14);
  EXPECT_DOUBLE_EQ(h[1], 2.0);
  const Vector g = d(1.0, v({0.5, -0.2, 0, 0.1, 0.3, 0}));
  EXPECT_NEAR(g[0], 5.3465485614044175, 1e-14);
  EXPECT_NEAR(g[1], 2.869524055459618, 1e-14);
}

TEST(Disturbance, NeverExceedsDeclaredBound) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> time(0.0, 100.0);
  const std::pair<const char*, DisturbanceField> cases[] = {
      {"tsr", tsr_disturbance()}, {"pvtol", pvtol_disturbance()}};
  for (const auto& [id, d] : cases) {
    const ModelPtr model = make_model(id);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
      worst = std::max(worst, d(time(rng), model->state_box().sample(rng)).norm());
    }
    EXPECT_LE(worst, d.upper_bound) << id;
    EXPECT_GT(worst, 0.5 * d.upper_bound) << id;
  }
}
