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
#include <vector>

#include <gtest/gtest.h>

#include "ccmtrack/sysmodels/integrator.hpp"
#include "ccmtrack/sysmodels/systems.hpp"

using namespace ccmtrack::sysmodels;

namespace {

// Global error of integrating x' = x from x(0) = 1 to t = 1.
double exp_global_error(int steps) {
  const ModelPtr plant = scalar_model(1.0, 10.0);
  const double dt = 1.0 / steps;
  Vector x = Vector::Ones(1);
  for (int k = 0; k < steps; ++k) {
    x = rk4_step(*plant, x, Vector::Zero(1), k * dt, dt);
  }
  return std::abs(x[0] - std::exp(1.0));
}

}  // namespace

TEST(Rk4, FixedPointOfZeroPlant) {
  const ModelPtr plant = scalar_model(0.0);
  Vector x(1);
  x << 0.7;
  EXPECT_EQ(rk4_step(*plant, x, Vector::Zero(1), 0.0, 0.01)[0], 0.7);
}

TEST(Rk4, ScalarExponentialOneStep) {
  const ModelPtr plant = scalar_model(1.0);
  const Vector x1 = rk4_step(*plant, Vector::Ones(1), Vector::Zero(1), 0.0, 0.1);
  // Fourth-order Taylor truncation of e^0.1.
  EXPECT_NEAR(x1[0], 1.1051708333333332, 1e-15);
  EXPECT_LT(std::abs(x1[0] - std::exp(0.1)), 1e-7);
}

TEST(Rk4, FourthOrderConvergence) {
  std::vector<double> log_h, log_e;
  for (int steps : {10, 20, 40, 80}) {
    log_h.push_back(std::log(1.0 / steps));
    log_e.push_back(std::log(exp_global_error(steps)));
  }
  // Least-squares slope in log-log.
  const double n = static_cast<double>(log_h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < log_h.size(); ++i) {
    sx += log_h[i];
    sy += log_e[i];
    sxx += log_h[i] * log_h[i];
    sxy += log_h[i] * log_e[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_GE(slope, 3.7);
  EXPECT_LE(slope, 4.3);
  const double ratio = exp_global_error(20) / exp_global_error(40);
  EXPECT_GT(ratio, 12.0);
  EXPECT_LT(ratio, 20.0);
}

TEST(Rk4, DisturbanceEntersThroughInputMatrix) {
  const ModelPtr plant = scalar_model(0.0);
  const DisturbanceField d = constant_disturbance(Vector::Constant(1, 0.5));
  const Vector x1 = rk4_step(*plant, Vector::Zero(1), Vector::Constant(1, 0.25),
                             0.0, 0.1, &d);
  EXPECT_NEAR(x1[0], 0.075, 1e-15);
}

TEST(Rk4, RejectsNonPositiveStep) {
  const ModelPtr plant = scalar_model(1.0);
  EXPECT_THROW(rk4_step(*plant, Vector::Ones(1), Vector::Zero(1), 0.0, 0.0),
               std::invalid_argument);
}

TEST(Rk4, StageLeavingDomainThrows) {
  TsrModel tsr;
  Vector x(4);
  x << 0.0, -0.99, 0.0, -50.0;
  EXPECT_THROW(rk4_step(tsr, x, Vector::Zero(2), 0.0, 0.01), DomainError);
}
