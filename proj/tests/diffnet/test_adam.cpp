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

#include <gtest/gtest.h>

#include "ccmtrack/diffnet/adam.hpp"

using namespace ccmtrack::diffnet;

TEST(Adam, FirstStepMovesByLearningRateAgainstGradient) {
  AdamState state(AdamOptions{.learning_rate = 0.01});
  Matrix p(1, 3);
  p << 1.0, 1.0, 1.0;
  Matrix g(1, 3);
  g << 2.0, -0.5, 30.0;
  adam_update(state, {&p}, {g});
  for (int i = 0; i < 3; ++i) {
    const double step = 1.0 - p(0, i);
    EXPECT_EQ(std::signbit(step), std::signbit(g(0, i)));
    EXPECT_GE(std::abs(step), 0.99 * 0.01);
    EXPECT_LE(std::abs(step), 0.01);
  }
  EXPECT_EQ(state.step, 1);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  AdamState state;
  Matrix p = Matrix::Constant(2, 2, 0.3);
  for (int k = 0; k < 50; ++k) adam_update(state, {&p}, {Matrix::Zero(2, 2)});
  EXPECT_EQ(p, Matrix::Constant(2, 2, 0.3));
  EXPECT_EQ(state.step, 50);
}

TEST(Adam, ConvergesOnConvexQuadratic) {
  AdamState state(AdamOptions{.learning_rate = 0.1});
  Matrix theta = Matrix::Zero(1, 1);
  for (int k = 0; k < 200; ++k) {
    adam_update(state, {&theta}, {2.0 * (theta.array() - 2.0).matrix()});
  }
  EXPECT_LT(std::abs(theta(0, 0) - 2.0), 0.05);
}

TEST(Adam, ShapeMismatchThrows) {
  AdamState state;
  Matrix p = Matrix::Zero(2, 2);
  EXPECT_THROW(adam_update(state, {&p}, {Matrix::Zero(2, 1)}), std::invalid_argument);
  EXPECT_THROW(adam_update(state, {&p}, {}), std::invalid_argument);
}
