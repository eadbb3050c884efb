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

#include <random>

#include <gtest/gtest.h>

#include "ccmtrack/diffnet/ops.hpp"
#include "../support/gradcheck.hpp"

using namespace ccmtrack::diffnet;
using ccmtrack::testing::count_mismatches;
using ccmtrack::testing::finite_difference_gradient;

TEST(Tape, SquareDerivative) {
  Tape tape;
  const Var x = tape.variable(Matrix::Constant(1, 1, 3.0));
  tape.backward(cwise_mul(x, x));
  EXPECT_DOUBLE_EQ(tape.grad(x)(0, 0), 6.0);
}

TEST(Tape, TanhDerivativeAtZero) {
  Tape tape;
  const Var x = tape.variable(Matrix::Zero(1, 1));
  tape.backward(tanh(x));
  EXPECT_DOUBLE_EQ(tape.grad(x)(0, 0), 1.0);
}

TEST(Tape, NonScalarSeedRejected) {
  Tape tape;
  const Var x = tape.variable(Matrix::Ones(2, 1));
  EXPECT_THROW(tape.backward(x), std::invalid_argument);
}

TEST(Tape, UnusedVariableHasZeroAdjoint) {
  Tape tape;
  const Var used = tape.variable(Matrix::Ones(2, 2));
  const Var unused = tape.variable(Matrix::Ones(3, 1));
  tape.backward(sum(used));
  EXPECT_EQ(tape.grad(unused), Matrix::Zero(3, 1));
  EXPECT_EQ(tape.grad(used), Matrix::Ones(2, 2));
}

TEST(Tape, ConstantsRecordNoBackward) {
  Tape tape;
  const Var c = tape.constant(Matrix::Ones(2, 2));
  const Var y = sum(cwise_mul(c, c));
  EXPECT_FALSE(tape.requires_grad(y));
  EXPECT_NO_THROW(tape.backward(y));
}

TEST(Tape, EachNodeVisitedOnce) {
  Tape tape;
  const Var x = tape.variable(Matrix::Constant(1, 1, 2.0));
  int visits = 0;
  const Var y = tape.record(x.value(), {x},
                            [x, &visits](Tape& t, const Matrix& g, const Matrix&) {
                              ++visits;
                              t.accumulate(x, g);
                            });
  // y feeds three consumers; its closure must still run exactly once.
  tape.backward(sum(vstack({y, y, cwise_mul(y, y)})));
  EXPECT_EQ(visits, 1);
  EXPECT_DOUBLE_EQ(tape.grad(x)(0, 0), 2.0 + 2.0 * 2.0);
}

TEST(Tape, ShapeMismatchThrows) {
  Tape tape;
  const Var a = tape.variable(Matrix::Ones(2, 3));
  const Var b = tape.variable(Matrix::Ones(2, 2));
  EXPECT_THROW(a + b, std::invalid_argument);
  EXPECT_THROW(matmul(a, b), std::invalid_argument);
}

// Every primitive in one scalar graph, checked against finite differences.
TEST(Tape, CompositeGraphMatchesFiniteDifferences) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto randn = [&](int r, int c) {
    Matrix m(r, c);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = normal(rng);
    return m;
  };
  const int n = 3, batch = 4;
  Matrix a = randn(n * n, batch);
  Matrix b = randn(n * n, batch);
  Matrix w = randn(2, n * n);
  Matrix bias = randn(2, 1);
  Matrix s = randn(1, batch);
  // Keep `spd` well conditioned for the inverse.
  Matrix spd_base = randn(n * n, batch);

  auto build = [&](Tape& tape, std::vector<Var>& leaves) {
    leaves = {tape.variable(a), tape.variable(b), tape.variable(w),
              tape.variable(bias), tape.variable(s), tape.variable(spd_base)};
    const Var& va = leaves[0];
    const Var& vb = leaves[1];
    const Var prod = batched_matmul(va, batched_transpose(vb, n, n), n, n, n);
    const Var gram = batched_matmul(batched_transpose(leaves[5], n, n), leaves[5], n, n, n);
    const Var spd = gram + tape.constant(4.0 * batched_identity(n, batch));
    const Var inv = batched_inverse(spd, n);
    const Var mixed = scale_columns(prod + inv, leaves[4]);
    const Var h = tanh(add_bias(matmul(leaves[2], mixed), leaves[3]));
    const Var soft = softplus(h) + sigmoid(h) + tanh_slope(h);
    const Var r = relu(add_scalar(slice_rows(vstack({soft, h}), 1, 2), 0.1));
    const Var norms = column_norms(mixed);
    return mean(r) + sum(norms) + 0.5 * element(cwise_mul(h, h), 1, 2) - (-sum(h));
  };

  Tape tape;
  std::vector<Var> leaves;
  const Var loss = build(tape, leaves);
  tape.backward(loss);
  std::vector<Matrix> analytic;
  for (const Var& l : leaves) analytic.push_back(tape.grad(l));

  std::vector<Matrix*> params = {&a, &b, &w, &bias, &s, &spd_base};
  const auto numeric = finite_difference_gradient(
      [&] {
        Tape t;
        std::vector<Var> l;
        return build(t, l).value()(0, 0);
      },
      params);
  EXPECT_EQ(count_mismatches(analytic, numeric, 1e-4, 1e-7), 0);
}

TEST(BatchedOps, MatmulAgreesWithPerSampleProduct) {
  Tape tape;
  const int p = 2, q = 3, r = 2, batch = 5;
  const Matrix a = Matrix::Random(p * q, batch);
  const Matrix b = Matrix::Random(q * r, batch);
  const Var out = batched_matmul(tape.constant(a), tape.constant(b), p, q, r);
  for (int j = 0; j < batch; ++j) {
    const Matrix expected = a.col(j).reshaped(p, q) * b.col(j).reshaped(q, r);
    EXPECT_TRUE(out.value().col(j).reshaped(p, r).isApprox(expected));
  }
}
