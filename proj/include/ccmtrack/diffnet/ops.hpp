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

#pragma once

#include <vector>

#include "ccmtrack/diffnet/tape.hpp"

namespace ccmtrack::diffnet {

// Elementwise and linear-algebra primitives recorded on a Tape. Operands
// must live on the same tape. Unless stated otherwise shapes must agree.

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator-(const Var& a);
Var operator*(double s, const Var& a);
Var add_scalar(const Var& a, double s);
Var cwise_mul(const Var& a, const Var& b);
/// Ordinary matrix product.
Var matmul(const Var& a, const Var& b);
/// x (r x B) plus column vector b (r x 1) broadcast over columns.
Var add_bias(const Var& x, const Var& b);
/// a (r x B) with column j scaled by s(0, j); s is 1 x B.
Var scale_columns(const Var& a, const Var& s);

Var tanh(const Var& a);
/// 1 - a^2, the tanh derivative expressed through its output.
Var tanh_slope(const Var& a);
Var softplus(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);

Var sum(const Var& a);
Var mean(const Var& a);
/// Single entry as a 1x1 node.
Var element(const Var& a, Eigen::Index row, Eigen::Index col);
Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count);
Var vstack(const std::vector<Var>& parts);

// Batched small-matrix operations. Column j of a (p*q x B) operand holds the
// j-th sample's p x q matrix in column-major order.

/// Per-column product of p x q and q x r matrices -> (p*r x B).
Var batched_matmul(const Var& a, const Var& b, int p, int q, int r);
/// Per-column transpose of p x q matrices -> (q*p x B).
Var batched_transpose(const Var& a, int p, int q);
/// Per-column inverse of n x n matrices.
Var batched_inverse(const Var& a, int n);
/// Euclidean norm of every column -> (1 x B); zero columns get a zero
/// subgradient.
Var column_norms(const Var& a);

/// Identity matrices flattened into every column: (n*n x B).
Matrix batched_identity(int n, Eigen::Index batch);

}  // namespace ccmtrack::diffnet
