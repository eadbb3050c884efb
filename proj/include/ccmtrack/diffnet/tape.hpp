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

#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ccmtrack::diffnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Tape;

/// Handle to a matrix-valued node recorded on a Tape.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode recording of matrix operations.
///
/// Nodes are appended in evaluation order; backward() walks them once in
/// reverse. Only nodes that (transitively) depend on a variable() leaf keep a
/// backward closure, so constant subgraphs cost nothing on the way back.
/// A tape is single-writer.
class Tape {
 public:
  /// Propagates the node's adjoint to its parents. Receives the adjoint and
  /// the node's own forward value.
  using Backward = std::function<void(Tape&, const Matrix& grad,
                                      const Matrix& value)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var variable(Matrix value);
  Var record(Matrix value, std::span<const Var> parents, Backward backward);
  Var record(Matrix value, std::initializer_list<Var> parents,
             Backward backward) {
    return record(std::move(value),
                  std::span<const Var>(parents.begin(), parents.size()),
                  std::move(backward));
  }

  bool requires_grad(const Var& v) const { return nodes_[v.id()].requires_grad; }
  const Matrix& value(const Var& v) const { return nodes_[v.id()].value; }

  /// Adds g to the adjoint of v; no-op for constants.
  template <typename Derived>
  void accumulate(const Var& v, const Eigen::MatrixBase<Derived>& g) {
    Node& node = nodes_[v.id()];
    if (!node.requires_grad) return;
    if (node.grad.size() == 0) {
      node.grad = g;
    } else {
      node.grad += g;
    }
  }

  /// Seeds d(output)/d(output) = 1 and runs the reverse sweep.
  /// Throws std::invalid_argument unless output is 1x1.
  void backward(const Var& output);

  /// Adjoint of v after backward(); zeros if no gradient reached it.
  Matrix grad(const Var& v) const;
  void zero_grad();

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(*this); }

}  // namespace ccmtrack::diffnet
