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

#include "ccmtrack/diffnet/tape.hpp"

#include <stdexcept>

namespace ccmtrack::diffnet {

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::variable(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, std::span<const Var> parents,
                 Backward backward) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape_ != this) {
      throw std::invalid_argument("Tape::record: parent from another tape");
    }
    needs = needs || nodes_[p.id()].requires_grad;
  }
  Node node{std::move(value), {}, {}, needs};
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::backward(const Var& output) {
  if (output.tape_ != this) {
    throw std::invalid_argument("Tape::backward: output from another tape");
  }
  Node& out = nodes_[output.id()];
  if (out.value.rows() != 1 || out.value.cols() != 1) {
    throw std::invalid_argument("Tape::backward: seed must be a scalar");
  }
  if (!out.requires_grad) return;
  out.grad = Matrix::Ones(1, 1);
  for (int id = output.id(); id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.backward || node.grad.size() == 0) continue;
    node.backward(*this, node.grad, node.value);
  }
}

Matrix Tape::grad(const Var& v) const {
  const Node& node = nodes_[v.id()];
  if (node.grad.size() == 0) {
    return Matrix::Zero(node.value.rows(), node.value.cols());
  }
  return node.grad;
}

void Tape::zero_grad() {
  for (Node& node : nodes_) node.grad.resize(0, 0);
}

}  // namespace ccmtrack::diffnet
