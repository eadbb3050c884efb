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

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ccmtrack/diffnet/tape.hpp"

namespace ccmtrack::diffnet {

enum class Activation { kTanh, kSoftplus };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Fully connected feed-forward network.
///
/// Weights are stored out x in, so layer l maps z -> W_l z + b_l. Hidden
/// layers apply their activation; the last layer is affine. Inputs and
/// outputs are column vectors, or matrices with one sample per column.
class DenseNet {
 public:
  DenseNet() = default;
  /// Zero-initialized network with the given layer widths (>= 2 entries).
  explicit DenseNet(std::vector<int> widths,
                    Activation activation = Activation::kTanh);

  /// Uniform Glorot initialization, biases zero. zero_last_layer sets the
  /// output layer to zero so the network starts as the zero map.
  static DenseNet glorot(std::vector<int> widths, std::mt19937_64& rng,
                         Activation activation = Activation::kTanh,
                         bool zero_last_layer = false);

  const std::vector<int>& widths() const { return widths_; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  int num_layers() const { return static_cast<int>(weights_.size()); }
  std::size_t parameter_count() const;

  const std::vector<Activation>& activations() const { return activations_; }

  Matrix& weight(int layer) { return weights_[layer]; }
  const Matrix& weight(int layer) const { return weights_[layer]; }
  Matrix& bias(int layer) { return biases_[layer]; }
  const Matrix& bias(int layer) const { return biases_[layer]; }

  /// Parameters in the order W0, b0, W1, b1, ...
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;

  bool all_finite() const;

  /// Forward evaluation; input is (input_dim x batch).
  Matrix forward(const Matrix& input) const;
  /// Single-sample convenience overload.
  Vector evaluate(const Vector& input) const;

  struct TangentResult {
    Matrix output;
    std::vector<Matrix> tangents;
  };
  /// Forward evaluation plus directional derivatives along each input
  /// tangent (each tangent has the input's shape).
  TangentResult forward_tangents(const Matrix& input,
                                 const std::vector<Matrix>& tangents) const;

 private:
  void check_input(Eigen::Index rows) const;

  std::vector<int> widths_;
  std::vector<Activation> activations_;
  std::vector<Matrix> weights_;
  std::vector<Matrix> biases_;
};

/// Tape leaves bound to a network's parameters (same order as
/// DenseNet::parameters()).
struct NetVars {
  std::vector<Var> params;
};

/// Registers the parameters on the tape. trainable=false records them as
/// constants.
NetVars bind(Tape& tape, const DenseNet& net, bool trainable = true);

Var record_forward(const DenseNet& net, const NetVars& vars, const Var& input);

struct RecordedTangents {
  Var output;
  std::vector<Var> tangents;
};
/// Records the forward pass together with forward-mode tangent propagation,
/// so the tangents themselves are differentiable w.r.t. the parameters.
RecordedTangents record_forward_tangents(const DenseNet& net,
                                         const NetVars& vars, const Var& input,
                                         const std::vector<Var>& tangents);

/// Parameter adjoints after tape.backward(); same order as parameters().
std::vector<Matrix> gradients(const Tape& tape, const NetVars& vars);

/// Runs the reverse sweep from a scalar and returns the parameter gradients.
std::vector<Matrix> grad(Tape& tape, const Var& scalar_output,
                         const NetVars& vars);

/// Jacobian of the network output w.r.t. a single input vector;
/// row i is the gradient of output i.
Matrix input_jacobian(const DenseNet& net, const Vector& input);

/// Differentiable map recorded on a tape.
using TapeFunction = std::function<Var(Tape&, const Var&)>;

/// d/de fn(x + e v) at e = 0, exact via reverse sweeps (one per output
/// entry). Result has the shape of fn's output.
Matrix directional_derivative(const TapeFunction& fn, const Vector& x,
                              const Vector& v);

}  // namespace ccmtrack::diffnet
