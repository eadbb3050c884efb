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

#include "ccmtrack/diffnet/dense_net.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ccmtrack/diffnet/ops.hpp"

namespace ccmtrack::diffnet {

namespace {

double softplus_scalar(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix activate(Activation act, const Matrix& z) {
  if (act == Activation::kTanh) return z.array().tanh().matrix();
  return z.unaryExpr(&softplus_scalar);
}

// Derivative of the activation evaluated from pre-activation z and output a.
Matrix slope(Activation act, const Matrix& z, const Matrix& a) {
  if (act == Activation::kTanh) return (1.0 - a.array().square()).matrix();
  return z.unaryExpr(&sigmoid_scalar);
}

}  // namespace

std::string to_string(Activation a) {
  return a == Activation::kTanh ? "tanh" : "softplus";
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "softplus" || name == "smooth-relu") return Activation::kSoftplus;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

DenseNet::DenseNet(std::vector<int> widths, Activation activation)
    : widths_(std::move(widths)) {
  if (widths_.size() < 2) {
    throw std::invalid_argument("DenseNet: need at least input and output widths");
  }
  for (int w : widths_) {
    if (w <= 0) throw std::invalid_argument("DenseNet: widths must be positive");
  }
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    weights_.push_back(Matrix::Zero(widths_[l + 1], widths_[l]));
    biases_.push_back(Matrix::Zero(widths_[l + 1], 1));
  }
  activations_.assign(weights_.size() - 1, activation);
}

DenseNet DenseNet::glorot(std::vector<int> widths, std::mt19937_64& rng,
                          Activation activation, bool zero_last_layer) {
  DenseNet net(std::move(widths), activation);
  for (int l = 0; l < net.num_layers(); ++l) {
    if (zero_last_layer && l + 1 == net.num_layers()) break;
    Matrix& w = net.weights_[l];
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    // Row-major fill order keeps the draw sequence independent of storage.
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
    }
  }
  return net;
}

std::size_t DenseNet::parameter_count() const {
  std::size_t count = 0;
  for (int l = 0; l < num_layers(); ++l) {
    count += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return count;
}

std::vector<Matrix*> DenseNet::parameters() {
  std::vector<Matrix*> out;
  for (int l = 0; l < num_layers(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::vector<const Matrix*> DenseNet::parameters() const {
  std::vector<const Matrix*> out;
  for (int l = 0; l < num_layers(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

bool DenseNet::all_finite() const {
  for (const Matrix* p : parameters()) {
    if (!p->allFinite()) return false;
  }
  return true;
}

void DenseNet::check_input(Eigen::Index rows) const {
  if (rows != input_dim()) {
    std::ostringstream msg;
    msg << "DenseNet: input has " << rows << " rows, expected " << input_dim();
    throw std::invalid_argument(msg.str());
  }
}

Matrix DenseNet::forward(const Matrix& input) const {
  check_input(input.rows());
  Matrix a = input;
  for (int l = 0; l < num_layers(); ++l) {
    Matrix z;
    z.noalias() = weights_[l] * a;
    z.colwise() += biases_[l].col(0);
    a = (l + 1 < num_layers()) ? activate(activations_[l], z) : std::move(z);
  }
  return a;
}

Vector DenseNet::evaluate(const Vector& input) const {
  return forward(Matrix(input)).col(0);
}

DenseNet::TangentResult DenseNet::forward_tangents(
    const Matrix& input, const std::vector<Matrix>& tangents) const {
  check_input(input.rows());
  TangentResult result;
  Matrix a = input;
  std::vector<Matrix> da = tangents;
  for (const Matrix& t : da) {
    if (t.rows() != input.rows() || t.cols() != input.cols()) {
      throw std::invalid_argument("DenseNet: tangent shape differs from input");
    }
  }
  for (int l = 0; l < num_layers(); ++l) {
    Matrix z;
    z.noalias() = weights_[l] * a;
    z.colwise() += biases_[l].col(0);
    for (Matrix& d : da) d = weights_[l] * d;
    if (l + 1 < num_layers()) {
      a = activate(activations_[l], z);
      const Matrix s = slope(activations_[l], z, a);
      for (Matrix& d : da) d = d.cwiseProduct(s);
    } else {
      a = std::move(z);
    }
  }
  result.output = std::move(a);
  result.tangents = std::move(da);
  return result;
}

NetVars bind(Tape& tape, const DenseNet& net, bool trainable) {
  NetVars vars;
  for (const Matrix* p : net.parameters()) {
    vars.params.push_back(trainable ? tape.variable(*p) : tape.constant(*p));
  }
  return vars;
}

Var record_forward(const DenseNet& net, const NetVars& vars, const Var& input) {
  return record_forward_tangents(net, vars, input, {}).output;
}

RecordedTangents record_forward_tangents(const DenseNet& net,
                                         const NetVars& vars, const Var& input,
                                         const std::vector<Var>& tangents) {
  if (input.rows() != net.input_dim()) {
    std::ostringstream msg;
    msg << "DenseNet: input has " << input.rows() << " rows, expected "
        << net.input_dim();
    throw std::invalid_argument(msg.str());
  }
  Var a = input;
  std::vector<Var> da = tangents;
  for (int l = 0; l < net.num_layers(); ++l) {
    const Var& w = vars.params[2 * l];
    const Var& b = vars.params[2 * l + 1];
    Var z = add_bias(matmul(w, a), b);
    for (Var& d : da) d = matmul(w, d);
    if (l + 1 < net.num_layers()) {
      Var s;
      if (net.activations()[l] == Activation::kTanh) {
        a = tanh(z);
        if (!da.empty()) s = tanh_slope(a);
      } else {
        a = softplus(z);
        if (!da.empty()) s = sigmoid(z);
      }
      for (Var& d : da) d = cwise_mul(d, s);
    } else {
      a = z;
    }
  }
  return RecordedTangents{a, std::move(da)};
}

std::vector<Matrix> gradients(const Tape& tape, const NetVars& vars) {
  std::vector<Matrix> out;
  out.reserve(vars.params.size());
  for (const Var& v : vars.params) out.push_back(tape.grad(v));
  return out;
}

std::vector<Matrix> grad(Tape& tape, const Var& scalar_output,
                         const NetVars& vars) {
  tape.backward(scalar_output);
  return gradients(tape, vars);
}

Matrix input_jacobian(const DenseNet& net, const Vector& input) {
  const int n = net.input_dim();
  std::vector<Matrix> dirs;
  dirs.reserve(n);
  for (int j = 0; j < n; ++j) dirs.push_back(Matrix::Identity(n, n).col(j));
  const auto res = net.forward_tangents(Matrix(input), dirs);
  Matrix jac(net.output_dim(), n);
  for (int j = 0; j < n; ++j) jac.col(j) = res.tangents[j].col(0);
  return jac;
}

Matrix directional_derivative(const TapeFunction& fn, const Vector& x,
                              const Vector& v) {
  if (v.size() != x.size()) {
    throw std::invalid_argument("directional_derivative: direction length differs");
  }
  Tape tape;
  const Var xv = tape.variable(Matrix(x));
  const Var out = fn(tape, xv);
  Matrix result(out.rows(), out.cols());
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      tape.zero_grad();
      tape.backward(element(out, i, j));
      result(i, j) = tape.grad(xv).col(0).dot(v);
    }
  }
  return result;
}

}  // namespace ccmtrack::diffnet
