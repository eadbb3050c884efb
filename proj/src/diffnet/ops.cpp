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

#include "ccmtrack/diffnet/ops.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ccmtrack::diffnet {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream msg;
    msg << op << ": shape mismatch (" << a.rows() << "x" << a.cols() << " vs "
        << b.rows() << "x" << b.cols() << ")";
    throw std::invalid_argument(msg.str());
  }
}

void require_rows(const Var& a, Eigen::Index rows, const char* op) {
  if (a.rows() != rows) {
    std::ostringstream msg;
    msg << op << ": expected " << rows << " rows, got " << a.rows();
    throw std::invalid_argument(msg.str());
  }
}

double softplus_scalar(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var operator+(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return a.tape().record(a.value() + b.value(), {a, b},
                         [a, b](Tape& t, const Matrix& g, const Matrix&) {
                           t.accumulate(a, g);
                           t.accumulate(b, g);
                         });
}

Var operator-(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return a.tape().record(a.value() - b.value(), {a, b},
                         [a, b](Tape& t, const Matrix& g, const Matrix&) {
                           t.accumulate(a, g);
                           t.accumulate(b, -g);
                         });
}

Var operator-(const Var& a) {
  return a.tape().record(-a.value(), {a},
                         [a](Tape& t, const Matrix& g, const Matrix&) {
                           t.accumulate(a, -g);
                         });
}

Var operator*(double s, const Var& a) {
  return a.tape().record(s * a.value(), {a},
                         [a, s](Tape& t, const Matrix& g, const Matrix&) {
                           t.accumulate(a, s * g);
                         });
}

Var add_scalar(const Var& a, double s) {
  return a.tape().record(a.value().array() + s, {a},
                         [a](Tape& t, const Matrix& g, const Matrix&) {
                           t.accumulate(a, g);
                         });
}

Var cwise_mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "cwise_mul");
  return a.tape().record(
      a.value().cwiseProduct(b.value()), {a, b},
      [a, b](Tape& t, const Matrix& g, const Matrix&) {
        if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
        if (t.requires_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
      });
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    std::ostringstream msg;
    msg << "matmul: inner dimensions differ (" << a.cols() << " vs "
        << b.rows() << ")";
    throw std::invalid_argument(msg.str());
  }
  Matrix out;
  out.noalias() = a.value() * b.value();
  return a.tape().record(
      std::move(out), {a, b},
      [a, b](Tape& t, const Matrix& g, const Matrix&) {
        if (t.requires_grad(a)) {
          Matrix ga;
          ga.noalias() = g * b.value().transpose();
          t.accumulate(a, ga);
        }
        if (t.requires_grad(b)) {
          Matrix gb;
          gb.noalias() = a.value().transpose() * g;
          t.accumulate(b, gb);
        }
      });
}

Var add_bias(const Var& x, const Var& b) {
  require_rows(b, x.rows(), "add_bias");
  if (b.cols() != 1) throw std::invalid_argument("add_bias: bias must be a column");
  Matrix out = x.value();
  out.colwise() += b.value().col(0);
  return x.tape().record(std::move(out), {x, b},
                         [x, b](Tape& t, const Matrix& g, const Matrix&) {
                           t.accumulate(x, g);
                           if (t.requires_grad(b)) {
                             t.accumulate(b, g.rowwise().sum());
                           }
                         });
}

Var scale_columns(const Var& a, const Var& s) {
  if (s.rows() != 1 || s.cols() != a.cols()) {
    throw std::invalid_argument("scale_columns: scale must be 1 x cols");
  }
  Matrix out = a.value() * s.value().row(0).asDiagonal();
  return a.tape().record(
      std::move(out), {a, s},
      [a, s](Tape& t, const Matrix& g, const Matrix&) {
        if (t.requires_grad(a)) {
          t.accumulate(a, g * s.value().row(0).asDiagonal());
        }
        if (t.requires_grad(s)) {
          t.accumulate(s, g.cwiseProduct(a.value()).colwise().sum());
        }
      });
}

Var tanh(const Var& a) {
  Matrix out = a.value().array().tanh().matrix();
  return a.tape().record(
      std::move(out), {a}, [a](Tape& t, const Matrix& g, const Matrix& y) {
        t.accumulate(a, (g.array() * (1.0 - y.array().square())).matrix());
      });
}

Var tanh_slope(const Var& a) {
  Matrix out = (1.0 - a.value().array().square()).matrix();
  return a.tape().record(
      std::move(out), {a}, [a](Tape& t, const Matrix& g, const Matrix&) {
        t.accumulate(a, (-2.0 * g.array() * a.value().array()).matrix());
      });
}

Var softplus(const Var& a) {
  Matrix out = a.value().unaryExpr(&softplus_scalar);
  return a.tape().record(
      std::move(out), {a}, [a](Tape& t, const Matrix& g, const Matrix&) {
        t.accumulate(a, g.cwiseProduct(a.value().unaryExpr(&sigmoid_scalar)));
      });
}

Var sigmoid(const Var& a) {
  Matrix out = a.value().unaryExpr(&sigmoid_scalar);
  return a.tape().record(
      std::move(out), {a}, [a](Tape& t, const Matrix& g, const Matrix& y) {
        t.accumulate(a, (g.array() * y.array() * (1.0 - y.array())).matrix());
      });
}

Var relu(const Var& a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape().record(
      std::move(out), {a}, [a](Tape& t, const Matrix& g, const Matrix&) {
        t.accumulate(a, (a.value().array() > 0.0).select(g.array(), 0.0).matrix());
      });
}

Var sum(const Var& a) {
  return a.tape().record(
      Matrix::Constant(1, 1, a.value().sum()), {a},
      [a](Tape& t, const Matrix& g, const Matrix&) {
        t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
      });
}

Var mean(const Var& a) {
  const double count = static_cast<double>(a.value().size());
  if (count == 0.0) throw std::invalid_argument("mean: empty operand");
  return a.tape().record(
      Matrix::Constant(1, 1, a.value().sum() / count), {a},
      [a, count](Tape& t, const Matrix& g, const Matrix&) {
        t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0) / count));
      });
}

Var element(const Var& a, Eigen::Index row, Eigen::Index col) {
  if (row < 0 || row >= a.rows() || col < 0 || col >= a.cols()) {
    throw std::out_of_range("element: index out of range");
  }
  return a.tape().record(
      Matrix::Constant(1, 1, a.value()(row, col)), {a},
      [a, row, col](Tape& t, const Matrix& g, const Matrix&) {
        Matrix ga = Matrix::Zero(a.rows(), a.cols());
        ga(row, col) = g(0, 0);
        t.accumulate(a, ga);
      });
}

Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw std::out_of_range("slice_rows: range out of bounds");
  }
  Matrix out = a.value().middleRows(start, count);
  return a.tape().record(
      std::move(out), {a},
      [a, start, count](Tape& t, const Matrix& g, const Matrix&) {
        Matrix ga = Matrix::Zero(a.rows(), a.cols());
        ga.middleRows(start, count) = g;
        t.accumulate(a, ga);
      });
}

Var vstack(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("vstack: no operands");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("vstack: column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return parts.front().tape().record(
      std::move(out), std::span<const Var>(parts.data(), parts.size()),
      [parts](Tape& t, const Matrix& g, const Matrix&) {
        Eigen::Index offset = 0;
        for (const Var& p : parts) {
          if (t.requires_grad(p)) t.accumulate(p, g.middleRows(offset, p.rows()));
          offset += p.rows();
        }
      });
}

Var batched_matmul(const Var& a, const Var& b, int p, int q, int r) {
  require_rows(a, static_cast<Eigen::Index>(p) * q, "batched_matmul(lhs)");
  require_rows(b, static_cast<Eigen::Index>(q) * r, "batched_matmul(rhs)");
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("batched_matmul: batch sizes differ");
  }
  const Eigen::Index batch = a.cols();
  Matrix out(static_cast<Eigen::Index>(p) * r, batch);
  for (Eigen::Index j = 0; j < batch; ++j) {
    MutMap(out.col(j).data(), p, r).noalias() =
        ConstMap(a.value().col(j).data(), p, q) *
        ConstMap(b.value().col(j).data(), q, r);
  }
  return a.tape().record(
      std::move(out), {a, b},
      [a, b, p, q, r](Tape& t, const Matrix& g, const Matrix&) {
        const Eigen::Index batch = g.cols();
        if (t.requires_grad(a)) {
          Matrix ga(a.rows(), batch);
          for (Eigen::Index j = 0; j < batch; ++j) {
            MutMap(ga.col(j).data(), p, q).noalias() =
                ConstMap(g.col(j).data(), p, r) *
                ConstMap(b.value().col(j).data(), q, r).transpose();
          }
          t.accumulate(a, ga);
        }
        if (t.requires_grad(b)) {
          Matrix gb(b.rows(), batch);
          for (Eigen::Index j = 0; j < batch; ++j) {
            MutMap(gb.col(j).data(), q, r).noalias() =
                ConstMap(a.value().col(j).data(), p, q).transpose() *
                ConstMap(g.col(j).data(), p, r);
          }
          t.accumulate(b, gb);
        }
      });
}

Var batched_transpose(const Var& a, int p, int q) {
  require_rows(a, static_cast<Eigen::Index>(p) * q, "batched_transpose");
  const Eigen::Index batch = a.cols();
  Matrix out(a.rows(), batch);
  for (Eigen::Index j = 0; j < batch; ++j) {
    MutMap(out.col(j).data(), q, p) =
        ConstMap(a.value().col(j).data(), p, q).transpose();
  }
  return a.tape().record(
      std::move(out), {a}, [a, p, q](Tape& t, const Matrix& g, const Matrix&) {
        Matrix ga(g.rows(), g.cols());
        for (Eigen::Index j = 0; j < g.cols(); ++j) {
          MutMap(ga.col(j).data(), p, q) =
              ConstMap(g.col(j).data(), q, p).transpose();
        }
        t.accumulate(a, ga);
      });
}

Var batched_inverse(const Var& a, int n) {
  require_rows(a, static_cast<Eigen::Index>(n) * n, "batched_inverse");
  const Eigen::Index batch = a.cols();
  Matrix out(a.rows(), batch);
  for (Eigen::Index j = 0; j < batch; ++j) {
    Eigen::PartialPivLU<Matrix> lu(ConstMap(a.value().col(j).data(), n, n));
    MutMap(out.col(j).data(), n, n) = lu.inverse();
  }
  return a.tape().record(
      std::move(out), {a}, [a, n](Tape& t, const Matrix& g, const Matrix& w) {
        Matrix ga(g.rows(), g.cols());
        for (Eigen::Index j = 0; j < g.cols(); ++j) {
          ConstMap wj(w.col(j).data(), n, n);
          MutMap(ga.col(j).data(), n, n).noalias() =
              -wj.transpose() * ConstMap(g.col(j).data(), n, n) * wj.transpose();
        }
        t.accumulate(a, ga);
      });
}

Var column_norms(const Var& a) {
  Matrix out = a.value().colwise().norm();
  return a.tape().record(
      std::move(out), {a}, [a](Tape& t, const Matrix& g, const Matrix& norms) {
        Matrix ga = Matrix::Zero(a.rows(), a.cols());
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
          if (norms(0, j) > 0.0) {
            ga.col(j) = a.value().col(j) * (g(0, j) / norms(0, j));
          }
        }
        t.accumulate(a, ga);
      });
}

Matrix batched_identity(int n, Eigen::Index batch) {
  Matrix eye = Matrix::Identity(n, n).reshaped(static_cast<Eigen::Index>(n) * n, 1);
  return eye.replicate(1, batch);
}

}  // namespace ccmtrack::diffnet
