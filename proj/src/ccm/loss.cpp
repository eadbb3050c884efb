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

#include "ccmtrack/ccm/loss.hpp"

#include <stdexcept>

namespace ccmtrack::ccm {

namespace {

using diffnet::Tape;
using diffnet::Var;
using diffnet::batched_matmul;
using diffnet::batched_transpose;

// Per-sample model quantities that do not depend on the networks.
struct ModelData {
  Matrix drift;       // n x B
  Matrix drift_jac;   // n*n x B
  Matrix input;       // n*m x B
  std::vector<Matrix> input_jac;  // m entries of n*n x B; empty if B constant
  Matrix perp;        // n*r x B
};

ModelData model_data(const sysmodels::ControlAffineModel& model,
                     const Matrix& x) {
  const int n = model.state_dim();
  const int m = model.control_dim();
  const int r = n - m;
  const Eigen::Index batch = x.cols();
  ModelData d;
  d.drift.resize(n, batch);
  d.drift_jac.resize(n * n, batch);
  d.input.resize(n * m, batch);
  d.perp.resize(n * r, batch);
  const bool constant_b = model.constant_input_matrix();
  if (!constant_b) d.input_jac.assign(m, Matrix(n * n, batch));
  Matrix perp_const;
  if (constant_b && batch > 0) perp_const = annihilator(model.input_matrix(x.col(0)));
  for (Eigen::Index j = 0; j < batch; ++j) {
    const Vector xj = x.col(j);
    d.drift.col(j) = model.drift(xj);
    d.drift_jac.col(j) = model.drift_jacobian(xj).reshaped();
    const Matrix b = model.input_matrix(xj);
    d.input.col(j) = b.reshaped();
    d.perp.col(j) = (constant_b ? perp_const : annihilator(b)).reshaped();
    if (!constant_b) {
      const std::vector<Matrix> db = model.input_jacobians(xj);
      for (int i = 0; i < m; ++i) d.input_jac[i].col(j) = db[i].reshaped();
    }
  }
  return d;
}

struct PsiParts {
  Var metric;   // n*n x B
  Var factor;   // n*n x B
  Var factor_t;
  Var psi;
  std::vector<Var> metric_tangents;  // d_f m, d_{b_i} m
};

// d/dv (alpha I + m^T m) = hat(m^T dm).
Var metric_derivative(const Var& factor_t, const Var& dm, int n) {
  const Var p = batched_matmul(factor_t, dm, n, n, n);
  return p + batched_transpose(p, n, n);
}

PsiParts record_psi(Tape& tape, const sysmodels::ControlAffineModel& model,
                    const MetricNet& metric, const TrackingController& ctrl,
                    const BoundNets& vars, const SampleBatch& batch,
                    const ModelData& data, double lambda) {
  const int n = model.state_dim();
  const int m = model.control_dim();
  const int c = ctrl.inner_dim;
  const Eigen::Index bsz = batch.size();

  Matrix z(2 * n, bsz);
  z << batch.x, batch.x_ref;
  const Var zv = tape.constant(z);
  const Var err = tape.constant(batch.x - batch.x_ref);
  std::vector<Var> unit;
  for (int j = 0; j < n; ++j) {
    Matrix t = Matrix::Zero(2 * n, bsz);
    t.row(j).setOnes();
    unit.push_back(tape.constant(std::move(t)));
  }
  const auto r1 = diffnet::record_forward_tangents(ctrl.w1, vars.w1, zv, unit);
  const auto r2 = diffnet::record_forward_tangents(ctrl.w2, vars.w2, zv, unit);
  const Var s = diffnet::tanh(batched_matmul(r1.output, err, c, n, 1));
  const Var slope = diffnet::tanh_slope(s);
  const Var u = tape.constant(batch.u_ref) + batched_matmul(r2.output, s, m, c, 1);

  std::vector<Var> gain_cols;
  for (int j = 0; j < n; ++j) {
    const Var inner = batched_matmul(r1.tangents[j], err, c, n, 1) +
                      diffnet::slice_rows(r1.output, static_cast<Eigen::Index>(j) * c, c);
    gain_cols.push_back(batched_matmul(r2.tangents[j], s, m, c, 1) +
                        batched_matmul(r2.output, diffnet::cwise_mul(slope, inner),
                                       m, c, 1));
  }
  const Var gain = diffnet::vstack(gain_cols);

  const Var input = tape.constant(data.input);
  const Var drift = tape.constant(data.drift);
  const Var xdot = drift + batched_matmul(input, u, n, m, 1);

  std::vector<Var> tangents{xdot, drift};
  for (int i = 0; i < m; ++i) {
    tangents.push_back(tape.constant(data.input.middleRows(i * n, n)));
  }
  const Var xv = tape.constant(batch.x);
  const auto rm = diffnet::record_forward_tangents(metric.net, vars.metric, xv, tangents);

  PsiParts parts;
  parts.factor = rm.output;
  parts.factor_t = batched_transpose(rm.output, n, n);
  parts.metric = tape.constant(metric.alpha_lo * diffnet::batched_identity(n, bsz)) +
                 batched_matmul(parts.factor_t, rm.output, n, n, n);
  parts.metric_tangents.assign(rm.tangents.begin() + 1, rm.tangents.end());

  Var a = tape.constant(data.drift_jac);
  for (std::size_t i = 0; i < data.input_jac.size(); ++i) {
    a = a + diffnet::scale_columns(tape.constant(data.input_jac[i]),
                                   diffnet::slice_rows(u, static_cast<Eigen::Index>(i), 1));
  }
  const Var a_cl = a + batched_matmul(input, gain, n, m, n);
  const Var ma = batched_matmul(parts.metric, a_cl, n, n, n);
  parts.psi = metric_derivative(parts.factor_t, rm.tangents[0], n) + ma +
              batched_transpose(ma, n, n) + (2.0 * lambda) * parts.metric;
  return parts;
}

// Mean over directions and samples of relu(v^T A v + shift). With worst set,
// each sample also uses the top eigenvector of its own A as a constant
// direction, whose gradient is that of the largest eigenvalue.
Var sampled_penalty(Tape& tape, const Matrix& dirs, const Var& a_flat,
                    double shift, bool worst) {
  const int dim = static_cast<int>(dirs.cols());
  Matrix phi(dirs.rows(), dim * dim);
  for (Eigen::Index k = 0; k < dirs.rows(); ++k) {
    const Vector v = dirs.row(k).transpose();
    phi.row(k) = (v * v.transpose()).reshaped().transpose();
  }
  Var quad = diffnet::matmul(tape.constant(std::move(phi)), a_flat);
  if (worst) {
    const Matrix& a = a_flat.value();
    Matrix outer(a.rows(), a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const Matrix aj = a.col(j).reshaped(dim, dim);
      Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (aj + aj.transpose()));
      const Vector v = eig.eigenvectors().col(dim - 1);
      outer.col(j) = (v * v.transpose()).reshaped();
    }
    const Var top = diffnet::matmul(tape.constant(Matrix::Ones(1, a.rows())),
                                    diffnet::cwise_mul(tape.constant(std::move(outer)),
                                                       a_flat));
    quad = diffnet::vstack({quad, top});
  }
  if (shift != 0.0) quad = diffnet::add_scalar(quad, shift);
  return diffnet::mean(diffnet::relu(quad));
}

}  // namespace

PenaltyDirections PenaltyDirections::sample(int state_dim, int control_dim,
                                            int count, std::mt19937_64& rng) {
  PenaltyDirections dirs;
  dirs.full = unit_directions(state_dim, count, rng);
  dirs.reduced = unit_directions(state_dim - control_dim, count, rng);
  return dirs;
}

BoundNets bind_nets(Tape& tape, const MetricNet& metric,
                    const TrackingController& ctrl) {
  return BoundNets{diffnet::bind(tape, metric.net), diffnet::bind(tape, ctrl.w1),
                   diffnet::bind(tape, ctrl.w2)};
}

LossTerms record_loss(Tape& tape, const sysmodels::ControlAffineModel& model,
                      const MetricNet& metric, const TrackingController& ctrl,
                      const BoundNets& vars, const SampleBatch& batch,
                      const LossWeights& weights,
                      const PenaltyDirections& dirs) {
  if (batch.size() == 0) throw std::invalid_argument("record_loss: empty batch");
  const int n = model.state_dim();
  const int m = model.control_dim();
  const int r = n - m;
  const ModelData data = model_data(model, batch.x);
  const PsiParts parts = record_psi(tape, model, metric, ctrl, vars, batch, data,
                                    weights.lambda);

  LossTerms out;
  // G(-psi - sigma I) = mean relu(v^T psi v + sigma) for unit v.
  out.ccm = sampled_penalty(tape, dirs.full, parts.psi, weights.sigma,
                            weights.worst_direction);
  // G(alpha_hi I - M) = mean relu(v^T M v - alpha_hi).
  out.metric = sampled_penalty(tape, dirs.full, parts.metric, -weights.alpha_hi,
                               weights.worst_direction);

  if (r > 0) {
    const Var w = diffnet::batched_inverse(parts.metric, n);
    const Var perp = tape.constant(data.perp);
    const Var perp_t = batched_transpose(perp, n, r);
    auto project = [&](const Var& inner) {
      return batched_matmul(batched_matmul(perp_t, inner, r, n, n), perp, r, n, r);
    };
    auto sandwich = [&](const Var& dm) {
      return batched_matmul(batched_matmul(w, metric_derivative(parts.factor_t, dm, n),
                                           n, n, n),
                            w, n, n, n);
    };
    const Var jw = batched_matmul(tape.constant(data.drift_jac), w, n, n, n);
    const Var c1 = project(sandwich(parts.metric_tangents[0]) + jw +
                           batched_transpose(jw, n, n) + (2.0 * weights.lambda) * w);
    // G(-C1) = mean relu(v^T C1 v).
    out.c1 = sampled_penalty(tape, dirs.reduced, c1, 0.0, weights.worst_direction);

    std::vector<Var> blocks;
    for (int i = 0; i < m; ++i) {
      Var inner = -sandwich(parts.metric_tangents[1 + i]);
      if (!data.input_jac.empty()) {
        const Var jb = batched_matmul(tape.constant(data.input_jac[i]), w, n, n, n);
        inner = inner - (jb + batched_transpose(jb, n, n));
      }
      blocks.push_back(project(inner));
    }
    out.c2 = diffnet::mean(diffnet::column_norms(diffnet::vstack(blocks)));
  } else {
    out.c1 = tape.constant(Matrix::Zero(1, 1));
    out.c2 = tape.constant(Matrix::Zero(1, 1));
  }
  out.total = out.ccm + out.c1 + out.c2 + out.metric;
  return out;
}

Matrix batched_ccm_lhs(const sysmodels::ControlAffineModel& model,
                       const MetricNet& metric, const TrackingController& ctrl,
                       const SampleBatch& batch, double lambda) {
  Tape tape;
  const BoundNets vars{diffnet::bind(tape, metric.net, false),
                       diffnet::bind(tape, ctrl.w1, false),
                       diffnet::bind(tape, ctrl.w2, false)};
  const ModelData data = model_data(model, batch.x);
  return record_psi(tape, model, metric, ctrl, vars, batch, data, lambda).psi.value();
}

LossGradient loss_and_gradient(const sysmodels::ControlAffineModel& model,
                               const MetricNet& metric,
                               const TrackingController& ctrl,
                               const SampleBatch& batch,
                               const LossWeights& weights,
                               const PenaltyDirections& dirs) {
  Tape tape;
  const BoundNets vars = bind_nets(tape, metric, ctrl);
  const LossTerms terms = record_loss(tape, model, metric, ctrl, vars, batch,
                                      weights, dirs);
  tape.backward(terms.total);
  LossGradient out;
  out.total = terms.total.value()(0, 0);
  out.ccm = terms.ccm.value()(0, 0);
  out.c1 = terms.c1.value()(0, 0);
  out.c2 = terms.c2.value()(0, 0);
  out.metric = terms.metric.value()(0, 0);
  for (const diffnet::NetVars* nv : {&vars.metric, &vars.w1, &vars.w2}) {
    for (Matrix& g : diffnet::gradients(tape, *nv)) out.grads.push_back(std::move(g));
  }
  return out;
}

SampleLoss reference_loss(const sysmodels::ControlAffineModel& model,
                          const MetricNet& metric,
                          const TrackingController& ctrl,
                          const SampleBatch& batch, const LossWeights& weights,
                          const PenaltyDirections& dirs) {
  SampleLoss sum;
  for (Eigen::Index j = 0; j < batch.size(); ++j) {
    const SampleLoss s = sample_loss(model, metric, ctrl, batch.x.col(j),
                                     batch.x_ref.col(j), batch.u_ref.col(j),
                                     weights, dirs.full, dirs.reduced);
    sum.ccm += s.ccm;
    sum.c1 += s.c1;
    sum.c2 += s.c2;
    sum.metric += s.metric;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  sum.ccm *= inv;
  sum.c1 *= inv;
  sum.c2 *= inv;
  sum.metric *= inv;
  return sum;
}

}  // namespace ccmtrack::ccm
