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

#include "ccmtrack/ccm/conditions.hpp"
#include "ccmtrack/diffnet/ops.hpp"

namespace ccmtrack::ccm {

/// Minibatch of (x, x*, u*) tuples, one sample per column.
struct SampleBatch {
  Matrix x;
  Matrix x_ref;
  Matrix u_ref;

  Eigen::Index size() const { return x.cols(); }
};

/// Penalty directions shared by every sample of a batch: rows are unit
/// vectors in R^n (full) and R^{n-m} (reduced).
struct PenaltyDirections {
  Matrix full;
  Matrix reduced;

  static PenaltyDirections sample(int state_dim, int control_dim, int count,
                                  std::mt19937_64& rng);
};

/// Tape leaves for the three networks.
struct BoundNets {
  diffnet::NetVars metric;
  diffnet::NetVars w1;
  diffnet::NetVars w2;
};

BoundNets bind_nets(diffnet::Tape& tape, const MetricNet& metric,
                    const TrackingController& ctrl);

/// Batch means of the four loss terms, recorded on a tape.
struct LossTerms {
  diffnet::Var ccm;
  diffnet::Var c1;
  diffnet::Var c2;
  diffnet::Var metric;
  diffnet::Var total;
};

/// Records the empirical loss over a batch. The result is differentiable
/// with respect to the bound network parameters.
LossTerms record_loss(diffnet::Tape& tape,
                      const sysmodels::ControlAffineModel& model,
                      const MetricNet& metric, const TrackingController& ctrl,
                      const BoundNets& vars, const SampleBatch& batch,
                      const LossWeights& weights,
                      const PenaltyDirections& dirs);

/// Batched psi for every sample, (n*n x B) column-major; mainly for
/// cross-checking against ccm_lhs.
Matrix batched_ccm_lhs(const sysmodels::ControlAffineModel& model,
                       const MetricNet& metric, const TrackingController& ctrl,
                       const SampleBatch& batch, double lambda);

/// Scalar loss value and gradients in the order metric, w1, w2 (each as in
/// DenseNet::parameters()).
struct LossGradient {
  double total = 0.0;
  double ccm = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double metric = 0.0;
  std::vector<Matrix> grads;
};

LossGradient loss_and_gradient(const sysmodels::ControlAffineModel& model,
                               const MetricNet& metric,
                               const TrackingController& ctrl,
                               const SampleBatch& batch,
                               const LossWeights& weights,
                               const PenaltyDirections& dirs);

/// Mean of sample_loss over the batch (reference path).
SampleLoss reference_loss(const sysmodels::ControlAffineModel& model,
                          const MetricNet& metric,
                          const TrackingController& ctrl,
                          const SampleBatch& batch, const LossWeights& weights,
                          const PenaltyDirections& dirs);

}  // namespace ccmtrack::ccm
