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

#include "ccmtrack/diffnet/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace ccmtrack::diffnet {

void adam_update(AdamState& state, const std::vector<Matrix*>& params,
                 const std::vector<Matrix>& grads) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("adam_update: parameter/gradient count differs");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i].rows() ||
        params[i]->cols() != grads[i].cols()) {
      throw std::invalid_argument("adam_update: gradient shape mismatch");
    }
  }
  if (state.first_moment.empty()) {
    for (const Matrix* p : params) {
      state.first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.second_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  } else if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_update: state built for other parameters");
  }

  const AdamOptions& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& m = state.first_moment[i];
    Matrix& v = state.second_moment[i];
    if (m.rows() != grads[i].rows() || m.cols() != grads[i].cols()) {
      throw std::invalid_argument("adam_update: moment shape mismatch");
    }
    m = o.beta1 * m + (1.0 - o.beta1) * grads[i];
    v = o.beta2 * v + (1.0 - o.beta2) * grads[i].cwiseAbs2();
    params[i]->array() -=
        o.learning_rate * (m.array() / correction1) /
        ((v.array() / correction2).sqrt() + o.epsilon);
  }
}

}  // namespace ccmtrack::diffnet
