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
#include <vector>

#include "ccmtrack/diffnet/tape.hpp"

namespace ccmtrack::diffnet {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment estimates for Adam with bias correction. Moments are shaped on the
/// first update.
struct AdamState {
  AdamOptions options;
  std::int64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;

  AdamState() = default;
  explicit AdamState(AdamOptions opts) : options(opts) {}
};

/// One Adam step in place. Throws std::invalid_argument on shape mismatch.
void adam_update(AdamState& state, const std::vector<Matrix*>& params,
                 const std::vector<Matrix>& grads);

}  // namespace ccmtrack::diffnet
