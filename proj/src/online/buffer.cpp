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

#include "ccmtrack/online/buffer.hpp"

#include <stdexcept>
#include <utility>

namespace ccmtrack::online {

MemoryBuffer::MemoryBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 2) throw std::invalid_argument("MemoryBuffer: capacity must be >= 2");
}

void MemoryBuffer::push(double t, Vector x, Vector u) {
  if (!entries_.empty() && !(t > entries_.back().t)) {
    throw std::invalid_argument("MemoryBuffer: timestamps must increase");
  }
  if (full()) entries_.pop_front();
  entries_.push_back({t, std::move(x), std::move(u)});
}

}  // namespace ccmtrack::online
