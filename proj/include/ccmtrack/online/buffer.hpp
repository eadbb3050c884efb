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

#include <cstddef>
#include <deque>

#include "ccmtrack/sysmodels/model.hpp"

namespace ccmtrack::online {

using sysmodels::Matrix;
using sysmodels::Vector;

struct BufferEntry {
  double t = 0.0;
  Vector x;
  Vector u;
};

/// Fixed-capacity window of (t, x, u) tuples, oldest first.
class MemoryBuffer {
 public:
  explicit MemoryBuffer(int capacity);

  /// Appends a tuple, evicting the oldest when full. Throws
  /// std::invalid_argument unless t exceeds the newest timestamp.
  void push(double t, Vector x, Vector u);

  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(entries_.size()); }
  bool full() const { return size() == capacity_; }
  bool empty() const { return entries_.empty(); }
  void clear() { entries_.clear(); }

  const BufferEntry& operator[](int i) const { return entries_[static_cast<std::size_t>(i)]; }
  const BufferEntry& oldest() const { return entries_.front(); }
  const BufferEntry& newest() const { return entries_.back(); }

 private:
  int capacity_;
  std::deque<BufferEntry> entries_;
};

}  // namespace ccmtrack::online
