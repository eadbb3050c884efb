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

#include <filesystem>
#include <string>
#include <vector>

#include "ccmtrack/online/buffer.hpp"

namespace ccmtrack::online {

/// One row per control interval.
struct LogRow {
  double t = 0.0;
  Vector x;
  Vector x_ref;
  Vector u;
  Vector u_ccm;
  Vector h_hat;
  Vector h_true;
};

struct TrajectoryLog {
  int state_dim = 0;
  int control_dim = 0;
  std::vector<LogRow> rows;
  /// False when the run stopped early; failure holds the reason.
  bool completed = true;
  std::string failure;
  /// Wall time of each disturbance update in milliseconds (not exported).
  std::vector<double> update_ms;
  /// Window loss before and after each update (not exported).
  std::vector<double> loss_before;
  std::vector<double> loss_after;
  int rejected_updates = 0;
};

/// Header: t, x_i, xref_i, u_j, u_ccm_j, Hhat_j, htrue_j.
std::string csv_header(int state_dim, int control_dim);
/// CSV text with 17 significant digits.
std::string to_csv(const TrajectoryLog& log);
void write_csv(const std::filesystem::path& path, const TrajectoryLog& log);
/// Throws std::runtime_error on a malformed file.
TrajectoryLog read_csv(const std::filesystem::path& path);

}  // namespace ccmtrack::online
