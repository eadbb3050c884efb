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

#include "ccmtrack/online/trajectory_log.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ccmtrack::online {

namespace {

void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

void append_vector(std::string& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out += ',';
    append_number(out, v(i));
  }
}

void append_names(std::string& out, const char* prefix, int count) {
  for (int i = 0; i < count; ++i) {
    out += ',';
    out += prefix;
    out += std::to_string(i);
  }
}

}  // namespace

std::string csv_header(int state_dim, int control_dim) {
  std::string out = "t";
  append_names(out, "x_", state_dim);
  append_names(out, "xref_", state_dim);
  append_names(out, "u_", control_dim);
  append_names(out, "u_ccm_", control_dim);
  append_names(out, "Hhat_", control_dim);
  append_names(out, "htrue_", control_dim);
  return out;
}

std::string to_csv(const TrajectoryLog& log) {
  std::string out = csv_header(log.state_dim, log.control_dim);
  out += '\n';
  for (const LogRow& row : log.rows) {
    append_number(out, row.t);
    append_vector(out, row.x);
    append_vector(out, row.x_ref);
    append_vector(out, row.u);
    append_vector(out, row.u_ccm);
    append_vector(out, row.h_hat);
    append_vector(out, row.h_true);
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const TrajectoryLog& log) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  file << to_csv(log);
  if (!file) throw std::runtime_error("failed writing " + path.string());
}

TrajectoryLog read_csv(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(file, line)) throw std::runtime_error("empty log " + path.string());

  int n = 0;
  int m = 0;
  {
    std::stringstream header(line);
    std::string name;
    while (std::getline(header, name, ',')) {
      if (name.rfind("xref_", 0) == 0) continue;
      if (name.rfind("x_", 0) == 0) ++n;
      if (name.rfind("u_ccm_", 0) == 0) ++m;
    }
  }
  if (n == 0 || m == 0 || line != csv_header(n, m)) {
    throw std::runtime_error("unexpected log header in " + path.string());
  }

  TrajectoryLog log;
  log.state_dim = n;
  log.control_dim = m;
  const std::size_t width = 1 + 2 * static_cast<std::size_t>(n) + 4 * static_cast<std::size_t>(m);
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("bad number '" + cell + "' in " + path.string());
      }
    }
    if (values.size() != width) throw std::runtime_error("bad row width in " + path.string());
    std::size_t pos = 0;
    auto take = [&](int count) {
      Vector v = Eigen::Map<const Vector>(values.data() + pos, count);
      pos += static_cast<std::size_t>(count);
      return v;
    };
    LogRow row;
    row.t = values[pos++];
    row.x = take(n);
    row.x_ref = take(n);
    row.u = take(m);
    row.u_ccm = take(m);
    row.h_hat = take(m);
    row.h_true = take(m);
    log.rows.push_back(std::move(row));
  }
  return log;
}

}  // namespace ccmtrack::online
