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

#include "ccmtrack/diffnet/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace ccmtrack::diffnet {

using nlohmann::json;

json to_json(const DenseNet& net, std::uint64_t rng_seed) {
  json doc;
  doc["schema_version"] = kCheckpointSchemaVersion;
  doc["layer_widths"] = net.widths();
  doc["activation"] = net.activations().empty()
                          ? std::string("tanh")
                          : to_string(net.activations().front());
  json weights = json::array();
  json biases = json::array();
  for (int l = 0; l < net.num_layers(); ++l) {
    const Matrix& w = net.weight(l);
    json rows = json::array();
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < w.cols(); ++j) row.push_back(w(i, j));
      rows.push_back(std::move(row));
    }
    weights.push_back(std::move(rows));
    const Matrix& b = net.bias(l);
    json bias = json::array();
    for (Eigen::Index i = 0; i < b.rows(); ++i) bias.push_back(b(i, 0));
    biases.push_back(std::move(bias));
  }
  doc["weights"] = std::move(weights);
  doc["biases"] = std::move(biases);
  doc["rng_seed"] = rng_seed;
  return doc;
}

DenseNet from_json(const json& doc) {
  if (doc.at("schema_version").get<int>() != kCheckpointSchemaVersion) {
    throw std::runtime_error("checkpoint: unsupported schema_version");
  }
  const auto widths = doc.at("layer_widths").get<std::vector<int>>();
  DenseNet net(widths,
               activation_from_string(doc.at("activation").get<std::string>()));
  const json& weights = doc.at("weights");
  const json& biases = doc.at("biases");
  if (static_cast<int>(weights.size()) != net.num_layers() ||
      static_cast<int>(biases.size()) != net.num_layers()) {
    throw std::runtime_error("checkpoint: layer count mismatch");
  }
  for (int l = 0; l < net.num_layers(); ++l) {
    Matrix& w = net.weight(l);
    const json& rows = weights[l];
    if (static_cast<Eigen::Index>(rows.size()) != w.rows()) {
      throw std::runtime_error("checkpoint: weight shape mismatch");
    }
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      if (static_cast<Eigen::Index>(rows[i].size()) != w.cols()) {
        throw std::runtime_error("checkpoint: weight shape mismatch");
      }
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rows[i][j].get<double>();
    }
    Matrix& b = net.bias(l);
    if (static_cast<Eigen::Index>(biases[l].size()) != b.rows()) {
      throw std::runtime_error("checkpoint: bias shape mismatch");
    }
    for (Eigen::Index i = 0; i < b.rows(); ++i) b(i, 0) = biases[l][i].get<double>();
  }
  return net;
}

void save_checkpoint(const std::filesystem::path& path, const DenseNet& net,
                     std::uint64_t rng_seed) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(net, rng_seed).dump() << '\n';
}

DenseNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return from_json(json::parse(in));
}

}  // namespace ccmtrack::diffnet
