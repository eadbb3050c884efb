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
#include <filesystem>

#include <json.hpp>

#include "ccmtrack/diffnet/dense_net.hpp"

namespace ccmtrack::diffnet {

inline constexpr int kCheckpointSchemaVersion = 1;

/// {schema_version, layer_widths, activation, weights, biases, rng_seed};
/// weights are nested row-major arrays.
nlohmann::json to_json(const DenseNet& net, std::uint64_t rng_seed);
DenseNet from_json(const nlohmann::json& doc);

void save_checkpoint(const std::filesystem::path& path, const DenseNet& net,
                     std::uint64_t rng_seed);
DenseNet load_checkpoint(const std::filesystem::path& path);

}  // namespace ccmtrack::diffnet
