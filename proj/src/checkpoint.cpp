// Copyright 2026 The rlr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fstream>

#include <json.hpp>

#include "rlr/error.hpp"
#include "rlr/model.hpp"

namespace rlr {

namespace {
constexpr const char* kFormat = "rlr-checkpoint";
constexpr int kVersion = 1;
}  // namespace

nlohmann::json checkpoint_to_json(const MlpModel& model, std::uint64_t seed) {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["seed"] = seed;
  j["layer_dims"] = model.layer_dims();
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : model.layers()) {
    const auto w = layer.weights.values();
    j["layers"].push_back({{"weights", std::vector<double>(w.begin(), w.end())},
                           {"biases", layer.biases}});
  }
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != kFormat) throw InvalidInput("not an rlr checkpoint");
    if (j.at("version").get<int>() != kVersion) throw InvalidInput("unsupported checkpoint version");
    Checkpoint ckpt{MlpModel(j.at("layer_dims").get<std::vector<std::size_t>>()),
                    j.at("seed").get<std::uint64_t>()};
    const auto& layers_json = j.at("layers");
    auto& layers = ckpt.model.mutable_layers();
    if (layers_json.size() != layers.size()) throw ShapeError("checkpoint layer count mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto w = layers_json[l].at("weights").get<std::vector<double>>();
      auto b = layers_json[l].at("biases").get<std::vector<double>>();
      if (w.size() != layers[l].weights.values().size() || b.size() != layers[l].biases.size()) {
        throw ShapeError("checkpoint layer " + std::to_string(l) + " has the wrong size");
      }
      layers[l].weights = Matrix(layers[l].weights.rows(), layers[l].weights.cols(), std::move(w));
      layers[l].biases = std::move(b);
    }
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const MlpModel& model, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(model, seed).dump(1) << '\n';
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  try {
    return checkpoint_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace rlr
