// Copyright 2026 The HAT Authors
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

// Experiment configuration: one JSON document describing data, model,
// training, baselines and outputs. Unknown keys are rejected.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "hat/align.hpp"
#include "hat/evaluate.hpp"
#include "hat/sim.hpp"
#include "hat/training.hpp"

namespace hat {

inline constexpr char kToolVersion[] = HAT_VERSION;

struct DataConfig {
  std::size_t train_scenes = 30;
  std::size_t test_scenes = 10;
  std::uint64_t seed = 1;  // master seed of the scene sets
};

struct ExperimentConfig {
  SceneConfig scene;
  NoiseConfig noise;
  DataConfig data;
  HatDims model;
  TrainingOptions training;
  ImmOptions imm;
  std::string output_dir;  // empty: HAT_OUTPUT_ROOT or "hat_out"

  /// Defaults used when a key is absent.
  static ExperimentConfig defaults();
  /// Throws ConfigError on any out-of-range field.
  void validate() const;
};

/// Parses and validates; throws ConfigError naming the offending key path
/// for unknown keys, wrong types or invalid values.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
/// Complete document with every key present.
nlohmann::json config_to_json(const ExperimentConfig& config);

/// JSON Schema (draft 2020-12) describing the accepted document.
const nlohmann::json& config_schema();

/// 64-bit FNV-1a of the bytes.
std::uint64_t fnv1a64(std::string_view bytes);
/// Hex FNV-1a of the canonical serialization (sorted keys, compact).
std::string config_hash(const ExperimentConfig& config);

}  // namespace hat
