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

// Artifact formats: scenes as JSON lines, reports as CSV and JSON. Every
// artifact carries the tool version, config hash and seed.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hat/evaluate.hpp"
#include "hat/sim.hpp"
#include "hat/training.hpp"

namespace hat {

struct Provenance {
  std::string version;
  std::string config_hash;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static Provenance from_json(const nlohmann::json& j);
};

/// Shortest round-trip decimal form, '.' separator, locale independent.
std::string format_double(double v);

/// Line 1: {"type":"header", provenance, "dt", "scenes"}; then one line per
/// scene and frame: {"type":"frame","scene","frame","ego":{"R":[9 row-major],
/// "T":[3]},"objects":[{"id","regime","gt":[10],"obs":[10]}]}. Anchors are
/// in the ego frame of that frame. `header_extra` keys are added to the
/// header line.
std::string scenes_to_jsonl(const Dataset& data, const Provenance& provenance,
                            const nlohmann::json& header_extra = nlohmann::json::object());

struct SceneFile {
  nlohmann::json header;
  Provenance provenance;
  std::vector<Scene> scenes;  // ground truth in world coordinates
  std::vector<Observations> observations;
};

/// Throws ValidationError on malformed or inconsistent content.
SceneFile scenes_from_jsonl(const std::string& text);

/// Header: version,config_hash,seed,method,regime,count,mean_translation,
/// median_translation,mean_yaw,mean_velocity
std::string eval_to_csv(const EvalReport& report, const Provenance& provenance);
nlohmann::json eval_to_json(const EvalReport& report, const Provenance& provenance);

/// Header: version,config_hash,seed,regime,count,w_<model>...,turning_mass
std::string weights_to_csv(const WeightReport& report, const Provenance& provenance);

/// Header: version,config_hash,seed,model,epoch,loss
std::string loss_to_csv(const std::vector<std::pair<std::string, LossCurve>>& curves,
                        const Provenance& provenance);

/// Mean translation error per method (rows) and regime (columns).
/// Header: version,config_hash,seed,method,all,<regimes present>
std::string compare_to_csv(const EvalReport& report, const Provenance& provenance);
/// The same table aligned for terminals.
std::string compare_to_text(const EvalReport& report);

nlohmann::json latency_to_json(const LatencyReport& report, const Provenance& provenance);

/// Writes atomically (temporary file + rename). Throws Error on I/O failure.
void write_text_file(const std::string& path, const std::string& text);
/// Throws MissingInputError when the file cannot be opened.
std::string read_text_file(const std::string& path);

}  // namespace hat
