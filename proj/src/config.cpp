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

#include "hat/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "hat/error.hpp"

namespace hat {
namespace {

using nlohmann::json;

// Reads fields of one JSON object and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    const char* expected = nullptr;
    if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) expected = "a number";
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_unsigned()) expected = "a non-negative integer";
    } else {
      if (!it->is_string()) expected = "a string";
    }
    if (expected != nullptr) throw ConfigError(where(key) + ": expected " + expected);
    out = it->template get<T>();
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const char* key = nullptr) const {
    std::string p = path_.empty() ? "config" : "config." + path_;
    if (key != nullptr) p += std::string(".") + key;
    return p;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (seen_.count(key) == 0) throw ConfigError(where(key.c_str()) + ": unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_scene(const json& j, SceneConfig& c) {
  Reader r(j, "scene");
  r.read("tracks", c.tracks);
  r.read("frames", c.frames);
  r.read("dt", c.dt);
  if (const json* mix = r.child("regime_mix")) {
    Reader m(*mix, "scene.regime_mix");
    for (std::size_t i = 0; i < kAllMotionModels.size(); ++i) {
      m.read(std::string(to_string(kAllMotionModels[i])).c_str(), c.regime_mix[i]);
    }
    m.finish();
  }
  r.read("min_segment", c.min_segment);
  r.read("max_segment", c.max_segment);
  r.read("min_speed", c.min_speed);
  r.read("max_speed", c.max_speed);
  r.read("min_turn_rate", c.min_turn_rate);
  r.read("max_turn_rate", c.max_turn_rate);
  r.read("min_accel", c.min_accel);
  r.read("max_accel", c.max_accel);
  r.read("spawn_radius", c.spawn_radius);
  r.read("ego_speed", c.ego_speed);
  r.read("ego_max_yaw_rate", c.ego_max_yaw_rate);
  r.finish();
}

void read_noise(const json& j, const std::string& path, double& position, double& yaw,
                double& velocity) {
  Reader r(j, path);
  r.read("position", position);
  r.read("yaw", yaw);
  r.read("velocity", velocity);
  r.finish();
}

std::vector<MotionModelKind> read_models(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path + ": expected a non-empty array");
  std::vector<MotionModelKind> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw ConfigError(path + ": model names must be strings");
    try {
      out.push_back(parse_motion_model(v.get<std::string>()));
    } catch (const Error& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  return out;
}

json models_to_json(const std::vector<MotionModelKind>& models) {
  json a = json::array();
  for (MotionModelKind k : models) a.push_back(std::string(to_string(k)));
  return a;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.model.channels = 16;
  c.training.epochs = 20;
  c.training.learning_rate = 3e-3;
  c.training.batch_banks = 8;
  c.training.pre_refine_weight = 10.0;
  return c;
}

void ExperimentConfig::validate() const {
  try {
    scene.validate();
    noise.validate();
    model.validate();
    training.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (data.train_scenes == 0 || data.test_scenes == 0) {
    throw ConfigError("data: train_scenes and test_scenes must be positive");
  }
  if (scene.frames <= kWindowLength) {
    throw ConfigError("scene.frames must exceed the query window length");
  }
  if (!(imm.self_transition >= 0.0 && imm.self_transition <= 1.0)) {
    throw ConfigError("imm.self_transition must lie in [0, 1]");
  }
  if (imm.models.empty()) throw ConfigError("imm.models must not be empty");
  const auto& p = imm.process;
  for (double v : {p.position, p.heading, p.speed, p.yaw_rate, p.accel}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("imm.process entries must be finite and ≥ 0");
  }
  const auto& m = imm.measurement;
  for (double v : {m.position, m.yaw, m.velocity}) {
    if (!(v > 0.0)) throw ConfigError("imm.measurement entries must be positive");
  }
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c = ExperimentConfig::defaults();
  Reader r(j, "");
  if (const json* s = r.child("scene")) read_scene(*s, c.scene);
  if (const json* n = r.child("noise")) {
    read_noise(*n, "noise", c.noise.position, c.noise.yaw, c.noise.velocity);
  }
  if (const json* d = r.child("data")) {
    Reader dr(*d, "data");
    dr.read("train_scenes", c.data.train_scenes);
    dr.read("test_scenes", c.data.test_scenes);
    dr.read("seed", c.data.seed);
    dr.finish();
  }
  if (const json* m = r.child("model")) {
    Reader mr(*m, "model");
    mr.read("channels", c.model.channels);
    if (const json* models = mr.child("models")) c.model.models = read_models(*models, "model.models");
    mr.read("position_scale", c.model.position_scale);
    mr.read("velocity_scale", c.model.velocity_scale);
    mr.finish();
  }
  if (const json* t = r.child("training")) {
    Reader tr(*t, "training");
    tr.read("epochs", c.training.epochs);
    tr.read("learning_rate", c.training.learning_rate);
    tr.read("batch_banks", c.training.batch_banks);
    tr.read("smooth_l1_beta", c.training.smooth_l1_beta);
    tr.read("pre_refine_weight", c.training.pre_refine_weight);
    tr.read("seed", c.training.seed);
    tr.finish();
  }
  if (const json* i = r.child("imm")) {
    Reader ir(*i, "imm");
    ir.read("self_transition", c.imm.self_transition);
    if (const json* models = ir.child("models")) c.imm.models = read_models(*models, "imm.models");
    if (const json* p = ir.child("process")) {
      Reader pr(*p, "imm.process");
      pr.read("position", c.imm.process.position);
      pr.read("heading", c.imm.process.heading);
      pr.read("speed", c.imm.process.speed);
      pr.read("yaw_rate", c.imm.process.yaw_rate);
      pr.read("accel", c.imm.process.accel);
      pr.finish();
    }
    if (const json* m = ir.child("measurement")) {
      read_noise(*m, "imm.measurement", c.imm.measurement.position, c.imm.measurement.yaw,
                 c.imm.measurement.velocity);
    }
    ir.finish();
  }
  if (const json* o = r.child("output")) {
    Reader orr(*o, "output");
    orr.read("dir", c.output_dir);
    orr.finish();
  }
  r.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const ExperimentConfig& c) {
  json mix = json::object();
  for (std::size_t i = 0; i < kAllMotionModels.size(); ++i) {
    mix[std::string(to_string(kAllMotionModels[i]))] = c.scene.regime_mix[i];
  }
  const auto& s = c.scene;
  return json{
      {"scene",
       {{"tracks", s.tracks},
        {"frames", s.frames},
        {"dt", s.dt},
        {"regime_mix", mix},
        {"min_segment", s.min_segment},
        {"max_segment", s.max_segment},
        {"min_speed", s.min_speed},
        {"max_speed", s.max_speed},
        {"min_turn_rate", s.min_turn_rate},
        {"max_turn_rate", s.max_turn_rate},
        {"min_accel", s.min_accel},
        {"max_accel", s.max_accel},
        {"spawn_radius", s.spawn_radius},
        {"ego_speed", s.ego_speed},
        {"ego_max_yaw_rate", s.ego_max_yaw_rate}}},
      {"noise",
       {{"position", c.noise.position}, {"yaw", c.noise.yaw}, {"velocity", c.noise.velocity}}},
      {"data",
       {{"train_scenes", c.data.train_scenes},
        {"test_scenes", c.data.test_scenes},
        {"seed", c.data.seed}}},
      {"model",
       {{"channels", c.model.channels},
        {"models", models_to_json(c.model.models)},
        {"position_scale", c.model.position_scale},
        {"velocity_scale", c.model.velocity_scale}}},
      {"training",
       {{"epochs", c.training.epochs},
        {"learning_rate", c.training.learning_rate},
        {"batch_banks", c.training.batch_banks},
        {"smooth_l1_beta", c.training.smooth_l1_beta},
        {"pre_refine_weight", c.training.pre_refine_weight},
        {"seed", c.training.seed}}},
      {"imm",
       {{"self_transition", c.imm.self_transition},
        {"models", models_to_json(c.imm.models)},
        {"process",
         {{"position", c.imm.process.position},
          {"heading", c.imm.process.heading},
          {"speed", c.imm.process.speed},
          {"yaw_rate", c.imm.process.yaw_rate},
          {"accel", c.imm.process.accel}}},
        {"measurement",
         {{"position", c.imm.measurement.position},
          {"yaw", c.imm.measurement.yaw},
          {"velocity", c.imm.measurement.velocity}}}}},
      {"output", {{"dir", c.output_dir}}}};
}

const json& config_schema() {
  static const json schema = [] {
    auto num = [](double minimum) { return json{{"type", "number"}, {"minimum", minimum}}; };
    auto count = [](int minimum) { return json{{"type", "integer"}, {"minimum", minimum}}; };
    auto object = [](json properties) {
      return json{{"type", "object"}, {"additionalProperties", false}, {"properties", properties}};
    };
    json model_names = {{"type", "array"},
                        {"minItems", 1},
                        {"items", {{"enum", {"cv", "static", "ca", "ctrv", "ctra"}}}}};
    json mix = object({{"cv", num(0)}, {"static", num(0)}, {"ca", num(0)}, {"ctrv", num(0)},
                       {"ctra", num(0)}});
    json noise = object({{"position", num(0)}, {"yaw", num(0)}, {"velocity", num(0)}});
    json s = object({
        {"scene", object({{"tracks", count(1)},
                          {"frames", count(4)},
                          {"dt", num(0)},
                          {"regime_mix", mix},
                          {"min_segment", count(1)},
                          {"max_segment", count(1)},
                          {"min_speed", num(0)},
                          {"max_speed", num(0)},
                          {"min_turn_rate", num(0)},
                          {"max_turn_rate", num(0)},
                          {"min_accel", num(0)},
                          {"max_accel", num(0)},
                          {"spawn_radius", num(0)},
                          {"ego_speed", num(0)},
                          {"ego_max_yaw_rate", num(0)}})},
        {"noise", noise},
        {"data", object({{"train_scenes", count(1)}, {"test_scenes", count(1)}, {"seed", count(0)}})},
        {"model", object({{"channels", count(8)},
                          {"models", model_names},
                          {"position_scale", num(0)},
                          {"velocity_scale", num(0)}})},
        {"training", object({{"epochs", count(0)},
                             {"learning_rate", num(0)},
                             {"batch_banks", count(1)},
                             {"smooth_l1_beta", num(0)},
                             {"pre_refine_weight", num(0)},
                             {"seed", count(0)}})},
        {"imm", object({{"self_transition", num(0)},
                        {"models", model_names},
                        {"process", object({{"position", num(0)},
                                            {"heading", num(0)},
                                            {"speed", num(0)},
                                            {"yaw_rate", num(0)},
                                            {"accel", num(0)}})},
                        {"measurement", noise}})},
        {"output", object({{"dir", {{"type", "string"}}}})}});
    s["$schema"] = "https://json-schema.org/draft/2020-12/schema";
    s["title"] = "HAT experiment configuration";
    return s;
  }();
  return schema;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_json(config).dump())));
  return buf;
}

}  // namespace hat
