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

#include "hat/serialize.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hat/error.hpp"

namespace hat {
namespace {

using nlohmann::json;

json anchor_to_json(const Anchor& a) { return json(std::vector<double>(a.v.begin(), a.v.end())); }

Anchor anchor_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != kAnchorDim) {
    throw ValidationError(what + ": expected " + std::to_string(kAnchorDim) + " numbers");
  }
  Anchor a{};
  for (std::size_t i = 0; i < kAnchorDim; ++i) a[i] = j.at(i).get<double>();
  return a;
}

std::string provenance_prefix(const Provenance& p) {
  return p.version + "," + p.config_hash + "," + std::to_string(p.seed) + ",";
}

const json& require(const json& j, const char* key, const std::string& what) {
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError(what + ": missing \"" + key + "\"");
  return *it;
}

}  // namespace

json Provenance::to_json() const {
  return json{{"version", version}, {"config_hash", config_hash}, {"seed", seed}};
}

Provenance Provenance::from_json(const json& j) {
  Provenance p;
  try {
    p.version = j.at("version").get<std::string>();
    p.config_hash = j.at("config_hash").get<std::string>();
    p.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("provenance: ") + e.what());
  }
  return p;
}

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, end);
}

std::string scenes_to_jsonl(const Dataset& data, const Provenance& provenance,
                            const json& header_extra) {
  std::string out;
  json header = header_extra;
  header["type"] = "header";
  header["provenance"] = provenance.to_json();
  header["dt"] = data.config.dt;
  header["scenes"] = data.scenes.size();
  out += header.dump() + "\n";
  for (std::size_t s = 0; s < data.scenes.size(); ++s) {
    const Scene& scene = data.scenes[s];
    const Observations& obs = data.observations[s];
    for (std::size_t t = 0; t < scene.frames(); ++t) {
      const EgoTransform& pose = scene.ego_to_world[t];
      std::vector<double> r;
      for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k) r.push_back(pose.rotation(i, k));
      }
      json objects = json::array();
      for (std::size_t k = 0; k < scene.tracks.size(); ++k) {
        objects.push_back({{"id", scene.tracks[k].id},
                           {"regime", std::string(to_string(scene.tracks[k].regime[t]))},
                           {"gt", anchor_to_json(scene.ground_truth(k, t))},
                           {"obs", anchor_to_json(obs.anchors[k][t])}});
      }
      json line = {{"type", "frame"},
                   {"scene", s},
                   {"frame", t},
                   {"ego",
                    {{"R", r},
                     {"T", {pose.translation.x(), pose.translation.y(), pose.translation.z()}}}},
                   {"objects", objects}};
      out += line.dump() + "\n";
    }
  }
  return out;
}

SceneFile scenes_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  SceneFile file;
  double dt = 0.0;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string what = "scene line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(what + ": " + e.what());
    }
    const std::string type = require(j, "type", what).get<std::string>();
    if (!have_header) {
      if (type != "header") throw ValidationError(what + ": expected the header line first");
      file.header = j;
      file.provenance = Provenance::from_json(require(j, "provenance", what));
      dt = require(j, "dt", what).get<double>();
      const auto count = require(j, "scenes", what).get<std::size_t>();
      file.scenes.resize(count);
      file.observations.resize(count);
      for (auto& s : file.scenes) s.dt = dt;
      have_header = true;
      continue;
    }
    if (type != "frame") throw ValidationError(what + ": unknown line type " + type);
    const auto s = require(j, "scene", what).get<std::size_t>();
    const auto t = require(j, "frame", what).get<std::size_t>();
    if (s >= file.scenes.size()) throw ValidationError(what + ": scene index out of range");
    Scene& scene = file.scenes[s];
    Observations& obs = file.observations[s];
    if (t != scene.frames()) throw ValidationError(what + ": frames out of order");

    const json& ego = require(j, "ego", what);
    const auto r = require(ego, "R", what).get<std::vector<double>>();
    const auto tr = require(ego, "T", what).get<std::vector<double>>();
    if (r.size() != 9 || tr.size() != 3) throw ValidationError(what + ": malformed ego pose");
    EgoTransform pose;
    for (int i = 0; i < 3; ++i) {
      for (int k = 0; k < 3; ++k) pose.rotation(i, k) = r[static_cast<std::size_t>(i * 3 + k)];
    }
    pose.translation = {tr[0], tr[1], tr[2]};
    scene.ego_to_world.push_back(pose);
    const AugmentedTransform to_world = build_augmented(pose);

    const json& objects = require(j, "objects", what);
    if (t == 0) {
      scene.tracks.resize(objects.size());
      obs.anchors.resize(objects.size());
    } else if (objects.size() != scene.tracks.size()) {
      throw ValidationError(what + ": object count changed within a scene");
    }
    for (std::size_t k = 0; k < objects.size(); ++k) {
      const json& o = objects[k];
      ObjectTrack& track = scene.tracks[k];
      track.id = require(o, "id", what).get<std::size_t>();
      track.regime.push_back(parse_motion_model(require(o, "regime", what).get<std::string>()));
      track.world.push_back(warp_anchor(anchor_from_json(require(o, "gt", what), what), to_world));
      obs.anchors[k].push_back(anchor_from_json(require(o, "obs", what), what));
    }
  }
  if (!have_header) throw ValidationError("scene file is empty");
  for (std::size_t s = 0; s < file.scenes.size(); ++s) {
    if (file.scenes[s].frames() == 0) {
      throw ValidationError("scene " + std::to_string(s) + " has no frames");
    }
  }
  return file;
}

std::string eval_to_csv(const EvalReport& report, const Provenance& provenance) {
  std::string out =
      "version,config_hash,seed,method,regime,count,mean_translation,median_translation,"
      "mean_yaw,mean_velocity\n";
  for (const auto& row : report.rows) {
    const ErrorStats& s = row.stats;
    out += provenance_prefix(provenance) + row.method + "," + row.regime + "," +
           std::to_string(s.count) + "," + format_double(s.mean_translation) + "," +
           format_double(s.median_translation) + "," + format_double(s.mean_yaw) + "," +
           format_double(s.mean_velocity) + "\n";
  }
  return out;
}

namespace {

json weights_json(const WeightReport& w) {
  json models = json::array();
  for (MotionModelKind m : w.models) models.push_back(std::string(to_string(m)));
  json rows = json::array();
  for (const auto& row : w.rows) {
    rows.push_back({{"regime", std::string(to_string(row.regime))},
                    {"count", row.count},
                    {"mean_weight", row.mean_weight}});
  }
  json out = {{"models", models}, {"rows", rows}};
  try {
    out["turning_contrast"] = w.turning_contrast();
  } catch (const ContractError&) {
    out["turning_contrast"] = nullptr;
  }
  return out;
}

}  // namespace

json eval_to_json(const EvalReport& report, const Provenance& provenance) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    const ErrorStats& s = row.stats;
    rows.push_back({{"method", row.method},
                    {"regime", row.regime},
                    {"count", s.count},
                    {"mean_translation", s.mean_translation},
                    {"median_translation", s.median_translation},
                    {"mean_yaw", s.mean_yaw},
                    {"mean_velocity", s.mean_velocity}});
  }
  json out = {{"provenance", provenance.to_json()}, {"rows", rows}};
  if (report.weights) out["weights"] = weights_json(*report.weights);
  return out;
}

std::string weights_to_csv(const WeightReport& report, const Provenance& provenance) {
  std::string out = "version,config_hash,seed,regime,count";
  for (MotionModelKind m : report.models) out += ",w_" + std::string(to_string(m));
  out += ",turning_mass\n";
  for (const auto& row : report.rows) {
    out += provenance_prefix(provenance) + std::string(to_string(row.regime)) + "," +
           std::to_string(row.count);
    double tm = 0.0;
    for (std::size_t m = 0; m < report.models.size(); ++m) {
      out += "," + format_double(row.mean_weight[m]);
      if (is_turning(report.models[m])) tm += row.mean_weight[m];
    }
    out += "," + format_double(tm) + "\n";
  }
  return out;
}

std::string loss_to_csv(const std::vector<std::pair<std::string, LossCurve>>& curves,
                        const Provenance& provenance) {
  std::string out = "version,config_hash,seed,model,epoch,loss\n";
  for (const auto& [name, curve] : curves) {
    for (std::size_t e = 0; e < curve.epoch_loss.size(); ++e) {
      out += provenance_prefix(provenance) + name + "," + std::to_string(e) + "," +
             format_double(curve.epoch_loss[e]) + "\n";
    }
  }
  return out;
}

namespace {

std::vector<std::string> report_regimes(const EvalReport& report) {
  std::vector<std::string> regimes = {kAllRegimes};
  for (MotionModelKind kind : kAllMotionModels) {
    const std::string name(to_string(kind));
    for (const auto& row : report.rows) {
      if (row.regime == name) {
        regimes.push_back(name);
        break;
      }
    }
  }
  return regimes;
}

std::string cell(const EvalReport& report, const std::string& method, const std::string& regime,
                 bool fixed) {
  for (const auto& row : report.rows) {
    if (row.method == method && row.regime == regime) {
      if (!fixed) return format_double(row.stats.mean_translation);
      std::ostringstream s;
      s.imbue(std::locale::classic());
      s << std::fixed << std::setprecision(4) << row.stats.mean_translation;
      return s.str();
    }
  }
  return "";
}

}  // namespace

std::string compare_to_csv(const EvalReport& report, const Provenance& provenance) {
  const auto regimes = report_regimes(report);
  std::string out = "version,config_hash,seed,method";
  for (const auto& r : regimes) out += "," + r;
  out += "\n";
  for (const auto& method : report.methods()) {
    out += provenance_prefix(provenance) + method;
    for (const auto& r : regimes) out += "," + cell(report, method, r, false);
    out += "\n";
  }
  return out;
}

std::string compare_to_text(const EvalReport& report) {
  const auto regimes = report_regimes(report);
  std::ostringstream s;
  s << std::left << std::setw(12) << "method";
  for (const auto& r : regimes) s << std::right << std::setw(10) << r;
  s << "\n";
  for (const auto& method : report.methods()) {
    s << std::left << std::setw(12) << method;
    for (const auto& r : regimes) s << std::right << std::setw(10) << cell(report, method, r, true);
    s << "\n";
  }
  return s.str();
}

json latency_to_json(const LatencyReport& report, const Provenance& provenance) {
  return json{{"provenance", provenance.to_json()},
              {"calls", report.calls},
              {"instances", report.instances},
              {"median_ms", report.median_ms},
              {"min_ms", report.min_ms},
              {"max_ms", report.max_ms}};
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out << text;
    if (!out) throw Error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, target);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace hat
