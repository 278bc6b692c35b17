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

#include "hat/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>

#include "hat/baselines.hpp"
#include "hat/error.hpp"

namespace hat {
namespace {

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double wrapped_difference(double a, double b) {
  return std::remainder(a - b, 2.0 * std::numbers::pi);
}

struct ErrorSet {
  std::vector<double> translation;
  std::vector<double> yaw;
  std::vector<double> velocity;

  void add(const Anchor& p, const Anchor& g) {
    translation.push_back(std::hypot(p[kX] - g[kX], p[kY] - g[kY]));
    yaw.push_back(std::abs(wrapped_difference(yaw_angle(p), yaw_angle(g))));
    velocity.push_back(std::hypot(p[kVx] - g[kVx], p[kVy] - g[kVy]));
  }
};

// Errors of one method, overall and per regime.
struct MethodErrors {
  std::string method;
  ErrorSet all;
  std::map<MotionModelKind, ErrorSet> by_regime;

  void add(std::span<const Anchor> predictions, const AlignmentSample& sample) {
    if (predictions.size() != sample.targets.size()) {
      throw ContractError(method + ": produced " + std::to_string(predictions.size()) +
                          " anchors for " + std::to_string(sample.targets.size()) + " targets");
    }
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      all.add(predictions[i], sample.targets[i]);
      by_regime[sample.regimes[i]].add(predictions[i], sample.targets[i]);
    }
  }
};

Anchor to_world(const Scene& scene, const Anchor& a, std::size_t t) {
  return warp_anchor(a, build_augmented(scene.ego_to_world[t]));
}

Anchor to_ego(const Scene& scene, const Anchor& a, std::size_t t) {
  return warp_anchor(a, build_augmented(invert(scene.ego_to_world[t])));
}

std::string sta_name(MotionModelKind kind) { return "sta_" + std::string(to_string(kind)); }

}  // namespace

ErrorStats summarize_errors(std::span<const double> translation, std::span<const double> yaw,
                            std::span<const double> velocity) {
  if (translation.empty() || yaw.size() != translation.size() ||
      velocity.size() != translation.size()) {
    throw ContractError("summarize_errors: empty or mismatched error lists");
  }
  auto mean = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  ErrorStats s;
  s.count = translation.size();
  s.mean_translation = mean(translation);
  s.median_translation = median({translation.begin(), translation.end()});
  s.mean_yaw = mean(yaw);
  s.mean_velocity = mean(velocity);
  return s;
}

double WeightReport::turning_model_mass(bool turning) const {
  double mass = 0.0;
  std::size_t frames = 0;
  for (const auto& row : rows) {
    const bool linear = row.regime == MotionModelKind::kCv || row.regime == MotionModelKind::kCa;
    if (turning ? !is_turning(row.regime) : !linear) continue;
    for (std::size_t m = 0; m < models.size(); ++m) {
      if (is_turning(models[m])) mass += row.mean_weight[m] * static_cast<double>(row.count);
    }
    frames += row.count;
  }
  if (frames == 0) {
    throw ContractError(std::string("weight report has no ") +
                        (turning ? "turning" : "linear") + " frames");
  }
  return mass / static_cast<double>(frames);
}

double WeightReport::turning_contrast() const {
  return turning_model_mass(true) - turning_model_mass(false);
}

const ErrorStats& EvalReport::find(const std::string& method, const std::string& regime) const {
  for (const auto& row : rows) {
    if (row.method == method && row.regime == regime) return row.stats;
  }
  throw ContractError("no evaluation row for " + method + " / " + regime);
}

std::vector<std::string> EvalReport::methods() const {
  std::vector<std::string> out;
  for (const auto& row : rows) {
    if (std::find(out.begin(), out.end(), row.method) == out.end()) out.push_back(row.method);
  }
  return out;
}

std::vector<std::vector<Anchor>> imm_alignments(const Scene& scene, const Observations& obs,
                                                const ImmOptions& options) {
  const std::size_t frames = scene.frames();
  const std::size_t k = scene.tracks.size();
  if (obs.anchors.size() != k) throw ContractError("imm_alignments: observation count mismatch");
  const Eigen::MatrixXd transition =
      default_transition(options.models.size(), options.self_transition);
  std::vector<std::vector<Anchor>> out(frames, std::vector<Anchor>(k));
  for (std::size_t i = 0; i < k; ++i) {
    out[0][i] = obs.anchors[i][0];
    Anchor last = to_world(scene, obs.anchors[i][0], 0);
    ImmState state = imm_init(options.models, last, options.measurement, transition);
    for (std::size_t t = 1; t < frames; ++t) {
      const KalmanState pred = imm_predict(state, scene.dt, options.process);
      out[t][i] = to_ego(scene, anchor_from_state(pred.mean, last), t);
      last = to_world(scene, obs.anchors[i][t], t);
      state = imm_step(state, scene.dt, last, options.process, options.measurement);
    }
  }
  return out;
}

EvalReport evaluate(const Dataset& data, const MethodSet& methods) {
  if (data.scenes.empty()) throw ContractError("evaluate: empty scene set");
  const std::vector<AlignmentSample> samples = build_samples(data);
  if (samples.empty()) throw ContractError("evaluate: scenes too short for alignment samples");

  std::vector<MethodErrors> errors;
  auto slot = [&errors](const std::string& name) -> MethodErrors& {
    for (auto& e : errors) {
      if (e.method == name) return e;
    }
    errors.push_back(MethodErrors{name, {}, {}});
    return errors.back();
  };

  if (methods.single_models) {
    for (MotionModelKind kind : kAllMotionModels) {
      MethodErrors& e = slot(sta_name(kind));
      for (const auto& s : samples) e.add(single_model_sta(kind, s.anchors, s.dt, s.ego), s);
    }
  }
  if (methods.imm) {
    MethodErrors& e = slot("imm");
    std::vector<std::vector<std::vector<Anchor>>> per_scene;
    per_scene.reserve(data.scenes.size());
    for (std::size_t s = 0; s < data.scenes.size(); ++s) {
      per_scene.push_back(imm_alignments(data.scenes[s], data.observations[s], methods.imm_options));
    }
    for (const auto& s : samples) e.add(per_scene[s.scene][s.frame], s);
  }
  if (methods.implicit != nullptr) {
    MethodErrors& e = slot("implicit");
    for (const auto& s : samples) {
      e.add(implicit_sta(make_bank(s, methods.implicit->query), s.dt, s.ego,
                         methods.implicit->implicit),
            s);
    }
  }
  auto add_hat = [&](const std::string& name, const HatModel& model) {
    MethodErrors& e = slot(name);
    for (const auto& s : samples) e.add(align(make_bank(s, model.query), s.dt, s.ego, model.hat).anchors, s);
  };
  if (methods.hat != nullptr) add_hat("hat", *methods.hat);
  if (methods.hat_m1 != nullptr) add_hat("hat_m1", *methods.hat_m1);
  if (errors.empty()) throw ContractError("evaluate: no methods selected");

  EvalReport report;
  for (const auto& e : errors) {
    report.rows.push_back({e.method, kAllRegimes,
                           summarize_errors(e.all.translation, e.all.yaw, e.all.velocity)});
    for (MotionModelKind kind : kAllMotionModels) {
      const auto it = e.by_regime.find(kind);
      if (it == e.by_regime.end()) continue;
      const ErrorSet& r = it->second;
      report.rows.push_back({e.method, std::string(to_string(kind)),
                             summarize_errors(r.translation, r.yaw, r.velocity)});
    }
  }
  if (methods.hat != nullptr) report.weights = weight_report(samples, *methods.hat);
  return report;
}

WeightReport weight_report(std::span<const AlignmentSample> samples, const HatModel& model) {
  if (samples.empty()) throw ContractError("weight_report: no samples");
  const std::size_t m = model.hat.dims.hypothesis_count();
  std::map<MotionModelKind, WeightRow> rows;
  for (const auto& s : samples) {
    const AlignmentResult r = align(make_bank(s, model.query), s.dt, s.ego, model.hat);
    for (std::size_t i = 0; i < s.regimes.size(); ++i) {
      WeightRow& row = rows[s.regimes[i]];
      row.regime = s.regimes[i];
      if (row.mean_weight.empty()) row.mean_weight.assign(m, 0.0);
      for (std::size_t j = 0; j < m; ++j) row.mean_weight[j] += r.anchor_weights.at(i, j);
      ++row.count;
    }
  }
  WeightReport report;
  report.models = model.hat.dims.models;
  for (MotionModelKind kind : kAllMotionModels) {
    const auto it = rows.find(kind);
    if (it == rows.end()) continue;
    WeightRow row = it->second;
    for (double& w : row.mean_weight) w /= static_cast<double>(row.count);
    report.rows.push_back(std::move(row));
  }
  return report;
}

LatencyReport measure_latency(std::span<const AlignmentSample> samples, const HatModel& model,
                              std::size_t calls) {
  if (samples.empty()) throw ContractError("measure_latency: no samples");
  if (calls < 100) throw ContractError("measure_latency: at least 100 calls required");
  std::vector<InstanceBank> banks;
  const std::size_t distinct = std::min(samples.size(), calls);
  banks.reserve(distinct);
  for (std::size_t i = 0; i < distinct; ++i) banks.push_back(make_bank(samples[i], model.query));
  (void)align(banks[0], samples[0].dt, samples[0].ego, model.hat);

  std::vector<double> ms;
  ms.reserve(calls);
  for (std::size_t c = 0; c < calls; ++c) {
    const std::size_t i = c % distinct;
    const auto start = std::chrono::steady_clock::now();
    const AlignmentResult r = align(banks[i], samples[i].dt, samples[i].ego, model.hat);
    const auto stop = std::chrono::steady_clock::now();
    if (r.anchors.empty()) throw NumericalError("measure_latency: empty alignment");
    ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }
  LatencyReport report;
  report.calls = calls;
  report.instances = samples[0].anchors.size();
  report.min_ms = *std::min_element(ms.begin(), ms.end());
  report.max_ms = *std::max_element(ms.begin(), ms.end());
  report.median_ms = median(std::move(ms));
  return report;
}

SwitchingTrial run_switching_trial(const SwitchingConfig& config, std::uint64_t seed) {
  if (config.frames < 3 || config.segment == 0 || !(config.dt > 0.0)) {
    throw ConfigError("switching trial needs ≥ 3 frames, a positive segment length and dt > 0");
  }
  std::vector<RegimeSegment> segments;
  std::size_t covered = 0;
  for (std::size_t n = 0; covered + 1 < config.frames; ++n) {
    RegimeSegment seg;
    seg.kind = n % 2 == 0 ? MotionModelKind::kCv : MotionModelKind::kCtrv;
    seg.duration = std::min(config.segment, config.frames - 1 - covered);
    seg.speed = config.speed;
    seg.yaw_rate = seg.kind == MotionModelKind::kCtrv ? config.yaw_rate : 0.0;
    segments.push_back(seg);
    covered += seg.duration;
  }
  Anchor start{};
  start[kW] = 1.8;
  start[kL] = 4.5;
  start[kH] = 1.6;
  start[kCos] = 1.0;
  start[kVx] = config.speed;

  Scene scene;
  scene.seed = seed;
  scene.dt = config.dt;
  scene.tracks.push_back(simulate_track(0, start, segments, config.dt));
  scene.ego_to_world.assign(config.frames, EgoTransform{});
  const Observations obs = observe(scene, config.noise, derive_seed(seed, 1));
  const auto& track = scene.tracks[0];
  const auto& z = obs.anchors[0];

  const MeasurementNoise meas{config.noise.position, config.noise.yaw, config.noise.velocity};
  const std::array<MotionModelKind, 2> models = {MotionModelKind::kCv, MotionModelKind::kCtrv};
  ImmState imm = imm_init(models, z[0], meas, default_transition(2, config.self_transition));
  KalmanState cv = kf_init(MotionModelKind::kCv, z[0], meas);
  KalmanState ctrv = kf_init(MotionModelKind::kCtrv, z[0], meas);

  double se_imm = 0.0, se_cv = 0.0, se_ctrv = 0.0;
  auto squared = [&](const FilterVector& s, std::size_t t) {
    const double dx = s[kFx] - track.world[t][kX];
    const double dy = s[kFy] - track.world[t][kY];
    return dx * dx + dy * dy;
  };
  std::vector<double> active_probability(config.frames, 0.0);
  for (std::size_t t = 1; t < config.frames; ++t) {
    imm = imm_step(imm, config.dt, z[t], config.process, meas);
    cv = kf_update(kf_predict(cv, config.dt, config.process), z[t], meas);
    ctrv = kf_update(kf_predict(ctrv, config.dt, config.process), z[t], meas);
    se_imm += squared(imm_estimate(imm).mean, t);
    se_cv += squared(cv.mean, t);
    se_ctrv += squared(ctrv.mean, t);
    active_probability[t] = imm.mode_probabilities[track.regime[t] == MotionModelKind::kCv ? 0 : 1];
  }
  const double n = static_cast<double>(config.frames - 1);
  SwitchingTrial trial;
  trial.imm_rmse = std::sqrt(se_imm / n);
  trial.cv_rmse = std::sqrt(se_cv / n);
  trial.ctrv_rmse = std::sqrt(se_ctrv / n);
  for (std::size_t t = 2; t < config.frames; ++t) {
    if (track.regime[t] == track.regime[t - 1]) continue;
    std::size_t delay = config.segment;
    for (std::size_t d = 0; d < config.segment && t + d < config.frames; ++d) {
      if (active_probability[t + d] > 0.5) {
        delay = d;
        break;
      }
    }
    trial.switch_delay.push_back(delay);
  }
  return trial;
}

}  // namespace hat
