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

#include "hat/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "hat/error.hpp"

namespace hat {
namespace {

using std::numbers::pi;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kEgoStream = 0;
constexpr std::uint64_t kTrackStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double random_sign(std::mt19937_64& rng) {
  return std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
}

std::size_t pick(std::mt19937_64& rng, const std::array<double, 5>& weights) {
  return std::discrete_distribution<std::size_t>(weights.begin(), weights.end())(rng);
}

/// Transform taking frame `from` coordinates to frame `to`.
EgoTransform frame_to_frame(const Scene& scene, std::size_t from, std::size_t to) {
  return compose(scene.ego_to_world[from], invert(scene.ego_to_world[to]));
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = splitmix(master);
  x = splitmix(x ^ splitmix(a + 0x632be59bd9b4e019ULL));
  return splitmix(x ^ splitmix(b + 0x8cb92ba72f3d8dd7ULL));
}

void RegimeSegment::validate() const {
  require(duration >= 1, "regime segment duration must be at least one frame");
  require(std::abs(yaw_rate) <= kLatentBound, "regime yaw rate outside ±0.1 rad/s");
  require(std::abs(accel) <= kLatentBound, "regime acceleration outside ±0.1 m/s²");
  require(speed >= 0.0 && speed <= 20.0, "regime speed outside [0, 20] m/s");
}

void SceneConfig::validate() const {
  require(tracks >= 1, "scene needs at least one track");
  require(frames >= kWindowLength + 2, "scene needs at least " + std::to_string(kWindowLength + 2) + " frames");
  require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
  double total = 0.0;
  for (double w : regime_mix) {
    require(std::isfinite(w) && w >= 0.0, "regime mix weights must be finite and nonnegative");
    total += w;
  }
  require(total > 0.0, "regime mix weights sum to zero");
  require(min_segment >= 1 && min_segment <= max_segment, "segment length range is empty");
  require(min_speed >= 0.0 && min_speed <= max_speed && max_speed <= 20.0,
          "speed range must lie within [0, 20] m/s");
  require(min_turn_rate >= 0.0 && min_turn_rate <= max_turn_rate && max_turn_rate <= kLatentBound,
          "turn rate range must lie within [0, 0.1] rad/s");
  require(min_accel >= 0.0 && min_accel <= max_accel && max_accel <= kLatentBound,
          "acceleration range must lie within [0, 0.1] m/s²");
  require(spawn_radius > 0.0, "spawn radius must be positive");
  require(ego_speed >= 0.0 && ego_max_yaw_rate >= 0.0, "ego motion must be nonnegative");
}

void NoiseConfig::validate() const {
  for (double s : {position, yaw, velocity}) {
    require(std::isfinite(s) && s >= 0.0, "noise standard deviations must be finite and nonnegative");
  }
}

EgoTransform Scene::ego_transform(std::size_t t) const {
  if (t == 0 || t >= frames()) throw ContractError("ego_transform: frame out of range");
  return frame_to_frame(*this, t - 1, t);
}

Anchor Scene::ground_truth(std::size_t track, std::size_t t) const {
  return warp_anchor(tracks.at(track).world.at(t), build_augmented(invert(ego_to_world.at(t))));
}

ObjectTrack simulate_track(std::size_t id, const Anchor& start,
                           const std::vector<RegimeSegment>& segments, double dt) {
  if (segments.empty()) throw ContractError("simulate_track: no segments");
  ObjectTrack track;
  track.id = id;
  track.segments = segments;
  track.world.push_back(start);
  track.regime.push_back(segments.front().kind);
  for (const auto& seg : segments) {
    seg.validate();
    for (std::size_t f = 0; f < seg.duration; ++f) {
      const Anchor& cur = track.world.back();
      LatentKinematics<double> lat;
      lat.yaw_rate = seg.yaw_rate;
      lat.accel = seg.accel;
      // CA acceleration points along the heading.
      lat.ax = seg.accel * cur[kCos];
      lat.ay = seg.accel * cur[kSin];
      track.world.push_back(predict(seg.kind, cur, dt, lat));
      track.regime.push_back(seg.kind);
    }
  }
  return track;
}

Scene generate_scene(const SceneConfig& config, std::uint64_t seed) {
  config.validate();
  Scene scene;
  scene.seed = seed;
  scene.dt = config.dt;

  std::mt19937_64 ego_rng(derive_seed(seed, kEgoStream));
  double heading = 0.0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double yaw_rate = 0.0;
  for (std::size_t t = 0; t < config.frames; ++t) {
    scene.ego_to_world.push_back(EgoTransform::from_yaw(heading, {position.x(), position.y(), 0.0}));
    if (t % 10 == 0) yaw_rate = uniform(ego_rng, -config.ego_max_yaw_rate, config.ego_max_yaw_rate);
    const auto d = arc_displacement(config.ego_speed, heading, yaw_rate, 0.0, config.dt);
    position += Eigen::Vector2d(d.dx, d.dy);
    heading += yaw_rate * config.dt;
  }

  std::array<double, 5> moving = config.regime_mix;
  moving[static_cast<std::size_t>(MotionModelKind::kStatic)] = 0.0;
  double moving_total = 0.0;
  for (double w : moving) moving_total += w;
  double total = 0.0;
  for (double w : config.regime_mix) total += w;
  const double static_share = config.regime_mix[static_cast<std::size_t>(MotionModelKind::kStatic)] / total;

  const std::size_t steps = config.frames - 1;
  for (std::size_t id = 0; id < config.tracks; ++id) {
    std::mt19937_64 rng(derive_seed(seed, kTrackStream, id));
    const double radius = config.spawn_radius * std::sqrt(uniform(rng, 0.0, 1.0));
    const double bearing = uniform(rng, -pi, pi);
    const double yaw = uniform(rng, -pi, pi);
    const Eigen::Vector3d box(uniform(rng, 1.6, 2.2), uniform(rng, 3.8, 5.2), uniform(rng, 1.4, 1.9));
    const bool parked = moving_total == 0.0 || uniform(rng, 0.0, 1.0) < static_share;
    double speed = parked ? 0.0 : uniform(rng, config.min_speed, config.max_speed);
    const Anchor start = make_anchor({radius * std::cos(bearing), radius * std::sin(bearing), box.z() / 2},
                                     box, yaw, {speed * std::cos(yaw), speed * std::sin(yaw)});

    std::vector<RegimeSegment> segments;
    if (parked) {
      segments.push_back({MotionModelKind::kStatic, steps, 0.0, 0.0, 0.0});
    } else {
      std::size_t used = 0;
      while (used < steps) {
        RegimeSegment seg;
        seg.kind = kAllMotionModels[pick(rng, moving)];
        seg.duration = std::min<std::size_t>(
            steps - used,
            std::uniform_int_distribution<std::size_t>(config.min_segment, config.max_segment)(rng));
        seg.speed = speed;
        const double turn = random_sign(rng) * uniform(rng, config.min_turn_rate, config.max_turn_rate);
        const double accel = random_sign(rng) * uniform(rng, config.min_accel, config.max_accel);
        if (is_turning(seg.kind)) seg.yaw_rate = turn;
        if (seg.kind == MotionModelKind::kCa || seg.kind == MotionModelKind::kCtra) {
          seg.accel = accel;
          const double end = speed + accel * config.dt * static_cast<double>(seg.duration);
          if (end < 0.5 || end > 20.0) seg.accel = -accel;
          speed += seg.accel * config.dt * static_cast<double>(seg.duration);
        }
        segments.push_back(seg);
        used += seg.duration;
      }
    }
    scene.tracks.push_back(simulate_track(id, start, segments, config.dt));
  }
  return scene;
}

Observations observe(const Scene& scene, const NoiseConfig& noise, std::uint64_t seed) {
  noise.validate();
  Observations obs;
  obs.anchors.resize(scene.tracks.size());
  for (std::size_t k = 0; k < scene.tracks.size(); ++k) {
    std::mt19937_64 rng(derive_seed(seed, kNoiseStream, k));
    std::normal_distribution<double> unit(0.0, 1.0);
    auto& out = obs.anchors[k];
    out.reserve(scene.frames());
    for (std::size_t t = 0; t < scene.frames(); ++t) {
      Anchor a = scene.ground_truth(k, t);
      if (noise.position > 0.0) {
        for (std::size_t d : {kX, kY, kZ}) a[d] += noise.position * unit(rng);
      }
      if (noise.yaw > 0.0) {
        const double yaw = yaw_angle(a) + noise.yaw * unit(rng);
        a[kCos] = std::cos(yaw);
        a[kSin] = std::sin(yaw);
      }
      if (noise.velocity > 0.0) {
        for (std::size_t d : {kVx, kVy}) a[d] += noise.velocity * unit(rng);
      }
      out.push_back(a);
    }
  }
  return obs;
}

std::array<double, kWindowFeatureCount> window_features(const Scene& scene,
                                                        const Observations& obs,
                                                        std::size_t track, std::size_t t) {
  std::array<double, kWindowFeatureCount> f{};
  std::array<Anchor, kWindowLength> window;
  for (std::size_t i = 0; i < kWindowLength; ++i) {
    const std::size_t back = kWindowLength - 1 - i;
    const std::size_t s = t >= back ? t - back : 0;
    const Anchor& a = obs.anchors.at(track).at(s);
    window[i] = s == t ? a : warp_anchor(a, build_augmented(frame_to_frame(scene, s, t)));
  }
  const Anchor& newest = window.back();
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < kWindowLength; ++i) {
    f[n++] = (window[i][kX] - newest[kX]) / 10.0;
    f[n++] = (window[i][kY] - newest[kY]) / 10.0;
  }
  for (std::size_t i = 0; i + 1 < kWindowLength; ++i) {
    const double lead = static_cast<double>(kWindowLength - 1 - i) * scene.dt;
    f[n++] = window[i][kX] + window[i][kVx] * lead - newest[kX];
    f[n++] = window[i][kY] + window[i][kVy] * lead - newest[kY];
  }
  for (const auto& a : window) {
    f[n++] = a[kCos];
    f[n++] = a[kSin];
  }
  for (const auto& a : window) {
    f[n++] = a[kVx] / 10.0;
    f[n++] = a[kVy] / 10.0;
  }
  for (std::size_t i = 0; i + 1 < kWindowLength; ++i) {
    const Anchor& a = window[i];
    const Anchor& b = window[i + 1];
    f[n++] = 10.0 * (a[kCos] * b[kSin] - a[kSin] * b[kCos]);
    // Damped so near-zero velocities do not produce spurious turns.
    const double cross = a[kVx] * b[kVy] - a[kVy] * b[kVx];
    f[n++] = 10.0 * cross / (speed(a) * speed(b) + 1.0);
  }
  return f;
}

QueryEncoder QueryEncoder::create(std::size_t channels, nn::Rng& rng) {
  return {nn::Mlp::create(kWindowFeatureCount, channels, channels, rng)};
}

void QueryEncoder::append_parameters(const std::string& prefix, nn::ParameterList& out) const {
  mlp.append_parameters(prefix, out);
}

Dataset generate_dataset(const SceneConfig& config, const NoiseConfig& noise,
                         std::size_t scene_count, std::uint64_t seed) {
  if (scene_count == 0) throw ConfigError("dataset needs at least one scene");
  Dataset data;
  data.config = config;
  for (std::size_t s = 0; s < scene_count; ++s) {
    const std::uint64_t scene_seed = derive_seed(seed, 100, s);
    data.scenes.push_back(generate_scene(config, scene_seed));
    data.observations.push_back(observe(data.scenes.back(), noise, derive_seed(scene_seed, 200)));
  }
  return data;
}

std::vector<AlignmentSample> build_samples(const Dataset& data) {
  std::vector<AlignmentSample> out;
  for (std::size_t s = 0; s < data.scenes.size(); ++s) {
    const Scene& scene = data.scenes[s];
    const Observations& obs = data.observations[s];
    const std::size_t k = scene.tracks.size();
    for (std::size_t t = kWindowLength; t < scene.frames(); ++t) {
      AlignmentSample sample;
      sample.scene = s;
      sample.frame = t;
      sample.dt = scene.dt;
      sample.ego = scene.ego_transform(t);
      std::vector<double> features;
      features.reserve(k * kWindowFeatureCount);
      for (std::size_t i = 0; i < k; ++i) {
        sample.anchors.push_back(obs.anchors[i][t - 1]);
        const auto f = window_features(scene, obs, i, t - 1);
        features.insert(features.end(), f.begin(), f.end());
        sample.targets.push_back(scene.ground_truth(i, t));
        sample.regimes.push_back(scene.tracks[i].regime[t]);
      }
      sample.features = Tensor::from_values({k, kWindowFeatureCount}, std::move(features));
      out.push_back(std::move(sample));
    }
  }
  return out;
}

InstanceBank make_bank(const AlignmentSample& sample, const QueryEncoder& encoder) {
  InstanceBank bank;
  bank.anchors = sample.anchors;
  bank.queries = encoder(sample.features);
  return bank;
}

}  // namespace hat
