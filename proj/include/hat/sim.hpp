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

/// \file
/// Synthetic multi-regime scenes: ego motion, ground-truth object tracks
/// generated by the motion-model library, noisy observations, and the
/// query window features that feed learned aligners.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "hat/align.hpp"
#include "hat/geometry.hpp"
#include "hat/layers.hpp"
#include "hat/motion_models.hpp"

namespace hat {

/// splitmix64 over (master, a, b); independent streams per scene/track.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

struct RegimeSegment {
  MotionModelKind kind = MotionModelKind::kCv;
  std::size_t duration = 1;  // frames
  double speed = 0.0;        // m/s at segment start
  double yaw_rate = 0.0;     // rad/s, CTRV/CTRA
  double accel = 0.0;        // m/s² along the heading, CA/CTRA

  /// Throws ConfigError outside |ω| ≤ 0.1, |a| ≤ 0.1, speed ≤ 20, duration ≥ 1.
  void validate() const;
};

struct SceneConfig {
  std::size_t tracks = 20;
  std::size_t frames = 40;
  double dt = 0.5;
  /// Weights for cv, static, ca, ctrv, ctra.
  std::array<double, 5> regime_mix = {0.30, 0.20, 0.20, 0.15, 0.15};
  std::size_t min_segment = 8;
  std::size_t max_segment = 20;
  double min_speed = 2.0;
  double max_speed = 15.0;
  double min_turn_rate = 0.05;
  double max_turn_rate = 0.1;
  double min_accel = 0.05;
  double max_accel = 0.1;
  double spawn_radius = 40.0;
  double ego_speed = 6.0;
  double ego_max_yaw_rate = 0.05;

  void validate() const;
};

struct NoiseConfig {
  double position = 0.3;  // m, x/y/z
  double yaw = 0.05;      // rad, heading angle
  double velocity = 0.2;  // m/s, per component

  void validate() const;
};

struct ObjectTrack {
  std::size_t id = 0;
  std::vector<Anchor> world;                // ground truth per frame
  std::vector<MotionModelKind> regime;      // regime[t]: model of the t-1 -> t step
  std::vector<RegimeSegment> segments;
};

struct Scene {
  std::uint64_t seed = 0;
  double dt = 0.5;
  std::vector<EgoTransform> ego_to_world;  // ego pose per frame
  std::vector<ObjectTrack> tracks;

  std::size_t frames() const { return ego_to_world.size(); }
  /// Transform from frame t-1 to frame t (t ≥ 1).
  EgoTransform ego_transform(std::size_t t) const;
  /// Ground truth of `track` in the ego frame of `t`.
  Anchor ground_truth(std::size_t track, std::size_t t) const;
};

/// Rolls `start` forward through `segments` with predict(); frame 0 is
/// `start`, the track has 1 + Σ durations frames.
ObjectTrack simulate_track(std::size_t id, const Anchor& start,
                           const std::vector<RegimeSegment>& segments, double dt);

Scene generate_scene(const SceneConfig& config, std::uint64_t seed);

/// Noisy anchors per [track][frame], each in the ego frame of its frame.
struct Observations {
  std::vector<std::vector<Anchor>> anchors;
};

Observations observe(const Scene& scene, const NoiseConfig& noise, std::uint64_t seed);

inline constexpr std::size_t kWindowLength = 3;
inline constexpr std::size_t kWindowFeatureCount = 24;

/// Last three observations up to frame t, expressed in frame t:
/// offsets of the two older positions relative to the newest (/10),
/// constant-velocity consistency residuals of the two older observations
/// (where each predicts the newest position, minus the newest, in meters),
/// three yaw vectors, three velocities (/10), and the turn between
/// consecutive frames as seen by the yaw vectors and by the velocity
/// directions (cross products, x10). Frames before 0 repeat frame 0.
std::array<double, kWindowFeatureCount> window_features(const Scene& scene,
                                                        const Observations& obs,
                                                        std::size_t track, std::size_t t);

/// Learnable map from window features to a C-dim query.
struct QueryEncoder {
  nn::Mlp mlp;  // kWindowFeatureCount -> C -> C

  static QueryEncoder create(std::size_t channels, nn::Rng& rng);
  std::size_t channels() const { return mlp.out_features(); }
  Tensor operator()(const Tensor& features) const { return mlp(features); }
  void append_parameters(const std::string& prefix, nn::ParameterList& out) const;
};

/// Observed scene plus the frames it was generated for.
struct Dataset {
  SceneConfig config;
  std::vector<Scene> scenes;
  std::vector<Observations> observations;
};

Dataset generate_dataset(const SceneConfig& config, const NoiseConfig& noise,
                         std::size_t scene_count, std::uint64_t seed);

/// One alignment step t-1 -> t over every track of a scene.
struct AlignmentSample {
  std::size_t scene = 0;
  std::size_t frame = 0;  // t
  double dt = 0.5;
  std::vector<Anchor> anchors;          // observations at t-1, frame t-1
  Tensor features;                      // K x kWindowFeatureCount, at t-1
  EgoTransform ego;                     // t-1 -> t
  std::vector<Anchor> targets;          // ground truth at t, frame t
  std::vector<MotionModelKind> regimes; // label of the t-1 -> t step
};

/// Samples for every frame t with a full query window at t-1.
std::vector<AlignmentSample> build_samples(const Dataset& data);

InstanceBank make_bank(const AlignmentSample& sample, const QueryEncoder& encoder);

}  // namespace hat
