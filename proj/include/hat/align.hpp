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
/// Multiple-hypothesis spatio-temporal alignment.
///
/// Pipeline for a bank of K instances and M motion models:
///   1. anchor hypotheses: predict with every model, then ego-warp (K×M×10)
///   2. feature hypotheses: motion embedding of each hypothesis ⊕ query (K×M×2C)
///   3. dynamic weights from the directly warped bank: W_c (K×2C×2C), W_f (K×M×1)
///   4. feature fusion: σ(LN(hyps ⊗ W_c)), then σ(LN(W_f ⊗ ·)) over M (K×2C)
///   5. anchor decoding: W_a = softmax(L_a(W_f)), convex combination (K×10)
///   6. feature-anchor mixing: FFN(embed(b̄) ⊕ q̄) -> Q, B = b̄ + Φ_r(Q)
///
/// Every stage is a tensor op so gradients reach all learned blocks, including
/// the latent head through the motion-model kernels.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "hat/geometry.hpp"
#include "hat/layers.hpp"
#include "hat/motion_models.hpp"
#include "hat/tensor.hpp"

namespace hat {

using tensor::Tensor;

struct HatDims {
  std::size_t channels = 32;
  std::vector<MotionModelKind> models{kAllMotionModels.begin(), kAllMotionModels.end()};
  double position_scale = 50.0;
  double velocity_scale = 10.0;

  std::size_t hypothesis_count() const { return models.size(); }
  /// Channel split of the anchor encoder (P, D, Θ, V) in ratio 4:1:1:2.
  /// Throws ConfigError unless channels is a positive multiple of 8.
  std::array<std::size_t, 4> encoder_split() const;
  void validate() const;
};

/// State-decoupled anchor encoder: one MLP per anchor part, concatenated.
struct AnchorEncoder {
  nn::Mlp position;
  nn::Mlp size;
  nn::Mlp yaw;
  nn::Mlp velocity;
  double position_scale = 50.0;
  double velocity_scale = 10.0;

  std::size_t out_features() const;
  void append_parameters(const std::string& prefix, nn::ParameterList& out) const;
};

struct HatParameters {
  HatDims dims;
  std::uint64_t seed = 0;
  AnchorEncoder encoder;
  nn::LinearLayer channel_weights;  // L_c: 2C -> (2C)²
  nn::LinearLayer feature_weights;  // L_f: 2C -> M
  nn::LinearLayer anchor_weights;   // L_a: M -> M over the hypothesis axis
  nn::LayerNormLayer channel_norm;     // 2C
  nn::LayerNormLayer hypothesis_norm;  // 2C
  nn::Mlp mixer;   // FFN: 3C -> 2C -> C
  nn::Mlp refine;  // Φ_r: C -> C -> 10
  LatentHead latent_head;

  static HatParameters create(const HatDims& dims, std::uint64_t seed);
  nn::ParameterList parameters() const;
  /// Throws ConfigError when layer shapes disagree with dims.
  void validate() const;
};

struct InstanceBank {
  std::vector<Anchor> anchors;
  Tensor queries;  // K x C

  std::size_t size() const { return anchors.size(); }
  /// Throws ContractError when counts disagree or the bank is empty.
  void validate(std::size_t channels) const;
};

struct DecoderWeights {
  Tensor channel;  // W_c: K x 2C x 2C
  Tensor feature;  // W_f: K x M x 1
  Tensor anchor;   // W_a: K x M x 1 (filled by decode_anchor_weights)
};

struct DecodedAnchors {
  Tensor raw;         // convex combination, K x 10
  Tensor normalized;  // yaw renormalized, K x 10
};

struct MixResult {
  Tensor features;  // K x C
  Tensor anchors;   // K x 10, yaw renormalized
};

/// All intermediate tensors of one alignment pass.
struct AlignTrace {
  Tensor latents;      // K x 4
  Tensor hypotheses;   // K x M x 10
  Tensor feature_hypotheses;  // K x M x 2C
  DecoderWeights weights;
  Tensor fused;        // K x 2C
  DecodedAnchors decoded;
  MixResult mixed;
};

struct AlignmentResult {
  std::vector<Anchor> anchors;
  Tensor features;  // K x C
  /// Convex combination of the hypotheses before yaw renormalization and
  /// refinement; lies inside the per-dimension hypothesis hull.
  std::vector<Anchor> anchors_pre_refine;
  Tensor anchor_weights;  // K x M
};

Tensor anchors_to_tensor(std::span<const Anchor> anchors);
std::vector<Anchor> tensor_to_anchors(const Tensor& t);

/// Yaw renormalization as a differentiable op over [..., 10] rows.
/// Throws DegenerateYawError naming the offending row.
Tensor yaw_normalize_rows(const Tensor& anchors);

/// Hypotheses for fixed latents, no learned parts: entry m is
/// warp(predict(models[m], anchor, dt, lat)).
std::vector<Anchor> anchor_hypotheses(const Anchor& anchor, double dt,
                                      const AugmentedTransform& aug,
                                      const LatentKinematics<double>& lat,
                                      std::span<const MotionModelKind> models);

/// K x M x 10 hypotheses, differentiable w.r.t. the decoded latents
/// (`latents`, K x 4 columns [ax, ay, a, ω]).
Tensor generate_anchor_hypotheses(std::span<const Anchor> anchors, const Tensor& latents,
                                  double dt, const EgoTransform& ego,
                                  std::span<const MotionModelKind> models);
Tensor generate_anchor_hypotheses(const InstanceBank& bank, double dt, const EgoTransform& ego,
                                  const HatParameters& params);

Tensor encode_motion_embedding(const Tensor& anchors, const AnchorEncoder& encoder);
Tensor build_feature_hypotheses(const Tensor& embeddings, const Tensor& queries);
DecoderWeights compute_dynamic_weights(const InstanceBank& bank, const EgoTransform& ego,
                                       const HatParameters& params);

struct FusionOptions {
  bool layer_norm = true;
  bool activation = true;
};
Tensor fuse_features(const Tensor& feature_hypotheses, const DecoderWeights& weights,
                     const HatParameters& params, FusionOptions options = {});
Tensor decode_anchor_weights(const Tensor& feature_weights, const HatParameters& params);
DecodedAnchors decode_anchor(const Tensor& hypotheses, const Tensor& anchor_weights);
MixResult mix_feature_anchor(const Tensor& fused, const Tensor& decoded,
                             const HatParameters& params);

/// Full differentiable pass (records the graph when grad is enabled).
AlignTrace align_trace(const InstanceBank& bank, double dt, const EgoTransform& ego,
                       const HatParameters& params);

/// Inference: runs align_trace without recording gradients.
AlignmentResult align(const InstanceBank& bank, double dt, const EgoTransform& ego,
                      const HatParameters& params);

}  // namespace hat
