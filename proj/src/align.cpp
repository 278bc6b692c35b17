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

#include "hat/align.hpp"

#include <cmath>
#include <string>

#include "hat/dual.hpp"
#include "hat/error.hpp"

namespace hat {

using tensor::Shape;

std::array<std::size_t, 4> HatDims::encoder_split() const {
  if (channels == 0 || channels % 8 != 0) {
    throw ConfigError("channels must be a positive multiple of 8, got " +
                      std::to_string(channels));
  }
  const std::size_t unit = channels / 8;
  return {4 * unit, unit, unit, 2 * unit};
}

void HatDims::validate() const {
  encoder_split();
  if (models.empty()) throw ConfigError("motion model list is empty");
  for (std::size_t i = 0; i < models.size(); ++i)
    for (std::size_t j = i + 1; j < models.size(); ++j)
      if (models[i] == models[j]) throw ConfigError("duplicate motion model in list");
  if (!(position_scale > 0.0) || !(velocity_scale > 0.0)) {
    throw ConfigError("encoder input scales must be positive");
  }
}

std::size_t AnchorEncoder::out_features() const {
  return position.out_features() + size.out_features() + yaw.out_features() +
         velocity.out_features();
}

void AnchorEncoder::append_parameters(const std::string& prefix, nn::ParameterList& out) const {
  position.append_parameters(prefix + ".position", out);
  size.append_parameters(prefix + ".size", out);
  yaw.append_parameters(prefix + ".yaw", out);
  velocity.append_parameters(prefix + ".velocity", out);
}

HatParameters HatParameters::create(const HatDims& dims, std::uint64_t seed) {
  dims.validate();
  nn::Rng rng(seed);
  const std::size_t c = dims.channels;
  const std::size_t c2 = 2 * c;
  const auto split = dims.encoder_split();
  HatParameters p;
  p.dims = dims;
  p.seed = seed;
  p.encoder.position = nn::Mlp::create(3, split[0], split[0], rng);
  p.encoder.size = nn::Mlp::create(3, split[1], split[1], rng);
  p.encoder.yaw = nn::Mlp::create(2, split[2], split[2], rng);
  p.encoder.velocity = nn::Mlp::create(2, split[3], split[3], rng);
  p.encoder.position_scale = dims.position_scale;
  p.encoder.velocity_scale = dims.velocity_scale;
  p.channel_weights = nn::LinearLayer::create(c2, c2 * c2, rng);
  p.feature_weights = nn::LinearLayer::create(c2, dims.hypothesis_count(), rng);
  p.anchor_weights = nn::LinearLayer::create(dims.hypothesis_count(), dims.hypothesis_count(), rng);
  p.channel_norm = nn::LayerNormLayer::create(c2);
  p.hypothesis_norm = nn::LayerNormLayer::create(c2);
  p.mixer = nn::Mlp::create(3 * c, c2, c, rng);
  p.refine = nn::Mlp::create(c, c, kAnchorDim, rng);
  p.latent_head = LatentHead::create(c, rng);
  return p;
}

nn::ParameterList HatParameters::parameters() const {
  nn::ParameterList out;
  encoder.append_parameters("encoder", out);
  channel_weights.append_parameters("channel_weights", out);
  feature_weights.append_parameters("feature_weights", out);
  anchor_weights.append_parameters("anchor_weights", out);
  channel_norm.append_parameters("channel_norm", out);
  hypothesis_norm.append_parameters("hypothesis_norm", out);
  mixer.append_parameters("mixer", out);
  refine.append_parameters("refine", out);
  latent_head.append_parameters("latent_head", out);
  return out;
}

void HatParameters::validate() const {
  dims.validate();
  const std::size_t c = dims.channels;
  const std::size_t c2 = 2 * c;
  auto expect = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("parameter shape mismatch: " + what);
  };
  expect(encoder.out_features() == c, "encoder output != C");
  expect(channel_weights.in_features() == c2 && channel_weights.out_features() == c2 * c2,
         "channel weight generator");
  expect(feature_weights.in_features() == c2 &&
             feature_weights.out_features() == dims.hypothesis_count(),
         "feature weight generator");
  expect(anchor_weights.in_features() == dims.hypothesis_count() &&
             anchor_weights.out_features() == dims.hypothesis_count(),
         "anchor weight map");
  expect(channel_norm.gain.size() == c2 && hypothesis_norm.gain.size() == c2, "layer norms");
  expect(mixer.in_features() == 3 * c, "mixer input != 3C");
  expect(mixer.out_features() == c, "mixer output != C");
  expect(refine.in_features() == c && refine.out_features() == kAnchorDim, "refinement MLP");
  expect(latent_head.mlp.in_features() == c && latent_head.mlp.out_features() == kLatentCount,
         "latent head");
}

void InstanceBank::validate(std::size_t channels) const {
  if (anchors.empty()) throw ContractError("instance bank is empty");
  if (!queries.defined() || queries.rank() != 2 || queries.dim(0) != anchors.size() ||
      queries.dim(1) != channels) {
    throw ContractError("instance bank: expected queries of shape [" +
                        std::to_string(anchors.size()) + "," + std::to_string(channels) + "]");
  }
}

Tensor anchors_to_tensor(std::span<const Anchor> anchors) {
  std::vector<double> values;
  values.reserve(anchors.size() * kAnchorDim);
  for (const auto& a : anchors) values.insert(values.end(), a.v.begin(), a.v.end());
  return Tensor::from_values({anchors.size(), kAnchorDim}, std::move(values));
}

std::vector<Anchor> tensor_to_anchors(const Tensor& t) {
  if (t.shape().back() != kAnchorDim) throw ShapeError("tensor_to_anchors: last dim != 10");
  const auto v = t.values();
  std::vector<Anchor> out(t.size() / kAnchorDim);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = anchor_from(v.subspan(i * kAnchorDim, kAnchorDim));
  return out;
}

Tensor yaw_normalize_rows(const Tensor& anchors) {
  if (anchors.shape().back() != kAnchorDim) throw ShapeError("yaw_normalize_rows: last dim != 10");
  const std::size_t rows = anchors.size() / kAnchorDim;
  std::vector<double> out(anchors.values().begin(), anchors.values().end());
  std::vector<double> norms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = out.data() + r * kAnchorDim;
    const double n = std::hypot(row[kCos], row[kSin]);
    if (!(n > kMinYawNorm)) {
      throw DegenerateYawError("instance " + std::to_string(r) + ": yaw vector norm " +
                                   std::to_string(n) + " is degenerate",
                               r);
    }
    norms[r] = n;
    row[kCos] /= n;
    row[kSin] /= n;
  }
  return tensor::make_result(anchors.shape(), std::move(out), {anchors},
                             [anchors, norms, rows](tensor::TensorNode& self) {
    const auto in = anchors.values();
    auto g = anchors.node()->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * kAnchorDim;
      for (std::size_t d = 0; d < kAnchorDim; ++d) {
        if (d != kCos && d != kSin) g[base + d] += self.grad[base + d];
      }
      const double c = in[base + kCos];
      const double s = in[base + kSin];
      const double n3 = norms[r] * norms[r] * norms[r];
      const double gc = self.grad[base + kCos];
      const double gs = self.grad[base + kSin];
      g[base + kCos] += (gc * s * s - gs * c * s) / n3;
      g[base + kSin] += (gs * c * c - gc * c * s) / n3;
    }
  });
}

std::vector<Anchor> anchor_hypotheses(const Anchor& anchor, double dt,
                                      const AugmentedTransform& aug,
                                      const LatentKinematics<double>& lat,
                                      std::span<const MotionModelKind> models) {
  std::vector<Anchor> out;
  out.reserve(models.size());
  for (MotionModelKind kind : models) out.push_back(warp_anchor(predict(kind, anchor, dt, lat), aug));
  return out;
}

Tensor generate_anchor_hypotheses(std::span<const Anchor> anchors, const Tensor& latents,
                                  double dt, const EgoTransform& ego,
                                  std::span<const MotionModelKind> models) {
  using D = Dual<kLatentCount>;
  const std::size_t k = anchors.size();
  const std::size_t m = models.size();
  if (latents.rank() != 2 || latents.dim(0) != k || latents.dim(1) != kLatentCount) {
    throw ShapeError("generate_anchor_hypotheses: latents must be [K,4], got " +
                     tensor::to_string(latents.shape()));
  }
  const AugmentedTransform aug = build_augmented(ego);
  const auto lat = latents.values();
  std::vector<double> out(k * m * kAnchorDim);
  // d(hypothesis)/d(latents): K x M x 10 x 4
  std::vector<double> jacobian(k * m * kAnchorDim * kLatentCount);
  for (std::size_t i = 0; i < k; ++i) {
    const double* li = lat.data() + i * kLatentCount;
    const LatentKinematics<D> dual_lat{D::variable(li[0], 0), D::variable(li[1], 1),
                                       D::variable(li[2], 2), D::variable(li[3], 3)};
    BasicAnchor<D> lifted;
    for (std::size_t d = 0; d < kAnchorDim; ++d) lifted[d] = D(anchors[i][d]);
    for (std::size_t h = 0; h < m; ++h) {
      const BasicAnchor<D> moved = predict(models[h], lifted, dt, dual_lat);
      Anchor value;
      for (std::size_t d = 0; d < kAnchorDim; ++d) value[d] = moved[d].value;
      const Anchor warped = warp_anchor(value, aug);
      const std::size_t base = (i * m + h) * kAnchorDim;
      for (std::size_t d = 0; d < kAnchorDim; ++d) out[base + d] = warped[d];
      // The warp is affine, so tangents only see the rotation.
      for (std::size_t j = 0; j < kLatentCount; ++j) {
        AnchorVector t;
        for (std::size_t d = 0; d < kAnchorDim; ++d) t[static_cast<Eigen::Index>(d)] = moved[d].tangent[j];
        const AnchorVector rt = aug.rotation * t;
        for (std::size_t d = 0; d < kAnchorDim; ++d)
          jacobian[(base + d) * kLatentCount + j] = rt[static_cast<Eigen::Index>(d)];
      }
    }
  }
  return tensor::make_result({k, m, kAnchorDim}, std::move(out), {latents},
                             [latents, jacobian, k, m](tensor::TensorNode& self) {
    auto g = latents.node()->grad_buffer();
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t e = 0; e < m * kAnchorDim; ++e) {
        const std::size_t idx = i * m * kAnchorDim + e;
        const double gv = self.grad[idx];
        if (gv == 0.0) continue;
        for (std::size_t j = 0; j < kLatentCount; ++j)
          g[i * kLatentCount + j] += gv * jacobian[idx * kLatentCount + j];
      }
    }
  });
}

Tensor generate_anchor_hypotheses(const InstanceBank& bank, double dt, const EgoTransform& ego,
                                  const HatParameters& params) {
  bank.validate(params.dims.channels);
  const Tensor latents = params.latent_head.forward(bank.queries);
  return generate_anchor_hypotheses(bank.anchors, latents, dt, ego, params.dims.models);
}

Tensor encode_motion_embedding(const Tensor& anchors, const AnchorEncoder& encoder) {
  if (anchors.shape().back() != kAnchorDim) {
    throw ConfigError("encode_motion_embedding: anchors must end in 10, got " +
                      tensor::to_string(anchors.shape()));
  }
  const std::size_t axis = anchors.rank() - 1;
  const Tensor position = tensor::scale(tensor::slice(anchors, axis, kX, kZ + 1),
                                        1.0 / encoder.position_scale);
  const Tensor size = tensor::slice(anchors, axis, kW, kH + 1);
  const Tensor yaw = tensor::slice(anchors, axis, kCos, kSin + 1);
  const Tensor velocity = tensor::scale(tensor::slice(anchors, axis, kVx, kVy + 1),
                                        1.0 / encoder.velocity_scale);
  return tensor::concat({encoder.position(position), encoder.size(size), encoder.yaw(yaw),
                         encoder.velocity(velocity)},
                        axis);
}

Tensor build_feature_hypotheses(const Tensor& embeddings, const Tensor& queries) {
  if (embeddings.rank() != 3 || queries.rank() != 2 || embeddings.dim(0) != queries.dim(0) ||
      embeddings.dim(2) != queries.dim(1)) {
    throw ShapeError("build_feature_hypotheses: embeddings " +
                     tensor::to_string(embeddings.shape()) + " vs queries " +
                     tensor::to_string(queries.shape()));
  }
  return tensor::concat({embeddings, tensor::expand(queries, 1, embeddings.dim(1))}, 2);
}

DecoderWeights compute_dynamic_weights(const InstanceBank& bank, const EgoTransform& ego,
                                       const HatParameters& params) {
  bank.validate(params.dims.channels);
  const AugmentedTransform aug = build_augmented(ego);
  std::vector<Anchor> warped;
  warped.reserve(bank.size());
  for (const auto& a : bank.anchors) warped.push_back(warp_anchor(a, aug));
  const Tensor embed = encode_motion_embedding(anchors_to_tensor(warped), params.encoder);
  const Tensor conditioning = tensor::concat({embed, bank.queries}, 1);  // K x 2C
  const std::size_t k = bank.size();
  const std::size_t c2 = 2 * params.dims.channels;
  DecoderWeights w;
  w.channel = tensor::reshape(params.channel_weights(conditioning), {k, c2, c2});
  w.feature = tensor::reshape(params.feature_weights(conditioning),
                              {k, params.dims.hypothesis_count(), 1});
  return w;
}

Tensor fuse_features(const Tensor& feature_hypotheses, const DecoderWeights& weights,
                     const HatParameters& params, FusionOptions options) {
  const std::size_t k = feature_hypotheses.dim(0);
  const std::size_t m = feature_hypotheses.dim(1);
  const std::size_t c2 = feature_hypotheses.dim(2);
  auto post = [&](const Tensor& x, const nn::LayerNormLayer& ln) {
    Tensor y = options.layer_norm ? ln(x) : x;
    return options.activation ? nn::activate(y) : y;
  };
  // Each instance's M x 2C block times its own 2C x 2C matrix.
  const Tensor per_channel = post(tensor::matmul(feature_hypotheses, weights.channel),
                                  params.channel_norm);
  // W_f (1 x M) collapses the hypotheses.
  const Tensor collapsed = tensor::matmul(tensor::reshape(weights.feature, {k, 1, m}), per_channel);
  return tensor::reshape(post(collapsed, params.hypothesis_norm), {k, c2});
}

Tensor decode_anchor_weights(const Tensor& feature_weights, const HatParameters& params) {
  const std::size_t k = feature_weights.dim(0);
  const std::size_t m = feature_weights.size() / k;
  const Tensor logits = params.anchor_weights(tensor::reshape(feature_weights, {k, m}));
  return tensor::reshape(tensor::softmax(logits, 1), {k, m, 1});
}

DecodedAnchors decode_anchor(const Tensor& hypotheses, const Tensor& anchor_weights) {
  const std::size_t k = hypotheses.dim(0);
  const std::size_t m = hypotheses.dim(1);
  if (anchor_weights.size() != k * m) {
    throw ShapeError("decode_anchor: weights " + tensor::to_string(anchor_weights.shape()) +
                     " do not match hypotheses " + tensor::to_string(hypotheses.shape()));
  }
  DecodedAnchors out;
  out.raw = tensor::reshape(
      tensor::matmul(tensor::reshape(anchor_weights, {k, 1, m}), hypotheses), {k, kAnchorDim});
  out.normalized = yaw_normalize_rows(out.raw);
  return out;
}

MixResult mix_feature_anchor(const Tensor& fused, const Tensor& decoded,
                             const HatParameters& params) {
  if (params.mixer.out_features() != params.dims.channels) {
    throw ConfigError("mixer output dim " + std::to_string(params.mixer.out_features()) +
                      " != C " + std::to_string(params.dims.channels));
  }
  const Tensor embed = encode_motion_embedding(decoded, params.encoder);
  MixResult out;
  out.features = params.mixer(tensor::concat({embed, fused}, 1));
  out.anchors = yaw_normalize_rows(tensor::add(decoded, params.refine(out.features)));
  return out;
}

AlignTrace align_trace(const InstanceBank& bank, double dt, const EgoTransform& ego,
                       const HatParameters& params) {
  params.validate();
  bank.validate(params.dims.channels);
  AlignTrace t;
  // Temporal alignment.
  t.latents = params.latent_head.forward(bank.queries);
  t.hypotheses = generate_anchor_hypotheses(bank.anchors, t.latents, dt, ego, params.dims.models);
  const Tensor embeddings = encode_motion_embedding(t.hypotheses, params.encoder);
  t.feature_hypotheses = build_feature_hypotheses(embeddings, bank.queries);
  // Spatial alignment.
  t.weights = compute_dynamic_weights(bank, ego, params);
  t.fused = fuse_features(t.feature_hypotheses, t.weights, params);
  t.weights.anchor = decode_anchor_weights(t.weights.feature, params);
  t.decoded = decode_anchor(t.hypotheses, t.weights.anchor);
  t.mixed = mix_feature_anchor(t.fused, t.decoded.normalized, params);
  return t;
}

AlignmentResult align(const InstanceBank& bank, double dt, const EgoTransform& ego,
                      const HatParameters& params) {
  tensor::NoGradGuard no_grad;
  const AlignTrace t = align_trace(bank, dt, ego, params);
  AlignmentResult r;
  r.anchors = tensor_to_anchors(t.mixed.anchors);
  r.features = t.mixed.features;
  r.anchors_pre_refine = tensor_to_anchors(t.decoded.raw);
  r.anchor_weights = tensor::reshape(t.weights.anchor, {bank.size(), params.dims.hypothesis_count()});
  return r;
}

}  // namespace hat
