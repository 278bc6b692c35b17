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

#include "hat/motion_models.hpp"

#include <array>
#include <cmath>

namespace hat {

std::string_view to_string(MotionModelKind kind) {
  switch (kind) {
    case MotionModelKind::kCv: return "cv";
    case MotionModelKind::kStatic: return "static";
    case MotionModelKind::kCa: return "ca";
    case MotionModelKind::kCtrv: return "ctrv";
    case MotionModelKind::kCtra: return "ctra";
  }
  return "unknown";
}

MotionModelKind parse_motion_model(std::string_view name) {
  for (MotionModelKind k : kAllMotionModels) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown motion model '" + std::string(name) + "'");
}

bool is_turning(MotionModelKind kind) {
  return kind == MotionModelKind::kCtrv || kind == MotionModelKind::kCtra;
}

namespace {

using State4 = std::array<double, 4>;

template <typename Deriv>
State4 rk4(State4 s, double dt, std::size_t steps, Deriv deriv) {
  const double h = dt / static_cast<double>(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const State4 k1 = deriv(s);
    State4 tmp;
    for (int j = 0; j < 4; ++j) tmp[j] = s[j] + 0.5 * h * k1[j];
    const State4 k2 = deriv(tmp);
    for (int j = 0; j < 4; ++j) tmp[j] = s[j] + 0.5 * h * k2[j];
    const State4 k3 = deriv(tmp);
    for (int j = 0; j < 4; ++j) tmp[j] = s[j] + h * k3[j];
    const State4 k4 = deriv(tmp);
    for (int j = 0; j < 4; ++j) s[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
  return s;
}

}  // namespace

Anchor integrate_oracle(MotionModelKind kind, const Anchor& a, double dt,
                        const LatentKinematics<double>& lat, std::size_t steps) {
  if (steps == 0) throw ContractError("integrate_oracle: steps must be >= 1");
  if (!(dt > 0.0)) throw ContractError("integrate_oracle: dt must be positive");
  Anchor out = a;
  switch (kind) {
    case MotionModelKind::kStatic:
      out[kVx] = 0.0;
      out[kVy] = 0.0;
      return out;
    case MotionModelKind::kCv:
    case MotionModelKind::kCa: {
      const double ax = kind == MotionModelKind::kCa ? lat.ax : 0.0;
      const double ay = kind == MotionModelKind::kCa ? lat.ay : 0.0;
      // state (x, y, vx, vy)
      const State4 end = rk4({a[kX], a[kY], a[kVx], a[kVy]}, dt, steps,
                             [ax, ay](const State4& s) { return State4{s[2], s[3], ax, ay}; });
      out[kX] = end[0];
      out[kY] = end[1];
      out[kVx] = end[2];
      out[kVy] = end[3];
      return out;
    }
    case MotionModelKind::kCtrv:
    case MotionModelKind::kCtra: {
      const double accel = kind == MotionModelKind::kCtra ? lat.accel : 0.0;
      const double omega = lat.yaw_rate;
      // state (x, y, v, θ)
      const State4 end = rk4({a[kX], a[kY], speed(a), yaw_angle(a)}, dt, steps,
                             [accel, omega](const State4& s) {
                               return State4{s[2] * std::cos(s[3]), s[2] * std::sin(s[3]),
                                             accel, omega};
                             });
      out[kX] = end[0];
      out[kY] = end[1];
      out[kCos] = std::cos(end[3]);
      out[kSin] = std::sin(end[3]);
      out[kVx] = end[2] * std::cos(end[3]);
      out[kVy] = end[2] * std::sin(end[3]);
      return out;
    }
  }
  return out;
}

LatentHead LatentHead::create(std::size_t channels, nn::Rng& rng) {
  return {nn::Mlp::create(channels, channels, kLatentCount, rng)};
}

LatentHead LatentHead::zeros(std::size_t channels) {
  return {nn::Mlp{nn::LinearLayer::zeros(channels, channels),
                  nn::LinearLayer::zeros(channels, kLatentCount)}};
}

tensor::Tensor LatentHead::forward(const tensor::Tensor& queries) const {
  return tensor::scale(tensor::tanh(mlp(queries)), kLatentBound);
}

void LatentHead::append_parameters(const std::string& prefix, nn::ParameterList& out) const {
  mlp.append_parameters(prefix, out);
}

LatentKinematics<double> decode_latents(std::span<const double> query, const LatentHead& head) {
  if (query.size() != head.mlp.in_features()) {
    throw ShapeError("decode_latents: query has " + std::to_string(query.size()) +
                     " channels, head expects " + std::to_string(head.mlp.in_features()));
  }
  tensor::NoGradGuard no_grad;
  const auto out = head.forward(
      tensor::Tensor::from_values({1, query.size()}, {query.begin(), query.end()}));
  return {out.at(0), out.at(1), out.at(2), out.at(3)};
}

}  // namespace hat
