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
/// Motion Model Library: closed-form single-step transitions for CV, STATIC,
/// CA, CTRV and CTRA, the latent kinematics head, and an RK4 oracle.
///
/// The kernels are templates over the scalar type so the same code yields
/// values (double) and exact Jacobians (Dual<N>).

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "hat/dual.hpp"
#include "hat/error.hpp"
#include "hat/geometry.hpp"
#include "hat/layers.hpp"

namespace hat {

/// Order defines the hypothesis index m.
enum class MotionModelKind { kCv = 0, kStatic = 1, kCa = 2, kCtrv = 3, kCtra = 4 };

inline constexpr std::array<MotionModelKind, 5> kAllMotionModels = {
    MotionModelKind::kCv, MotionModelKind::kStatic, MotionModelKind::kCa,
    MotionModelKind::kCtrv, MotionModelKind::kCtra};

/// "cv", "static", "ca", "ctrv", "ctra".
std::string_view to_string(MotionModelKind kind);
/// Throws ConfigError on unknown names.
MotionModelKind parse_motion_model(std::string_view name);
bool is_turning(MotionModelKind kind);

/// Bound on every decoded latent (m/s² or rad/s).
inline constexpr double kLatentBound = 0.1;
/// Below this |ω| the turning models use their straight-line branch.
inline constexpr double kTurnRateThreshold = 1e-6;

template <typename T>
struct LatentKinematics {
  T ax{};        // CA, m/s²
  T ay{};        // CA, m/s²
  T accel{};     // CTRA, m/s² along the heading
  T yaw_rate{};  // CTRV / CTRA, rad/s
};

inline constexpr std::size_t kLatentCount = 4;

namespace detail {

using std::abs;
using std::cos;
using std::sin;

template <typename T>
T sinc(const T& x) {
  if (std::abs(value_of(x)) < 1e-4) {
    const T x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return sin(x) / x;
}

/// (∫₀^φ s cos s ds) / φ² and (∫₀^φ s sin s ds) / φ², free of cancellation.
template <typename T>
void turn_moments(const T& phi, T& cos_moment, T& sin_moment) {
  if (std::abs(value_of(phi)) < 0.1) {
    // Σ (-1)^{k+1} (2k-1)/(2k)! φ^{2k-2}  and  Σ (-1)^{k+1} 2k/(2k+1)! φ^{2k-1}
    const T phi2 = phi * phi;
    T power = T(1.0);  // φ^{2k-2}
    double factorial = 2.0;  // (2k)!
    cos_moment = T(0.0);
    sin_moment = T(0.0);
    double sign = 1.0;
    for (int k = 1; k <= 8; ++k) {
      const double two_k = 2.0 * k;
      cos_moment += power * (sign * (two_k - 1.0) / factorial);
      sin_moment += power * phi * (sign * two_k / (factorial * (two_k + 1.0)));
      power = power * phi2;
      factorial *= (two_k + 1.0) * (two_k + 2.0);
      sign = -sign;
    }
    return;
  }
  const T s = sin(phi);
  const T c = cos(phi);
  const T phi2 = phi * phi;
  cos_moment = (phi * s + c - 1.0) / phi2;
  sin_moment = (s - phi * c) / phi2;
}

}  // namespace detail

template <typename T>
struct PlanarDisplacement {
  T dx;
  T dy;
};

/// ∫₀^Δt (v + aτ)·(cos, sin)(θ + ωτ) dτ without a branch on ω; smooth
/// (and exactly differentiable) through ω = 0.
template <typename T>
PlanarDisplacement<T> arc_displacement(const T& speed, const T& heading, const T& yaw_rate,
                                       const T& accel, double dt) {
  using std::cos;
  using std::sin;
  const T phi = yaw_rate * dt;
  const T half = phi * 0.5;
  const T chord = speed * dt * detail::sinc(half);
  T cos_moment, sin_moment;
  detail::turn_moments(phi, cos_moment, sin_moment);
  const T c0 = cos(heading);
  const T s0 = sin(heading);
  const T accel_term = accel * (dt * dt);
  return {chord * cos(heading + half) + accel_term * (c0 * cos_moment - s0 * sin_moment),
          chord * sin(heading + half) + accel_term * (s0 * cos_moment + c0 * sin_moment)};
}

/// arc_displacement with the straight branch for |ω| < kTurnRateThreshold.
template <typename T>
PlanarDisplacement<T> turn_displacement(const T& speed, const T& heading, const T& yaw_rate,
                                        const T& accel, double dt) {
  using std::cos;
  using std::sin;
  if (std::abs(value_of(yaw_rate)) < kTurnRateThreshold) {
    const T travel = speed * dt + accel * (0.5 * dt * dt);
    return {travel * cos(heading), travel * sin(heading)};
  }
  return arc_displacement(speed, heading, yaw_rate, accel, dt);
}

/// Object-motion compensated anchor, still in the t-1 frame. z, w, l, h are
/// copied untouched. Throws ContractError for dt ≤ 0 or latents outside ±0.1.
template <typename T>
BasicAnchor<T> predict(MotionModelKind kind, const BasicAnchor<T>& a, double dt,
                       const LatentKinematics<T>& lat) {
  using std::atan2;
  using std::cos;
  using std::sin;
  using std::sqrt;
  if (!(dt > 0.0)) throw ContractError("predict: dt must be positive");
  for (const T* f : {&lat.ax, &lat.ay, &lat.accel, &lat.yaw_rate}) {
    if (!(std::abs(value_of(*f)) <= kLatentBound + 1e-12)) {
      throw ContractError("predict: latent kinematics outside ±0.1");
    }
  }

  BasicAnchor<T> out = a;
  switch (kind) {
    case MotionModelKind::kCv:
      out[kX] = a[kX] + a[kVx] * dt;
      out[kY] = a[kY] + a[kVy] * dt;
      break;
    case MotionModelKind::kStatic:
      out[kVx] = T(0.0);
      out[kVy] = T(0.0);
      break;
    case MotionModelKind::kCa:
      out[kX] = a[kX] + a[kVx] * dt + lat.ax * (0.5 * dt * dt);
      out[kY] = a[kY] + a[kVy] * dt + lat.ay * (0.5 * dt * dt);
      out[kVx] = a[kVx] + lat.ax * dt;
      out[kVy] = a[kVy] + lat.ay * dt;
      break;
    case MotionModelKind::kCtrv:
    case MotionModelKind::kCtra: {
      const bool accelerating = kind == MotionModelKind::kCtra;
      const T v = sqrt(a[kVx] * a[kVx] + a[kVy] * a[kVy]);
      const T heading = atan2(a[kSin], a[kCos]);
      const T accel = accelerating ? lat.accel : T(0.0);
      if (!accelerating && std::abs(value_of(lat.yaw_rate)) < kTurnRateThreshold) {
        out[kX] = a[kX] + a[kVx] * dt;
        out[kY] = a[kY] + a[kVy] * dt;
      } else {
        const auto d = turn_displacement(v, heading, lat.yaw_rate, accel, dt);
        out[kX] = a[kX] + d.dx;
        out[kY] = a[kY] + d.dy;
      }
      const T new_heading = heading + lat.yaw_rate * dt;
      const T new_speed = v + accel * dt;
      out[kCos] = cos(new_heading);
      out[kSin] = sin(new_heading);
      out[kVx] = new_speed * cos(new_heading);
      out[kVy] = new_speed * sin(new_heading);
      break;
    }
  }
  return out;
}

/// RK4 integration of the continuous kinematics with `steps` substeps.
/// Independent of the closed forms above; used as a test oracle.
Anchor integrate_oracle(MotionModelKind kind, const Anchor& a, double dt,
                        const LatentKinematics<double>& lat, std::size_t steps);

/// Query -> latent kinematics: two linear layers with an activation, then
/// 0.1·tanh so every output stays inside the bound with nonzero slope.
struct LatentHead {
  nn::Mlp mlp;  // C -> C -> 4

  static LatentHead create(std::size_t channels, nn::Rng& rng);
  static LatentHead zeros(std::size_t channels);

  /// (K, C) -> (K, 4) columns [ax, ay, a, ω].
  tensor::Tensor forward(const tensor::Tensor& queries) const;
  void append_parameters(const std::string& prefix, nn::ParameterList& out) const;
};

LatentKinematics<double> decode_latents(std::span<const double> query, const LatentHead& head);

}  // namespace hat
