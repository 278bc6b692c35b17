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
/// Anchors and inter-frame warping through the augmented extrinsic.

#pragma once

#include <array>
#include <cstddef>
#include <span>

#include <Eigen/Core>

namespace hat {

inline constexpr std::size_t kAnchorDim = 10;

/// Layout of the 10-dim anchor vector [P, D, Θ, V].
enum AnchorIndex : std::size_t {
  kX = 0, kY = 1, kZ = 2,
  kW = 3, kL = 4, kH = 5,
  kCos = 6, kSin = 7,
  kVx = 8, kVy = 9,
};

/// Object box state. Scalar type is templated so kinematic kernels can run
/// on dual numbers; everything outside the kernels uses `Anchor`.
template <typename T>
struct BasicAnchor {
  std::array<T, kAnchorDim> v{};

  T& operator[](std::size_t i) { return v[i]; }
  const T& operator[](std::size_t i) const { return v[i]; }

  const T& x() const { return v[kX]; }
  const T& y() const { return v[kY]; }
  const T& z() const { return v[kZ]; }
  const T& cos_yaw() const { return v[kCos]; }
  const T& sin_yaw() const { return v[kSin]; }
  const T& vx() const { return v[kVx]; }
  const T& vy() const { return v[kVy]; }

  friend bool operator==(const BasicAnchor&, const BasicAnchor&) = default;
};

using Anchor = BasicAnchor<double>;
using AnchorVector = Eigen::Matrix<double, 10, 1>;

/// Builds an anchor from its parts; `yaw` is an angle in radians.
Anchor make_anchor(const Eigen::Vector3d& position, const Eigen::Vector3d& size, double yaw,
                   const Eigen::Vector2d& velocity);
Anchor anchor_from(std::span<const double> values);
AnchorVector to_vector(const Anchor& a);
Anchor from_vector(const AnchorVector& v);

/// Heading angle view of the yaw vector.
double yaw_angle(const Anchor& a);
double speed(const Anchor& a);

/// Rigid motion from frame t-1 to frame t.
struct EgoTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static EgoTransform identity() { return {}; }
  /// Rotation about +z by `yaw` radians followed by `translation`.
  static EgoTransform from_yaw(double yaw, const Eigen::Vector3d& translation);
};

struct AugmentedTransform {
  Eigen::Matrix<double, 10, 10> rotation;
  AnchorVector translation;
};

inline constexpr double kRotationTolerance = 1e-9;

/// Throws ValidationError unless RᵀR = I and det R = 1 within 1e-9.
void validate(const EgoTransform& e);

/// R_aug = Diag(R, I₃, R[:2,:2], R[:2,:2]), T_aug = [T; 0₇].
AugmentedTransform build_augmented(const EgoTransform& e);

/// Recovers (R, T) from the augmented form.
EgoTransform flatten(const AugmentedTransform& aug);

/// b' = R_aug b + T_aug. Velocity is rotated only; the translation does
/// not contribute an ego-velocity term.
Anchor warp_anchor(const Anchor& a, const AugmentedTransform& aug);

/// e2 ∘ e1: apply e1 first, then e2.
EgoTransform compose(const EgoTransform& e1, const EgoTransform& e2);
EgoTransform invert(const EgoTransform& e);

inline constexpr double kMinYawNorm = 1e-6;

/// Scales Θ to unit length; throws DegenerateYawError when ‖Θ‖ ≤ 1e-6.
Anchor yaw_normalize(const Anchor& a);

}  // namespace hat
