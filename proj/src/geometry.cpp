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

#include "hat/geometry.hpp"

#include <Eigen/LU>

#include <cmath>
#include <string>

#include "hat/error.hpp"

namespace hat {

Anchor make_anchor(const Eigen::Vector3d& position, const Eigen::Vector3d& size, double yaw,
                   const Eigen::Vector2d& velocity) {
  Anchor a;
  a[kX] = position.x();
  a[kY] = position.y();
  a[kZ] = position.z();
  a[kW] = size.x();
  a[kL] = size.y();
  a[kH] = size.z();
  a[kCos] = std::cos(yaw);
  a[kSin] = std::sin(yaw);
  a[kVx] = velocity.x();
  a[kVy] = velocity.y();
  return a;
}

Anchor anchor_from(std::span<const double> values) {
  if (values.size() != kAnchorDim) {
    throw ShapeError("anchor needs 10 values, got " + std::to_string(values.size()));
  }
  Anchor a;
  for (std::size_t i = 0; i < kAnchorDim; ++i) a[i] = values[i];
  return a;
}

AnchorVector to_vector(const Anchor& a) {
  AnchorVector v;
  for (std::size_t i = 0; i < kAnchorDim; ++i) v[static_cast<Eigen::Index>(i)] = a[i];
  return v;
}

Anchor from_vector(const AnchorVector& v) {
  Anchor a;
  for (std::size_t i = 0; i < kAnchorDim; ++i) a[i] = v[static_cast<Eigen::Index>(i)];
  return a;
}

double yaw_angle(const Anchor& a) { return std::atan2(a[kSin], a[kCos]); }

double speed(const Anchor& a) { return std::hypot(a[kVx], a[kVy]); }

EgoTransform EgoTransform::from_yaw(double yaw, const Eigen::Vector3d& translation) {
  EgoTransform e;
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  e.rotation << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  e.translation = translation;
  return e;
}

void validate(const EgoTransform& e) {
  const double ortho = (e.rotation.transpose() * e.rotation - Eigen::Matrix3d::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  const double det = e.rotation.determinant();
  if (!(ortho <= kRotationTolerance) || !(std::abs(det - 1.0) <= kRotationTolerance)) {
    throw ValidationError("ego rotation is not a proper rotation (|RᵀR - I| = " +
                          std::to_string(ortho) + ", det = " + std::to_string(det) + ")");
  }
  if (!e.translation.allFinite()) throw ValidationError("ego translation is not finite");
}

AugmentedTransform build_augmented(const EgoTransform& e) {
  validate(e);
  AugmentedTransform aug;
  aug.rotation.setZero();
  aug.rotation.block<3, 3>(0, 0) = e.rotation;
  aug.rotation.block<3, 3>(3, 3).setIdentity();
  aug.rotation.block<2, 2>(6, 6) = e.rotation.block<2, 2>(0, 0);
  aug.rotation.block<2, 2>(8, 8) = e.rotation.block<2, 2>(0, 0);
  aug.translation.setZero();
  aug.translation.head<3>() = e.translation;
  return aug;
}

EgoTransform flatten(const AugmentedTransform& aug) {
  EgoTransform e;
  e.rotation = aug.rotation.block<3, 3>(0, 0);
  e.translation = aug.translation.head<3>();
  return e;
}

Anchor warp_anchor(const Anchor& a, const AugmentedTransform& aug) {
  // Block-wise product; the size block is the identity and is copied so
  // sizes stay bit-identical.
  Anchor out = a;
  const auto& r = aug.rotation;
  for (int i = 0; i < 3; ++i) {
    out[static_cast<std::size_t>(i)] = r(i, 0) * a[kX] + r(i, 1) * a[kY] + r(i, 2) * a[kZ] +
                                        aug.translation[i];
  }
  out[kCos] = r(6, 6) * a[kCos] + r(6, 7) * a[kSin];
  out[kSin] = r(7, 6) * a[kCos] + r(7, 7) * a[kSin];
  out[kVx] = r(8, 8) * a[kVx] + r(8, 9) * a[kVy];
  out[kVy] = r(9, 8) * a[kVx] + r(9, 9) * a[kVy];
  return out;
}

EgoTransform compose(const EgoTransform& e1, const EgoTransform& e2) {
  EgoTransform out;
  out.rotation = e2.rotation * e1.rotation;
  out.translation = e2.rotation * e1.translation + e2.translation;
  return out;
}

EgoTransform invert(const EgoTransform& e) {
  EgoTransform out;
  out.rotation = e.rotation.transpose();
  out.translation = -(out.rotation * e.translation);
  return out;
}

Anchor yaw_normalize(const Anchor& a) {
  const double norm = std::hypot(a[kCos], a[kSin]);
  if (!(norm > kMinYawNorm)) {
    throw DegenerateYawError("yaw vector norm " + std::to_string(norm) + " is degenerate");
  }
  Anchor out = a;
  out[kCos] = a[kCos] / norm;
  out[kSin] = a[kSin] / norm;
  return out;
}

}  // namespace hat
