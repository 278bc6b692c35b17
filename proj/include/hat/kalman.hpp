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
/// Extended Kalman filters over the motion-model library and an IMM filter.
///
/// Every model shares one polar state [x, y, θ, v, ω, a] so the IMM can mix
/// estimates across models; models that lack a quantity drive it to zero.
/// Observations are [x, y, cosθ, sinθ, vx, vy]. Jacobians are exact
/// (dual numbers over the same closed forms used for prediction).

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hat/geometry.hpp"
#include "hat/motion_models.hpp"

namespace hat {

inline constexpr int kFilterStateDim = 6;
inline constexpr int kObservationDim = 6;

enum FilterIndex : int { kFx = 0, kFy = 1, kFHeading = 2, kFSpeed = 3, kFYawRate = 4, kFAccel = 5 };

using FilterVector = Eigen::Matrix<double, kFilterStateDim, 1>;
using FilterMatrix = Eigen::Matrix<double, kFilterStateDim, kFilterStateDim>;

/// Continuous white-noise densities; Q = diag(σ²)·dt.
struct ProcessNoise {
  double position = 0.05;
  double heading = 0.01;
  double speed = 0.3;
  double yaw_rate = 0.03;
  double accel = 0.05;
};

/// Observation standard deviations. An infinite entry removes that
/// observation row from the update.
struct MeasurementNoise {
  double position = 0.3;
  double yaw = 0.05;
  double velocity = 0.2;
};

struct KalmanState {
  FilterVector mean = FilterVector::Zero();
  FilterMatrix covariance = FilterMatrix::Identity();
  MotionModelKind kind = MotionModelKind::kCv;
};

/// One-step transition of the polar state under `kind`.
template <typename T>
std::array<T, kFilterStateDim> filter_transition(MotionModelKind kind,
                                                 const std::array<T, kFilterStateDim>& s,
                                                 double dt) {
  using std::cos;
  using std::sin;
  std::array<T, kFilterStateDim> out = s;
  const T zero(0.0);
  switch (kind) {
    case MotionModelKind::kStatic:
      out[kFSpeed] = zero;
      out[kFYawRate] = zero;
      out[kFAccel] = zero;
      break;
    case MotionModelKind::kCv:
      out[kFx] = s[kFx] + s[kFSpeed] * cos(s[kFHeading]) * dt;
      out[kFy] = s[kFy] + s[kFSpeed] * sin(s[kFHeading]) * dt;
      out[kFYawRate] = zero;
      out[kFAccel] = zero;
      break;
    case MotionModelKind::kCa: {
      const T travel = s[kFSpeed] * dt + s[kFAccel] * (0.5 * dt * dt);
      out[kFx] = s[kFx] + travel * cos(s[kFHeading]);
      out[kFy] = s[kFy] + travel * sin(s[kFHeading]);
      out[kFSpeed] = s[kFSpeed] + s[kFAccel] * dt;
      out[kFYawRate] = zero;
      break;
    }
    case MotionModelKind::kCtrv:
    case MotionModelKind::kCtra: {
      const bool accelerating = kind == MotionModelKind::kCtra;
      const T accel = accelerating ? s[kFAccel] : zero;
      const auto d = arc_displacement(s[kFSpeed], s[kFHeading], s[kFYawRate], accel, dt);
      out[kFx] = s[kFx] + d.dx;
      out[kFy] = s[kFy] + d.dy;
      out[kFHeading] = s[kFHeading] + s[kFYawRate] * dt;
      out[kFSpeed] = s[kFSpeed] + accel * dt;
      if (!accelerating) out[kFAccel] = zero;
      break;
    }
  }
  return out;
}

/// Polar state from an anchor observation; ω and a start at zero.
FilterVector state_from_anchor(const Anchor& a);
/// Anchor view of a polar state; z and the box size are taken from `box`.
Anchor anchor_from_state(const FilterVector& s, const Anchor& box);

/// Initial covariance: observation variances on (x, y, θ, v), `yaw_rate_std`
/// and `accel_std` on the unobserved terms.
KalmanState kf_init(MotionModelKind kind, const Anchor& observation,
                    const MeasurementNoise& noise, double yaw_rate_std = 0.1,
                    double accel_std = 0.1);

KalmanState kf_predict(const KalmanState& s, double dt, const ProcessNoise& noise);

struct KalmanUpdate {
  KalmanState state;
  /// Gaussian log-likelihood of the innovation (0 when every row was dropped).
  double log_likelihood = 0.0;
};

/// Throws NumericalError when the innovation covariance has an eigenvalue
/// below -1e-10 (relative), reporting the spectrum. Singular but PSD
/// innovation covariances are inverted with a pseudo-inverse.
KalmanUpdate kf_update_detailed(const KalmanState& s, const Anchor& observation,
                                const MeasurementNoise& noise);
KalmanState kf_update(const KalmanState& s, const Anchor& observation,
                      const MeasurementNoise& noise);

struct ImmState {
  std::vector<KalmanState> filters;
  Eigen::VectorXd mode_probabilities;
  Eigen::MatrixXd transition;  // row-stochastic, Π[i][j] = P(j | i)
  /// Set when every model likelihood underflowed and μ was reset to uniform.
  bool likelihood_fallback = false;

  std::size_t size() const { return filters.size(); }
  /// Throws ValidationError on broken probability vectors or Π rows.
  void validate() const;
};

/// `self` on the diagonal, the remainder spread uniformly off the diagonal.
Eigen::MatrixXd default_transition(std::size_t models, double self = 0.95);

ImmState imm_init(std::span<const MotionModelKind> models, const Anchor& observation,
                  const MeasurementNoise& noise, const Eigen::MatrixXd& transition);

/// Mixing, per-model predict/update, likelihood-weighted μ update.
ImmState imm_step(const ImmState& s, double dt, const Anchor& observation,
                  const ProcessNoise& process, const MeasurementNoise& noise);

/// Moment-matched combined estimate.
KalmanState imm_estimate(const ImmState& s);

/// One-step-ahead combined prediction (mixing and predict, no update).
KalmanState imm_predict(const ImmState& s, double dt, const ProcessNoise& process);

}  // namespace hat
