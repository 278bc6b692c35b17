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

#include "hat/kalman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "hat/dual.hpp"
#include "hat/error.hpp"

namespace hat {
namespace {

using std::numbers::pi;
using FilterDual = Dual<kFilterStateDim>;
using ObservationVector = Eigen::Matrix<double, kObservationDim, 1>;
using ObservationJacobian = Eigen::Matrix<double, kObservationDim, kFilterStateDim>;

double wrap_angle(double a) { return std::remainder(a, 2.0 * pi); }

std::array<FilterDual, kFilterStateDim> lift(const FilterVector& s) {
  std::array<FilterDual, kFilterStateDim> out;
  for (int i = 0; i < kFilterStateDim; ++i) out[i] = FilterDual::variable(s[i], i);
  return out;
}

template <typename T>
std::array<T, kObservationDim> observe_state(const std::array<T, kFilterStateDim>& s) {
  using std::cos;
  using std::sin;
  const T c = cos(s[kFHeading]);
  const T n = sin(s[kFHeading]);
  return {s[kFx], s[kFy], c, n, s[kFSpeed] * c, s[kFSpeed] * n};
}

void symmetrize(FilterMatrix& p) { p = 0.5 * (p + p.transpose()).eval(); }

/// Weighted moment match; headings are averaged on the circle around the
/// heaviest component.
KalmanState combine(std::span<const KalmanState> states, const Eigen::VectorXd& weights,
                    MotionModelKind kind) {
  Eigen::Index ref = 0;
  weights.maxCoeff(&ref);
  const double ref_heading = states[static_cast<std::size_t>(ref)].mean[kFHeading];
  auto relative = [&](const KalmanState& s) {
    FilterVector v = s.mean;
    v[kFHeading] = ref_heading + wrap_angle(s.mean[kFHeading] - ref_heading);
    return v;
  };
  KalmanState out;
  out.kind = kind;
  out.mean.setZero();
  for (std::size_t i = 0; i < states.size(); ++i) out.mean += weights[static_cast<Eigen::Index>(i)] * relative(states[i]);
  out.covariance.setZero();
  for (std::size_t i = 0; i < states.size(); ++i) {
    const FilterVector d = relative(states[i]) - out.mean;
    out.covariance += weights[static_cast<Eigen::Index>(i)] * (states[i].covariance + d * d.transpose());
  }
  symmetrize(out.covariance);
  return out;
}

/// Mixed initial conditions for every filter; filters with zero predicted
/// mode probability keep their own state.
std::vector<KalmanState> mix(const ImmState& s, Eigen::VectorXd& predicted) {
  const std::size_t m = s.size();
  predicted = s.transition.transpose() * s.mode_probabilities;
  std::vector<KalmanState> out;
  out.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double cj = predicted[static_cast<Eigen::Index>(j)];
    if (!(cj > 0.0)) {
      out.push_back(s.filters[j]);
      continue;
    }
    Eigen::VectorXd w(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      w[static_cast<Eigen::Index>(i)] =
          s.transition(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
          s.mode_probabilities[static_cast<Eigen::Index>(i)] / cj;
    }
    out.push_back(combine(s.filters, w, s.filters[j].kind));
  }
  return out;
}

}  // namespace

FilterVector state_from_anchor(const Anchor& a) {
  FilterVector s = FilterVector::Zero();
  s[kFx] = a[kX];
  s[kFy] = a[kY];
  s[kFHeading] = yaw_angle(a);
  // Signed speed along the heading.
  s[kFSpeed] = a[kVx] * std::cos(s[kFHeading]) + a[kVy] * std::sin(s[kFHeading]);
  return s;
}

Anchor anchor_from_state(const FilterVector& s, const Anchor& box) {
  Anchor a = box;
  a[kX] = s[kFx];
  a[kY] = s[kFy];
  a[kCos] = std::cos(s[kFHeading]);
  a[kSin] = std::sin(s[kFHeading]);
  a[kVx] = s[kFSpeed] * a[kCos];
  a[kVy] = s[kFSpeed] * a[kSin];
  return a;
}

KalmanState kf_init(MotionModelKind kind, const Anchor& observation, const MeasurementNoise& noise,
                    double yaw_rate_std, double accel_std) {
  KalmanState s;
  s.kind = kind;
  s.mean = state_from_anchor(observation);
  auto finite_or = [](double sigma, double fallback) {
    return std::isfinite(sigma) ? sigma : fallback;
  };
  FilterVector var;
  var << std::pow(finite_or(noise.position, 100.0), 2), std::pow(finite_or(noise.position, 100.0), 2),
      std::pow(finite_or(noise.yaw, pi), 2), std::pow(finite_or(noise.velocity, 20.0), 2),
      yaw_rate_std * yaw_rate_std, accel_std * accel_std;
  s.covariance = var.asDiagonal();
  return s;
}

KalmanState kf_predict(const KalmanState& s, double dt, const ProcessNoise& noise) {
  if (!(dt > 0.0)) throw ContractError("kf_predict: dt must be positive");
  const auto out = filter_transition(s.kind, lift(s.mean), dt);
  KalmanState next;
  next.kind = s.kind;
  FilterMatrix f;
  for (int r = 0; r < kFilterStateDim; ++r) {
    next.mean[r] = out[r].value;
    for (int c = 0; c < kFilterStateDim; ++c) f(r, c) = out[r].tangent[c];
  }
  next.mean[kFHeading] = wrap_angle(next.mean[kFHeading]);
  FilterVector q;
  q << noise.position * noise.position, noise.position * noise.position,
      noise.heading * noise.heading, noise.speed * noise.speed, noise.yaw_rate * noise.yaw_rate,
      noise.accel * noise.accel;
  next.covariance = f * s.covariance * f.transpose();
  next.covariance.diagonal() += q * dt;
  symmetrize(next.covariance);
  return next;
}

KalmanUpdate kf_update_detailed(const KalmanState& s, const Anchor& observation,
                                const MeasurementNoise& noise) {
  const auto predicted = observe_state(lift(s.mean));
  ObservationVector z;
  z << observation[kX], observation[kY], observation[kCos], observation[kSin], observation[kVx],
      observation[kVy];
  const std::array<double, kObservationDim> sigma = {noise.position, noise.position, noise.yaw,
                                                     noise.yaw, noise.velocity, noise.velocity};
  std::vector<int> rows;
  for (int r = 0; r < kObservationDim; ++r) {
    if (sigma[static_cast<std::size_t>(r)] < 0.0 || std::isnan(sigma[static_cast<std::size_t>(r)])) {
      throw ContractError("kf_update: measurement noise must be nonnegative");
    }
    if (std::isfinite(sigma[static_cast<std::size_t>(r)])) rows.push_back(r);
  }
  KalmanUpdate result{s, 0.0};
  if (rows.empty()) return result;

  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd h(n, kFilterStateDim);
  Eigen::VectorXd innovation(n);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int row = rows[static_cast<std::size_t>(i)];
    for (int c = 0; c < kFilterStateDim; ++c) h(i, c) = predicted[static_cast<std::size_t>(row)].tangent[c];
    innovation[i] = z[row] - predicted[static_cast<std::size_t>(row)].value;
    r(i, i) = sigma[static_cast<std::size_t>(row)] * sigma[static_cast<std::size_t>(row)];
  }
  Eigen::MatrixXd innovation_cov = h * s.covariance * h.transpose() + r;
  innovation_cov = 0.5 * (innovation_cov + innovation_cov.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(innovation_cov);
  const Eigen::VectorXd lambda = eig.eigenvalues();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  if (lambda.minCoeff() < -1e-10 * scale || !lambda.allFinite()) {
    std::ostringstream msg;
    msg << "kf_update: innovation covariance is not PSD (" << to_string(s.kind)
        << "), eigenvalues [" << lambda.transpose() << "]";
    throw NumericalError(msg.str());
  }
  const double cutoff = 1e-12 * scale;
  Eigen::VectorXd inv_lambda(n);
  double log_det = 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lambda[i] > cutoff) {
      inv_lambda[i] = 1.0 / lambda[i];
      log_det += std::log(lambda[i]);
      ++rank;
    } else {
      inv_lambda[i] = 0.0;
    }
  }
  const Eigen::MatrixXd s_pinv = eig.eigenvectors() * inv_lambda.asDiagonal() * eig.eigenvectors().transpose();
  const Eigen::MatrixXd gain = s.covariance * h.transpose() * s_pinv;

  KalmanState& out = result.state;
  out.mean = s.mean + gain * innovation;
  out.mean[kFHeading] = wrap_angle(out.mean[kFHeading]);
  const FilterMatrix i_kh = FilterMatrix::Identity() - gain * h;
  out.covariance = i_kh * s.covariance * i_kh.transpose() + gain * r * gain.transpose();
  symmetrize(out.covariance);
  const double mahalanobis = innovation.dot(s_pinv * innovation);
  result.log_likelihood = -0.5 * (mahalanobis + log_det + rank * std::log(2.0 * pi));
  return result;
}

KalmanState kf_update(const KalmanState& s, const Anchor& observation,
                      const MeasurementNoise& noise) {
  return kf_update_detailed(s, observation, noise).state;
}

void ImmState::validate() const {
  const auto m = static_cast<Eigen::Index>(filters.size());
  if (m == 0) throw ValidationError("IMM needs at least one model");
  if (mode_probabilities.size() != m || transition.rows() != m || transition.cols() != m) {
    throw ValidationError("IMM: mode probabilities / transition matrix size mismatch");
  }
  if (mode_probabilities.minCoeff() < 0.0 || std::abs(mode_probabilities.sum() - 1.0) > 1e-9) {
    throw ValidationError("IMM: mode probabilities are not a probability vector");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (transition.row(i).minCoeff() < 0.0 || std::abs(transition.row(i).sum() - 1.0) > 1e-9) {
      throw ValidationError("IMM: transition row " + std::to_string(i) + " is not stochastic");
    }
  }
}

Eigen::MatrixXd default_transition(std::size_t models, double self) {
  if (models == 0) throw ConfigError("transition matrix needs at least one model");
  if (!(self >= 0.0 && self <= 1.0)) throw ConfigError("self-transition must lie in [0, 1]");
  const auto m = static_cast<Eigen::Index>(models);
  if (m == 1) return Eigen::MatrixXd::Ones(1, 1);
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(m, m, (1.0 - self) / static_cast<double>(m - 1));
  p.diagonal().setConstant(self);
  return p;
}

ImmState imm_init(std::span<const MotionModelKind> models, const Anchor& observation,
                  const MeasurementNoise& noise, const Eigen::MatrixXd& transition) {
  ImmState s;
  for (MotionModelKind k : models) s.filters.push_back(kf_init(k, observation, noise));
  const auto m = static_cast<Eigen::Index>(models.size());
  s.mode_probabilities = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  s.transition = transition;
  s.validate();
  return s;
}

ImmState imm_step(const ImmState& s, double dt, const Anchor& observation,
                  const ProcessNoise& process, const MeasurementNoise& noise) {
  s.validate();
  Eigen::VectorXd predicted;
  const std::vector<KalmanState> mixed = mix(s, predicted);
  const std::size_t m = s.size();

  ImmState next;
  next.transition = s.transition;
  next.filters.reserve(m);
  Eigen::VectorXd log_post(static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) {
    const KalmanUpdate u = kf_update_detailed(kf_predict(mixed[j], dt, process), observation, noise);
    next.filters.push_back(u.state);
    const double cj = predicted[static_cast<Eigen::Index>(j)];
    log_post[static_cast<Eigen::Index>(j)] =
        cj > 0.0 ? std::log(cj) + u.log_likelihood : -std::numeric_limits<double>::infinity();
  }
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < log_post.size(); ++j) {
    if (std::isfinite(log_post[j])) best = std::max(best, log_post[j]);
  }
  next.mode_probabilities.resize(static_cast<Eigen::Index>(m));
  if (!std::isfinite(best)) {
    next.mode_probabilities.setConstant(1.0 / static_cast<double>(m));
    next.likelihood_fallback = true;
    return next;
  }
  for (Eigen::Index j = 0; j < log_post.size(); ++j) {
    next.mode_probabilities[j] = std::isfinite(log_post[j]) ? std::exp(log_post[j] - best) : 0.0;
  }
  next.mode_probabilities /= next.mode_probabilities.sum();
  return next;
}

KalmanState imm_estimate(const ImmState& s) {
  return combine(s.filters, s.mode_probabilities, s.filters.front().kind);
}

KalmanState imm_predict(const ImmState& s, double dt, const ProcessNoise& process) {
  s.validate();
  Eigen::VectorXd predicted;
  const std::vector<KalmanState> mixed = mix(s, predicted);
  std::vector<KalmanState> moved;
  moved.reserve(mixed.size());
  for (const auto& k : mixed) moved.push_back(kf_predict(k, dt, process));
  return combine(moved, predicted, s.filters.front().kind);
}

}  // namespace hat
