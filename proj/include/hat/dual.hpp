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
/// Forward-mode dual numbers with a fixed number of tangent directions.
/// Used to obtain exact Jacobians of the motion-model kernels.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace hat {

template <std::size_t N>
struct Dual {
  double value = 0.0;
  std::array<double, N> tangent{};

  constexpr Dual() = default;
  constexpr Dual(double v) : value(v) {}  // NOLINT: implicit lift of constants
  constexpr Dual(double v, const std::array<double, N>& t) : value(v), tangent(t) {}

  /// The i-th seed variable.
  static constexpr Dual variable(double v, std::size_t i) {
    Dual d(v);
    d.tangent[i] = 1.0;
    return d;
  }

  Dual& operator+=(const Dual& o) {
    value += o.value;
    for (std::size_t i = 0; i < N; ++i) tangent[i] += o.tangent[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    value -= o.value;
    for (std::size_t i = 0; i < N; ++i) tangent[i] -= o.tangent[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (std::size_t i = 0; i < N; ++i) tangent[i] = tangent[i] * o.value + value * o.tangent[i];
    value *= o.value;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.value;
    for (std::size_t i = 0; i < N; ++i)
      tangent[i] = (tangent[i] * o.value - value * o.tangent[i]) * inv * inv;
    value /= o.value;
    return *this;
  }
};

template <std::size_t N>
Dual<N> operator+(Dual<N> a, const Dual<N>& b) { return a += b; }
template <std::size_t N>
Dual<N> operator-(Dual<N> a, const Dual<N>& b) { return a -= b; }
template <std::size_t N>
Dual<N> operator*(Dual<N> a, const Dual<N>& b) { return a *= b; }
template <std::size_t N>
Dual<N> operator/(Dual<N> a, const Dual<N>& b) { return a /= b; }
template <std::size_t N>
Dual<N> operator+(Dual<N> a, double b) { a.value += b; return a; }
template <std::size_t N>
Dual<N> operator+(double a, Dual<N> b) { b.value += a; return b; }
template <std::size_t N>
Dual<N> operator-(Dual<N> a, double b) { a.value -= b; return a; }
template <std::size_t N>
Dual<N> operator-(double a, const Dual<N>& b) { return Dual<N>(a) - b; }
template <std::size_t N>
Dual<N> operator*(Dual<N> a, double b) {
  a.value *= b;
  for (auto& t : a.tangent) t *= b;
  return a;
}
template <std::size_t N>
Dual<N> operator*(double a, Dual<N> b) { return b * a; }
template <std::size_t N>
Dual<N> operator/(Dual<N> a, double b) {
  a.value /= b;
  for (auto& t : a.tangent) t /= b;
  return a;
}
template <std::size_t N>
Dual<N> operator/(double a, const Dual<N>& b) { return Dual<N>(a) / b; }
template <std::size_t N>
Dual<N> operator-(Dual<N> a) {
  a.value = -a.value;
  for (auto& t : a.tangent) t = -t;
  return a;
}

template <std::size_t N>
bool operator<(const Dual<N>& a, const Dual<N>& b) { return a.value < b.value; }
template <std::size_t N>
bool operator>(const Dual<N>& a, const Dual<N>& b) { return a.value > b.value; }

namespace detail {
template <std::size_t N>
Dual<N> chain(const Dual<N>& x, double fx, double dfx) {
  Dual<N> out(fx);
  for (std::size_t i = 0; i < N; ++i) out.tangent[i] = dfx * x.tangent[i];
  return out;
}
}  // namespace detail

template <std::size_t N>
Dual<N> sin(const Dual<N>& x) { return detail::chain(x, std::sin(x.value), std::cos(x.value)); }
template <std::size_t N>
Dual<N> cos(const Dual<N>& x) { return detail::chain(x, std::cos(x.value), -std::sin(x.value)); }
template <std::size_t N>
Dual<N> tanh(const Dual<N>& x) {
  const double t = std::tanh(x.value);
  return detail::chain(x, t, 1.0 - t * t);
}
template <std::size_t N>
Dual<N> exp(const Dual<N>& x) {
  const double e = std::exp(x.value);
  return detail::chain(x, e, e);
}
/// d/dx sqrt at 0 is taken as 0 so constant zero-speed states stay finite.
template <std::size_t N>
Dual<N> sqrt(const Dual<N>& x) {
  const double s = std::sqrt(x.value);
  return detail::chain(x, s, s > 0.0 ? 0.5 / s : 0.0);
}
template <std::size_t N>
Dual<N> abs(const Dual<N>& x) { return x.value < 0.0 ? -x : x; }
template <std::size_t N>
Dual<N> atan2(const Dual<N>& y, const Dual<N>& x) {
  const double r2 = x.value * x.value + y.value * y.value;
  Dual<N> out(std::atan2(y.value, x.value));
  if (r2 > 0.0) {
    for (std::size_t i = 0; i < N; ++i)
      out.tangent[i] = (x.value * y.tangent[i] - y.value * x.tangent[i]) / r2;
  }
  return out;
}

/// Scalar value of a plain double or a dual.
inline double value_of(double x) { return x; }
template <std::size_t N>
double value_of(const Dual<N>& x) { return x.value; }

}  // namespace hat
