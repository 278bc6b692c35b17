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

#include "hat/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "hat/error.hpp"

namespace hat::tensor {
namespace {

thread_local bool g_grad_enabled = true;

void check_rank(const Shape& shape) {
  if (shape.empty() || shape.size() > 3) {
    throw ShapeError("tensor rank must be 1..3, got shape " + to_string(shape));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) +
                     " vs " + to_string(b.shape()));
  }
}

// Splits a shape around `axis` into (outer, axis length, inner) extents.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t length = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     to_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.length = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::span<double> TensorNode::grad_buffer() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double fill) {
  check_rank(shape);
  const std::size_t n = element_count(shape);
  return from_values(std::move(shape), std::vector<double>(n, fill));
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values) {
  check_rank(shape);
  if (element_count(shape) != values.size()) {
    throw ShapeError("value count " + std::to_string(values.size()) +
                     " does not match shape " + to_string(shape));
  }
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = from_values(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return node_->value[0];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  return node_->value.at(i * node_->shape.at(1) + j);
}

double Tensor::at(std::size_t i, std::size_t j, std::size_t k) const {
  const auto& s = node_->shape;
  return node_->value.at((i * s.at(1) + j) * s.at(2) + k);
}

std::vector<double> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<double>(node_->value.size(), 0.0);
  return node_->grad;
}

Tensor Tensor::detach() const { return from_values(shape(), node_->value); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                   std::function<void(TensorNode&)> backward) {
  Tensor out = Tensor::from_values(std::move(shape), std::move(values));
  if (!g_grad_enabled) return out;
  const bool any = std::any_of(parents.begin(), parents.end(),
                               [](const Tensor& p) { return p.requires_grad(); });
  if (!any) return out;
  TensorNode* node = out.node();
  node->requires_grad = true;
  node->parents.reserve(parents.size());
  for (auto& p : parents) node->parents.push_back(p.shared_node());
  node->backward = std::move(backward);
  return out;
}

// ---------------------------------------------------------------------------
// Algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t ra = a.rank();
  const std::size_t rb = b.rank();
  std::size_t batch = 1;
  std::size_t n = 0, k = 0, m = 0;
  bool b_batched = false;
  bool vector_rhs = false;
  Shape out_shape;
  if (ra == 2 && rb == 2) {
    n = a.dim(0); k = a.dim(1); m = b.dim(1);
    if (b.dim(0) != k) throw ShapeError("matmul: inner dims " + to_string(a.shape()) + " x " + to_string(b.shape()));
    out_shape = {n, m};
  } else if (ra == 2 && rb == 1) {
    n = a.dim(0); k = a.dim(1); m = 1;
    vector_rhs = true;
    if (b.dim(0) != k) throw ShapeError("matmul: inner dims " + to_string(a.shape()) + " x " + to_string(b.shape()));
    out_shape = {n};
  } else if (ra == 3 && rb == 3) {
    batch = a.dim(0); n = a.dim(1); k = a.dim(2); m = b.dim(2);
    b_batched = true;
    if (b.dim(0) != batch || b.dim(1) != k) throw ShapeError("matmul: batched dims " + to_string(a.shape()) + " x " + to_string(b.shape()));
    out_shape = {batch, n, m};
  } else if (ra == 3 && rb == 2) {
    batch = a.dim(0); n = a.dim(1); k = a.dim(2); m = b.dim(1);
    if (b.dim(0) != k) throw ShapeError("matmul: inner dims " + to_string(a.shape()) + " x " + to_string(b.shape()));
    out_shape = {batch, n, m};
  } else {
    throw ShapeError("matmul: unsupported ranks " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  (void)vector_rhs;

  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(batch * n * m, 0.0);
  for (std::size_t s = 0; s < batch; ++s) {
    const double* A = av.data() + s * n * k;
    const double* B = bv.data() + (b_batched ? s * k * m : 0);
    double* C = out.data() + s * n * m;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = A[i * k + p];
        if (aip == 0.0) continue;
        const double* brow = B + p * m;
        double* crow = C + i * m;
        for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
      }
    }
  }

  return make_result(std::move(out_shape), std::move(out), {a, b},
                     [a, b, batch, n, k, m, b_batched](TensorNode& self) {
    const double* G = self.grad.data();
    const auto av = a.values();
    const auto bv = b.values();
    TensorNode* an = a.node();
    TensorNode* bn = b.node();
    for (std::size_t s = 0; s < batch; ++s) {
      const double* A = av.data() + s * n * k;
      const double* B = bv.data() + (b_batched ? s * k * m : 0);
      const double* Gs = G + s * n * m;
      if (an->requires_grad) {
        double* dA = an->grad_buffer().data() + s * n * k;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double* brow = B + p * m;
            const double* grow = Gs + i * m;
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
            dA[i * k + p] += acc;
          }
        }
      }
      if (bn->requires_grad) {
        double* dB = bn->grad_buffer().data() + (b_batched ? s * k * m : 0);
        for (std::size_t i = 0; i < n; ++i) {
          const double* grow = Gs + i * m;
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = A[i * k + p];
            if (aip == 0.0) continue;
            double* drow = dB + p * m;
            for (std::size_t j = 0; j < m; ++j) drow[j] += aip * grow[j];
          }
        }
      }
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2 || bias.rank() != 1 || bias.dim(0) != weight.dim(0)) {
    throw ShapeError("linear: weight " + to_string(weight.shape()) + " / bias " +
                     to_string(bias.shape()) + " inconsistent");
  }
  const std::size_t in = weight.dim(1);
  const std::size_t out_dim = weight.dim(0);
  if (x.shape().back() != in) {
    throw ShapeError("linear: input " + to_string(x.shape()) + " does not end in " +
                     std::to_string(in));
  }
  const std::size_t rows = x.size() / in;
  Shape out_shape = x.shape();
  out_shape.back() = out_dim;
  if (out_shape.size() > 3) throw ShapeError("linear: rank overflow");

  const auto xv = x.values();
  const auto wv = weight.values();
  const auto bv = bias.values();
  std::vector<double> out(rows * out_dim);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.data() + r * in;
    double* yr = out.data() + r * out_dim;
    for (std::size_t o = 0; o < out_dim; ++o) {
      const double* wr = wv.data() + o * in;
      double acc = bv[o];
      for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wr[i];
      yr[o] = acc;
    }
  }

  return make_result(std::move(out_shape), std::move(out), {x, weight, bias},
                     [x, weight, bias, rows, in, out_dim](TensorNode& self) {
    const double* G = self.grad.data();
    const auto xv = x.values();
    const auto wv = weight.values();
    if (x.node()->requires_grad) {
      double* dx = x.node()->grad_buffer().data();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* gr = G + r * out_dim;
        double* dxr = dx + r * in;
        for (std::size_t o = 0; o < out_dim; ++o) {
          const double g = gr[o];
          if (g == 0.0) continue;
          const double* wr = wv.data() + o * in;
          for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wr[i];
        }
      }
    }
    if (weight.node()->requires_grad) {
      double* dw = weight.node()->grad_buffer().data();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* gr = G + r * out_dim;
        const double* xr = xv.data() + r * in;
        for (std::size_t o = 0; o < out_dim; ++o) {
          const double g = gr[o];
          if (g == 0.0) continue;
          double* dwr = dw + o * in;
          for (std::size_t i = 0; i < in; ++i) dwr[i] += g * xr[i];
        }
      }
    }
    if (bias.node()->requires_grad) {
      double* db = bias.node()->grad_buffer().data();
      for (std::size_t r = 0; r < rows; ++r) {
        const double* gr = G + r * out_dim;
        for (std::size_t o = 0; o < out_dim; ++o) db[o] += gr[o];
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_result(a.shape(), std::move(out), {a, b}, [a, b](TensorNode& self) {
    for (const Tensor* p : {&a, &b}) {
      if (!p->node()->requires_grad) continue;
      auto g = p->node()->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_result(a.shape(), std::move(out), {a, b}, [a, b](TensorNode& self) {
    if (a.node()->requires_grad) {
      auto g = a.node()->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (b.node()->requires_grad) {
      auto g = b.node()->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_result(a.shape(), std::move(out), {a, b}, [a, b](TensorNode& self) {
    const auto av = a.values();
    const auto bv = b.values();
    if (a.node()->requires_grad) {
      auto g = a.node()->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (b.node()->requires_grad) {
      auto g = b.node()->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.values().begin(), a.values().end());
  for (double& v : out) v *= factor;
  return make_result(a.shape(), std::move(out), {a}, [a, factor](TensorNode& self) {
    auto g = a.node()->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

// ---------------------------------------------------------------------------
// Pointwise

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.values().begin(), x.values().end());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  return make_result(x.shape(), std::move(out), {x}, [x](TensorNode& self) {
    const auto xv = x.values();
    auto g = x.node()->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > 0.0) g[i] += self.grad[i];
    }
  });
}

Tensor tanh(const Tensor& x) {
  std::vector<double> out(x.values().begin(), x.values().end());
  for (double& v : out) v = std::tanh(v);
  return make_result(x.shape(), out, {x}, [x, out](TensorNode& self) {
    auto g = x.node()->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * (1.0 - out[i] * out[i]);
  });
}

// ---------------------------------------------------------------------------
// Normalization

Tensor softmax(const Tensor& x, std::size_t axis) {
  const AxisSplit s = split_at(x.shape(), axis);
  const auto xv = x.values();
  std::vector<double> out(x.size());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.length * s.inner + i;
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t l = 0; l < s.length; ++l) peak = std::max(peak, xv[base + l * s.inner]);
      double total = 0.0;
      for (std::size_t l = 0; l < s.length; ++l) {
        const double e = std::exp(xv[base + l * s.inner] - peak);
        out[base + l * s.inner] = e;
        total += e;
      }
      for (std::size_t l = 0; l < s.length; ++l) out[base + l * s.inner] /= total;
    }
  }
  return make_result(x.shape(), out, {x}, [x, out, s](TensorNode& self) {
    auto g = x.node()->grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.length * s.inner + i;
        double dot = 0.0;
        for (std::size_t l = 0; l < s.length; ++l) {
          const std::size_t idx = base + l * s.inner;
          dot += self.grad[idx] * out[idx];
        }
        for (std::size_t l = 0; l < s.length; ++l) {
          const std::size_t idx = base + l * s.inner;
          g[idx] += out[idx] * (self.grad[idx] - dot);
        }
      }
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& shift, double epsilon) {
  const std::size_t n = x.shape().back();
  if (n == 0) throw ShapeError("layer_norm: zero-length normalized axis");
  if (gain.size() != n || shift.size() != n) {
    throw ShapeError("layer_norm: gain/shift length " + std::to_string(gain.size()) +
                     " does not match last axis " + std::to_string(n));
  }
  if (!(epsilon > 0.0)) throw ContractError("layer_norm: epsilon must be positive");
  const std::size_t rows = x.size() / n;
  const auto xv = x.values();
  const auto gv = gain.values();
  const auto sv = shift.values();
  std::vector<double> normalized(x.size());
  std::vector<double> inv_std(rows);
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv.data() + r * n;
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += xr[i];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (xr[i] - mu) * (xr[i] - mu);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + epsilon);
    inv_std[r] = is;
    for (std::size_t i = 0; i < n; ++i) {
      const double h = (xr[i] - mu) * is;
      normalized[r * n + i] = h;
      out[r * n + i] = h * gv[i] + sv[i];
    }
  }
  return make_result(x.shape(), std::move(out), {x, gain, shift},
                     [x, gain, shift, normalized, inv_std, rows, n](TensorNode& self) {
    const auto gv = gain.values();
    const double inv_n = 1.0 / static_cast<double>(n);
    if (gain.node()->requires_grad) {
      auto dg = gain.node()->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t i = 0; i < n; ++i) dg[i] += self.grad[r * n + i] * normalized[r * n + i];
    }
    if (shift.node()->requires_grad) {
      auto ds = shift.node()->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t i = 0; i < n; ++i) ds[i] += self.grad[r * n + i];
    }
    if (x.node()->requires_grad) {
      auto dx = x.node()->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        double mean_d = 0.0, mean_dh = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = self.grad[r * n + i] * gv[i];
          mean_d += d;
          mean_dh += d * normalized[r * n + i];
        }
        mean_d *= inv_n;
        mean_dh *= inv_n;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = self.grad[r * n + i] * gv[i];
          dx[r * n + i] += inv_std[r] * (d - mean_d - normalized[r * n + i] * mean_dh);
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Layout

Tensor concat(const std::vector<Tensor>& xs, std::size_t axis) {
  if (xs.empty()) throw ShapeError("concat: no inputs");
  const Shape& ref = xs.front().shape();
  Shape out_shape = ref;
  out_shape.at(axis) = 0;
  for (const auto& t : xs) {
    if (t.rank() != ref.size()) throw ShapeError("concat: rank mismatch");
    for (std::size_t d = 0; d < ref.size(); ++d) {
      if (d != axis && t.dim(d) != ref[d]) {
        throw ShapeError("concat: shape " + to_string(t.shape()) + " incompatible with " +
                         to_string(ref));
      }
    }
    out_shape[axis] += t.dim(axis);
  }
  const AxisSplit total = split_at(out_shape, axis);
  std::vector<double> out(element_count(out_shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& t : xs) {
    offsets.push_back(offset);
    const std::size_t chunk = t.dim(axis) * total.inner;
    const auto tv = t.values();
    for (std::size_t o = 0; o < total.outer; ++o) {
      std::copy_n(tv.data() + o * chunk, chunk,
                  out.data() + o * total.length * total.inner + offset * total.inner);
    }
    offset += t.dim(axis);
  }
  return make_result(std::move(out_shape), std::move(out), xs,
                     [xs, offsets, total, axis](TensorNode& self) {
    for (std::size_t idx = 0; idx < xs.size(); ++idx) {
      const Tensor& t = xs[idx];
      if (!t.node()->requires_grad) continue;
      auto g = t.node()->grad_buffer();
      const std::size_t chunk = t.dim(axis) * total.inner;
      for (std::size_t o = 0; o < total.outer; ++o) {
        const double* src = self.grad.data() + o * total.length * total.inner +
                            offsets[idx] * total.inner;
        double* dst = g.data() + o * chunk;
        for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
      }
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  check_rank(shape);
  if (element_count(shape) != x.size()) {
    throw ShapeError("reshape: " + to_string(x.shape()) + " -> " + to_string(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  return make_result(std::move(shape), std::move(out), {x}, [x](TensorNode& self) {
    auto g = x.node()->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  const AxisSplit s = split_at(x.shape(), axis);
  if (begin > end || end > s.length) {
    throw ShapeError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") outside axis of length " + std::to_string(s.length));
  }
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  const std::size_t chunk = (end - begin) * s.inner;
  std::vector<double> out(s.outer * chunk);
  const auto xv = x.values();
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(xv.data() + o * s.length * s.inner + begin * s.inner, chunk,
                out.data() + o * chunk);
  }
  return make_result(std::move(out_shape), std::move(out), {x},
                     [x, s, begin, chunk](TensorNode& self) {
    auto g = x.node()->grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o) {
      double* dst = g.data() + o * s.length * s.inner + begin * s.inner;
      const double* src = self.grad.data() + o * chunk;
      for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
    }
  });
}

Tensor expand(const Tensor& x, std::size_t axis, std::size_t count) {
  if (axis > x.rank()) throw ShapeError("expand: axis out of range");
  Shape out_shape = x.shape();
  out_shape.insert(out_shape.begin() + static_cast<std::ptrdiff_t>(axis), count);
  check_rank(out_shape);
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  const std::size_t inner = x.size() / outer;
  std::vector<double> out(outer * count * inner);
  const auto xv = x.values();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t c = 0; c < count; ++c)
      std::copy_n(xv.data() + o * inner, inner, out.data() + (o * count + c) * inner);
  return make_result(std::move(out_shape), std::move(out), {x},
                     [x, outer, count, inner](TensorNode& self) {
    auto g = x.node()->grad_buffer();
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t c = 0; c < count; ++c) {
        const double* src = self.grad.data() + (o * count + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) g[o * inner + i] += src[i];
      }
  });
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  return make_result({1}, {total}, {x}, [x](TensorNode& self) {
    auto g = x.node()->grad_buffer();
    for (double& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Tensor smooth_l1(const Tensor& prediction, std::span<const double> target,
                 std::span<const double> column_weights, double beta) {
  if (target.size() != prediction.size()) throw ShapeError("smooth_l1: target size mismatch");
  const std::size_t cols = prediction.shape().back();
  if (column_weights.size() != cols) throw ShapeError("smooth_l1: column weight size mismatch");
  if (!(beta > 0.0)) throw ContractError("smooth_l1: beta must be positive");
  const double weight_sum = std::accumulate(column_weights.begin(), column_weights.end(), 0.0);
  const std::size_t rows = prediction.size() / cols;
  const double norm = 1.0 / (static_cast<double>(rows) * weight_sum);
  const auto pv = prediction.values();
  std::vector<double> slope(pv.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double w = column_weights[i % cols];
    const double d = pv[i] - target[i];
    const double ad = std::abs(d);
    if (ad < beta) {
      total += w * 0.5 * d * d / beta;
      slope[i] = w * d / beta * norm;
    } else {
      total += w * (ad - 0.5 * beta);
      slope[i] = w * (d > 0.0 ? 1.0 : -1.0) * norm;
    }
  }
  return make_result({1}, {total * norm}, {prediction},
                     [prediction, slope](TensorNode& self) {
    auto g = prediction.node()->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * slope[i];
  });
}

// ---------------------------------------------------------------------------

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        (loss.defined() ? to_string(loss.shape()) : std::string("<undefined>")));
  }
  TensorNode* root = loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

}  // namespace hat::tensor
