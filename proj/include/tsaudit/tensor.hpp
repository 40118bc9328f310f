#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "tsaudit/errors.hpp"

// Minimal dense tensor arithmetic with reverse-mode differentiation.
//
// The graph is define-by-run: a Tape is made current with Tape::Scope, every
// op executed while it is active appends one backward closure, and
// Tape::backward replays the closures in reverse. Values are 64-bit floats
// throughout. Broadcasting is limited to scalar-vs-tensor and equal shapes,
// which keeps every backward rule a few lines of auditable code.

namespace tsaudit::autodiff {

namespace detail {
struct TensorNode {
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily, same length as value
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};
}  // namespace detail

class Tensor {
 public:
  Tensor() : node_(std::make_shared<detail::TensorNode>()) {}

  static Tensor zeros(std::vector<std::size_t> shape) {
    Tensor t;
    t.node_->shape = std::move(shape);
    t.node_->value.assign(t.numel_from_shape(), 0.0);
    return t;
  }

  static Tensor from(std::vector<double> values, std::vector<std::size_t> shape) {
    Tensor t;
    t.node_->shape = std::move(shape);
    t.node_->value = std::move(values);
    if (t.node_->value.size() != t.numel_from_shape()) {
      throw DimensionError("tensor: value count does not match shape");
    }
    return t;
  }

  static Tensor scalar(double v) { return from({v}, {1}); }

  const std::vector<std::size_t>& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->value.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape[i]; }
  std::size_t ndim() const { return node_->shape.size(); }

  std::vector<double>& value() { return node_->value; }
  const std::vector<double>& value() const { return node_->value; }

  // Gradient buffer; zeros if backward never reached this tensor.
  std::vector<double> grad() const {
    if (node_->grad.size() == node_->value.size()) return node_->grad;
    return std::vector<double>(node_->value.size(), 0.0);
  }

  double item() const {
    if (numel() != 1) throw ContractError("item() on non-scalar tensor");
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  void zero_grad() {
    node_->ensure_grad();
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
  }

  bool is_scalar_like() const { return numel() == 1; }
  bool same_shape(const Tensor& o) const { return shape() == o.shape(); }

  std::shared_ptr<detail::TensorNode> node() const { return node_; }

 private:
  std::size_t numel_from_shape() const {
    std::size_t n = 1;
    for (std::size_t s : node_->shape) n *= s;
    return node_->shape.empty() ? 0 : n;
  }
  std::shared_ptr<detail::TensorNode> node_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::function<void()> backprop) {
    entries_.push_back(std::move(backprop));
  }
  std::size_t size() const { return entries_.size(); }

  // Seeds grad(loss) = 1 and replays the recorded closures newest-first.
  // Each node is visited exactly once; repeated runs are bit-identical.
  void backward(const Tensor& loss) {
    if (loss.numel() != 1) throw ContractError("backward: loss must be scalar");
    if (used_) throw ContractError("backward: tape already consumed");
    used_ = true;
    auto node = loss.node();
    node->ensure_grad();
    node->grad[0] = 1.0;
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  }

  static Tape* active() { return active_; }

  class Scope {
   public:
    explicit Scope(Tape& t) : prev_(active_) { active_ = &t; }
    ~Scope() { active_ = prev_; }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* prev_;
  };

  // Suppresses recording (and requires_grad propagation) within its scope.
  class NoGrad {
   public:
    NoGrad() : prev_(active_) { active_ = nullptr; }
    ~NoGrad() { active_ = prev_; }
    NoGrad(const NoGrad&) = delete;
    NoGrad& operator=(const NoGrad&) = delete;

   private:
    Tape* prev_;
  };

 private:
  inline static thread_local Tape* active_ = nullptr;
  std::vector<std::function<void()>> entries_;
  bool used_ = false;
};

namespace detail {

inline bool tracing(std::initializer_list<const Tensor*> inputs) {
  if (Tape::active() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

inline Tensor make_output(std::vector<double> values, std::vector<std::size_t> shape,
                          bool track) {
  Tensor out = Tensor::from(std::move(values), std::move(shape));
  if (track) out.set_requires_grad(true);
  return out;
}

inline void require_2d(const Tensor& t, const char* who) {
  if (t.ndim() != 2) throw DimensionError(std::string(who) + ": expected a 2-d tensor");
}

// out.grad may be unallocated when no downstream op wrote to it.
inline const double* grad_or_null(const std::shared_ptr<TensorNode>& n) {
  return n->grad.size() == n->value.size() ? n->grad.data() : nullptr;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Binary elementwise ops. Either operand may be scalar-like (numel 1).

namespace detail {

template <typename Fwd, typename BwdA, typename BwdB>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, Fwd fwd,
                 BwdA dfda, BwdB dfdb) {
  const bool a_scalar = a.is_scalar_like();
  const bool b_scalar = b.is_scalar_like();
  if (!a_scalar && !b_scalar && !a.same_shape(b)) {
    throw DimensionError(std::string(name) + ": incompatible shapes");
  }
  const auto& av = a.value();
  const auto& bv = b.value();
  const std::size_t n = a_scalar ? bv.size() : av.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = fwd(av[a_scalar ? 0 : i], bv[b_scalar ? 0 : i]);
  }
  const bool track = tracing({&a, &b});
  Tensor result = make_output(std::move(out), a_scalar ? b.shape() : a.shape(), track);
  if (track) {
    auto an = a.node(), bn = b.node(), on = result.node();
    bool ag = a.requires_grad(), bg = b.requires_grad();
    Tape::active()->record([an, bn, on, ag, bg, a_scalar, b_scalar, n, dfda, dfdb] {
      const double* g = grad_or_null(on);
      if (g == nullptr) return;
      if (ag) {
        an->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
          an->grad[a_scalar ? 0 : i] +=
              g[i] * dfda(an->value[a_scalar ? 0 : i], bn->value[b_scalar ? 0 : i]);
        }
      }
      if (bg) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
          bn->grad[b_scalar ? 0 : i] +=
              g[i] * dfdb(an->value[a_scalar ? 0 : i], bn->value[b_scalar ? 0 : i]);
        }
      }
    });
  }
  return result;
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  return detail::binary_op(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  return detail::binary_op(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  return detail::binary_op(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

// ---------------------------------------------------------------------------
// Unary ops.

namespace detail {

template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& a, Fwd fwd, Bwd dfdx) {
  const auto& av = a.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
  const bool track = tracing({&a});
  Tensor result = make_output(std::move(out), a.shape(), track);
  if (track) {
    auto an = a.node(), on = result.node();
    Tape::active()->record([an, on, dfdx] {
      const double* g = grad_or_null(on);
      if (g == nullptr) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < an->value.size(); ++i) {
        an->grad[i] += g[i] * dfdx(an->value[i], on->value[i]);
      }
    });
  }
  return result;
}

}  // namespace detail

inline Tensor sigmoid(const Tensor& a) {
  return detail::unary_op(
      a,
      [](double x) {
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                        : std::exp(x) / (1.0 + std::exp(x));
      },
      [](double, double y) { return y * (1.0 - y); });
}

inline Tensor tanh(const Tensor& a) {
  return detail::unary_op(a, [](double x) { return std::tanh(x); },
                          [](double, double y) { return 1.0 - y * y; });
}

inline Tensor relu(const Tensor& a) {
  return detail::unary_op(a, [](double x) { return x > 0.0 ? x : 0.0; },
                          [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Tensor exp(const Tensor& a) {
  return detail::unary_op(a, [](double x) { return std::exp(x); },
                          [](double, double y) { return y; });
}

// Multiply by a compile-time-known constant (no graph node for the constant).
inline Tensor scale(const Tensor& a, double c) {
  return detail::unary_op(a, [c](double x) { return c * x; },
                          [c](double, double) { return c; });
}

// ---------------------------------------------------------------------------
// Matrix ops.

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require_2d(a, "matmul");
  detail::require_2d(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  if (k != k2) throw DimensionError("matmul: inner dimensions disagree");
  std::vector<double> out(m * n, 0.0);
  {
    const double* ap = a.value().data();
    const double* bp = b.value().data();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = ap[i * k + p];
        const double* brow = bp + p * n;
        double* orow = out.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
      }
    }
  }
  const bool track = detail::tracing({&a, &b});
  Tensor result = detail::make_output(std::move(out), {m, n}, track);
  if (track) {
    auto an = a.node(), bn = b.node(), on = result.node();
    bool ag = a.requires_grad(), bg = b.requires_grad();
    Tape::active()->record([an, bn, on, ag, bg, m, k, n] {
      const double* g = detail::grad_or_null(on);
      if (g == nullptr) return;
      if (ag) {  // dA += G * B^T
        an->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            const double* grow = g + i * n;
            const double* brow = bn->value.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
            an->grad[i * k + p] += acc;
          }
        }
      }
      if (bg) {  // dB += A^T * G
        bn->ensure_grad();
        for (std::size_t p = 0; p < k; ++p) {
          for (std::size_t i = 0; i < m; ++i) {
            const double aip = an->value[i * k + p];
            const double* grow = g + i * n;
            double* brow = bn->grad.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) brow[j] += aip * grow[j];
          }
        }
      }
    });
  }
  return result;
}

inline Tensor transpose(const Tensor& a) {
  detail::require_2d(a, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.value()[i * n + j];
  }
  const bool track = detail::tracing({&a});
  Tensor result = detail::make_output(std::move(out), {n, m}, track);
  if (track) {
    auto an = a.node(), on = result.node();
    Tape::active()->record([an, on, m, n] {
      const double* g = detail::grad_or_null(on);
      if (g == nullptr) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) an->grad[i * n + j] += g[j * m + i];
      }
    });
  }
  return result;
}

// Column j as an [m,1] tensor.
inline Tensor column(const Tensor& a, std::size_t j) {
  detail::require_2d(a, "column");
  const std::size_t m = a.dim(0), n = a.dim(1);
  if (j >= n) throw IndexError("column: index out of range");
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = a.value()[i * n + j];
  const bool track = detail::tracing({&a});
  Tensor result = detail::make_output(std::move(out), {m, 1}, track);
  if (track) {
    auto an = a.node(), on = result.node();
    Tape::active()->record([an, on, m, n, j] {
      const double* g = detail::grad_or_null(on);
      if (g == nullptr) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) an->grad[i * n + j] += g[i];
    });
  }
  return result;
}

// Rows [r0, r1) as an [r1-r0, n] tensor.
inline Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1) {
  detail::require_2d(a, "slice_rows");
  const std::size_t m = a.dim(0), n = a.dim(1);
  if (r0 >= r1 || r1 > m) throw IndexError("slice_rows: bad row range");
  std::vector<double> out(a.value().begin() + r0 * n, a.value().begin() + r1 * n);
  const bool track = detail::tracing({&a});
  Tensor result = detail::make_output(std::move(out), {r1 - r0, n}, track);
  if (track) {
    auto an = a.node(), on = result.node();
    Tape::active()->record([an, on, r0, r1, n] {
      const double* g = detail::grad_or_null(on);
      if (g == nullptr) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < (r1 - r0) * n; ++i) an->grad[r0 * n + i] += g[i];
    });
  }
  return result;
}

// Causal shift along time: out[:, t] = a[:, t-s], zero-filled on the left.
inline Tensor shift_columns_right(const Tensor& a, std::size_t s) {
  detail::require_2d(a, "shift_columns_right");
  if (s == 0) return a;
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t t = s; t < n; ++t) out[i * n + t] = a.value()[i * n + t - s];
  }
  const bool track = detail::tracing({&a});
  Tensor result = detail::make_output(std::move(out), {m, n}, track);
  if (track) {
    auto an = a.node(), on = result.node();
    Tape::active()->record([an, on, m, n, s] {
      const double* g = detail::grad_or_null(on);
      if (g == nullptr) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t t = s; t < n; ++t) an->grad[i * n + t - s] += g[i * n + t];
      }
    });
  }
  return result;
}

// Adds a column vector [m,1] to every column of a [m,n].
inline Tensor add_col_broadcast(const Tensor& a, const Tensor& v) {
  detail::require_2d(a, "add_col_broadcast");
  const std::size_t m = a.dim(0), n = a.dim(1);
  if (v.numel() != m) throw DimensionError("add_col_broadcast: vector length != rows");
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double vi = v.value()[i];
    for (std::size_t t = 0; t < n; ++t) out[i * n + t] = a.value()[i * n + t] + vi;
  }
  const bool track = detail::tracing({&a, &v});
  Tensor result = detail::make_output(std::move(out), {m, n}, track);
  if (track) {
    auto an = a.node(), vn = v.node(), on = result.node();
    bool ag = a.requires_grad(), vg = v.requires_grad();
    Tape::active()->record([an, vn, on, ag, vg, m, n] {
      const double* g = detail::grad_or_null(on);
      if (g == nullptr) return;
      if (ag) {
        an->ensure_grad();
        for (std::size_t i = 0; i < m * n; ++i) an->grad[i] += g[i];
      }
      if (vg) {
        vn->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
          double acc = 0.0;
          for (std::size_t t = 0; t < n; ++t) acc += g[i * n + t];
          vn->grad[i] += acc;
        }
      }
    });
  }
  return result;
}

inline Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.value()) s += v;
  const bool track = detail::tracing({&a});
  Tensor result = detail::make_output({s}, {1}, track);
  if (track) {
    auto an = a.node(), on = result.node();
    Tape::active()->record([an, on] {
      const double* g = detail::grad_or_null(on);
      if (g == nullptr) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < an->value.size(); ++i) an->grad[i] += g[0];
    });
  }
  return result;
}

// Mean over columns for each row: [m,n] -> [m,1].
inline Tensor row_mean(const Tensor& a) {
  detail::require_2d(a, "row_mean");
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) acc += a.value()[i * n + t];
    out[i] = acc / static_cast<double>(n);
  }
  const bool track = detail::tracing({&a});
  Tensor result = detail::make_output(std::move(out), {m, 1}, track);
  if (track) {
    auto an = a.node(), on = result.node();
    Tape::active()->record([an, on, m, n] {
      const double* g = detail::grad_or_null(on);
      if (g == nullptr) return;
      an->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        const double gi = g[i] / static_cast<double>(n);
        for (std::size_t t = 0; t < n; ++t) an->grad[i * n + t] += gi;
      }
    });
  }
  return result;
}

// Element i of a flat tensor as a scalar.
inline Tensor select_element(const Tensor& a, std::size_t i) {
  if (i >= a.numel()) throw IndexError("select_element: index out of range");
  const bool track = detail::tracing({&a});
  Tensor result = detail::make_output({a.value()[i]}, {1}, track);
  if (track) {
    auto an = a.node(), on = result.node();
    Tape::active()->record([an, on, i] {
      const double* g = detail::grad_or_null(on);
      if (g == nullptr) return;
      an->ensure_grad();
      an->grad[i] += g[0];
    });
  }
  return result;
}

// Column-wise softmax, shift-stabilized; the shift is treated as constant,
// which is exact because softmax is shift invariant.
inline Tensor softmax_columns(const Tensor& a) {
  detail::require_2d(a, "softmax_columns");
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  for (std::size_t j = 0; j < n; ++j) {
    double mx = a.value()[j];
    for (std::size_t i = 1; i < m; ++i) mx = std::max(mx, a.value()[i * n + j]);
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      out[i * n + j] = std::exp(a.value()[i * n + j] - mx);
      z += out[i * n + j];
    }
    for (std::size_t i = 0; i < m; ++i) out[i * n + j] /= z;
  }
  const bool track = detail::tracing({&a});
  Tensor result = detail::make_output(std::move(out), {m, n}, track);
  if (track) {
    auto an = a.node(), on = result.node();
    Tape::active()->record([an, on, m, n] {
      const double* g = detail::grad_or_null(on);
      if (g == nullptr) return;
      an->ensure_grad();
      for (std::size_t j = 0; j < n; ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < m; ++i) dot += g[i * n + j] * on->value[i * n + j];
        for (std::size_t i = 0; i < m; ++i) {
          an->grad[i * n + j] += on->value[i * n + j] * (g[i * n + j] - dot);
        }
      }
    });
  }
  return result;
}

// Per-column layer normalization with learned gain/bias vectors [m,1]:
// each column is centered and scaled to unit variance before the affine map.
inline Tensor layer_norm_columns(const Tensor& a, const Tensor& gain, const Tensor& bias,
                                 double eps = 1e-5) {
  detail::require_2d(a, "layer_norm_columns");
  const std::size_t m = a.dim(0), n = a.dim(1);
  if (gain.numel() != m || bias.numel() != m) {
    throw DimensionError("layer_norm_columns: gain/bias length != rows");
  }
  std::vector<double> out(m * n);
  auto xhat = std::make_shared<std::vector<double>>(m * n);
  auto inv_sigma = std::make_shared<std::vector<double>>(n);
  for (std::size_t j = 0; j < n; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean += a.value()[i * n + j];
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = a.value()[i * n + j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(m);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_sigma)[j] = is;
    for (std::size_t i = 0; i < m; ++i) {
      const double h = (a.value()[i * n + j] - mean) * is;
      (*xhat)[i * n + j] = h;
      out[i * n + j] = gain.value()[i] * h + bias.value()[i];
    }
  }
  const bool track = detail::tracing({&a, &gain, &bias});
  Tensor result = detail::make_output(std::move(out), {m, n}, track);
  if (track) {
    auto an = a.node(), gn = gain.node(), bn = bias.node(), on = result.node();
    bool ag = a.requires_grad(), gg = gain.requires_grad(), bg = bias.requires_grad();
    Tape::active()->record([an, gn, bn, on, xhat, inv_sigma, ag, gg, bg, m, n] {
      const double* g = detail::grad_or_null(on);
      if (g == nullptr) return;
      if (bg) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j];
          bn->grad[i] += acc;
        }
      }
      if (gg) {
        gn->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * (*xhat)[i * n + j];
          gn->grad[i] += acc;
        }
      }
      if (ag) {
        an->ensure_grad();
        for (std::size_t j = 0; j < n; ++j) {
          double mean_gh = 0.0, mean_ghx = 0.0;
          for (std::size_t i = 0; i < m; ++i) {
            const double gh = g[i * n + j] * gn->value[i];
            mean_gh += gh;
            mean_ghx += gh * (*xhat)[i * n + j];
          }
          mean_gh /= static_cast<double>(m);
          mean_ghx /= static_cast<double>(m);
          for (std::size_t i = 0; i < m; ++i) {
            const double gh = g[i * n + j] * gn->value[i];
            an->grad[i * n + j] +=
                (*inv_sigma)[j] * (gh - mean_gh - (*xhat)[i * n + j] * mean_ghx);
          }
        }
      }
    });
  }
  return result;
}

// Numerically stable softmax of a flat logits vector (no graph involvement).
inline std::vector<double> softmax_values(const std::vector<double>& logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

// -log softmax(logits)[label]. The softmax probabilities are cached and may
// be retrieved through probs_out for prediction bookkeeping.
inline Tensor softmax_cross_entropy(const Tensor& logits, std::size_t label,
                                    std::vector<double>* probs_out = nullptr) {
  const std::size_t c = logits.numel();
  if (c < 1) throw DimensionError("softmax_cross_entropy: empty logits");
  if (label >= c) throw IndexError("softmax_cross_entropy: label out of range");
  auto probs = std::make_shared<std::vector<double>>(softmax_values(logits.value()));
  if (probs_out != nullptr) *probs_out = *probs;
  // -log p = -(z_y - m) + log sum exp(z - m), computed from the stable pieces
  double mx = logits.value()[0];
  for (double v : logits.value()) mx = std::max(mx, v);
  double z = 0.0;
  for (double v : logits.value()) z += std::exp(v - mx);
  const double loss = -(logits.value()[label] - mx) + std::log(z);
  const bool track = detail::tracing({&logits});
  Tensor result = detail::make_output({loss}, {1}, track);
  if (track) {
    auto ln = logits.node(), on = result.node();
    Tape::active()->record([ln, on, probs, label, c] {
      const double* g = detail::grad_or_null(on);
      if (g == nullptr) return;
      ln->ensure_grad();
      for (std::size_t i = 0; i < c; ++i) {
        ln->grad[i] += g[0] * ((*probs)[i] - (i == label ? 1.0 : 0.0));
      }
    });
  }
  return result;
}

// ---------------------------------------------------------------------------

// Gradient of one class score with respect to the input. `forward` maps an
// input tensor to a logits tensor; by default the pre-softmax score of
// target_class is differentiated (post-softmax probability when
// use_probability is set).
template <typename ForwardFn>
std::vector<double> input_gradient(ForwardFn&& forward, const std::vector<double>& input,
                                   std::vector<std::size_t> shape, std::size_t target_class,
                                   bool use_probability = false) {
  Tape tape;
  Tape::Scope scope(tape);
  Tensor x = Tensor::from(input, std::move(shape));
  x.set_requires_grad(true);
  Tensor logits = forward(x);
  if (target_class >= logits.numel()) {
    throw IndexError("input_gradient: target class out of range");
  }
  Tensor score;
  if (use_probability) {
    if (logits.ndim() != 2 || logits.dim(1) != 1) {
      throw ContractError("input_gradient: probability target needs [C,1] logits");
    }
    score = select_element(softmax_columns(logits), target_class);
  } else {
    score = select_element(logits, target_class);
  }
  tape.backward(score);
  return x.grad();
}

}  // namespace tsaudit::autodiff
