#include "hargnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hargnn/error.hpp"
#include "hargnn/tape.hpp"

namespace hargnn::ops {

namespace {

void require_rank(const Tensor& x, std::size_t rank, const char* op) {
  if (x.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_to_string(x.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
}

// Splits a shape around `axis` into (outer, len, inner) extents.
struct AxisView {
  std::size_t outer = 1, len = 1, inner = 1;
};

AxisView axis_view(const Shape& s, std::size_t axis) {
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
  v.len = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

// C[m×p] += A[m×k] · B[k×p]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * p;
    const double* arow = a + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = arow[l];
      if (av == 0.0) continue;
      const double* brow = b + l * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m×k] += G[m×p] · B[k×p]ᵀ
void gemm_nt(const double* g, const double* b, double* c, std::size_t m, std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* grow = g + i * p;
    double* crow = c + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      const double* brow = b + l * p;
      double s = 0.0;
      for (std::size_t j = 0; j < p; ++j) s += grow[j] * brow[j];
      crow[l] += s;
    }
  }
}

// C[k×p] += A[m×k]ᵀ · G[m×p]
void gemm_tn(const double* a, const double* g, double* c, std::size_t m, std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* grow = g + i * p;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = arow[l];
      if (av == 0.0) continue;
      double* crow = c + l * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += av * grow[j];
    }
  }
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv) {
  const auto xs = x.data();
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = fwd(xs[i]);
  Tensor y(x.shape(), std::move(out));
  if (Tape::should_record({&x})) {
    Tape::active()->record(y, [x, y, deriv]() mutable {
      if (!y.has_grad()) return;
      const auto g = y.grad();
      const auto xv = x.data();
      const auto yv = y.data();
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(xv[i], yv[i]);
    });
  }
  return y;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), p = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner dimensions disagree for " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()));
  }
  std::vector<double> out(m * p, 0.0);
  gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, p);
  Tensor y({m, p}, std::move(out));
  if (Tape::should_record({&a, &b})) {
    Tape::active()->record(y, [a, b, y, m, k, p]() mutable {
      if (!y.has_grad()) return;
      const double* g = y.grad().data();
      if (a.requires_grad()) gemm_nt(g, b.data().data(), a.mutable_grad().data(), m, k, p);
      if (b.requires_grad()) gemm_tn(a.data().data(), g, b.mutable_grad().data(), m, k, p);
    });
  }
  return y;
}

Tensor bmm(const Tensor& a, const Tensor& b) {
  require_rank(a, 3, "bmm");
  require_rank(b, 3, "bmm");
  const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2), p = b.dim(2);
  if (b.dim(0) != batch || b.dim(1) != k) {
    throw ShapeError("bmm: incompatible shapes " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()));
  }
  std::vector<double> out(batch * m * p, 0.0);
  const double* ad = a.data().data();
  const double* bd = b.data().data();
  for (std::size_t g = 0; g < batch; ++g) gemm_nn(ad + g * m * k, bd + g * k * p, out.data() + g * m * p, m, k, p);
  Tensor y({batch, m, p}, std::move(out));
  if (Tape::should_record({&a, &b})) {
    Tape::active()->record(y, [a, b, y, batch, m, k, p]() mutable {
      if (!y.has_grad()) return;
      const double* gy = y.grad().data();
      if (a.requires_grad()) {
        double* ga = a.mutable_grad().data();
        const double* bd = b.data().data();
        for (std::size_t g = 0; g < batch; ++g) gemm_nt(gy + g * m * p, bd + g * k * p, ga + g * m * k, m, k, p);
      }
      if (b.requires_grad()) {
        double* gb = b.mutable_grad().data();
        const double* ad = a.data().data();
        for (std::size_t g = 0; g < batch; ++g) gemm_tn(ad + g * m * k, gy + g * m * p, gb + g * k * p, m, k, p);
      }
    });
  }
  return y;
}

Tensor linear(const Tensor& x, const Tensor& weight) {
  require_rank(weight, 2, "linear");
  const auto& s = x.shape();
  if (s.empty() || s.back() != weight.dim(0)) {
    throw ShapeError("linear: last axis of " + shape_to_string(s) + " does not match weight " +
                     shape_to_string(weight.shape()));
  }
  const std::size_t rows = x.numel() / s.back();
  Tensor flat = x.rank() == 2 ? x : reshape(x, {rows, s.back()});
  Tensor prod = matmul(flat, weight);
  if (x.rank() == 2) return prod;
  Shape out = s;
  out.back() = weight.dim(1);
  return reshape(prod, out);
}

Tensor transpose_last2(const Tensor& x) {
  if (x.rank() != 2 && x.rank() != 3) throw ShapeError("transpose_last2: rank must be 2 or 3");
  const bool batched = x.rank() == 3;
  const std::size_t batch = batched ? x.dim(0) : 1;
  const std::size_t m = x.dim(x.rank() - 2), n = x.dim(x.rank() - 1);
  std::vector<double> out(x.numel());
  const double* xd = x.data().data();
  for (std::size_t g = 0; g < batch; ++g)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out[g * m * n + j * m + i] = xd[g * m * n + i * n + j];
  Shape shape = batched ? Shape{batch, n, m} : Shape{n, m};
  Tensor y(shape, std::move(out));
  if (Tape::should_record({&x})) {
    Tape::active()->record(y, [x, y, batch, m, n]() mutable {
      if (!y.has_grad()) return;
      const double* g = y.grad().data();
      double* gx = x.mutable_grad().data();
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gx[b * m * n + i * n + j] += g[b * m * n + j * m + i];
    });
  }
  return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> out(ad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
  Tensor y(a.shape(), std::move(out));
  if (Tape::should_record({&a, &b})) {
    Tape::active()->record(y, [a, b, y]() mutable {
      if (!y.has_grad()) return;
      const auto g = y.grad();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      }
    });
  }
  return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> out(ad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
  Tensor y(a.shape(), std::move(out));
  if (Tape::should_record({&a, &b})) {
    Tape::active()->record(y, [a, b, y]() mutable {
      if (!y.has_grad()) return;
      const auto g = y.grad();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        const auto bv = b.data();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        const auto av = a.data();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
      }
    });
  }
  return y;
}

Tensor scale(const Tensor& x, double factor) {
  return unary(
      x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_rank(bias, 1, "add_bias");
  const auto& s = x.shape();
  if (s.empty() || s.back() != bias.dim(0)) {
    throw ShapeError("add_bias: bias " + shape_to_string(bias.shape()) + " does not match " + shape_to_string(s));
  }
  const std::size_t n = bias.dim(0);
  const auto xd = x.data();
  const auto bd = bias.data();
  std::vector<double> out(xd.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] + bd[i % n];
  Tensor y(s, std::move(out));
  if (Tape::should_record({&x, &bias})) {
    Tape::active()->record(y, [x, bias, y, n]() mutable {
      if (!y.has_grad()) return;
      const auto g = y.grad();
      if (x.requires_grad()) {
        auto gx = x.mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (bias.requires_grad()) {
        auto gb = bias.mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i % n] += g[i];
      }
    });
  }
  return y;
}

Tensor relu(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0.0 || std::isnan(v) ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  return unary(
      x, [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

namespace {

// Row-wise softmax over rows of length n; `allowed(r, j)` selects entries.
template <typename Allowed>
void softmax_forward(const double* x, double* y, std::size_t rows, std::size_t n, Allowed allowed) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * n;
    double* yr = y + r * n;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (allowed(r, j)) mx = std::max(mx, xr[j]);
    if (mx == -std::numeric_limits<double>::infinity()) {
      std::fill(yr, yr + n, 0.0);
      continue;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      yr[j] = allowed(r, j) ? std::exp(xr[j] - mx) : 0.0;
      total += yr[j];
    }
    for (std::size_t j = 0; j < n; ++j) yr[j] /= total;
  }
}

void softmax_backward(const double* y, const double* g, double* gx, std::size_t rows, std::size_t n) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* yr = y + r * n;
    const double* gr = g + r * n;
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) dot += yr[j] * gr[j];
    for (std::size_t j = 0; j < n; ++j) gx[r * n + j] += yr[j] * (gr[j] - dot);
  }
}

}  // namespace

Tensor softmax_rows(const Tensor& x) {
  if (x.rank() == 0) throw ShapeError("softmax_rows: scalar input");
  const std::size_t n = x.shape().back();
  const std::size_t rows = n ? x.numel() / n : 0;
  std::vector<double> out(x.numel());
  softmax_forward(x.data().data(), out.data(), rows, n, [](std::size_t, std::size_t) { return true; });
  Tensor y(x.shape(), std::move(out));
  if (Tape::should_record({&x})) {
    Tape::active()->record(y, [x, y, rows, n]() mutable {
      if (!y.has_grad()) return;
      softmax_backward(y.data().data(), y.grad().data(), x.mutable_grad().data(), rows, n);
    });
  }
  return y;
}

Tensor masked_softmax_rows(const Tensor& x, std::span<const std::uint8_t> mask) {
  if (x.rank() < 2) throw ShapeError("masked_softmax_rows: rank must be >= 2");
  const std::size_t t = x.shape().back();
  if (x.shape()[x.rank() - 2] != t || mask.size() != t * t) {
    throw ShapeError("masked_softmax_rows: mask of " + std::to_string(mask.size()) +
                     " entries does not fit " + shape_to_string(x.shape()));
  }
  const std::size_t rows = x.numel() / t;
  std::vector<double> out(x.numel());
  softmax_forward(x.data().data(), out.data(), rows, t,
                  [&](std::size_t r, std::size_t j) { return mask[(r % t) * t + j] != 0; });
  Tensor y(x.shape(), std::move(out));
  if (Tape::should_record({&x})) {
    Tape::active()->record(y, [x, y, rows, t]() mutable {
      if (!y.has_grad()) return;
      softmax_backward(y.data().data(), y.grad().data(), x.mutable_grad().data(), rows, t);
    });
  }
  return y;
}

Tensor mean_axis(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw ShapeError("mean_axis: axis " + std::to_string(axis) + " out of range for " + shape_to_string(x.shape()));
  }
  const auto v = axis_view(x.shape(), axis);
  if (v.len == 0) throw ShapeError("mean_axis: empty axis");
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::vector<double> out(v.outer * v.inner, 0.0);
  const double* xd = x.data().data();
  const double inv = 1.0 / static_cast<double>(v.len);
  for (std::size_t o = 0; o < v.outer; ++o)
    for (std::size_t l = 0; l < v.len; ++l)
      for (std::size_t i = 0; i < v.inner; ++i) out[o * v.inner + i] += xd[(o * v.len + l) * v.inner + i];
  for (auto& e : out) e *= inv;
  Tensor y(out_shape, std::move(out));
  if (Tape::should_record({&x})) {
    Tape::active()->record(y, [x, y, v, inv]() mutable {
      if (!y.has_grad()) return;
      const double* g = y.grad().data();
      double* gx = x.mutable_grad().data();
      for (std::size_t o = 0; o < v.outer; ++o)
        for (std::size_t l = 0; l < v.len; ++l)
          for (std::size_t i = 0; i < v.inner; ++i) gx[(o * v.len + l) * v.inner + i] += g[o * v.inner + i] * inv;
    });
  }
  return y;
}

Tensor sum_all(const Tensor& x) {
  const auto xd = x.data();
  Tensor y = Tensor::scalar(std::accumulate(xd.begin(), xd.end(), 0.0));
  if (Tape::should_record({&x})) {
    Tape::active()->record(y, [x, y]() mutable {
      if (!y.has_grad()) return;
      const double g = y.grad()[0];
      for (auto& e : x.mutable_grad()) e += g;
    });
  }
  return y;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_to_string(x.shape()) + " as " + shape_to_string(shape));
  }
  const auto xd = x.data();
  Tensor y(std::move(shape), std::vector<double>(xd.begin(), xd.end()));
  if (Tape::should_record({&x})) {
    Tape::active()->record(y, [x, y]() mutable {
      if (!y.has_grad()) return;
      const auto g = y.grad();
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return y;
}

Tensor slice_axis(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  if (axis >= x.rank()) throw ShapeError("slice_axis: axis out of range for " + shape_to_string(x.shape()));
  if (begin > end || end > x.dim(axis)) {
    throw ShapeError("slice_axis: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for " + shape_to_string(x.shape()));
  }
  const auto v = axis_view(x.shape(), axis);
  const std::size_t len = end - begin;
  Shape out_shape = x.shape();
  out_shape[axis] = len;
  std::vector<double> out(v.outer * len * v.inner);
  const double* xd = x.data().data();
  for (std::size_t o = 0; o < v.outer; ++o) {
    const double* src = xd + (o * v.len + begin) * v.inner;
    std::copy(src, src + len * v.inner, out.begin() + static_cast<std::ptrdiff_t>(o * len * v.inner));
  }
  Tensor y(out_shape, std::move(out));
  if (Tape::should_record({&x})) {
    Tape::active()->record(y, [x, y, v, begin, len]() mutable {
      if (!y.has_grad()) return;
      const double* g = y.grad().data();
      double* gx = x.mutable_grad().data();
      for (std::size_t o = 0; o < v.outer; ++o) {
        double* dst = gx + (o * v.len + begin) * v.inner;
        const double* src = g + o * len * v.inner;
        for (std::size_t i = 0; i < len * v.inner; ++i) dst[i] += src[i];
      }
    });
  }
  return y;
}

Tensor concat_axis(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat_axis: no inputs");
  const Shape& ref = parts.front().shape();
  if (axis >= ref.size()) throw ShapeError("concat_axis: axis out of range for " + shape_to_string(ref));
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == ref.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (i == axis) || s[i] == ref[i];
    if (!ok) throw ShapeError("concat_axis: " + shape_to_string(s) + " incompatible with " + shape_to_string(ref));
    total += s[axis];
  }
  Shape out_shape = ref;
  out_shape[axis] = total;
  const auto v = axis_view(out_shape, axis);
  std::vector<double> out(shape_numel(out_shape));
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t len = p.dim(axis);
    const double* pd = p.data().data();
    for (std::size_t o = 0; o < v.outer; ++o) {
      std::copy(pd + o * len * v.inner, pd + (o + 1) * len * v.inner,
                out.begin() + static_cast<std::ptrdiff_t>((o * total + offset) * v.inner));
    }
    offset += len;
  }
  Tensor y(out_shape, std::move(out));
  bool record = false;
  for (const auto& p : parts) record = record || Tape::should_record({&p});
  if (record) {
    Tape::active()->record(y, [parts, y, v, total, axis]() mutable {
      if (!y.has_grad()) return;
      const double* g = y.grad().data();
      std::size_t offset = 0;
      for (auto& p : parts) {
        const std::size_t len = p.dim(axis);
        if (p.requires_grad()) {
          double* gp = p.mutable_grad().data();
          for (std::size_t o = 0; o < v.outer; ++o) {
            const double* src = g + (o * total + offset) * v.inner;
            double* dst = gp + o * len * v.inner;
            for (std::size_t i = 0; i < len * v.inner; ++i) dst[i] += src[i];
          }
        }
        offset += len;
      }
    });
  }
  return y;
}

Tensor graph_propagate(const Tensor& adj, const Tensor& x) {
  require_rank(adj, 2, "graph_propagate");
  const std::size_t t = adj.dim(0);
  if (adj.dim(1) != t) throw ShapeError("graph_propagate: operator must be square, got " + shape_to_string(adj.shape()));
  if (x.rank() != 2 && x.rank() != 3) throw ShapeError("graph_propagate: features must be rank 2 or 3");
  const bool batched = x.rank() == 3;
  const std::size_t batch = batched ? x.dim(0) : 1;
  const std::size_t nodes = x.dim(x.rank() - 2);
  const std::size_t f = x.dim(x.rank() - 1);
  if (nodes != t) {
    throw ShapeError("graph_propagate: operator " + shape_to_string(adj.shape()) + " does not match features " +
                     shape_to_string(x.shape()));
  }
  std::vector<double> out(x.numel(), 0.0);
  const double* ad = adj.data().data();
  const double* xd = x.data().data();
  for (std::size_t b = 0; b < batch; ++b) gemm_nn(ad, xd + b * t * f, out.data() + b * t * f, t, t, f);
  Tensor y(x.shape(), std::move(out));
  if (Tape::should_record({&x})) {
    Tape::active()->record(y, [adj, x, y, batch, t, f]() mutable {
      if (!y.has_grad()) return;
      const double* ad = adj.data().data();
      const double* g = y.grad().data();
      double* gx = x.mutable_grad().data();
      for (std::size_t b = 0; b < batch; ++b) gemm_tn(ad, g + b * t * f, gx + b * t * f, t, t, f);
    });
  }
  return y;
}

Tensor pairwise_sum(const Tensor& row, const Tensor& col) {
  require_rank(row, 2, "pairwise_sum");
  require_same_shape(row, col, "pairwise_sum");
  const std::size_t batch = row.dim(0), t = row.dim(1);
  std::vector<double> out(batch * t * t);
  const double* rd = row.data().data();
  const double* cd = col.data().data();
  for (std::size_t g = 0; g < batch; ++g)
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t j = 0; j < t; ++j) out[(g * t + i) * t + j] = rd[g * t + i] + cd[g * t + j];
  Tensor y({batch, t, t}, std::move(out));
  if (Tape::should_record({&row, &col})) {
    Tape::active()->record(y, [row, col, y, batch, t]() mutable {
      if (!y.has_grad()) return;
      const double* g = y.grad().data();
      if (row.requires_grad()) {
        double* gr = row.mutable_grad().data();
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = 0; j < t; ++j) gr[b * t + i] += g[(b * t + i) * t + j];
      }
      if (col.requires_grad()) {
        double* gc = col.mutable_grad().data();
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = 0; j < t; ++j) gc[b * t + j] += g[(b * t + i) * t + j];
      }
    });
  }
  return y;
}

Tensor cross_entropy_loss(const Tensor& logits, std::span<const int> labels, std::span<const double> class_weights) {
  require_rank(logits, 2, "cross_entropy_loss");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != batch) {
    throw ShapeError("cross_entropy_loss: " + std::to_string(labels.size()) + " labels for batch of " +
                     std::to_string(batch));
  }
  if (!class_weights.empty() && class_weights.size() != classes) {
    throw ShapeError("cross_entropy_loss: class weight count does not match class count");
  }
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw Error("cross_entropy_loss: label " + std::to_string(label) + " outside [0, " + std::to_string(classes) +
                  ")");
    }
  }
  std::vector<double> probs(batch * classes);
  softmax_forward(logits.data().data(), probs.data(), batch, classes, [](std::size_t, std::size_t) { return true; });

  std::vector<double> weights(batch, 1.0);
  if (!class_weights.empty())
    for (std::size_t b = 0; b < batch; ++b) weights[b] = class_weights[static_cast<std::size_t>(labels[b])];
  const double norm = std::accumulate(weights.begin(), weights.end(), 0.0);

  const double* z = logits.data().data();
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    // log-sum-exp form keeps large margins finite
    const double* zr = z + b * classes;
    const double mx = *std::max_element(zr, zr + classes);
    double s = 0.0;
    for (std::size_t c = 0; c < classes; ++c) s += std::exp(zr[c] - mx);
    const double nll = mx + std::log(s) - zr[labels[b]];
    loss += weights[b] * nll;
  }
  loss /= norm;
  Tensor y = Tensor::scalar(loss);
  if (Tape::should_record({&logits})) {
    std::vector<int> lab(labels.begin(), labels.end());
    Tape::active()->record(y, [logits, y, probs = std::move(probs), weights = std::move(weights), lab = std::move(lab),
                               norm, batch, classes]() mutable {
      if (!y.has_grad()) return;
      const double g = y.grad()[0];
      double* gz = logits.mutable_grad().data();
      for (std::size_t b = 0; b < batch; ++b) {
        const double w = g * weights[b] / norm;
        for (std::size_t c = 0; c < classes; ++c) {
          const double onehot = static_cast<int>(c) == lab[b] ? 1.0 : 0.0;
          gz[b * classes + c] += w * (probs[b * classes + c] - onehot);
        }
      }
    });
  }
  return y;
}

}  // namespace hargnn::ops
