#pragma once

// Loop-based reference implementations of the layer formulas, written
// directly from the per-node / per-edge definitions.

#include <cmath>
#include <cstdint>
#include <vector>

#include "hargnn/tensor.hpp"

namespace oracle {

inline double at3(const hargnn::Tensor& x, std::size_t a, std::size_t b, std::size_t c) {
  const auto& s = x.shape();
  return x.data()[(a * s[1] + b) * s[2] + c];
}

/// out[b,i,:] = relu(Σ_j Â[i,j] Σ_k H[b,j,k] W[k,:])
inline std::vector<double> gcn_layer(const hargnn::Tensor& adj, const hargnn::Tensor& h, const hargnn::Tensor& w) {
  const std::size_t batch = h.dim(0), t = h.dim(1), in = h.dim(2), out_w = w.dim(1);
  std::vector<double> out(batch * t * out_w, 0.0);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t o = 0; o < out_w; ++o) {
        double acc = 0.0;
        for (std::size_t j = 0; j < t; ++j) {
          const double a = adj.at({i, j});
          if (a == 0.0) continue;
          double msg = 0.0;
          for (std::size_t k = 0; k < in; ++k) msg += at3(h, b, j, k) * w.at({k, o});
          acc += a * msg;
        }
        out[(b * t + i) * out_w + o] = acc > 0.0 ? acc : 0.0;
      }
  return out;
}

struct Attention {
  std::vector<double> output;   // B×t×n×dv
  std::vector<double> weights;  // B×t×n×n
};

/// Per timestamp: α[p,r] = softmax_r(q_p·k_r / √d_k), out_p = Σ_r α[p,r] v_r
inline Attention attention(const hargnn::Tensor& x, const hargnn::Tensor& wq, const hargnn::Tensor& wk,
                           const hargnn::Tensor& wv) {
  const auto& s = x.shape();
  const std::size_t batch = s[0], t = s[1], n = s[2], d = s[3], dk = wk.dim(1), dv = wv.dim(1);
  const auto xv = x.data();
  auto proj = [&](std::size_t b, std::size_t j, std::size_t p, const hargnn::Tensor& w, std::size_t col) {
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) acc += xv[((b * t + j) * n + p) * d + k] * w.at({k, col});
    return acc;
  };
  Attention out;
  out.output.assign(batch * t * n * dv, 0.0);
  out.weights.assign(batch * t * n * n, 0.0);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t j = 0; j < t; ++j)
      for (std::size_t p = 0; p < n; ++p) {
        std::vector<double> score(n);
        for (std::size_t r = 0; r < n; ++r) {
          double dot = 0.0;
          for (std::size_t c = 0; c < dk; ++c) dot += proj(b, j, p, wq, c) * proj(b, j, r, wk, c);
          score[r] = dot / std::sqrt(static_cast<double>(dk));
        }
        double denom = 0.0;
        for (double sc : score) denom += std::exp(sc);
        for (std::size_t r = 0; r < n; ++r) {
          const double alpha = std::exp(score[r]) / denom;
          out.weights[((b * t + j) * n + p) * n + r] = alpha;
          for (std::size_t c = 0; c < dv; ++c)
            out.output[((b * t + j) * n + p) * dv + c] += alpha * proj(b, j, r, wv, c);
        }
      }
  return out;
}

/// e_ij = LeakyReLU(a_l·z_i + a_r·z_j) over j ∈ N(i) ∪ {i}, α = softmax_j(e_ij),
/// out_i = Σ_j α_ij z_j with z = h W
inline std::vector<double> gat_layer(const std::vector<std::uint8_t>& neighbours, const hargnn::Tensor& h,
                                     const hargnn::Tensor& w, const hargnn::Tensor& a, double slope) {
  const std::size_t batch = h.dim(0), t = h.dim(1), in = h.dim(2), f = w.dim(1);
  std::vector<double> out(batch * t * f, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    std::vector<std::vector<double>> z(t, std::vector<double>(f, 0.0));
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t o = 0; o < f; ++o)
        for (std::size_t k = 0; k < in; ++k) z[i][o] += at3(h, b, i, k) * w.at({k, o});
    for (std::size_t i = 0; i < t; ++i) {
      std::vector<std::size_t> nbrs;
      std::vector<double> e;
      for (std::size_t j = 0; j < t; ++j) {
        if (!neighbours[i * t + j]) continue;
        double s = 0.0;
        for (std::size_t o = 0; o < f; ++o) s += a.data()[o] * z[i][o] + a.data()[f + o] * z[j][o];
        nbrs.push_back(j);
        e.push_back(s > 0.0 ? s : slope * s);
      }
      double denom = 0.0;
      for (double v : e) denom += std::exp(v);
      for (std::size_t m = 0; m < nbrs.size(); ++m)
        for (std::size_t o = 0; o < f; ++o) out[(b * t + i) * f + o] += std::exp(e[m]) / denom * z[nbrs[m]][o];
    }
  }
  return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Scalar LSTM with gate blocks ordered input, forget, candidate, output.
inline std::vector<double> lstm(const hargnn::Tensor& x, const hargnn::Tensor& wi, const hargnn::Tensor& wh,
                                const hargnn::Tensor& bias) {
  const std::size_t batch = x.dim(0), t = x.dim(1), in = x.dim(2), hs = wh.dim(0);
  std::vector<double> out(batch * t * hs);
  for (std::size_t b = 0; b < batch; ++b) {
    std::vector<double> h(hs, 0.0), c(hs, 0.0);
    for (std::size_t step = 0; step < t; ++step) {
      std::vector<double> g(4 * hs);
      for (std::size_t u = 0; u < 4 * hs; ++u) {
        double acc = bias.data()[u];
        for (std::size_t k = 0; k < in; ++k) acc += at3(x, b, step, k) * wi.at({k, u});
        for (std::size_t k = 0; k < hs; ++k) acc += h[k] * wh.at({k, u});
        g[u] = acc;
      }
      for (std::size_t u = 0; u < hs; ++u) {
        const double ig = sigmoid(g[u]), fg = sigmoid(g[hs + u]), cand = std::tanh(g[2 * hs + u]),
                     og = sigmoid(g[3 * hs + u]);
        c[u] = fg * c[u] + ig * cand;
        h[u] = og * std::tanh(c[u]);
        out[(b * t + step) * hs + u] = h[u];
      }
    }
  }
  return out;
}

}  // namespace oracle
