#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hargnn/tensor.hpp"

/// Differentiable tensor operations. Every op records its adjoint on the
/// active Tape when any input requires a gradient.
namespace hargnn::ops {

/// [m×k]·[k×p] → [m×p].
Tensor matmul(const Tensor& a, const Tensor& b);

/// Batched product [G×m×k]·[G×k×p] → [G×m×p].
Tensor bmm(const Tensor& a, const Tensor& b);

/// Applies a [in×out] weight to the last axis of any tensor [..., in].
Tensor linear(const Tensor& x, const Tensor& weight);

/// Swaps the two trailing axes of a rank-2 or rank-3 tensor.
Tensor transpose_last2(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

/// x[..., n] + bias[n], broadcast over leading axes.
Tensor add_bias(const Tensor& x, const Tensor& bias);

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope = 0.2);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);

/// Softmax over the last axis, max-subtracted.
Tensor softmax_rows(const Tensor& x);

/// Softmax over the last axis of [..., t, t] restricted to entries where
/// mask[i*t + j] != 0. Masked entries come out as exactly 0.
Tensor masked_softmax_rows(const Tensor& x, std::span<const std::uint8_t> mask);

/// Arithmetic mean along `axis`; the axis is removed from the shape.
Tensor mean_axis(const Tensor& x, std::size_t axis);

Tensor sum_all(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);

/// Elements [begin, end) along `axis`.
Tensor slice_axis(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);

/// Concatenation along `axis`; all other extents must agree.
Tensor concat_axis(const std::vector<Tensor>& parts, std::size_t axis);

/// Neighbourhood propagation with a constant operator: out[b] = adj · x[b]
/// for adj [t×t] and x [B×t×f] (or [t×f]). No gradient flows into adj.
Tensor graph_propagate(const Tensor& adj, const Tensor& x);

/// out[g, i, j] = row[g, i] + col[g, j] for row, col of shape [G×t].
Tensor pairwise_sum(const Tensor& row, const Tensor& col);

/// Mean (optionally class-weighted) negative log-likelihood of `labels`
/// under softmax(logits). logits [B×C]; class_weights empty or length C.
Tensor cross_entropy_loss(const Tensor& logits, std::span<const int> labels,
                          std::span<const double> class_weights = {});

}  // namespace hargnn::ops
