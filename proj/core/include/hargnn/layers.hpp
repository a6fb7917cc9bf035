#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hargnn/tensor.hpp"

/// Functional building blocks of the three classifiers. Parameters are
/// passed in explicitly so each block can be checked against a direct
/// evaluation of its formula.
namespace hargnn::layers {

/// ReLU(Â · H · W) for H [B×t×in] (or [t×in]) and W [in×out].
Tensor gcn_layer(const Tensor& norm_adjacency, const Tensor& h, const Tensor& weight);

struct AttentionResult {
  Tensor output;   // B×t×n×d
  Tensor weights;  // B×t×n×n, rows sum to 1
};

/// Scaled dot-product attention across sensors at every timestamp:
/// Â = softmax(H_j Wq (H_j Wk)ᵀ / √d), output Â H_j Wv, where H_j [n×d]
/// stacks the sensors' features at timestamp j. `stacked` is B×t×n×d.
AttentionResult inter_sensor_attention(const Tensor& stacked, const Tensor& w_query, const Tensor& w_key,
                                       const Tensor& w_value);

/// Stacks per-sensor B×t×d tensors into B×t×n×d.
Tensor stack_sensors(const std::vector<Tensor>& per_sensor);

/// Mean over timestamps of B×t×n×d, flattened to B×(n·d).
Tensor pool_and_flatten(const Tensor& attended);

/// Affine output layer: x [B×F] · W [F×C] + b [C].
Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Gate order along the 4h axis: input, forget, candidate, output.
struct LstmParams {
  Tensor w_input;   // in×4h
  Tensor w_hidden;  // h×4h
  Tensor bias;      // 4h
};

/// Runs the recurrent cell over x [B×t×in] from a zero state and returns
/// every hidden state, B×t×h.
Tensor lstm_forward(const Tensor& x, const LstmParams& params);

/// Graph attention over neighbourhoods given by `neighbours` (t×t, 1 where
/// j ∈ N(i)): z = H W, e_ij = LeakyReLU(a_left·z_i + a_right·z_j),
/// α = softmax over N(i), out_i = Σ_j α_ij z_j. H is B×t×f, W f×f′,
/// attention vector [2f′]. `alpha_out`, when given, receives α (B×t×t).
Tensor gat_layer(std::span<const std::uint8_t> neighbours, const Tensor& h, const Tensor& weight,
                 const Tensor& attention, double slope, Tensor* alpha_out = nullptr);

}  // namespace hargnn::layers
