#include "hargnn/layers.hpp"

#include <cmath>

#include "hargnn/error.hpp"
#include "hargnn/ops.hpp"

namespace hargnn::layers {

Tensor gcn_layer(const Tensor& norm_adjacency, const Tensor& h, const Tensor& weight) {
  // (Â H) W == Â (H W); multiplying by W first keeps the propagation narrow.
  return ops::relu(ops::graph_propagate(norm_adjacency, ops::linear(h, weight)));
}

AttentionResult inter_sensor_attention(const Tensor& stacked, const Tensor& w_query, const Tensor& w_key,
                                       const Tensor& w_value) {
  if (stacked.rank() != 4) throw ShapeError("inter_sensor_attention: expected B×t×n×d, got " + shape_to_string(stacked.shape()));
  const std::size_t b = stacked.dim(0), t = stacked.dim(1), n = stacked.dim(2), d = stacked.dim(3);
  for (const Tensor* w : {&w_query, &w_key, &w_value}) {
    if (w->rank() != 2 || w->dim(0) != d) {
      throw ShapeError("inter_sensor_attention: projection " + shape_to_string(w->shape()) + " does not fit width " +
                       std::to_string(d));
    }
  }
  const Shape groups{b * t, n, d};
  const Tensor h = ops::reshape(stacked, groups);
  const Tensor q = ops::linear(h, w_query);
  const Tensor k = ops::linear(h, w_key);
  const Tensor v = ops::linear(h, w_value);
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(w_key.dim(1)));
  const Tensor scores = ops::scale(ops::bmm(q, ops::transpose_last2(k)), inv_scale);
  const Tensor weights = ops::softmax_rows(scores);
  const Tensor out = ops::bmm(weights, v);
  return {ops::reshape(out, {b, t, n, w_value.dim(1)}), ops::reshape(weights, {b, t, n, n})};
}

Tensor stack_sensors(const std::vector<Tensor>& per_sensor) {
  if (per_sensor.empty()) throw ShapeError("stack_sensors: no sensors");
  const auto& s = per_sensor.front().shape();
  if (s.size() != 3) throw ShapeError("stack_sensors: expected B×t×d tensors");
  const Tensor cat = ops::concat_axis(per_sensor, 2);
  return ops::reshape(cat, {s[0], s[1], per_sensor.size(), s[2]});
}

Tensor pool_and_flatten(const Tensor& attended) {
  if (attended.rank() != 4) throw ShapeError("pool_and_flatten: expected B×t×n×d");
  const Tensor pooled = ops::mean_axis(attended, 1);
  return ops::reshape(pooled, {attended.dim(0), attended.dim(2) * attended.dim(3)});
}

Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return ops::add_bias(ops::matmul(x, weight), bias);
}

Tensor lstm_forward(const Tensor& x, const LstmParams& params) {
  if (x.rank() != 3) throw ShapeError("lstm_forward: expected B×t×in, got " + shape_to_string(x.shape()));
  const std::size_t b = x.dim(0), t = x.dim(1);
  const std::size_t h = params.w_hidden.dim(0);
  if (params.w_input.dim(0) != x.dim(2) || params.w_input.dim(1) != 4 * h || params.w_hidden.dim(1) != 4 * h ||
      params.bias.dim(0) != 4 * h) {
    throw ShapeError("lstm_forward: parameter shapes do not match input width " + std::to_string(x.dim(2)));
  }
  // input projection for every timestep at once
  const Tensor projected = ops::add_bias(ops::linear(x, params.w_input), params.bias);  // B×t×4h
  Tensor hidden = Tensor::zeros({b, h});
  Tensor cell = Tensor::zeros({b, h});
  std::vector<Tensor> states;
  states.reserve(t);
  for (std::size_t step = 0; step < t; ++step) {
    const Tensor xt = ops::reshape(ops::slice_axis(projected, 1, step, step + 1), {b, 4 * h});
    const Tensor gates = ops::add(xt, ops::matmul(hidden, params.w_hidden));
    const Tensor in_gate = ops::sigmoid(ops::slice_axis(gates, 1, 0, h));
    const Tensor forget_gate = ops::sigmoid(ops::slice_axis(gates, 1, h, 2 * h));
    const Tensor candidate = ops::tanh(ops::slice_axis(gates, 1, 2 * h, 3 * h));
    const Tensor out_gate = ops::sigmoid(ops::slice_axis(gates, 1, 3 * h, 4 * h));
    cell = ops::add(ops::mul(forget_gate, cell), ops::mul(in_gate, candidate));
    hidden = ops::mul(out_gate, ops::tanh(cell));
    states.push_back(ops::reshape(hidden, {b, 1, h}));
  }
  return ops::concat_axis(states, 1);
}

Tensor gat_layer(std::span<const std::uint8_t> neighbours, const Tensor& h, const Tensor& weight,
                 const Tensor& attention, double slope, Tensor* alpha_out) {
  if (h.rank() != 3) throw ShapeError("gat_layer: expected B×t×f, got " + shape_to_string(h.shape()));
  const std::size_t b = h.dim(0), t = h.dim(1);
  const std::size_t width = weight.dim(1);
  if (attention.rank() != 1 || attention.dim(0) != 2 * width) {
    throw ShapeError("gat_layer: attention vector must have length 2x" + std::to_string(width));
  }
  const Tensor z = ops::linear(h, weight);  // B×t×f′
  const Tensor a = ops::reshape(attention, {2 * width, 1});
  const Tensor left = ops::reshape(ops::linear(z, ops::slice_axis(a, 0, 0, width)), {b, t});
  const Tensor right = ops::reshape(ops::linear(z, ops::slice_axis(a, 0, width, 2 * width)), {b, t});
  const Tensor scores = ops::leaky_relu(ops::pairwise_sum(left, right), slope);
  const Tensor alpha = ops::masked_softmax_rows(scores, neighbours);
  if (alpha_out) *alpha_out = alpha;
  return ops::bmm(alpha, z);
}

}  // namespace hargnn::layers
