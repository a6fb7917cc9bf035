#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "hargnn/error.hpp"
#include "hargnn/gradcheck.hpp"
#include "hargnn/graph.hpp"
#include "hargnn/layers.hpp"
#include "hargnn/models.hpp"
#include "hargnn/ops.hpp"
#include "hargnn/tape.hpp"
#include "model_oracles.hpp"
#include "support.hpp"

using namespace hargnn;
using test_support::max_abs_diff;
using test_support::random_tensor;

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

ModelConfig tiny_config(ModelKind kind, std::size_t nodes) {
  ModelConfig c;
  c.kind = kind;
  c.sensor_widths = {3, 2};
  c.n_classes = 3;
  c.nodes = nodes;
  c.hidden = 4;
  c.gcn_layers = 2;
  c.lstm_hidden = 3;
  c.gat_layers = 2;
  c.gat_width = 3;
  return c;
}

}  // namespace

TEST_CASE("gcn_layer matches node-loop message passing on 20 instances") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t b = pick(rng, 1, 3), t = pick(rng, 2, 8), in = pick(rng, 1, 5), out = pick(rng, 1, 5);
    const Tensor adj = normalize_adjacency(path_adjacency(t), t, trial % 2 == 0);
    const Tensor h = random_tensor({b, t, in}, rng);
    const Tensor w = random_tensor({in, out}, rng);
    const Tensor got = layers::gcn_layer(adj, h, w);
    CHECK(max_abs_diff(got.data(), oracle::gcn_layer(adj, h, w)) <= 1e-10);
  }
}

TEST_CASE("inter_sensor_attention matches the per-timestamp formula on 20 instances") {
  std::mt19937_64 rng(202);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t b = pick(rng, 1, 3), t = pick(rng, 1, 5), n = pick(rng, 1, 4), d = pick(rng, 1, 6);
    const Tensor x = random_tensor({b, t, n, d}, rng, -2.0, 2.0);
    const Tensor wq = random_tensor({d, d}, rng), wk = random_tensor({d, d}, rng), wv = random_tensor({d, d}, rng);
    const auto got = layers::inter_sensor_attention(x, wq, wk, wv);
    const auto want = oracle::attention(x, wq, wk, wv);
    CHECK(max_abs_diff(got.output.data(), want.output) <= 1e-10);
    CHECK(max_abs_diff(got.weights.data(), want.weights) <= 1e-10);
  }
}

TEST_CASE("gat_layer matches the per-edge formula on 20 instances") {
  std::mt19937_64 rng(303);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t b = pick(rng, 1, 3), t = pick(rng, 2, 8), in = pick(rng, 1, 5), f = pick(rng, 1, 5);
    std::mt19937_64 tmp(static_cast<std::uint64_t>(trial));
    auto set = test_support::random_segments(1, t, {1}, 1, tmp);
    const std::vector<std::size_t> idx{0};
    const auto neighbours = batch_from_segments(set, idx, true).neighbours;
    const Tensor h = random_tensor({b, t, in}, rng);
    const Tensor w = random_tensor({in, f}, rng);
    const Tensor a = random_tensor({2 * f}, rng);
    const Tensor got = layers::gat_layer(neighbours, h, w, a, 0.2);
    CHECK(max_abs_diff(got.data(), oracle::gat_layer(neighbours, h, w, a, 0.2)) <= 1e-10);
  }
}

TEST_CASE("gat attention is zero outside A + I and rows sum to one") {
  std::mt19937_64 rng(4);
  const std::size_t t = 6;
  auto set = test_support::random_segments(1, t, {2}, 1, rng);
  const std::vector<std::size_t> idx{0};
  const auto neighbours = batch_from_segments(set, idx, true).neighbours;
  Tensor alpha;
  layers::gat_layer(neighbours, random_tensor({2, t, 3}, rng), random_tensor({3, 4}, rng), random_tensor({8}, rng), 0.2,
                    &alpha);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < t; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < t; ++j) {
        const double v = alpha.data()[(b * t + i) * t + j];
        if (!neighbours[i * t + j]) CHECK(v == 0.0);
        total += v;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("lstm_forward matches a scalar recurrence") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t b = pick(rng, 1, 3), t = pick(rng, 1, 6), in = pick(rng, 1, 4), h = pick(rng, 1, 4);
    const Tensor x = random_tensor({b, t, in}, rng);
    const layers::LstmParams p{random_tensor({in, 4 * h}, rng), random_tensor({h, 4 * h}, rng),
                               random_tensor({4 * h}, rng)};
    CHECK(max_abs_diff(layers::lstm_forward(x, p).data(), oracle::lstm(x, p.w_input, p.w_hidden, p.bias)) <= 1e-12);
  }
}

TEST_CASE("attention rows sum to one") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = random_tensor({2, 3, 4, 5}, rng, -5.0, 5.0);
    const auto r = layers::inter_sensor_attention(x, random_tensor({5, 5}, rng), random_tensor({5, 5}, rng),
                                                  random_tensor({5, 5}, rng));
    const auto w = r.weights.data();
    for (std::size_t row = 0; row < w.size() / 4; ++row) {
      double total = 0.0;
      for (std::size_t c = 0; c < 4; ++c) total += w[row * 4 + c];
      CHECK(std::abs(total - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("inter-sensor attention is equivariant to sensor permutation") {
  std::mt19937_64 rng(12);
  const std::size_t b = 2, t = 3, n = 4, d = 3;
  const Tensor x = random_tensor({b, t, n, d}, rng);
  const Tensor wq = random_tensor({d, d}, rng), wk = random_tensor({d, d}, rng), wv = random_tensor({d, d}, rng);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> px(x.numel());
  for (std::size_t g = 0; g < b * t; ++g)
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t k = 0; k < d; ++k) px[(g * n + p) * d + k] = x.data()[(g * n + perm[p]) * d + k];
  const auto base = layers::inter_sensor_attention(x, wq, wk, wv);
  const auto permuted = layers::inter_sensor_attention(Tensor({b, t, n, d}, px), wq, wk, wv);
  double worst = 0.0;
  for (std::size_t g = 0; g < b * t; ++g)
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t k = 0; k < d; ++k)
        worst = std::max(worst, std::abs(permuted.output.data()[(g * n + p) * d + k] -
                                         base.output.data()[(g * n + perm[p]) * d + k]));
      for (std::size_t r = 0; r < n; ++r)
        worst = std::max(worst, std::abs(permuted.weights.data()[(g * n + p) * n + r] -
                                         base.weights.data()[(g * n + perm[p]) * n + perm[r]]));
    }
  CHECK(worst <= 1e-12);
}

TEST_CASE("without self loops a node's output ignores its own features") {
  std::mt19937_64 rng(19);
  const std::size_t t = 6;
  const Tensor adj = normalize_adjacency(path_adjacency(t), t, false);
  const Tensor h = random_tensor({1, t, 3}, rng);
  const Tensor w = random_tensor({3, 4}, rng);
  const Tensor base = layers::gcn_layer(adj, h, w);
  for (std::size_t node = 0; node < t; ++node) {
    std::vector<double> changed(h.data().begin(), h.data().end());
    for (std::size_t k = 0; k < 3; ++k) changed[node * 3 + k] += 5.0;
    const Tensor out = layers::gcn_layer(adj, Tensor({1, t, 3}, changed), w);
    for (std::size_t k = 0; k < 4; ++k) CHECK(out.data()[node * 4 + k] == base.data()[node * 4 + k]);
  }
}

TEST_CASE("model outputs and parameter layout") {
  const std::size_t t = 6;
  std::mt19937_64 rng(3);
  const auto set = test_support::random_segments(4, t, {3, 2}, 3, rng);
  const std::vector<std::size_t> idx{0, 1, 2, 3};
  const auto batch = batch_from_segments(set, idx, true);
  for (auto kind : {ModelKind::GcnAttention, ModelKind::Gcn, ModelKind::Ragnn}) {
    CAPTURE(to_string(kind));
    const auto model = make_model(tiny_config(kind, t), 1);
    ForwardTrace trace;
    const Tensor logits = model->forward(batch, &trace);
    CHECK(logits.shape() == Shape{4, 3});
    CHECK(trace.features.dim(0) == 4);
    if (kind == ModelKind::GcnAttention) {
      CHECK(trace.attention.shape() == Shape{4, t, 2, 2});
      CHECK(trace.features.dim(1) == 2 * 4);
      CHECK(model->parameter("gcn.s1.w0").shape() == Shape{2, 4});
      CHECK(model->parameter("head.w").shape() == Shape{8, 3});
    } else if (kind == ModelKind::Gcn) {
      CHECK(model->parameter("gcn.w0").shape() == Shape{5, 4});
      CHECK(model->parameter("head.w").shape() == Shape{4, 3});
    } else {
      CHECK(model->parameter("lstm.s0.w_input").shape() == Shape{3, 12});
      CHECK(model->parameter("gat.s1.l1.a").shape() == Shape{6});
      CHECK(model->parameter("head.w").shape() == Shape{t * 3 * 2, 3});
    }
    for (double b : model->parameter("head.b").data()) CHECK(b == 0.0);
  }
}

TEST_CASE("same seed gives identical parameters, different seeds differ") {
  const auto a = make_model(tiny_config(ModelKind::GcnAttention, 6), 5);
  const auto b = make_model(tiny_config(ModelKind::GcnAttention, 6), 5);
  const auto c = make_model(tiny_config(ModelKind::GcnAttention, 6), 6);
  const auto& pa = a->named_parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == b->named_parameters()[i].name);
    CHECK(max_abs_diff(pa[i].value.data(), b->named_parameters()[i].value.data()) == 0.0);
  }
  CHECK(max_abs_diff(pa[0].value.data(), c->named_parameters()[0].value.data()) > 0.0);
}

TEST_CASE("batched forward equals per-segment forward") {
  const std::size_t t = 5;
  std::mt19937_64 rng(31);
  const auto set = test_support::random_segments(5, t, {3, 2}, 3, rng);
  const std::vector<std::size_t> all{0, 1, 2, 3, 4};
  for (auto kind : {ModelKind::GcnAttention, ModelKind::Gcn, ModelKind::Ragnn}) {
    CAPTURE(to_string(kind));
    const auto model = make_model(tiny_config(kind, t), 2);
    const Tensor full = model->forward(batch_from_segments(set, all, true));
    for (std::size_t i = 0; i < 5; ++i) {
      const std::vector<std::size_t> one{i};
      const Tensor single = model->forward(batch_from_segments(set, one, true));
      const auto row = full.data().subspan(i * 3, 3);
      CHECK(max_abs_diff(single.data(), row) <= 1e-12);
    }
  }
}

TEST_CASE("end-to-end loss gradients match central differences for every model") {
  const std::size_t t = 5;
  for (auto kind : {ModelKind::GcnAttention, ModelKind::Gcn, ModelKind::Ragnn}) {
    for (std::uint64_t seed = 1; seed <= 2; ++seed) {
      CAPTURE(to_string(kind));
      CAPTURE(seed);
      std::mt19937_64 rng(seed);
      const auto set = test_support::random_segments(3, t, {3, 2}, 3, rng);
      const std::vector<std::size_t> idx{0, 1, 2};
      const auto batch = batch_from_segments(set, idx, true);
      auto config = tiny_config(kind, t);
      if (kind == ModelKind::GcnAttention) config.attention_repeats = 2;
      const auto model = make_model(config, seed);
      const double err = gradient_check(
          [&] { return ops::cross_entropy_loss(model->forward(batch), batch.labels); }, model->parameters(), 1e-5);
      CHECK(err <= 1e-4);
    }
  }
}

TEST_CASE("attention repeats share weights") {
  auto c1 = tiny_config(ModelKind::GcnAttention, 5);
  auto c2 = c1;
  c2.attention_repeats = 3;
  const auto m1 = make_model(c1, 1), m2 = make_model(c2, 1);
  CHECK(m1->named_parameters().size() == m2->named_parameters().size());
  std::mt19937_64 rng(1);
  const auto set = test_support::random_segments(2, 5, {3, 2}, 3, rng);
  const std::vector<std::size_t> idx{0, 1};
  const auto batch = batch_from_segments(set, idx, true);
  CHECK(max_abs_diff(m1->forward(batch).data(), m2->forward(batch).data()) > 0.0);
}

TEST_CASE("model config validation and JSON round trip") {
  CHECK(parse_model_kind("gcn_attention") == ModelKind::GcnAttention);
  CHECK(parse_model_kind("ragnn") == ModelKind::Ragnn);
  CHECK_THROWS_AS(parse_model_kind("transformer"), ConfigError);
  auto c = tiny_config(ModelKind::Ragnn, 7);
  c.leaky_slope = 0.1;
  c.self_loops = false;
  CHECK(ModelConfig::from_json(c.to_json()) == c);
  auto bad = c;
  bad.gcn_layers = 0;
  bad.kind = ModelKind::Gcn;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  auto no_sensors = c;
  no_sensors.sensor_widths.clear();
  CHECK_THROWS_AS(no_sensors.validate(), ConfigError);
}

TEST_CASE("models reject mismatched batches") {
  std::mt19937_64 rng(1);
  const auto set = test_support::random_segments(2, 6, {3, 2}, 3, rng);
  const std::vector<std::size_t> idx{0, 1};
  const auto batch = batch_from_segments(set, idx, true);
  CHECK_THROWS_AS(make_model(tiny_config(ModelKind::Ragnn, 8), 1)->forward(batch), ShapeError);
  auto wide = tiny_config(ModelKind::GcnAttention, 6);
  wide.sensor_widths = {3, 3};
  CHECK_THROWS_AS(make_model(wide, 1)->forward(batch), ShapeError);
  auto one = tiny_config(ModelKind::Gcn, 6);
  one.sensor_widths = {5};
  CHECK_THROWS_AS(make_model(one, 1)->forward(batch), ShapeError);
}
