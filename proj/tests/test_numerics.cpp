#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>
#include <stdexcept>

#include "hargnn/adam.hpp"
#include "hargnn/error.hpp"
#include "hargnn/gradcheck.hpp"
#include "hargnn/ops.hpp"
#include "hargnn/parallel.hpp"
#include "hargnn/tape.hpp"
#include "support.hpp"

using namespace hargnn;
using test_support::max_abs_diff;
using test_support::random_tensor;

TEST_CASE("tensor construction and accessors") {
  const Tensor m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  CHECK(m.shape() == Shape{2, 3});
  CHECK(m.at({1, 2}) == 6.0);
  CHECK(Tensor::scalar(2.5).item() == 2.5);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), ShapeError);
  CHECK_THROWS_AS(m.item(), ShapeError);

  Tensor c = m.clone();
  CHECK_FALSE(c.same_storage(m));
  c.mutable_data()[0] = 9.0;
  CHECK(m.at({0, 0}) == 1.0);
}

TEST_CASE("tape backward runs once") {
  Tensor x = Tensor::vector({1.0, -2.0, 3.0});
  x.set_requires_grad(true);
  Tape tape;
  const Tensor loss = ops::sum_all(ops::mul(x, x));
  tape.backward(loss);
  CHECK(max_abs_diff(x.grad(), std::vector<double>{2.0, -4.0, 6.0}) == 0.0);
  CHECK(tape.consumed());
  CHECK_THROWS_AS(tape.backward(loss), std::logic_error);
}

TEST_CASE("backward needs a scalar that requires grad") {
  Tape tape;
  const Tensor x = Tensor::vector({1.0, 2.0});
  CHECK_THROWS(tape.backward(ops::sum_all(x)));
  Tensor y = Tensor::vector({1.0, 2.0});
  y.set_requires_grad(true);
  CHECK_THROWS_AS(tape.backward(ops::scale(y, 2.0)), ShapeError);
}

TEST_CASE("no-grad guard records nothing") {
  Tensor x = Tensor::vector({1.0, 2.0});
  x.set_requires_grad(true);
  Tape tape;
  {
    NoGradGuard guard;
    const Tensor y = ops::mul(x, x);
    CHECK_FALSE(y.requires_grad());
  }
  CHECK(tape.size() == 0);
}

TEST_CASE("gradient accumulates over shared inputs") {
  Tensor x = Tensor::vector({0.5, -1.5});
  x.set_requires_grad(true);
  Tape tape;
  const Tensor y = ops::add(ops::scale(x, 3.0), ops::mul(x, x));
  tape.backward(ops::sum_all(y));
  CHECK(x.grad()[0] == doctest::Approx(3.0 + 1.0));
  CHECK(x.grad()[1] == doctest::Approx(3.0 - 3.0));
}

TEST_CASE("matmul matches hand result and is associative") {
  const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
  const Tensor b = Tensor::matrix({{5, 6}, {7, 8}});
  const Tensor ab = ops::matmul(a, b);
  CHECK(max_abs_diff(ab.data(), std::vector<double>{19, 22, 43, 50}) == 0.0);
  CHECK_THROWS_AS(ops::matmul(a, Tensor::matrix({{1, 2, 3}})), ShapeError);

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor p = random_tensor({3, 4}, rng), q = random_tensor({4, 5}, rng), r = random_tensor({5, 2}, rng);
    const Tensor left = ops::matmul(ops::matmul(p, q), r);
    const Tensor right = ops::matmul(p, ops::matmul(q, r));
    CHECK(max_abs_diff(left.data(), right.data()) < 1e-12);
  }
}

TEST_CASE("bmm and linear agree with per-batch matmul") {
  std::mt19937_64 rng(5);
  const Tensor a = random_tensor({3, 2, 4}, rng), b = random_tensor({3, 4, 5}, rng);
  const Tensor out = ops::bmm(a, b);
  for (std::size_t k = 0; k < 3; ++k) {
    const Tensor ak = ops::reshape(ops::slice_axis(a, 0, k, k + 1), {2, 4});
    const Tensor bk = ops::reshape(ops::slice_axis(b, 0, k, k + 1), {4, 5});
    const Tensor ok = ops::reshape(ops::slice_axis(out, 0, k, k + 1), {2, 5});
    CHECK(max_abs_diff(ops::matmul(ak, bk).data(), ok.data()) < 1e-14);
  }
  const Tensor w = random_tensor({4, 6}, rng);
  const Tensor lin = ops::linear(a, w);
  CHECK(lin.shape() == Shape{3, 2, 6});
  CHECK(max_abs_diff(lin.data(), ops::matmul(ops::reshape(a, {6, 4}), w).data()) < 1e-14);
}

TEST_CASE("softmax rows are distributions and shift invariant") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = random_tensor({4, 7}, rng, -30.0, 30.0);
    const Tensor s = ops::softmax_rows(x);
    for (std::size_t r = 0; r < 4; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < 7; ++c) {
        CHECK(s.at({r, c}) >= 0.0);
        total += s.at({r, c});
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    std::vector<double> shifted(x.data().begin(), x.data().end());
    for (auto& v : shifted) v += 1000.0;
    CHECK(max_abs_diff(ops::softmax_rows(Tensor({4, 7}, shifted)).data(), s.data()) < 1e-12);
  }
}

TEST_CASE("masked softmax gives exact zeros off the mask") {
  const Tensor x = Tensor::matrix({{1, 2, 3}, {0, 0, 0}, {5, -1, 2}});
  const std::vector<std::uint8_t> mask{1, 1, 0, 1, 1, 1, 0, 1, 1};
  const Tensor s = ops::masked_softmax_rows(x, mask);
  CHECK(s.at({0, 2}) == 0.0);
  CHECK(s.at({2, 0}) == 0.0);
  CHECK(s.at({0, 0}) == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + std::exp(2.0))));
  CHECK(s.at({1, 1}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("relu gradient at zero is zero") {
  Tensor x = Tensor::vector({-1.0, 0.0, 2.0});
  x.set_requires_grad(true);
  Tape tape;
  tape.backward(ops::sum_all(ops::relu(x)));
  CHECK(max_abs_diff(x.grad(), std::vector<double>{0.0, 0.0, 1.0}) == 0.0);
}

TEST_CASE("relu propagates NaN") {
  const Tensor y = ops::relu(Tensor::vector({std::nan(""), -1.0}));
  CHECK(std::isnan(y.data()[0]));
  CHECK(y.data()[1] == 0.0);
}

TEST_CASE("cross entropy values") {
  // uniform logits: loss = log C
  const Tensor logits = Tensor::matrix({{0, 0, 0}, {0, 0, 0}});
  const std::vector<int> labels{0, 2};
  CHECK(ops::cross_entropy_loss(logits, labels).item() == doctest::Approx(std::log(3.0)));

  const Tensor l2 = Tensor::matrix({{2, 0}, {0, 1}});
  const std::vector<int> y2{0, 0};
  const double nll0 = std::log(1 + std::exp(-2.0));
  const double nll1 = std::log(1 + std::exp(1.0));
  CHECK(ops::cross_entropy_loss(l2, y2).item() == doctest::Approx((nll0 + nll1) / 2));

  const std::vector<int> y3{0, 1};
  const std::vector<double> w{3.0, 1.0};
  const double e0 = std::log(1 + std::exp(-2.0)), e1 = std::log(1 + std::exp(-1.0));
  CHECK(ops::cross_entropy_loss(l2, y3, w).item() == doctest::Approx((3 * e0 + 1 * e1) / 4));

  const std::vector<int> bad{0, 5};
  CHECK_THROWS_AS(ops::cross_entropy_loss(l2, bad), Error);
}

namespace {

// Weighted sum with fixed random coefficients turns any op output into a
// scalar whose gradient exercises every output coordinate.
Tensor probe(const Tensor& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ops::sum_all(ops::mul(y, random_tensor(y.shape(), rng)));
}

}  // namespace

TEST_CASE("gradient checks of every op over 20 seeds") {
  constexpr double tol = 1e-6;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    std::mt19937_64 rng(seed);
    const Tensor a = random_tensor({3, 4}, rng);
    const Tensor b = random_tensor({4, 2}, rng);
    const Tensor a2 = random_tensor({3, 4}, rng);
    const Tensor batch = random_tensor({2, 3, 4}, rng);
    const Tensor batch_b = random_tensor({2, 4, 3}, rng);
    const Tensor bias = random_tensor({4}, rng);
    const Tensor adj = random_tensor({3, 3}, rng);
    const Tensor row = random_tensor({2, 3}, rng), col = random_tensor({2, 3}, rng);

    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::matmul(x, b), seed); }, a) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::matmul(a, x), seed); }, b) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::bmm(x, batch_b), seed); }, batch) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::bmm(batch, x), seed); }, batch_b) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::linear(batch, x), seed); }, random_tensor({4, 5}, rng)) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::transpose_last2(x), seed); }, batch) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::add(x, a2), seed); }, a) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::mul(x, a2), seed); }, a) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::scale(x, -1.7), seed); }, a) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::add_bias(batch, x), seed); }, bias) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::relu(x), seed); }, a) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::leaky_relu(x, 0.2), seed); }, a) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::sigmoid(x), seed); }, a) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::tanh(x), seed); }, a) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::softmax_rows(x), seed); }, batch) < tol);
    const std::vector<std::uint8_t> mask{1, 1, 0, 1, 1, 1, 0, 1, 1};
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::masked_softmax_rows(x, mask), seed); },
                         random_tensor({2, 3, 3}, rng)) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::mean_axis(x, 1), seed); }, batch) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return ops::sum_all(ops::mul(x, x)); }, a) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::reshape(x, {4, 3}), seed); }, a) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::slice_axis(x, 2, 1, 3), seed); }, batch) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::concat_axis({x, a2, x}, 1), seed); }, a) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::graph_propagate(adj, x), seed); }, batch.clone()) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::pairwise_sum(x, col), seed); }, row) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return probe(ops::pairwise_sum(row, x), seed); }, col) < tol);
    const std::vector<int> labels{1, 0, 3};
    const std::vector<double> weights{0.5, 2.0, 1.0, 1.5};
    CHECK(gradient_check([&](const Tensor& x) { return ops::cross_entropy_loss(x, labels); }, a) < tol);
    CHECK(gradient_check([&](const Tensor& x) { return ops::cross_entropy_loss(x, labels, weights); }, a) < tol);
  }
}

TEST_CASE("graph_propagate treats the adjacency as a constant") {
  Tensor adj = Tensor::matrix({{0.5, 0.5}, {0.5, 0.5}});
  adj.set_requires_grad(true);
  Tensor x = Tensor::matrix({{1, 2}, {3, 4}});
  x.set_requires_grad(true);
  Tape tape;
  tape.backward(ops::sum_all(ops::graph_propagate(adj, x)));
  CHECK_FALSE(adj.has_grad());
  CHECK(x.has_grad());
}

TEST_CASE("adam first step moves each coordinate by lr against the gradient sign") {
  Tensor p = Tensor::vector({1.0, -2.0, 3.0});
  p.set_requires_grad(true);
  auto g = p.mutable_grad();
  g[0] = 0.1;
  g[1] = -0.2;
  g[2] = 0.3;
  std::vector<Tensor> params{p};
  AdamState state = AdamState::zeros_like(params);
  AdamOptions opt;
  opt.learning_rate = 0.01;
  adam_step(params, state, opt);
  // m̂ = g, v̂ = g², so the step is lr·g/(|g| + eps)
  const std::vector<double> gv{0.1, -0.2, 0.3};
  const std::vector<double> start{1.0, -2.0, 3.0};
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(p.data()[i] == doctest::Approx(start[i] - 0.01 * gv[i] / (std::abs(gv[i]) + 1e-8)).epsilon(1e-14));
  CHECK(state.step == 1);
}

TEST_CASE("adam matches a closed-form two-step recurrence") {
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  Tensor p = Tensor::vector({0.5});
  p.set_requires_grad(true);
  std::vector<Tensor> params{p};
  AdamState state = AdamState::zeros_like(params);
  const double g1 = 0.4, g2 = -0.1;
  p.mutable_grad()[0] = g1;
  adam_step(params, state, {lr, b1, b2, eps});
  p.zero_grad();
  p.mutable_grad()[0] = g2;
  adam_step(params, state, {lr, b1, b2, eps});

  const double m1 = (1 - b1) * g1, v1 = (1 - b2) * g1 * g1;
  const double x1 = 0.5 - lr * (m1 / (1 - b1)) / (std::sqrt(v1 / (1 - b2)) + eps);
  const double m2 = b1 * m1 + (1 - b1) * g2, v2 = b2 * v1 + (1 - b2) * g2 * g2;
  const double x2 = x1 - lr * (m2 / (1 - b1 * b1)) / (std::sqrt(v2 / (1 - b2 * b2)) + eps);
  CHECK(p.data()[0] == doctest::Approx(x2).epsilon(1e-13));
}

TEST_CASE("adam treats a missing gradient as zero") {
  Tensor p = Tensor::vector({1.0});
  p.set_requires_grad(true);
  std::vector<Tensor> params{p};
  AdamState state = AdamState::zeros_like(params);
  p.mutable_grad()[0] = 1.0;
  adam_step(params, state, {});
  const double m_after_first = state.first_moment[0][0];
  p.zero_grad();
  adam_step(params, state, {});
  CHECK(state.first_moment[0][0] == doctest::Approx(0.9 * m_after_first));
}

TEST_CASE("adam minimizes a quadratic") {
  Tensor p = Tensor::vector({3.0, -4.0});
  p.set_requires_grad(true);
  Adam opt({p}, {0.1});
  for (int i = 0; i < 500; ++i) {
    opt.zero_grad();
    Tape tape;
    tape.backward(ops::sum_all(ops::mul(p, p)));
    opt.step();
  }
  CHECK(std::abs(p.data()[0]) < 1e-2);
  CHECK(std::abs(p.data()[1]) < 1e-2);
}

TEST_CASE("parallel_for visits each index once and rethrows") {
  set_worker_count(4);
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](const std::atomic<int>& h) { return h.load() == 1; }));
  CHECK_THROWS_AS(parallel_for(10, [](std::size_t i) {
                    if (i == 7) throw DataError("boom");
                  }),
                  DataError);
  set_worker_count(0);
}

TEST_CASE("worker count honours HARGNN_THREADS") {
  set_worker_count(0);
  ::setenv("HARGNN_THREADS", "3", 1);
  CHECK(worker_count() == 3);
  set_worker_count(1);
  CHECK(worker_count() == 1);
  set_worker_count(0);
  ::unsetenv("HARGNN_THREADS");
  CHECK(worker_count() >= 1);
}
