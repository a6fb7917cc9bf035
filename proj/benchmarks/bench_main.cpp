#include <benchmark/benchmark.h>

#include <random>

#include "hargnn/adam.hpp"
#include "hargnn/graph.hpp"
#include "hargnn/models.hpp"
#include "hargnn/ops.hpp"
#include "hargnn/synth.hpp"
#include "hargnn/tape.hpp"

using namespace hargnn;

namespace {

Tensor random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = u(rng);
  return Tensor({rows, cols}, std::move(v));
}

// One training-sized batch of synthetic segments.
const SegmentSet& bench_segments() {
  static const SegmentSet set = [] {
    SynthConfig sc;
    sc.n_subjects = 2;
    sc.duration_s = 120.0;
    const auto recs = synthesize(sc, 1);
    return segment_all(recs, 24, 12, synth_class_names(sc.n_classes));
  }();
  return set;
}

GraphBatch bench_batch(std::size_t size) {
  std::vector<std::size_t> idx(size);
  for (std::size_t i = 0; i < size; ++i) idx[i] = i % bench_segments().size();
  return batch_from_segments(bench_segments(), idx, true);
}

ModelConfig bench_config(ModelKind kind) {
  ModelConfig c;
  c.kind = kind;
  c.sensor_widths = {3, 3};
  return c;
}

}  // namespace

static void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const Tensor a = random_matrix(n, n, rng), b = random_matrix(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(ops::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(128);

static void BM_Forward(benchmark::State& state) {
  const auto kind = static_cast<ModelKind>(state.range(0));
  const auto model = make_model(bench_config(kind), 1);
  const auto batch = bench_batch(100);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(model->forward(batch));
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_Forward)
    ->Arg(static_cast<int>(ModelKind::GcnAttention))
    ->Arg(static_cast<int>(ModelKind::Gcn))
    ->Arg(static_cast<int>(ModelKind::Ragnn))
    ->Unit(benchmark::kMillisecond);

static void BM_TrainStep(benchmark::State& state) {
  const auto kind = static_cast<ModelKind>(state.range(0));
  const auto model = make_model(bench_config(kind), 1);
  const auto batch = bench_batch(100);
  Adam adam(model->parameters(), {});
  for (auto _ : state) {
    adam.zero_grad();
    Tape tape;
    const Tensor loss = ops::cross_entropy_loss(model->forward(batch), batch.labels);
    tape.backward(loss);
    adam.step();
  }
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_TrainStep)
    ->Arg(static_cast<int>(ModelKind::GcnAttention))
    ->Arg(static_cast<int>(ModelKind::Gcn))
    ->Arg(static_cast<int>(ModelKind::Ragnn))
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
