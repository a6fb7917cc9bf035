#include "hargnn/predict.hpp"

#include <algorithm>
#include <map>

#include "hargnn/error.hpp"
#include "hargnn/parallel.hpp"
#include "hargnn/tape.hpp"

namespace hargnn {

std::vector<int> argmax_rows(const Tensor& logits) {
  if (logits.rank() != 2) throw ShapeError("argmax_rows: expected B×C logits");
  const std::size_t b = logits.dim(0), c = logits.dim(1);
  std::vector<int> out(b, 0);
  const auto z = logits.data();
  for (std::size_t i = 0; i < b; ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < c; ++k)
      if (z[i * c + k] > z[i * c + best]) best = k;
    out[i] = static_cast<int>(best);
  }
  return out;
}

namespace {

// Runs `count` inputs through the model in fixed chunks, in parallel.
template <typename MakeBatch>
std::vector<int> batched_argmax(const Model& model, std::size_t count, std::size_t batch_size, MakeBatch make_batch) {
  if (batch_size == 0) throw ConfigError("prediction batch size must be >= 1");
  std::vector<int> preds(count, 0);
  const std::size_t chunks = (count + batch_size - 1) / batch_size;
  parallel_for(chunks, [&](std::size_t chunk) {
    NoGradGuard no_grad;
    const std::size_t begin = chunk * batch_size;
    const std::size_t end = std::min(count, begin + batch_size);
    const auto p = argmax_rows(model.forward(make_batch(begin, end)));
    std::copy(p.begin(), p.end(), preds.begin() + static_cast<std::ptrdiff_t>(begin));
  });
  return preds;
}

}  // namespace

std::vector<int> predict_segments(const Model& model, const SegmentSet& segments, std::size_t batch_size) {
  return batched_argmax(model, segments.size(), batch_size, [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> idx(end - begin);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = begin + i;
    return batch_from_segments(segments, idx, model.config().self_loops);
  });
}

std::vector<std::size_t> samplewise_window_starts(std::size_t length, std::size_t window_len, std::size_t stride) {
  if (stride == 0) throw ConfigError("sample-wise stride must be >= 1");
  if (window_len == 0 || length < window_len) throw ConfigError("sample-wise windows need L >= T");
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + window_len <= length; s += stride) starts.push_back(s);
  if (starts.back() != length - window_len) starts.push_back(length - window_len);
  return starts;
}

std::vector<int> vote_samplewise(std::span<const std::size_t> starts, std::span<const int> window_predictions,
                                 std::size_t length, std::size_t window_len) {
  if (starts.size() != window_predictions.size()) throw Error("vote_samplewise: one prediction per window required");
  std::vector<int> labels(length, -1);
  std::size_t first = 0;  // first window that may still cover timestamp i (starts ascending)
  for (std::size_t i = 0; i < length; ++i) {
    while (first < starts.size() && starts[first] + window_len <= i) ++first;
    std::map<int, std::size_t> counts;
    std::size_t last = first;
    for (std::size_t w = first; w < starts.size() && starts[w] <= i; ++w) {
      ++counts[window_predictions[w]];
      last = w + 1;
    }
    if (counts.empty()) throw Error("vote_samplewise: timestamp " + std::to_string(i) + " is not covered");
    std::size_t best = 0;
    for (const auto& [label, n] : counts) best = std::max(best, n);
    for (std::size_t w = last; w-- > first;) {
      if (counts[window_predictions[w]] == best) {
        labels[i] = window_predictions[w];
        break;
      }
    }
  }
  return labels;
}

SamplewisePrediction predict_samplewise(const Model& model, const SensorRecording& rec, std::size_t window_len,
                                        const SamplewiseOptions& options) {
  const std::size_t length = rec.length();
  const std::size_t d = rec.channel_count();
  if (length == 0) throw DataError("predict_samplewise: empty recording");
  SamplewisePrediction out;

  if (length < window_len) {
    std::vector<double> window(window_len * d);
    for (std::size_t t = 0; t < window_len; ++t) {
      const std::size_t src = std::min(t, length - 1);
      for (std::size_t c = 0; c < d; ++c) window[t * d + c] = rec.value(src, c);
    }
    NoGradGuard no_grad;
    const auto batch = batch_from_windows({window}, window_len, rec.layout, model.config().self_loops);
    const int pred = argmax_rows(model.forward(batch)).front();
    out.labels.assign(length, pred);
    out.coverage.assign(length, 1);
    out.padded = true;
    return out;
  }

  const auto starts = samplewise_window_starts(length, window_len, options.stride);
  const auto preds = batched_argmax(model, starts.size(), options.batch_size, [&](std::size_t begin, std::size_t end) {
    std::vector<std::vector<double>> windows;
    windows.reserve(end - begin);
    for (std::size_t w = begin; w < end; ++w) {
      const auto first = rec.channels.begin() + static_cast<std::ptrdiff_t>(starts[w] * d);
      windows.emplace_back(first, first + static_cast<std::ptrdiff_t>(window_len * d));
    }
    return batch_from_windows(windows, window_len, rec.layout, model.config().self_loops);
  });
  out.labels = vote_samplewise(starts, preds, length, window_len);
  out.coverage.assign(length, 0);
  for (auto s : starts)
    for (std::size_t t = s; t < s + window_len; ++t) ++out.coverage[t];
  return out;
}

}  // namespace hargnn
