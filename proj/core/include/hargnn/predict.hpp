#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hargnn/models.hpp"
#include "hargnn/recording.hpp"
#include "hargnn/segmentation.hpp"

namespace hargnn {

/// Row-wise argmax of B×C logits; ties go to the smallest class index.
std::vector<int> argmax_rows(const Tensor& logits);

/// Argmax class per segment. Batches are independent, so the batch size
/// does not change the result.
std::vector<int> predict_segments(const Model& model, const SegmentSet& segments, std::size_t batch_size = 256);

/// Window starts 0, stride, 2·stride, ... plus L - T when the regular grid
/// misses it, so every timestamp is covered at least once. Requires L >= T.
std::vector<std::size_t> samplewise_window_starts(std::size_t length, std::size_t window_len, std::size_t stride);

/// Per-timestamp majority vote over the windows covering it; ties go to the
/// tied class predicted by the most recent (largest start) covering window.
std::vector<int> vote_samplewise(std::span<const std::size_t> starts, std::span<const int> window_predictions,
                                 std::size_t length, std::size_t window_len);

struct SamplewiseOptions {
  std::size_t stride = 1;
  std::size_t batch_size = 256;
};

struct SamplewisePrediction {
  std::vector<int> labels;            // one per timestamp
  std::vector<std::size_t> coverage;  // windows covering each timestamp
  bool padded = false;                // L < T: one edge-replicated window
};

SamplewisePrediction predict_samplewise(const Model& model, const SensorRecording& rec, std::size_t window_len,
                                        const SamplewiseOptions& options = {});

}  // namespace hargnn
