#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "hargnn/recording.hpp"

namespace hargnn {

/// Linear interpolation onto a uniform grid at `target_hz`; each new sample
/// takes the label of the nearest source sample (earlier one on exact ties).
/// Equal rates return an unchanged copy. Requires 0 < target_hz <= source.
SensorRecording resample(const SensorRecording& rec, double target_hz);

struct ChannelStats {
  std::string channel;
  double mean = 0.0;
  double std = 1.0;
};

inline constexpr double kStdFloor = 1e-8;

/// Per-channel z-score statistics. Population (1/N) variance, std floored at
/// kStdFloor.
struct NormalizationStats {
  std::vector<ChannelStats> channels;

  /// `{channel: {mean, std}}` in column order, plus a `__convention__` note.
  nlohmann::ordered_json to_json() const;
  static NormalizationStats from_json(const nlohmann::json& j, const ChannelLayout& layout);

  void save(const std::filesystem::path& file) const;
  static NormalizationStats load(const std::filesystem::path& file, const ChannelLayout& layout);
};

/// Pools every timestamp of every recording per channel.
NormalizationStats fit_normalizer(std::span<const SensorRecording> recordings);

/// (x - mean) / std per channel. Not idempotent.
SensorRecording apply_normalizer(const SensorRecording& rec, const NormalizationStats& stats);

}  // namespace hargnn
