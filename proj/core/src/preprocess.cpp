#include "hargnn/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hargnn/error.hpp"

namespace hargnn {

SensorRecording resample(const SensorRecording& rec, double target_hz) {
  if (!(target_hz > 0.0)) throw ConfigError("resample: target rate must be positive");
  if (target_hz > rec.sample_rate_hz) {
    throw ConfigError("resample: target rate " + format_double(target_hz) + " Hz exceeds source rate " +
                      format_double(rec.sample_rate_hz) + " Hz");
  }
  if (target_hz == rec.sample_rate_hz || rec.length() == 0) return rec;

  const std::size_t length = rec.length();
  const std::size_t d = rec.channel_count();
  const double ratio = rec.sample_rate_hz / target_hz;  // source samples per output sample
  // small slack keeps grids like 20 -> 10 Hz from losing the last sample to rounding
  const auto count = static_cast<std::size_t>(std::floor(static_cast<double>(length - 1) / ratio + 1e-9)) + 1;

  SensorRecording out;
  out.subject_id = rec.subject_id;
  out.run_id = rec.run_id;
  out.sample_rate_hz = target_hz;
  out.layout = rec.layout;
  out.timestamps.reserve(count);
  out.labels.reserve(count);
  out.channels.reserve(count * d);
  const double t0 = rec.timestamps.empty() ? 0.0 : rec.timestamps.front();
  for (std::size_t k = 0; k < count; ++k) {
    const double pos = static_cast<double>(k) * ratio;
    auto i0 = static_cast<std::size_t>(std::floor(pos));
    if (i0 >= length - 1) i0 = length - 1;
    const double frac = i0 + 1 < length ? pos - static_cast<double>(i0) : 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double a = rec.value(i0, c);
      const double v = frac == 0.0 ? a : a + frac * (rec.value(i0 + 1, c) - a);
      out.channels.push_back(v);
    }
    const std::size_t nearest = (frac > 0.5 && i0 + 1 < length) ? i0 + 1 : i0;
    out.labels.push_back(rec.labels[nearest]);
    out.timestamps.push_back(t0 + static_cast<double>(k) / target_hz);
  }
  return out;
}

NormalizationStats fit_normalizer(std::span<const SensorRecording> recordings) {
  if (recordings.empty()) throw DataError("fit_normalizer: no training recordings");
  const ChannelLayout& layout = recordings.front().layout;
  const std::size_t d = layout.size();
  std::vector<double> sum(d, 0.0);
  std::size_t n = 0;
  for (const auto& rec : recordings) {
    if (rec.layout != layout) throw DataError("fit_normalizer: recordings have different channel layouts");
    for (std::size_t r = 0; r < rec.length(); ++r)
      for (std::size_t c = 0; c < d; ++c) sum[c] += rec.value(r, c);
    n += rec.length();
  }
  if (n < 2) throw DataError("fit_normalizer: need at least 2 samples per channel");
  std::vector<double> mean(d);
  for (std::size_t c = 0; c < d; ++c) mean[c] = sum[c] / static_cast<double>(n);
  std::vector<double> sq(d, 0.0);
  for (const auto& rec : recordings)
    for (std::size_t r = 0; r < rec.length(); ++r)
      for (std::size_t c = 0; c < d; ++c) {
        const double dev = rec.value(r, c) - mean[c];
        sq[c] += dev * dev;
      }
  NormalizationStats stats;
  for (std::size_t c = 0; c < d; ++c) {
    const double sd = std::sqrt(sq[c] / static_cast<double>(n));
    stats.channels.push_back({layout[c].name, mean[c], std::max(sd, kStdFloor)});
  }
  return stats;
}

SensorRecording apply_normalizer(const SensorRecording& rec, const NormalizationStats& stats) {
  const std::size_t d = rec.channel_count();
  if (stats.channels.size() != d) {
    throw DataError("apply_normalizer: stats cover " + std::to_string(stats.channels.size()) + " channels, recording has " +
                    std::to_string(d));
  }
  SensorRecording out = rec;
  for (std::size_t r = 0; r < rec.length(); ++r)
    for (std::size_t c = 0; c < d; ++c) {
      const auto& s = stats.channels[c];
      out.channels[r * d + c] = (rec.value(r, c) - s.mean) / s.std;
    }
  return out;
}

nlohmann::ordered_json NormalizationStats::to_json() const {
  nlohmann::ordered_json j;
  j["__convention__"] = "population standard deviation (1/N) over training timestamps, floored at 1e-8";
  for (const auto& c : channels) j[c.channel] = {{"mean", c.mean}, {"std", c.std}};
  return j;
}

NormalizationStats NormalizationStats::from_json(const nlohmann::json& j, const ChannelLayout& layout) {
  NormalizationStats stats;
  for (const auto& ch : layout) {
    if (!j.contains(ch.name)) throw DataError("normalization stats missing channel " + ch.name);
    const auto& e = j.at(ch.name);
    ChannelStats s{ch.name, e.at("mean").get<double>(), e.at("std").get<double>()};
    if (!(s.std > 0.0)) throw DataError("normalization std for " + ch.name + " must be positive");
    stats.channels.push_back(s);
  }
  return stats;
}

void NormalizationStats::save(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write " + file.string());
  out << to_json().dump(2) << '\n';
}

NormalizationStats NormalizationStats::load(const std::filesystem::path& file, const ChannelLayout& layout) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  try {
    return from_json(nlohmann::json::parse(in), layout);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(file.string() + ": " + e.what());
  }
}

}  // namespace hargnn
