#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hargnn {

/// One sensor channel column, e.g. {1, "s1_x"}.
struct ChannelSpec {
  int sensor_id = 0;
  std::string name;

  bool operator==(const ChannelSpec&) const = default;
};

using ChannelLayout = std::vector<ChannelSpec>;

/// Contiguous column block owned by one sensor.
struct SensorBlock {
  int sensor_id = 0;
  std::size_t offset = 0;
  std::size_t width = 0;
};

/// Parses `s<sensor>_<axis>` column names.
ChannelLayout parse_channel_layout(std::span<const std::string> names);

/// Groups a layout into per-sensor blocks; throws DataError when a sensor's
/// columns are not contiguous.
std::vector<SensorBlock> sensor_blocks(const ChannelLayout& layout);

/// Raw labelled multichannel stream of one (subject, run).
struct SensorRecording {
  int subject_id = 0;
  int run_id = 0;
  double sample_rate_hz = 0.0;
  std::vector<double> timestamps;  // seconds, strictly increasing
  std::vector<double> channels;    // L×D, row-major (rows = timestamps)
  std::vector<int> labels;         // length L
  ChannelLayout layout;            // length D

  std::size_t length() const noexcept { return labels.size(); }
  std::size_t channel_count() const noexcept { return layout.size(); }
  double value(std::size_t row, std::size_t channel) const { return channels[row * layout.size() + channel]; }

  /// Checks the structural invariants; throws DataError.
  void validate(std::size_t n_classes) const;
};

/// Sidecar `dataset.meta.json`: class ordering and sample rate.
struct DatasetMeta {
  std::vector<std::string> class_names;
  double sample_rate_hz = 10.0;

  int class_index(const std::string& name) const;  // -1 when unknown

  static DatasetMeta load(const std::filesystem::path& file);
  void save(const std::filesystem::path& file) const;
};

inline constexpr const char* kMetaFileName = "dataset.meta.json";

/// Reads one CSV file, or every `*.csv` in a directory (sorted by name).
/// Returns one recording per (subject_id, run_id), ordered by that key.
std::vector<SensorRecording> load_recordings(const std::filesystem::path& path, const DatasetMeta& meta);

/// Loads `dataset.meta.json` next to (or inside) `path`, then the CSV data.
std::vector<SensorRecording> load_dataset(const std::filesystem::path& path, DatasetMeta* meta_out = nullptr);

/// Writes recordings in the input CSV schema. Values use shortest
/// round-trip formatting, so reloading is exact and output is byte-stable.
/// `header_layout` names the channel columns when `recordings` is empty.
void write_recordings_csv(const std::filesystem::path& file, std::span<const SensorRecording> recordings,
                          const DatasetMeta& meta, const ChannelLayout& header_layout = {});

/// Shortest round-trip decimal text for a double.
std::string format_double(double v);

}  // namespace hargnn
