#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hargnn/preprocess.hpp"
#include "hargnn/recording.hpp"

namespace hargnn {

struct SegmentProvenance {
  int subject_id = 0;
  int run_id = 0;
  std::size_t start = 0;

  bool operator==(const SegmentProvenance&) const = default;
};

/// Windowed dataset: N segments of D×T (channel-major) with one label each.
struct SegmentSet {
  std::size_t window_len = 0;
  std::size_t stride = 0;
  std::vector<double> segments;  // N×D×T
  std::vector<int> labels;
  std::vector<SegmentProvenance> provenance;
  NormalizationStats normalization;
  std::vector<std::string> class_names;
  ChannelLayout layout;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }
  std::size_t channel_count() const noexcept { return layout.size(); }
  std::size_t class_count() const noexcept { return class_names.size(); }

  /// D×T slice of segment i.
  std::span<const double> segment(std::size_t i) const;

  /// Same metadata, selected segments in the given order.
  SegmentSet subset(std::span<const std::size_t> indices) const;

  /// Appends segments of a compatible set.
  void append(const SegmentSet& other);
};

/// floor((L - T) / stride) + 1 for L >= T, else 0.
std::size_t window_count(std::size_t length, std::size_t window_len, std::size_t stride);

/// Most frequent label; ties go to the tied label that occurs last in the
/// window (i.e. the final timestamp's label when it is among the tied set).
int majority_label(std::span<const int> window_labels);

/// Slides windows starting at 0, stride, 2·stride, ... while they fit.
/// A recording shorter than the window yields an empty set with a warning.
SegmentSet segment(const SensorRecording& rec, std::size_t window_len, std::size_t stride,
                   const std::vector<std::string>& class_names);

SegmentSet segment_all(std::span<const SensorRecording> recordings, std::size_t window_len, std::size_t stride,
                       const std::vector<std::string>& class_names);

/// Subject assignment for the hold-out protocol.
struct SplitSpec {
  std::set<int> train;
  std::set<int> validation;
  std::set<int> test;

  /// First eight subjects (ascending id) test, next three train, the rest
  /// validation.
  static SplitSpec standard(std::vector<int> subjects);

  /// Throws ConfigError when the sets overlap or train is empty.
  void validate() const;

  /// Warnings for empty validation/test sets.
  std::vector<std::string> warnings() const;
};

struct SegmentSplit {
  SegmentSet train, validation, test;
  std::vector<std::string> warnings;
};

struct RecordingSplit {
  std::vector<SensorRecording> train, validation, test;
  std::vector<std::string> warnings;
};

/// Partitions by provenance subject. Throws ConfigError for a subject that is
/// in no split set.
SegmentSplit split_by_subject(const SegmentSet& segments, const SplitSpec& spec);
RecordingSplit split_recordings(std::span<const SensorRecording> recordings, const SplitSpec& spec);

/// Optional resampling, subject split, normalizer fit on train only, then
/// applied to all three partitions. target_hz <= 0 skips resampling.
struct PreparedRecordings {
  RecordingSplit split;
  NormalizationStats stats;
};

PreparedRecordings prepare_recordings(std::span<const SensorRecording> recordings, const SplitSpec& spec,
                                      double target_hz = 0.0);

}  // namespace hargnn
