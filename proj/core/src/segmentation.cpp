#include "hargnn/segmentation.hpp"

#include <algorithm>
#include <map>

#include "hargnn/error.hpp"

namespace hargnn {

std::span<const double> SegmentSet::segment(std::size_t i) const {
  const std::size_t block = channel_count() * window_len;
  return std::span<const double>(segments).subspan(i * block, block);
}

SegmentSet SegmentSet::subset(std::span<const std::size_t> indices) const {
  SegmentSet out;
  out.window_len = window_len;
  out.stride = stride;
  out.normalization = normalization;
  out.class_names = class_names;
  out.layout = layout;
  out.warnings = warnings;
  const std::size_t block = channel_count() * window_len;
  out.segments.reserve(indices.size() * block);
  for (auto i : indices) {
    if (i >= size()) throw DataError("segment index out of range");
    const auto s = segment(i);
    out.segments.insert(out.segments.end(), s.begin(), s.end());
    out.labels.push_back(labels[i]);
    out.provenance.push_back(provenance[i]);
  }
  return out;
}

void SegmentSet::append(const SegmentSet& other) {
  if (other.empty() && other.window_len == 0) return;
  if (layout.empty() && labels.empty()) {
    window_len = other.window_len;
    stride = other.stride;
    layout = other.layout;
    class_names = other.class_names;
    normalization = other.normalization;
  } else if (other.window_len != window_len || other.layout != layout || other.class_names != class_names) {
    throw DataError("cannot append segment sets with different window, layout or classes");
  }
  segments.insert(segments.end(), other.segments.begin(), other.segments.end());
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  provenance.insert(provenance.end(), other.provenance.begin(), other.provenance.end());
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
}

std::size_t window_count(std::size_t length, std::size_t window_len, std::size_t stride) {
  if (window_len == 0 || stride == 0 || length < window_len) return 0;
  return (length - window_len) / stride + 1;
}

int majority_label(std::span<const int> window_labels) {
  if (window_labels.empty()) throw DataError("majority_label: empty window");
  std::map<int, std::size_t> counts;
  for (int l : window_labels) ++counts[l];
  std::size_t best = 0;
  for (const auto& [label, n] : counts) best = std::max(best, n);
  for (auto it = window_labels.rbegin(); it != window_labels.rend(); ++it) {
    if (counts[*it] == best) return *it;
  }
  return window_labels.back();
}

SegmentSet segment(const SensorRecording& rec, std::size_t window_len, std::size_t stride,
                   const std::vector<std::string>& class_names) {
  if (window_len == 0) throw ConfigError("segment: window length must be >= 1");
  if (stride == 0 || stride > window_len) throw ConfigError("segment: stride must be in [1, window_len]");
  SegmentSet out;
  out.window_len = window_len;
  out.stride = stride;
  out.layout = rec.layout;
  out.class_names = class_names;
  const std::size_t length = rec.length();
  const std::size_t d = rec.channel_count();
  const std::size_t n = window_count(length, window_len, stride);
  if (n == 0) {
    out.warnings.push_back("subject " + std::to_string(rec.subject_id) + " run " + std::to_string(rec.run_id) +
                           ": recording of " + std::to_string(length) + " samples is shorter than the window of " +
                           std::to_string(window_len));
    return out;
  }
  out.segments.resize(n * d * window_len);
  for (std::size_t w = 0; w < n; ++w) {
    const std::size_t start = w * stride;
    double* dst = out.segments.data() + w * d * window_len;
    for (std::size_t c = 0; c < d; ++c)
      for (std::size_t t = 0; t < window_len; ++t) dst[c * window_len + t] = rec.value(start + t, c);
    out.labels.push_back(majority_label(std::span<const int>(rec.labels).subspan(start, window_len)));
    out.provenance.push_back({rec.subject_id, rec.run_id, start});
  }
  return out;
}

SegmentSet segment_all(std::span<const SensorRecording> recordings, std::size_t window_len, std::size_t stride,
                       const std::vector<std::string>& class_names) {
  SegmentSet all;
  all.window_len = window_len;
  all.stride = stride;
  all.class_names = class_names;
  if (!recordings.empty()) all.layout = recordings.front().layout;
  for (const auto& rec : recordings) all.append(segment(rec, window_len, stride, class_names));
  return all;
}

SplitSpec SplitSpec::standard(std::vector<int> subjects) {
  std::sort(subjects.begin(), subjects.end());
  subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
  SplitSpec spec;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (i < 8)
      spec.test.insert(subjects[i]);
    else if (i < 11)
      spec.train.insert(subjects[i]);
    else
      spec.validation.insert(subjects[i]);
  }
  return spec;
}

void SplitSpec::validate() const {
  auto overlap = [](const std::set<int>& a, const std::set<int>& b, const char* na, const char* nb) {
    for (int s : a) {
      if (b.count(s)) {
        throw ConfigError("split: subject " + std::to_string(s) + " is in both " + na + " and " + nb);
      }
    }
  };
  overlap(train, validation, "train", "validation");
  overlap(train, test, "train", "test");
  overlap(validation, test, "validation", "test");
  if (train.empty()) throw ConfigError("split: train subject set is empty");
}

std::vector<std::string> SplitSpec::warnings() const {
  std::vector<std::string> w;
  if (validation.empty()) w.emplace_back("split: validation subject set is empty");
  if (test.empty()) w.emplace_back("split: test subject set is empty");
  return w;
}

namespace {

enum class Part { Train, Validation, Test };

Part part_of(const SplitSpec& spec, int subject) {
  if (spec.train.count(subject)) return Part::Train;
  if (spec.validation.count(subject)) return Part::Validation;
  if (spec.test.count(subject)) return Part::Test;
  throw ConfigError("split: subject " + std::to_string(subject) + " is not assigned to any split");
}

}  // namespace

SegmentSplit split_by_subject(const SegmentSet& segments, const SplitSpec& spec) {
  spec.validate();
  std::vector<std::size_t> idx[3];
  for (std::size_t i = 0; i < segments.size(); ++i) {
    idx[static_cast<int>(part_of(spec, segments.provenance[i].subject_id))].push_back(i);
  }
  SegmentSplit out{segments.subset(idx[0]), segments.subset(idx[1]), segments.subset(idx[2]), spec.warnings()};
  if (out.validation.empty()) out.warnings.emplace_back("split: validation partition has no segments");
  if (out.test.empty()) out.warnings.emplace_back("split: test partition has no segments");
  return out;
}

RecordingSplit split_recordings(std::span<const SensorRecording> recordings, const SplitSpec& spec) {
  spec.validate();
  RecordingSplit out;
  out.warnings = spec.warnings();
  for (const auto& rec : recordings) {
    switch (part_of(spec, rec.subject_id)) {
      case Part::Train: out.train.push_back(rec); break;
      case Part::Validation: out.validation.push_back(rec); break;
      case Part::Test: out.test.push_back(rec); break;
    }
  }
  return out;
}

PreparedRecordings prepare_recordings(std::span<const SensorRecording> recordings, const SplitSpec& spec,
                                      double target_hz) {
  std::vector<SensorRecording> source;
  source.reserve(recordings.size());
  for (const auto& rec : recordings) {
    source.push_back(target_hz > 0.0 && target_hz < rec.sample_rate_hz ? resample(rec, target_hz) : rec);
  }
  PreparedRecordings out;
  out.split = split_recordings(source, spec);
  if (out.split.train.empty()) throw DataError("prepare: no recordings belong to the train subjects");
  out.stats = fit_normalizer(out.split.train);
  for (auto* part : {&out.split.train, &out.split.validation, &out.split.test})
    for (auto& rec : *part) rec = apply_normalizer(rec, out.stats);
  return out;
}

}  // namespace hargnn
