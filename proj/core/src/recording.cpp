#include "hargnn/recording.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <utility>

#include "hargnn/error.hpp"

namespace hargnn {

namespace fs = std::filesystem;

ChannelLayout parse_channel_layout(std::span<const std::string> names) {
  ChannelLayout layout;
  for (const auto& name : names) {
    const auto underscore = name.find('_');
    if (name.size() < 4 || name[0] != 's' || underscore == std::string::npos || underscore < 2 ||
        underscore + 1 == name.size()) {
      throw DataError("channel column '" + name + "' does not follow s<sensor>_<axis>");
    }
    int sensor = 0;
    const char* first = name.data() + 1;
    const char* last = name.data() + underscore;
    auto [ptr, ec] = std::from_chars(first, last, sensor);
    if (ec != std::errc{} || ptr != last || sensor < 0) {
      throw DataError("channel column '" + name + "' has a non-numeric sensor id");
    }
    layout.push_back({sensor, name});
  }
  return layout;
}

std::vector<SensorBlock> sensor_blocks(const ChannelLayout& layout) {
  std::vector<SensorBlock> blocks;
  for (std::size_t c = 0; c < layout.size(); ++c) {
    if (!blocks.empty() && blocks.back().sensor_id == layout[c].sensor_id) {
      ++blocks.back().width;
      continue;
    }
    for (const auto& b : blocks) {
      if (b.sensor_id == layout[c].sensor_id) {
        throw DataError("columns of sensor " + std::to_string(b.sensor_id) + " are not contiguous");
      }
    }
    blocks.push_back({layout[c].sensor_id, c, 1});
  }
  return blocks;
}

void SensorRecording::validate(std::size_t n_classes) const {
  const std::size_t d = layout.size();
  if (channels.size() != labels.size() * d) throw DataError("recording channel matrix does not match label count");
  if (timestamps.size() != labels.size()) throw DataError("recording timestamp count does not match label count");
  if (!(sample_rate_hz > 0.0)) throw DataError("recording sample rate must be positive");
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) {
      throw DataError("recording label " + std::to_string(label) + " out of range");
    }
  }
  sensor_blocks(layout);
}

int DatasetMeta::class_index(const std::string& name) const {
  const auto it = std::find(class_names.begin(), class_names.end(), name);
  return it == class_names.end() ? -1 : static_cast<int>(it - class_names.begin());
}

DatasetMeta DatasetMeta::load(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(file.string() + ": " + e.what());
  }
  DatasetMeta meta;
  try {
    meta.class_names = j.at("class_names").get<std::vector<std::string>>();
    meta.sample_rate_hz = j.at("sample_rate_hz").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(file.string() + ": " + e.what());
  }
  if (meta.class_names.empty()) throw DataError(file.string() + ": class_names is empty");
  if (!(meta.sample_rate_hz > 0.0)) throw DataError(file.string() + ": sample_rate_hz must be positive");
  return meta;
}

void DatasetMeta::save(const fs::path& file) const {
  nlohmann::ordered_json j;
  j["class_names"] = class_names;
  j["sample_rate_hz"] = sample_rate_hz;
  std::ofstream out(file);
  if (!out) throw DataError("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw Error("format_double failed");
  return std::string(buf, ptr);
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(trim(std::string_view(line).substr(start)));
      break;
    }
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

void load_file(const fs::path& file, const DatasetMeta& meta, std::map<std::pair<int, int>, SensorRecording>& out) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  const std::string fname = file.string();
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError(fname, 1, "missing header");
  const auto header = split_csv_line(line);
  const char* required[] = {"subject_id", "run_id", "timestamp"};
  for (std::size_t i = 0; i < 3; ++i) {
    if (header.size() <= i || header[i] != required[i]) {
      throw ParseError(fname, 1, std::string("missing column '") + required[i] + "' at position " + std::to_string(i + 1));
    }
  }
  if (header.size() < 5 || header.back() != "label") {
    throw ParseError(fname, 1, header.size() < 5 ? "header needs at least one channel column and 'label'"
                                                 : "missing column 'label' as last column");
  }
  const std::vector<std::string> channel_names(header.begin() + 3, header.end() - 1);
  ChannelLayout layout;
  try {
    layout = parse_channel_layout(channel_names);
    sensor_blocks(layout);
  } catch (const DataError& e) {
    throw ParseError(fname, 1, e.what());
  }
  const std::size_t d = layout.size();

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError(fname, line_no, "expected " + std::to_string(header.size()) + " cells, found " +
                                           std::to_string(cells.size()));
    }
    int subject = 0, run = 0;
    double ts = 0.0;
    if (!parse_number(cells[0], subject)) throw ParseError(fname, line_no, "non-numeric subject_id '" + cells[0] + "'");
    if (!parse_number(cells[1], run)) throw ParseError(fname, line_no, "non-numeric run_id '" + cells[1] + "'");
    if (!parse_number(cells[2], ts) || !std::isfinite(ts)) {
      throw ParseError(fname, line_no, "non-numeric timestamp '" + cells[2] + "'");
    }
    const int label = meta.class_index(cells.back());
    if (label < 0) throw ParseError(fname, line_no, "unknown label '" + cells.back() + "'");

    auto& rec = out[{subject, run}];
    if (rec.layout.empty()) {
      rec.subject_id = subject;
      rec.run_id = run;
      rec.sample_rate_hz = meta.sample_rate_hz;
      rec.layout = layout;
    } else if (rec.layout != layout) {
      throw ParseError(fname, line_no, "channel layout differs from earlier rows of the same subject/run");
    }
    if (!rec.timestamps.empty() && !(ts > rec.timestamps.back())) {
      throw ParseError(fname, line_no, "timestamp " + cells[2] + " is not strictly increasing for subject " +
                                           std::to_string(subject) + " run " + std::to_string(run));
    }
    for (std::size_t c = 0; c < d; ++c) {
      double v = 0.0;
      if (!parse_number(cells[3 + c], v) || !std::isfinite(v)) {
        throw ParseError(fname, line_no, "non-numeric value '" + cells[3 + c] + "' in column " + header[3 + c]);
      }
      rec.channels.push_back(v);
    }
    rec.timestamps.push_back(ts);
    rec.labels.push_back(label);
  }
}

}  // namespace

std::vector<SensorRecording> load_recordings(const fs::path& path, const DatasetMeta& meta) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .csv files in " + path.string());
  } else if (fs::is_regular_file(path)) {
    files.push_back(path);
  } else {
    throw DataError("no such file or directory: " + path.string());
  }

  std::map<std::pair<int, int>, SensorRecording> by_key;
  for (const auto& f : files) load_file(f, meta, by_key);

  std::vector<SensorRecording> recs;
  recs.reserve(by_key.size());
  for (auto& [key, rec] : by_key) recs.push_back(std::move(rec));
  return recs;
}

std::vector<SensorRecording> load_dataset(const fs::path& path, DatasetMeta* meta_out) {
  const fs::path meta_file = fs::is_directory(path) ? path / kMetaFileName : path.parent_path() / kMetaFileName;
  DatasetMeta meta = DatasetMeta::load(meta_file);
  auto recs = load_recordings(path, meta);
  if (meta_out) *meta_out = std::move(meta);
  return recs;
}

void write_recordings_csv(const fs::path& file, std::span<const SensorRecording> recordings, const DatasetMeta& meta,
                          const ChannelLayout& header_layout) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write " + file.string());
  const ChannelLayout* layout = recordings.empty() ? &header_layout : &recordings.front().layout;
  out << "subject_id,run_id,timestamp";
  for (const auto& ch : *layout) out << ',' << ch.name;
  out << ",label\n";
  for (const auto& rec : recordings) {
    if (rec.layout != *layout) throw DataError("cannot write recordings with different channel layouts to one file");
    const std::size_t d = rec.channel_count();
    for (std::size_t r = 0; r < rec.length(); ++r) {
      out << rec.subject_id << ',' << rec.run_id << ',' << format_double(rec.timestamps[r]);
      for (std::size_t c = 0; c < d; ++c) out << ',' << format_double(rec.value(r, c));
      const int label = rec.labels[r];
      if (label < 0 || static_cast<std::size_t>(label) >= meta.class_names.size()) {
        throw DataError("label index " + std::to_string(label) + " has no class name");
      }
      out << ',' << meta.class_names[static_cast<std::size_t>(label)] << '\n';
    }
  }
  if (!out) throw DataError("write failed for " + file.string());
}

}  // namespace hargnn
