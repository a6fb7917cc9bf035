#include "app/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "hargnn/error.hpp"

namespace hargnn::app {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string json_scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_array()) {
    std::string out;
    for (const auto& item : v) {
      if (!out.empty()) out += ',';
      out += json_scalar_text(item);
    }
    return out;
  }
  return v.dump();
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& RunConfig::defaults() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"data.target_hz", "0"},
      {"data.window_len", "24"},
      {"data.stride", "12"},
      {"split.train", ""},
      {"split.validation", ""},
      {"split.test", ""},
      {"model.kind", "gcn_attention"},
      {"model.hidden", "16"},
      {"model.gcn_layers", "5"},
      {"gcn.self_loops", "true"},
      {"attention.repeats", "1"},
      {"ragnn.lstm_hidden", "16"},
      {"ragnn.gat_layers", "2"},
      {"ragnn.gat_width", "16"},
      {"ragnn.leaky_slope", "0.2"},
      {"train.epochs", "100"},
      {"train.batch_size", "100"},
      {"train.learning_rate", "0.01"},
      {"train.adam_beta1", "0.9"},
      {"train.adam_beta2", "0.999"},
      {"train.adam_epsilon", "1e-8"},
      {"train.seed", "0"},
      {"train.class_weighting", "false"},
      {"train.validation_mode", "segment_wise"},
      {"eval.mode", "sample_wise"},
      {"eval.split", "test"},
      {"eval.samplewise_stride", "1"},
      {"synth.seed", "0"},
      {"synth.n_subjects", "12"},
      {"synth.n_classes", "7"},
      {"synth.n_sensors", "2"},
      {"synth.channels_per_sensor", "3"},
      {"synth.sample_rate_hz", "10"},
      {"synth.duration_s", "240"},
      {"synth.noise_std", "0.3"},
      {"synth.informativeness", "1,1"},
      {"synth.bout_min_s", "3"},
      {"synth.bout_max_s", "10"},
      {"synth.subject_variability", "0.1"},
  };
  return table;
}

RunConfig::RunConfig() {
  for (const auto& [k, v] : defaults()) values_[k] = v;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

void RunConfig::apply_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::load_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const std::string head = trim(text);
  if (!head.empty() && head.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(file.string() + ": " + e.what());
    }
    const auto& settings = j.contains("settings") ? j.at("settings") : j;
    for (const auto& [k, v] : settings.items()) set(k, json_scalar_text(v));
    return;
  }
  std::stringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      apply_assignment(line);
    } catch (const ConfigError& e) {
      throw ConfigError(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

long long RunConfig::get_int(const std::string& key) const {
  const auto& s = get(key);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(key + ": expected an integer, got '" + s + "'");
  return v;
}

std::size_t RunConfig::get_size(const std::string& key) const {
  const auto v = get_int(key);
  if (v < 0) throw ConfigError(key + ": must be non-negative");
  return static_cast<std::size_t>(v);
}

double RunConfig::get_double(const std::string& key) const {
  const auto& s = get(key);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(key + ": expected a number, got '" + s + "'");
  return v;
}

bool RunConfig::get_bool(const std::string& key) const {
  const auto& s = get(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

std::vector<double> RunConfig::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(get(key))) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) throw ConfigError(key + ": bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<int> RunConfig::get_ints(const std::string& key) const {
  std::vector<int> out;
  for (const auto& item : split_list(get(key))) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) throw ConfigError(key + ": bad integer '" + item + "'");
    out.push_back(v);
  }
  return out;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig c;
  c.model_kind = parse_model_kind(get("model.kind"));
  c.epochs = get_size("train.epochs");
  c.batch_size = get_size("train.batch_size");
  c.learning_rate = get_double("train.learning_rate");
  c.adam_beta1 = get_double("train.adam_beta1");
  c.adam_beta2 = get_double("train.adam_beta2");
  c.adam_epsilon = get_double("train.adam_epsilon");
  c.seed = static_cast<std::uint64_t>(get_int("train.seed"));
  c.window_len = get_size("data.window_len");
  c.stride = get_size("data.stride");
  c.hidden = get_size("model.hidden");
  c.gcn_layers = get_size("model.gcn_layers");
  c.self_loops = get_bool("gcn.self_loops");
  c.attention_repeats = get_size("attention.repeats");
  c.lstm_hidden = get_size("ragnn.lstm_hidden");
  c.gat_layers = get_size("ragnn.gat_layers");
  c.gat_width = get_size("ragnn.gat_width");
  c.leaky_slope = get_double("ragnn.leaky_slope");
  c.class_weighting = get_bool("train.class_weighting");
  c.validation_mode = parse_eval_mode(get("train.validation_mode"));
  c.samplewise_stride = get_size("eval.samplewise_stride");
  c.validate();
  return c;
}

SynthConfig RunConfig::synth_config() const {
  SynthConfig c;
  c.n_subjects = static_cast<int>(get_int("synth.n_subjects"));
  c.n_classes = static_cast<int>(get_int("synth.n_classes"));
  c.n_sensors = static_cast<int>(get_int("synth.n_sensors"));
  c.channels_per_sensor = static_cast<int>(get_int("synth.channels_per_sensor"));
  c.sample_rate_hz = get_double("synth.sample_rate_hz");
  c.duration_s = get_double("synth.duration_s");
  c.noise_std = get_double("synth.noise_std");
  c.sensor_informativeness = get_doubles("synth.informativeness");
  c.bout_min_s = get_double("synth.bout_min_s");
  c.bout_max_s = get_double("synth.bout_max_s");
  c.subject_variability = get_double("synth.subject_variability");
  c.validate();
  return c;
}

SplitSpec RunConfig::split_spec(const std::vector<int>& subjects) const {
  const auto train = get_ints("split.train");
  const auto validation = get_ints("split.validation");
  const auto test = get_ints("split.test");
  SplitSpec spec;
  if (train.empty() && validation.empty() && test.empty()) {
    spec = SplitSpec::standard(subjects);
  } else {
    spec.train.insert(train.begin(), train.end());
    spec.validation.insert(validation.begin(), validation.end());
    spec.test.insert(test.begin(), test.end());
  }
  spec.validate();
  return spec;
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : values_) j[k] = v;
  return j;
}

}  // namespace hargnn::app
