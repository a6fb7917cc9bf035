#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "hargnn/metrics.hpp"
#include "hargnn/segmentation.hpp"
#include "hargnn/synth.hpp"
#include "hargnn/training.hpp"

namespace hargnn::app {

/// Every setting of every command as a flat map of dotted keys. Each key has
/// a default; files and `--set` overrides may only name known keys.
///
/// File format, one setting per line:
///
///     # comment
///     train.batch_size = 100
///
/// A JSON object (e.g. a config.lock.json) is accepted as well; its
/// "settings" member, or the object itself, maps keys to values.
class RunConfig {
 public:
  RunConfig();

  static const std::vector<std::pair<std::string, std::string>>& defaults();

  void set(const std::string& key, const std::string& value);  // throws ConfigError
  void apply_assignment(const std::string& assignment);        // "key=value"
  void load_file(const std::filesystem::path& file);

  const std::string& get(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;  // non-negative integer
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<int> get_ints(const std::string& key) const;

  TrainConfig train_config() const;
  SynthConfig synth_config() const;
  /// Explicit split.* sets when any is given, else the default split of the
  /// sorted subject ids.
  SplitSpec split_spec(const std::vector<int>& subjects) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  nlohmann::ordered_json to_json() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace hargnn::app
