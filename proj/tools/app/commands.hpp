#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "app/run_config.hpp"
#include "hargnn/recording.hpp"

namespace hargnn::app {

/// Process-level switches shared by every command.
struct RunFlags {
  bool deterministic = false;  // single worker, no wall-clock fields in outputs
  std::size_t threads = 0;     // 0: HARGNN_THREADS or hardware default
};

/// Output of `prepare`: normalized recordings per split plus metadata.
struct PreparedData {
  DatasetMeta meta;
  std::vector<SensorRecording> train, validation, test;

  const std::vector<SensorRecording>& split(const std::string& name) const;
};

PreparedData load_prepared(const std::filesystem::path& dir);

void cmd_synth(const RunConfig& config, const RunFlags& flags, const std::filesystem::path& out_dir, std::ostream& out);

void cmd_prepare(const RunConfig& config, const RunFlags& flags, const std::filesystem::path& data_dir,
                 const std::filesystem::path& out_dir, std::ostream& out);

void cmd_train(const RunConfig& config, const RunFlags& flags, const std::filesystem::path& prepared_dir,
               const std::filesystem::path& out_dir, std::ostream& out);

/// Returns the headline macro-F1.
double cmd_evaluate(const RunConfig& config, const RunFlags& flags, const std::filesystem::path& checkpoint,
                    const std::filesystem::path& prepared_dir, const std::filesystem::path& out_dir, std::ostream& out);

/// what: attention | features | graphs
void cmd_export(const RunConfig& config, const RunFlags& flags, const std::filesystem::path& checkpoint,
                const std::filesystem::path& prepared_dir, const std::string& what,
                const std::filesystem::path& out_dir, std::ostream& out);

/// prepare, then train and evaluate all three model kinds on a dataset in the
/// input CSV schema; writes results.json with one score per model.
void cmd_reproduce_hospital(const RunConfig& config, const RunFlags& flags, const std::filesystem::path& data_dir,
                            const std::filesystem::path& out_dir, std::ostream& out);

/// config.lock.json: command, arguments and every resolved setting.
void write_lock(const std::filesystem::path& dir, const std::string& command, const nlohmann::ordered_json& arguments,
                const RunConfig& config, const RunFlags& flags);

void apply_flags(const RunFlags& flags);

}  // namespace hargnn::app
