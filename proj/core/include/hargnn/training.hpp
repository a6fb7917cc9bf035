#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hargnn/adam.hpp"
#include "hargnn/metrics.hpp"
#include "hargnn/models.hpp"
#include "hargnn/segmentation.hpp"

namespace hargnn {

struct TrainConfig {
  ModelKind model_kind = ModelKind::GcnAttention;
  std::size_t epochs = 100;
  std::size_t batch_size = 100;
  double learning_rate = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  std::size_t window_len = 24;
  std::size_t stride = 12;
  std::size_t hidden = 16;
  std::size_t gcn_layers = 5;
  bool self_loops = true;
  std::size_t attention_repeats = 1;
  std::size_t lstm_hidden = 16;
  std::size_t gat_layers = 2;
  std::size_t gat_width = 16;
  double leaky_slope = 0.2;
  bool class_weighting = false;
  EvalMode validation_mode = EvalMode::SegmentWise;
  std::size_t samplewise_stride = 1;
  std::filesystem::path checkpoint_dir;  // empty: keep checkpoints in memory only
  bool record_wall_time = true;          // false in deterministic runs

  void validate() const;  // throws ConfigError
  nlohmann::ordered_json to_json() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_macro_f1 = 0.0;
  double validation_macro_f1 = 0.0;
  std::optional<double> wall_time_s;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t selected_epoch = 0;
  std::string selected_checkpoint;  // file name inside the checkpoint dir
  std::vector<std::string> warnings;

  nlohmann::ordered_json to_json() const;
};

/// Architecture implied by a training config and the data it will see.
ModelConfig model_config_for(const TrainConfig& config, const SegmentSet& data);

/// Extra header fields stored with each checkpoint (classes, layout, window).
nlohmann::ordered_json checkpoint_data_echo(const TrainConfig& config, const SegmentSet& data);

/// Earliest 1-based epoch with the maximum validation macro-F1.
std::size_t select_epoch(std::span<const double> validation_f1);

/// Path of the selected checkpoint inside `dir`.
std::filesystem::path select_checkpoint(const TrainReport& report, const std::filesystem::path& dir);

std::string checkpoint_name(std::size_t epoch);

struct TrainResult {
  TrainReport report;
  std::unique_ptr<Model> selected_model;  // weights of the selected epoch
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam training. Shuffles the training set each epoch with the
/// run seed (final partial batch kept), evaluates train and validation
/// macro-F1 after every epoch, writes epoch_<k>.ckpt and report.json when a
/// checkpoint dir is set, and keeps the earliest best-validation weights.
///
/// `validation_recordings` is only consulted when validation_mode is
/// sample_wise.
TrainResult train(const SegmentSet& train_set, const SegmentSet& validation_set, const TrainConfig& config,
                  const EpochCallback& on_epoch = {},
                  std::span<const SensorRecording> validation_recordings = {});

/// Epoch-shuffle order used by train(); exposed for the permutation test.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

/// Macro-F1 of `model` on labelled recordings, scored per timestamp.
double samplewise_macro_f1(const Model& model, std::span<const SensorRecording> recordings, std::size_t window_len,
                           std::size_t stride, std::size_t n_classes);

}  // namespace hargnn
