#include "hargnn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "hargnn/checkpoint.hpp"
#include "hargnn/error.hpp"
#include "hargnn/graph.hpp"
#include "hargnn/ops.hpp"
#include "hargnn/predict.hpp"
#include "hargnn/tape.hpp"

namespace hargnn {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be > 0");
  if (window_len < 1) throw ConfigError("data.window_len must be >= 1");
  if (stride < 1 || stride > window_len) throw ConfigError("data.stride must be in [1, window_len]");
  if (samplewise_stride < 1) throw ConfigError("eval.samplewise_stride must be >= 1");
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["model_kind"] = to_string(model_kind);
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["adam_beta1"] = adam_beta1;
  j["adam_beta2"] = adam_beta2;
  j["adam_epsilon"] = adam_epsilon;
  j["seed"] = seed;
  j["window_len"] = window_len;
  j["stride"] = stride;
  j["hidden"] = hidden;
  j["gcn_layers"] = gcn_layers;
  j["self_loops"] = self_loops;
  j["attention_repeats"] = attention_repeats;
  j["lstm_hidden"] = lstm_hidden;
  j["gat_layers"] = gat_layers;
  j["gat_width"] = gat_width;
  j["leaky_slope"] = leaky_slope;
  j["class_weighting"] = class_weighting;
  j["validation_mode"] = to_string(validation_mode);
  j["samplewise_stride"] = samplewise_stride;
  return j;
}

nlohmann::ordered_json TrainReport::to_json() const {
  nlohmann::ordered_json j;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& e : epochs) {
    nlohmann::ordered_json row;
    row["epoch"] = e.epoch;
    row["train_loss"] = e.train_loss;
    row["train_macro_f1"] = e.train_macro_f1;
    row["validation_macro_f1"] = e.validation_macro_f1;
    row["wall_time_s"] = e.wall_time_s ? nlohmann::ordered_json(*e.wall_time_s) : nlohmann::ordered_json(nullptr);
    rows.push_back(row);
  }
  j["epochs"] = rows;
  j["selected_epoch"] = selected_epoch;
  j["selected_checkpoint"] = selected_checkpoint;
  j["warnings"] = warnings;
  return j;
}

ModelConfig model_config_for(const TrainConfig& config, const SegmentSet& data) {
  ModelConfig m;
  m.kind = config.model_kind;
  for (const auto& block : sensor_blocks(data.layout)) m.sensor_widths.push_back(block.width);
  m.n_classes = data.class_count();
  m.nodes = config.window_len;
  m.hidden = config.hidden;
  m.gcn_layers = config.gcn_layers;
  m.self_loops = config.self_loops;
  m.attention_repeats = config.attention_repeats;
  m.lstm_hidden = config.lstm_hidden;
  m.gat_layers = config.gat_layers;
  m.gat_width = config.gat_width;
  m.leaky_slope = config.leaky_slope;
  m.validate();
  return m;
}

nlohmann::ordered_json checkpoint_data_echo(const TrainConfig& config, const SegmentSet& data) {
  nlohmann::ordered_json j;
  j["class_names"] = data.class_names;
  auto layout = nlohmann::ordered_json::array();
  for (const auto& ch : data.layout) layout.push_back({{"sensor_id", ch.sensor_id}, {"name", ch.name}});
  j["channel_layout"] = layout;
  j["window_len"] = config.window_len;
  j["stride"] = config.stride;
  j["train_seed"] = config.seed;
  return j;
}

std::size_t select_epoch(std::span<const double> validation_f1) {
  if (validation_f1.empty()) throw Error("select_epoch: no epochs completed");
  std::size_t best = 0;
  for (std::size_t i = 1; i < validation_f1.size(); ++i)
    if (validation_f1[i] > validation_f1[best]) best = i;
  return best + 1;
}

std::string checkpoint_name(std::size_t epoch) { return "epoch_" + std::to_string(epoch) + ".ckpt"; }

std::filesystem::path select_checkpoint(const TrainReport& report, const std::filesystem::path& dir) {
  std::vector<double> f1;
  for (const auto& e : report.epochs) f1.push_back(e.validation_macro_f1);
  return dir / checkpoint_name(select_epoch(f1));
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  std::mt19937_64 rng(seq);
  // Fisher-Yates with explicit draws keeps the order independent of the
  // standard library's shuffle implementation.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

double samplewise_macro_f1(const Model& model, std::span<const SensorRecording> recordings, std::size_t window_len,
                           std::size_t stride, std::size_t n_classes) {
  std::vector<int> pred, truth;
  for (const auto& rec : recordings) {
    const auto p = predict_samplewise(model, rec, window_len, {stride, 256});
    pred.insert(pred.end(), p.labels.begin(), p.labels.end());
    truth.insert(truth.end(), rec.labels.begin(), rec.labels.end());
  }
  return f1_scores(pred, truth, n_classes).macro_f1;
}

namespace {

std::vector<double> inverse_frequency_weights(const SegmentSet& data) {
  std::vector<double> counts(data.class_count(), 0.0);
  for (int l : data.labels) counts[static_cast<std::size_t>(l)] += 1.0;
  std::vector<double> w(counts.size(), 0.0);
  const double n = static_cast<double>(data.size());
  for (std::size_t c = 0; c < counts.size(); ++c)
    w[c] = counts[c] > 0.0 ? n / (static_cast<double>(counts.size()) * counts[c]) : 0.0;
  return w;
}

void write_json(const std::filesystem::path& file, const nlohmann::ordered_json& j) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

}  // namespace

TrainResult train(const SegmentSet& train_set, const SegmentSet& validation_set, const TrainConfig& config,
                  const EpochCallback& on_epoch, std::span<const SensorRecording> validation_recordings) {
  config.validate();
  if (train_set.empty()) throw DataError("train: training set is empty");
  if (train_set.window_len != config.window_len) {
    throw ConfigError("train: data window length " + std::to_string(train_set.window_len) +
                      " differs from data.window_len " + std::to_string(config.window_len));
  }
  if (!config.checkpoint_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(config.checkpoint_dir, ec);
    if (ec || !std::filesystem::is_directory(config.checkpoint_dir)) {
      throw DataError("train: cannot create checkpoint dir " + config.checkpoint_dir.string());
    }
  }

  TrainResult result;
  auto& report = result.report;
  std::vector<bool> seen(train_set.class_count(), false);
  for (int l : train_set.labels) seen[static_cast<std::size_t>(l)] = true;
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (!seen[c]) report.warnings.push_back("class '" + train_set.class_names[c] + "' has no training segments");
  }
  const bool use_validation =
      config.validation_mode == EvalMode::SampleWise ? !validation_recordings.empty() : !validation_set.empty();
  if (!use_validation) report.warnings.emplace_back("validation split is empty; selecting on training macro-F1");

  const ModelConfig arch = model_config_for(config, train_set);
  auto model = make_model(arch, config.seed);
  std::vector<Tensor> params = model->parameters();
  AdamState adam = AdamState::zeros_like(params);
  const AdamOptions adam_options{config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_epsilon};
  const std::vector<double> class_weights =
      config.class_weighting ? inverse_frequency_weights(train_set) : std::vector<double>{};
  const auto echo = checkpoint_data_echo(config, train_set);

  std::string best_bytes;
  double best_f1 = -1.0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const auto order = epoch_order(train_set.size(), config.seed, epoch);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const GraphBatch batch = batch_from_segments(train_set, idx, config.self_loops);
      for (auto& p : params) p.zero_grad();
      Tape tape;
      const Tensor logits = model->forward(batch);
      const Tensor loss = ops::cross_entropy_loss(logits, batch.labels, class_weights);
      if (!std::isfinite(loss.item())) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      tape.backward(loss);
      adam_step(params, adam, adam_options);
      loss_sum += loss.item() * static_cast<double>(idx.size());
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(train_set.size());
    record.train_macro_f1 =
        f1_scores(predict_segments(*model, train_set), train_set.labels, train_set.class_count()).macro_f1;
    if (!use_validation) {
      record.validation_macro_f1 = record.train_macro_f1;
    } else if (config.validation_mode == EvalMode::SampleWise) {
      record.validation_macro_f1 = samplewise_macro_f1(*model, validation_recordings, config.window_len,
                                                       config.samplewise_stride, train_set.class_count());
    } else {
      record.validation_macro_f1 =
          f1_scores(predict_segments(*model, validation_set), validation_set.labels, validation_set.class_count())
              .macro_f1;
    }

    const std::string bytes = encode_checkpoint(*model, echo);
    if (!config.checkpoint_dir.empty()) {
      std::ofstream out(config.checkpoint_dir / checkpoint_name(epoch), std::ios::binary | std::ios::trunc);
      if (!out) throw DataError("cannot write checkpoint in " + config.checkpoint_dir.string());
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    if (record.validation_macro_f1 > best_f1) {
      best_f1 = record.validation_macro_f1;
      best_bytes = bytes;
    }
    if (config.record_wall_time) {
      record.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    report.epochs.push_back(record);
    if (on_epoch) on_epoch(record);
  }

  std::vector<double> f1;
  for (const auto& e : report.epochs) f1.push_back(e.validation_macro_f1);
  report.selected_epoch = select_epoch(f1);
  report.selected_checkpoint = checkpoint_name(report.selected_epoch);
  result.selected_model = decode_checkpoint(best_bytes).model;
  if (!config.checkpoint_dir.empty()) write_json(config.checkpoint_dir / "report.json", report.to_json());
  return result;
}

}  // namespace hargnn
