#include "app/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include "hargnn/checkpoint.hpp"
#include "hargnn/error.hpp"
#include "hargnn/exporters.hpp"
#include "hargnn/parallel.hpp"
#include "hargnn/predict.hpp"
#include "hargnn/preprocess.hpp"
#include "hargnn/segmentation.hpp"
#include "hargnn/synth.hpp"
#include "hargnn/training.hpp"

namespace hargnn::app {

namespace fs = std::filesystem;

namespace {

const char* kSplitNames[] = {"train", "validation", "test"};

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  out << text;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create directory " + dir.string());
}

std::string fixed(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

ChannelLayout layout_from_json(const nlohmann::json& j) {
  ChannelLayout layout;
  for (const auto& ch : j) layout.push_back({ch.at("sensor_id").get<int>(), ch.at("name").get<std::string>()});
  return layout;
}

struct CheckpointData {
  std::vector<std::string> class_names;
  ChannelLayout layout;
  std::size_t window_len = 0;
  std::size_t stride = 0;
};

CheckpointData checkpoint_data(const LoadedCheckpoint& ckpt) {
  const auto& d = ckpt.data();
  CheckpointData out;
  try {
    out.class_names = d.at("class_names").get<std::vector<std::string>>();
    out.layout = layout_from_json(d.at("channel_layout"));
    out.window_len = d.at("window_len").get<std::size_t>();
    out.stride = d.at("stride").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint is missing its data description: ") + e.what());
  }
  return out;
}

void check_compatible(const CheckpointData& ckpt, const PreparedData& data) {
  if (ckpt.class_names != data.meta.class_names) {
    throw ConfigError("checkpoint classes do not match the prepared dataset classes");
  }
  for (const auto* split : {&data.train, &data.validation, &data.test})
    for (const auto& rec : *split)
      if (rec.layout != ckpt.layout) throw ConfigError("checkpoint channel layout does not match the prepared dataset");
}

nlohmann::ordered_json segments_per_class(const SegmentSet& set, const std::vector<std::string>& names) {
  std::vector<std::size_t> counts(names.size(), 0);
  for (int label : set.labels) ++counts[static_cast<std::size_t>(label)];
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < names.size(); ++c) j[names[c]] = counts[c];
  return j;
}

void print_confusion(std::ostream& out, const EvalReport& report, const std::vector<std::string>& names) {
  std::size_t width = 5;
  for (const auto& n : names) width = std::max(width, n.size());
  auto pad = [&](const std::string& s) { return s + std::string(width + 1 - std::min(width, s.size()), ' '); };
  out << pad("truth\\pred");
  for (std::size_t c = 0; c < names.size(); ++c) out << pad(std::to_string(c));
  out << '\n';
  for (std::size_t r = 0; r < names.size(); ++r) {
    out << pad(std::to_string(r) + ":" + names[r].substr(0, width - 2));
    for (std::size_t c = 0; c < names.size(); ++c) out << pad(std::to_string(report.confusion[r][c]));
    out << '\n';
  }
}

}  // namespace

const std::vector<SensorRecording>& PreparedData::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "validation") return validation;
  if (name == "test") return test;
  throw ConfigError("unknown split '" + name + "' (expected train, validation or test)");
}

PreparedData load_prepared(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("prepared directory not found: " + dir.string());
  PreparedData out;
  out.meta = DatasetMeta::load(dir / kMetaFileName);
  const auto load = [&](const char* name) {
    const fs::path file = dir / (std::string(name) + ".csv");
    if (!fs::exists(file)) throw DataError("prepared directory lacks " + file.string());
    return load_recordings(file, out.meta);
  };
  out.train = load("train");
  out.validation = load("validation");
  out.test = load("test");
  return out;
}

void apply_flags(const RunFlags& flags) {
  if (flags.deterministic) {
    set_worker_count(1);
  } else {
    set_worker_count(flags.threads);
  }
}

void write_lock(const fs::path& dir, const std::string& command, const nlohmann::ordered_json& arguments,
                const RunConfig& config, const RunFlags& flags) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["arguments"] = arguments;
  j["deterministic"] = flags.deterministic;
  j["settings"] = config.to_json();
  write_text(dir / "config.lock.json", j.dump(2) + "\n");
}

void cmd_synth(const RunConfig& config, const RunFlags& flags, const fs::path& out_dir, std::ostream& out) {
  const SynthConfig sc = config.synth_config();
  const auto seed = static_cast<std::uint64_t>(config.get_int("synth.seed"));
  const auto recordings = synthesize(sc, seed);
  make_dir(out_dir);
  const DatasetMeta meta = synth_meta(sc);
  write_recordings_csv(out_dir / "recordings.csv", recordings, meta);
  meta.save(out_dir / kMetaFileName);
  write_lock(out_dir, "synth", {{"out", out_dir.string()}}, config, flags);
  std::size_t samples = 0;
  for (const auto& r : recordings) samples += r.length();
  out << "synthesized " << recordings.size() << " subjects, " << sc.n_classes << " classes, " << sc.n_sensors
      << " sensors x " << sc.channels_per_sensor << " channels, " << samples << " samples -> " << out_dir.string()
      << '\n';
  if (sc.n_classes == 1) out << "warning: single-class dataset; F1 scores will be trivial\n";
}

void cmd_prepare(const RunConfig& config, const RunFlags& flags, const fs::path& data_dir, const fs::path& out_dir,
                 std::ostream& out) {
  DatasetMeta meta;
  const auto recordings = load_dataset(data_dir, &meta);
  if (recordings.empty()) throw DataError("no recordings in " + data_dir.string());
  std::vector<int> subjects;
  for (const auto& r : recordings) subjects.push_back(r.subject_id);
  std::sort(subjects.begin(), subjects.end());
  subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
  const SplitSpec spec = config.split_spec(subjects);

  const double target_hz = config.get_double("data.target_hz");
  const auto prepared = prepare_recordings(recordings, spec, target_hz);
  if (target_hz > 0.0) meta.sample_rate_hz = target_hz;

  const std::size_t window_len = config.get_size("data.window_len");
  const std::size_t stride = config.get_size("data.stride");

  make_dir(out_dir);
  meta.save(out_dir / kMetaFileName);
  prepared.stats.save(out_dir / "stats.json");

  nlohmann::ordered_json summary;
  summary["channels"] = recordings.front().channel_count();
  summary["sensors"] = sensor_blocks(recordings.front().layout).size();
  summary["window_len"] = window_len;
  summary["stride"] = stride;
  summary["sample_rate_hz"] = meta.sample_rate_hz;
  auto warnings = prepared.split.warnings;
  const std::vector<SensorRecording>* parts[] = {&prepared.split.train, &prepared.split.validation,
                                                 &prepared.split.test};
  const std::set<int>* sets[] = {&spec.train, &spec.validation, &spec.test};
  out << "split        subjects  recordings  samples  segments\n";
  for (int s = 0; s < 3; ++s) {
    const auto& part = *parts[s];
    write_recordings_csv(out_dir / (std::string(kSplitNames[s]) + ".csv"), part, meta,
                         recordings.front().layout);
    const SegmentSet segs = segment_all(part, window_len, stride, meta.class_names);
    for (const auto& w : segs.warnings) warnings.push_back(std::string(kSplitNames[s]) + ": " + w);
    std::size_t samples = 0;
    for (const auto& r : part) samples += r.length();
    nlohmann::ordered_json j;
    j["subjects"] = std::vector<int>(sets[s]->begin(), sets[s]->end());
    j["recordings"] = part.size();
    j["samples"] = samples;
    j["segments"] = segs.size();
    j["segments_per_class"] = segments_per_class(segs, meta.class_names);
    summary["splits"][kSplitNames[s]] = j;
    char line[128];
    std::snprintf(line, sizeof line, "%-12s %8zu  %10zu  %7zu  %8zu\n", kSplitNames[s], sets[s]->size(), part.size(),
                  samples, segs.size());
    out << line;
  }
  summary["warnings"] = warnings;
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  write_lock(out_dir, "prepare", {{"data", data_dir.string()}, {"out", out_dir.string()}}, config, flags);
  out << "D=" << summary["channels"].get<std::size_t>() << " T=" << window_len << " stride=" << stride << '\n';
  for (const auto& w : warnings) out << "warning: " << w << '\n';
}

void cmd_train(const RunConfig& config, const RunFlags& flags, const fs::path& prepared_dir, const fs::path& out_dir,
               std::ostream& out) {
  TrainConfig tc = config.train_config();
  const PreparedData data = load_prepared(prepared_dir);
  const SegmentSet train_set = segment_all(data.train, tc.window_len, tc.stride, data.meta.class_names);
  const SegmentSet validation_set = segment_all(data.validation, tc.window_len, tc.stride, data.meta.class_names);
  if (train_set.empty()) throw DataError("training split has no segments of length " + std::to_string(tc.window_len));

  make_dir(out_dir);
  tc.checkpoint_dir = out_dir;
  tc.record_wall_time = !flags.deterministic;
  write_lock(out_dir, "train", {{"prepared", prepared_dir.string()}, {"out", out_dir.string()}}, config, flags);

  out << "model " << to_string(tc.model_kind) << ", " << train_set.size() << " train / " << validation_set.size()
      << " validation segments\n";
  out << "epoch  train_loss  train_f1  val_f1" << (tc.record_wall_time ? "  time_s" : "") << '\n';
  const auto on_epoch = [&](const EpochRecord& e) {
    char line[128];
    std::snprintf(line, sizeof line, "%5zu  %10.5f  %8.4f  %6.4f", e.epoch, e.train_loss, e.train_macro_f1,
                  e.validation_macro_f1);
    out << line;
    if (e.wall_time_s) out << "  " << fixed(*e.wall_time_s, 2);
    out << '\n' << std::flush;
  };
  const TrainResult result = train(train_set, validation_set, tc, on_epoch, data.validation);
  for (const auto& w : result.report.warnings) out << "warning: " << w << '\n';
  out << "selected epoch " << result.report.selected_epoch << " -> " << (out_dir / result.report.selected_checkpoint).string()
      << '\n';
}

double cmd_evaluate(const RunConfig& config, const RunFlags& flags, const fs::path& checkpoint,
                    const fs::path& prepared_dir, const fs::path& out_dir, std::ostream& out) {
  const EvalMode mode = parse_eval_mode(config.get("eval.mode"));
  const std::string split_name = config.get("eval.split");
  const std::size_t sw_stride = config.get_size("eval.samplewise_stride");
  if (sw_stride == 0) throw ConfigError("eval.samplewise_stride must be >= 1");

  const LoadedCheckpoint ckpt = load_checkpoint(checkpoint);
  const CheckpointData cd = checkpoint_data(ckpt);
  const PreparedData data = load_prepared(prepared_dir);
  check_compatible(cd, data);
  const auto& recordings = data.split(split_name);
  if (recordings.empty()) throw DataError("the " + split_name + " split is empty; nothing to evaluate");

  std::vector<int> predicted, truth;
  std::vector<std::string> flags_out;
  if (mode == EvalMode::SampleWise) {
    for (const auto& rec : recordings) {
      const auto p = predict_samplewise(*ckpt.model, rec, cd.window_len, {.stride = sw_stride, .batch_size = 256});
      if (p.padded) {
        flags_out.push_back("subject " + std::to_string(rec.subject_id) + " run " + std::to_string(rec.run_id) +
                            " is shorter than the window; predicted from one edge-padded window");
      }
      predicted.insert(predicted.end(), p.labels.begin(), p.labels.end());
      truth.insert(truth.end(), rec.labels.begin(), rec.labels.end());
    }
  } else {
    const SegmentSet segs = segment_all(recordings, cd.window_len, cd.stride, cd.class_names);
    if (segs.empty()) throw DataError("the " + split_name + " split has no complete windows");
    predicted = predict_segments(*ckpt.model, segs);
    truth = segs.labels;
  }
  EvalReport report = f1_scores(predicted, truth, cd.class_names.size());
  report.mode = mode;
  report.flags = flags_out;

  make_dir(out_dir);
  write_eval_report(out_dir, report, cd.class_names);
  write_lock(out_dir, "evaluate",
             {{"checkpoint", checkpoint.string()}, {"prepared", prepared_dir.string()}, {"out", out_dir.string()}},
             config, flags);
  out << to_string(mode) << " on " << split_name << " (" << report.n_samples << " samples)\n";
  out << "macro_f1 " << fixed(report.macro_f1) << "  weighted_f1 " << fixed(report.weighted_f1) << '\n';
  print_confusion(out, report, cd.class_names);
  for (const auto& f : report.flags) out << "flag: " << f << '\n';
  return report.macro_f1;
}

void cmd_export(const RunConfig& config, const RunFlags& flags, const fs::path& checkpoint,
                const fs::path& prepared_dir, const std::string& what, const fs::path& out_dir, std::ostream& out) {
  if (what != "attention" && what != "features" && what != "graphs") {
    throw ConfigError("unknown export '" + what + "' (expected attention, features or graphs)");
  }
  const LoadedCheckpoint ckpt = load_checkpoint(checkpoint);
  if (what == "attention" && ckpt.model->config().kind != ModelKind::GcnAttention) {
    throw ConfigError("attention export needs a gcn_attention checkpoint; " + checkpoint.string() + " holds a " +
                      to_string(ckpt.model->config().kind) + " model");
  }
  const CheckpointData cd = checkpoint_data(ckpt);
  const PreparedData data = load_prepared(prepared_dir);
  check_compatible(cd, data);
  const std::string split_name = config.get("eval.split");
  const SegmentSet segs = segment_all(data.split(split_name), cd.window_len, cd.stride, cd.class_names);
  if (segs.empty()) throw DataError("the " + split_name + " split has no segments to export");

  make_dir(out_dir);
  if (what == "attention") {
    const auto summary = summarize_attention(*ckpt.model, segs);
    std::vector<std::string> sensor_names;
    for (const auto& b : sensor_blocks(cd.layout)) sensor_names.push_back("s" + std::to_string(b.sensor_id));
    write_attention_exports(out_dir, summary, cd.class_names, sensor_names);
    out << "attention maps for " << segs.size() << " segments -> " << out_dir.string() << '\n';
    for (std::size_t s = 0; s < sensor_names.size(); ++s)
      out << "  column share " << sensor_names[s] << ": " << fixed(summary.column_share(s)) << '\n';
  } else if (what == "features") {
    const auto features = extract_features(*ckpt.model, segs);
    const auto projection = pca(features.values, features.rows, features.cols, 2);
    write_feature_exports(out_dir, features, projection, segs);
    out << features.rows << " x " << features.cols << " features -> " << out_dir.string() << '\n';
  } else {
    // first segment of every class present
    std::vector<std::size_t> picks;
    std::vector<bool> seen(cd.class_names.size(), false);
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const auto c = static_cast<std::size_t>(segs.labels[i]);
      if (!seen[c]) {
        seen[c] = true;
        picks.push_back(i);
      }
    }
    write_graph_exports(out_dir, segs, picks, ckpt.model->config().self_loops);
    out << picks.size() << " graphs -> " << (out_dir / "graphs").string() << '\n';
  }
  write_lock(out_dir, "export",
             {{"checkpoint", checkpoint.string()},
              {"prepared", prepared_dir.string()},
              {"what", what},
              {"out", out_dir.string()}},
             config, flags);
}

void cmd_reproduce_hospital(const RunConfig& config, const RunFlags& flags, const fs::path& data_dir,
                            const fs::path& out_dir, std::ostream& out) {
  const fs::path prepared = out_dir / "prepared";
  cmd_prepare(config, flags, data_dir, prepared, out);
  nlohmann::ordered_json results;
  results["data"] = data_dir.string();
  results["eval_mode"] = config.get("eval.mode");
  std::vector<std::pair<std::string, double>> scores;
  for (const char* kind : {"gcn_attention", "gcn", "ragnn"}) {
    RunConfig c = config;
    c.set("model.kind", kind);
    const fs::path run_dir = out_dir / kind;
    out << "\n== " << kind << " ==\n";
    cmd_train(c, flags, prepared, run_dir, out);
    const auto report = nlohmann::json::parse(std::ifstream(run_dir / "report.json"));
    const fs::path ckpt = run_dir / report.at("selected_checkpoint").get<std::string>();
    const double f1 = cmd_evaluate(c, flags, ckpt, prepared, run_dir / "eval", out);
    scores.emplace_back(kind, f1);
    results["models"][kind] = {{"macro_f1", f1},
                               {"selected_epoch", report.at("selected_epoch").get<std::size_t>()},
                               {"checkpoint", ckpt.string()}};
  }
  write_text(out_dir / "results.json", results.dump(2) + "\n");
  write_lock(out_dir, "reproduce-hospital", {{"data", data_dir.string()}, {"out", out_dir.string()}}, config, flags);
  out << "\nmodel           test macro_f1 (" << config.get("eval.mode") << ")\n";
  for (const auto& [kind, f1] : scores) {
    char line[96];
    std::snprintf(line, sizeof line, "%-15s %.4f\n", kind.c_str(), f1);
    out << line;
  }
}

}  // namespace hargnn::app
