#include "app/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>

#include "app/commands.hpp"
#include "hargnn/error.hpp"

namespace hargnn::app {

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> sets;
  long long seed = -1;
  bool deterministic = false;
  std::size_t threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_file, "Config file (key=value lines or a config.lock.json)");
  cmd->add_option("--set", c.sets, "Override one setting, e.g. --set train.epochs=10");
  cmd->add_option("--seed", c.seed, "Seed for synthesis and training");
  cmd->add_flag("--deterministic", c.deterministic, "Single-threaded, byte-reproducible outputs");
  cmd->add_option("--threads", c.threads, "Worker threads (default: HARGNN_THREADS or all cores)");
}

RunConfig resolve(const Common& c) {
  RunConfig config;
  if (!c.config_file.empty()) config.load_file(c.config_file);
  for (const auto& s : c.sets) config.apply_assignment(s);
  if (c.seed >= 0) {
    config.set("train.seed", std::to_string(c.seed));
    config.set("synth.seed", std::to_string(c.seed));
  }
  return config;
}

RunFlags flags_of(const Common& c) { return {c.deterministic, c.threads}; }

// Re-runs the command recorded in a config.lock.json.
void replay(const std::string& lock_file, const std::string& out_override, std::ostream& out) {
  std::ifstream in(lock_file, std::ios::binary);
  if (!in) throw ConfigError("cannot read lock file " + lock_file);
  nlohmann::json lock;
  try {
    lock = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(lock_file + ": " + e.what());
  }
  RunConfig config;
  config.load_file(lock_file);
  const RunFlags flags{lock.value("deterministic", false), 0};
  apply_flags(flags);
  const auto& args = lock.at("arguments");
  const std::string dir = out_override.empty() ? args.at("out").get<std::string>() : out_override;
  const std::string command = lock.at("command").get<std::string>();
  const auto arg = [&](const char* key) { return args.at(key).get<std::string>(); };
  if (command == "synth") {
    cmd_synth(config, flags, dir, out);
  } else if (command == "prepare") {
    cmd_prepare(config, flags, arg("data"), dir, out);
  } else if (command == "train") {
    cmd_train(config, flags, arg("prepared"), dir, out);
  } else if (command == "evaluate") {
    cmd_evaluate(config, flags, arg("checkpoint"), arg("prepared"), dir, out);
  } else if (command == "export") {
    cmd_export(config, flags, arg("checkpoint"), arg("prepared"), arg("what"), dir, out);
  } else if (command == "reproduce-hospital") {
    cmd_reproduce_hospital(config, flags, arg("data"), dir, out);
  } else {
    throw ConfigError("lock file names unknown command '" + command + "'");
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Activity recognition with graph convolution and inter-sensor attention", "hargnn"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Common common;
  std::string out_dir, data_dir, prepared_dir, checkpoint, what, model, mode, lock_file;
  std::size_t epochs = 0;

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset");
  add_common(synth, common);
  synth->add_option("--out", out_dir, "Output directory")->required();

  auto* prepare = app.add_subcommand("prepare", "Split, normalize and summarize a dataset");
  add_common(prepare, common);
  prepare->add_option("--data", data_dir, "Dataset CSV file or directory")->required();
  prepare->add_option("--out", out_dir, "Prepared output directory")->required();

  auto* train = app.add_subcommand("train", "Train a model with per-epoch checkpoints");
  add_common(train, common);
  train->add_option("--prepared", prepared_dir, "Output of prepare")->required();
  train->add_option("--out", out_dir, "Run directory for checkpoints and report.json")->required();
  train->add_option("--model", model, "gcn_attention | gcn | ragnn");
  train->add_option("--epochs", epochs, "Number of epochs");

  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a prepared split");
  add_common(evaluate, common);
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  evaluate->add_option("--prepared", prepared_dir, "Output of prepare")->required();
  evaluate->add_option("--out", out_dir, "Directory for eval_report.json and confusion.csv")->required();
  evaluate->add_option("--mode", mode, "sample_wise | segment_wise");

  auto* exporter = app.add_subcommand("export", "Export attention maps, features or graphs");
  add_common(exporter, common);
  exporter->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  exporter->add_option("--prepared", prepared_dir, "Output of prepare")->required();
  exporter->add_option("--what", what, "attention | features | graphs")->required();
  exporter->add_option("--out", out_dir, "Output directory")->required();

  auto* hospital = app.add_subcommand("reproduce-hospital", "Prepare, train and evaluate all three models");
  add_common(hospital, common);
  hospital->add_option("--data", data_dir, "Dataset directory in the input CSV schema")->required();
  hospital->add_option("--out", out_dir, "Output directory")->required();

  auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a config.lock.json");
  replay_cmd->add_option("lock", lock_file, "config.lock.json")->required();
  replay_cmd->add_option("--out", out_dir, "Output directory (default: the recorded one)");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    for (auto* sub : app.get_subcommands()) out << sub->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (replay_cmd->parsed()) {
      replay(lock_file, out_dir, out);
      return kExitOk;
    }
    RunConfig config = resolve(common);
    if (!model.empty()) config.set("model.kind", model);
    if (epochs > 0) config.set("train.epochs", std::to_string(epochs));
    if (!mode.empty()) config.set("eval.mode", mode);
    const RunFlags flags = flags_of(common);
    apply_flags(flags);
    if (synth->parsed()) cmd_synth(config, flags, out_dir, out);
    if (prepare->parsed()) cmd_prepare(config, flags, data_dir, out_dir, out);
    if (train->parsed()) cmd_train(config, flags, prepared_dir, out_dir, out);
    if (evaluate->parsed()) cmd_evaluate(config, flags, checkpoint, prepared_dir, out_dir, out);
    if (exporter->parsed()) cmd_export(config, flags, checkpoint, prepared_dir, what, out_dir, out);
    if (hospital->parsed()) cmd_reproduce_hospital(config, flags, data_dir, out_dir, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace hargnn::app
