#include <doctest.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "app/cli.hpp"
#include "support.hpp"

using hargnn::app::run_cli;
using test_support::read_file;
using test_support::TempDir;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

const std::vector<std::string> kSmallSynth{"--set", "synth.duration_s=40", "--set", "synth.n_classes=4"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// synth + prepare into dir/data and dir/prepared.
void make_prepared(const TempDir& dir, std::vector<std::string> extra = {}) {
  REQUIRE(cli(with({"synth", "--out", (dir / "data").string(), "--seed", "4"}, kSmallSynth)).code == 0);
  auto args = with({"prepare", "--data", (dir / "data").string(), "--out", (dir / "prepared").string()}, extra);
  const auto r = cli(args);
  INFO(r.err);
  REQUIRE(r.code == 0);
}

}  // namespace

TEST_CASE("synth is deterministic for a seed") {
  TempDir dir;
  REQUIRE(cli(with({"synth", "--out", (dir / "a").string(), "--seed", "9"}, kSmallSynth)).code == 0);
  REQUIRE(cli(with({"synth", "--out", (dir / "b").string(), "--seed", "9"}, kSmallSynth)).code == 0);
  REQUIRE(cli(with({"synth", "--out", (dir / "c").string(), "--seed", "10"}, kSmallSynth)).code == 0);
  CHECK(read_file(dir / "a/recordings.csv") == read_file(dir / "b/recordings.csv"));
  CHECK(read_file(dir / "a/recordings.csv") != read_file(dir / "c/recordings.csv"));
}

TEST_CASE("synth flags a single-class dataset") {
  TempDir dir;
  const auto r = cli({"synth", "--out", (dir / "a").string(), "--set", "synth.n_classes=1", "--set",
                      "synth.duration_s=20"});
  CHECK(r.code == 0);
  CHECK((r.out + r.err).find("single-class") != std::string::npos);
}

TEST_CASE("prepare is idempotent and summarizes the layout") {
  TempDir dir;
  make_prepared(dir);
  const auto first = read_file(dir / "prepared/train.csv");
  const auto summary_text = read_file(dir / "prepared/summary.json");
  REQUIRE(cli({"prepare", "--data", (dir / "data").string(), "--out", (dir / "prepared").string()}).code == 0);
  CHECK(read_file(dir / "prepared/train.csv") == first);
  CHECK(read_file(dir / "prepared/test.csv") == read_file(dir / "prepared/test.csv"));
  CHECK(read_file(dir / "prepared/summary.json") == summary_text);
  const auto summary = nlohmann::json::parse(summary_text);
  CHECK(summary["channels"] == 6);
  CHECK(summary["sensors"] == 2);
  CHECK(summary["window_len"] == 24);
  CHECK(summary["stride"] == 12);
  CHECK(summary["splits"]["train"]["subjects"].size() == 3);
  CHECK(summary["splits"]["test"]["subjects"].size() == 8);
}

TEST_CASE("a subject missing from the split is a config error") {
  TempDir dir;
  REQUIRE(cli(with({"synth", "--out", (dir / "data").string()}, kSmallSynth)).code == 0);
  const auto r = cli({"prepare", "--data", (dir / "data").string(), "--out", (dir / "p").string(), "--set",
                      "split.train=1,2", "--set", "split.test=3"});
  CHECK(r.code == 1);
  CHECK(r.err.find("not assigned") != std::string::npos);
}

TEST_CASE("train, evaluate, export and replay") {
  TempDir dir;
  make_prepared(dir);
  const auto prepared = (dir / "prepared").string();

  SUBCASE("one epoch writes one checkpoint") {
    REQUIRE(cli({"train", "--prepared", prepared, "--out", (dir / "run").string(), "--epochs", "1",
                 "--deterministic"})
                .code == 0);
    std::size_t ckpts = 0;
    for (const auto& e : fs::directory_iterator(dir / "run")) ckpts += e.path().extension() == ".ckpt";
    CHECK(ckpts == 1);
    CHECK(fs::exists(dir / "run/report.json"));
    CHECK(fs::exists(dir / "run/config.lock.json"));
  }

  SUBCASE("segment-wise validation score reproduces the training record") {
    REQUIRE(cli({"train", "--prepared", prepared, "--out", (dir / "run").string(), "--epochs", "3",
                 "--deterministic", "--model", "gcn"})
                .code == 0);
    const auto report = nlohmann::json::parse(read_file(dir / "run/report.json"));
    const std::string ckpt = report["selected_checkpoint"];
    const std::size_t sel = report["selected_epoch"];
    const double recorded = report["epochs"][sel - 1]["validation_macro_f1"];
    const auto r = cli({"evaluate", "--checkpoint", (dir / "run" / ckpt).string(), "--prepared", prepared, "--out",
                        (dir / "eval").string(), "--mode", "segment_wise", "--set", "eval.split=validation",
                        "--deterministic"});
    INFO(r.err);
    REQUIRE(r.code == 0);
    const auto eval = nlohmann::json::parse(read_file(dir / "eval/eval_report.json"));
    CHECK(eval["macro_f1"].get<double>() == recorded);

    // attention export is only defined for the attention model
    const auto bad = cli({"export", "--checkpoint", (dir / "run" / ckpt).string(), "--prepared", prepared, "--what",
                          "attention", "--out", (dir / "exp").string()});
    CHECK(bad.code == 1);
    CHECK(cli({"export", "--checkpoint", (dir / "run" / ckpt).string(), "--prepared", prepared, "--what", "features",
               "--out", (dir / "exp").string()})
              .code == 0);
    CHECK(fs::exists(dir / "exp/projection.csv"));
  }

  SUBCASE("replaying the lock reproduces the report") {
    REQUIRE(cli({"train", "--prepared", prepared, "--out", (dir / "run").string(), "--epochs", "2",
                 "--deterministic", "--seed", "3"})
                .code == 0);
    const auto r = cli({"replay", (dir / "run/config.lock.json").string(), "--out", (dir / "again").string()});
    INFO(r.err);
    REQUIRE(r.code == 0);
    CHECK(read_file(dir / "again/report.json") == read_file(dir / "run/report.json"));
    CHECK(read_file(dir / "again/epoch_2.ckpt") == read_file(dir / "run/epoch_2.ckpt"));
  }

  SUBCASE("attention export on the attention model") {
    REQUIRE(cli({"train", "--prepared", prepared, "--out", (dir / "run").string(), "--epochs", "1"}).code == 0);
    const auto r = cli({"export", "--checkpoint", (dir / "run/epoch_1.ckpt").string(), "--prepared", prepared,
                        "--what", "attention", "--out", (dir / "exp").string()});
    INFO(r.err);
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "exp/attention.csv"));
    CHECK(cli({"export", "--checkpoint", (dir / "run/epoch_1.ckpt").string(), "--prepared", prepared, "--what",
               "weights", "--out", (dir / "exp").string()})
              .code == 1);
  }
}

TEST_CASE("evaluate on an empty split fails") {
  TempDir dir;
  make_prepared(dir, {"--set", "split.train=1,2,3,4,5,6", "--set", "split.validation=7,8,9,10,11,12"});
  const auto prepared = (dir / "prepared").string();
  REQUIRE(cli({"train", "--prepared", prepared, "--out", (dir / "run").string(), "--epochs", "1", "--model", "gcn"})
              .code == 0);
  const auto r = cli({"evaluate", "--checkpoint", (dir / "run/epoch_1.ckpt").string(), "--prepared", prepared, "--out",
                      (dir / "eval").string()});
  CHECK(r.code != 0);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("error exit codes") {
  TempDir dir;
  CHECK(cli({}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"synth"}).code == 1);
  CHECK(cli({"synth", "--out", (dir / "x").string(), "--set", "synth.colour=blue"}).code == 1);
  CHECK(cli({"synth", "--out", (dir / "x").string(), "--set", "nonsense"}).code == 1);
  CHECK(cli({"prepare", "--data", (dir / "missing").string(), "--out", (dir / "p").string()}).code == 2);
  CHECK(cli({"train", "--prepared", (dir / "missing").string(), "--out", (dir / "r").string()}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}
