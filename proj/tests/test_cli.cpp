// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "pedrisk/cli.hpp"
#include "pedrisk/io/csv.hpp"
#include "pedrisk/io/formats.hpp"
#include "support.hpp"

using namespace pedrisk;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) { return run_cli(args); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::vector<std::string> small_synth(const fs::path& out) {
  return {"--seed", "7", "--out-dir", out.string(), "synth", "--n-images", "120", "--n-test", "20",
          "--n-distractors", "30"};
}

// synth -> match -> split -> counts -> baseline -> train -> predict -> eval-reg -> report
std::string pipeline(const fs::path& root) {
  const auto s = root / "synth";
  REQUIRE(run(small_synth(s)) == 0);
  const auto o = [&](const char* n) { return (root / n).string(); };
  REQUIRE(run({"--out-dir", o("match"), "match", "--images", (s / "images.csv").string(), "--crossings",
               (s / "crossings.csv").string()}) == 0);
  REQUIRE(run({"--out-dir", o("split"), "split", "--annotations", (s / "annotations.json").string(), "--labels",
               (root / "match" / "labels.csv").string(), "--holdout", (s / "holdout.csv").string()}) == 0);
  const auto split = (root / "split" / "split.csv").string();
  REQUIRE(run({"--out-dir", o("counts"), "counts", "--annotations", (s / "annotations.json").string(), "--detections",
               (s / "detections.json").string(), "--images", (s / "images.csv").string(), "--split", split,
               "--coords"}) == 0);
  REQUIRE(run({"--out-dir", o("base"), "baseline", "--counts", (root / "counts" / "counts.csv").string(), "--labels",
               (s / "labels.csv").string(), "--split", split}) == 0);
  REQUIRE(run({"--out-dir", o("train"), "train-pcpm", "--manifest", (s / "manifest.csv").string(), "--split", split,
               "--epochs", "2", "--lr", "1e-4"}) == 0);
  REQUIRE(run({"--out-dir", o("pred"), "predict-pcpm", "--checkpoint", (root / "train" / "checkpoint.json").string(),
               "--manifest", (s / "manifest.csv").string(), "--split", split, "--folds", "test"}) == 0);
  REQUIRE(run({"--out-dir", o("ereg"), "eval-reg", "--labels", (s / "labels.csv").string(), "--predictions",
               (root / "pred" / "predictions.csv").string(), "--name", "pcpm"}) == 0);
  REQUIRE(run({"--out-dir", o("edet"), "eval-det", "--annotations", (s / "annotations.json").string(),
               "--detections", (s / "detections.json").string()}) == 0);
  REQUIRE(run({"--out-dir", o("report"), "report", (root / "base" / "baseline_report.json").string(),
               (root / "ereg" / "reg_report.json").string(), (root / "edet" / "ap_report.json").string()}) == 0);
  return slurp(root / "report" / "report.csv");
}

}  // namespace

TEST_CASE("synth then match gives full coverage") {
  const auto root = test::scratch_dir("cli_match");
  REQUIRE(run(small_synth(root / "s")) == kExitOk);
  REQUIRE(run({"--out-dir", (root / "m").string(), "match", "--images", (root / "s" / "images.csv").string(),
               "--crossings", (root / "s" / "crossings.csv").string()}) == kExitOk);
  const auto j = io::read_json(root / "m" / "match_summary.json");
  CHECK(j["coverage"].get<double>() == 1.0);
  CHECK(j["rejected"].get<int>() == 0);
  CHECK(fs::exists(root / "m" / "effective_config.toml"));
  CHECK(fs::exists(root / "s" / "effective_config.toml"));
  CHECK(fs::exists(root / "s" / "provenance.json"));
}

TEST_CASE("eval-reg on predictions equal to labels") {
  const auto root = test::scratch_dir("cli_evreg");
  put(root / "labels.csv", "image_id,collisions\na,3\nb,0\nc,12\n");
  put(root / "pred.csv", "image_id,predicted_collisions\na,3\nb,0\nc,12\n");
  REQUIRE(run({"--out-dir", (root / "o").string(), "eval-reg", "--labels", (root / "labels.csv").string(),
               "--predictions", (root / "pred.csv").string()}) == kExitOk);
  const auto j = io::read_json(root / "o" / "reg_report.json");
  CHECK(j["rmse"].get<double>() == 0.0);
  CHECK(j["wmae"].get<double>() == 0.0);
  CHECK(j["n"].get<int>() == 3);
}

TEST_CASE("validation failures exit with 2") {
  const auto root = test::scratch_dir("cli_errors");
  CHECK(run({"match", "--images", (root / "missing.csv").string(), "--crossings", "x"}) == kExitValidation);
  CHECK(run({"no-such-command"}) == kExitValidation);
  put(root / "labels.csv", "image_id,collisions\na,3\n");
  put(root / "pred.csv", "image_id,predicted_collisions\nzz,3\n");
  CHECK(run({"--out-dir", (root / "o").string(), "eval-reg", "--labels", (root / "labels.csv").string(),
             "--predictions", (root / "pred.csv").string()}) == kExitValidation);
  put(root / "bad.csv", "image_id,collisions\na,-3\n");
  CHECK(run({"--out-dir", (root / "o").string(), "eval-reg", "--labels", (root / "bad.csv").string(),
             "--predictions", (root / "pred.csv").string()}) == kExitValidation);
  put(root / "unknown.toml", "[synth]\nn-images = 10\nbogus-key = 3\n");
  CHECK(run({"--config", (root / "unknown.toml").string(), "--out-dir", (root / "o").string(), "synth"}) ==
        kExitValidation);
  CHECK(run({"--out-dir", (root / "o").string(), "synth", "--zipf-s", "0"}) == kExitValidation);
}

TEST_CASE("divergent training exits with 3") {
  const auto root = test::scratch_dir("cli_diverge");
  REQUIRE(run(small_synth(root / "s")) == kExitOk);
  CHECK(run({"--out-dir", (root / "t").string(), "train-pcpm", "--manifest", (root / "s" / "manifest.csv").string(),
             "--lr", "1e6", "--epochs", "3"}) == kExitNumerical);
}

TEST_CASE("command-line flags override the config file") {
  const auto root = test::scratch_dir("cli_config");
  put(root / "c.toml", "seed = 3\n[synth]\nn-images = 30\nn-test = 5\nn-distractors = 0\n");
  REQUIRE(run({"--config", (root / "c.toml").string(), "--out-dir", (root / "a").string(), "synth"}) == kExitOk);
  CHECK(io::read_csv(root / "a" / "images.csv").rows.size() == 30);
  CHECK(io::read_json(root / "a" / "provenance.json")["seed"].get<int>() == 3);
  REQUIRE(run({"--config", (root / "c.toml").string(), "--out-dir", (root / "b").string(), "synth", "--n-images",
               "12"}) == kExitOk);
  CHECK(io::read_csv(root / "b" / "images.csv").rows.size() == 12);
  const auto echo = slurp(root / "b" / "effective_config.toml");
  CHECK(echo.find("n-images=12") != std::string::npos);
  CHECK(echo.find("seed=3") != std::string::npos);
}

TEST_CASE("the shipped default config parses") {
  const fs::path cfg = fs::path(PEDRISK_SOURCE_DIR) / "configs" / "default.toml";
  const auto root = test::scratch_dir("cli_default_cfg");
  REQUIRE(run({"--config", cfg.string(), "--out-dir", (root / "s").string(), "synth", "--n-images", "10", "--n-test",
               "2", "--n-distractors", "0"}) == kExitOk);
}

TEST_CASE("stats writes JSON, CSV and SVG histograms") {
  const auto root = test::scratch_dir("cli_stats");
  REQUIRE(run(small_synth(root / "s")) == kExitOk);
  REQUIRE(run({"--out-dir", (root / "st").string(), "stats", "--annotations", (root / "s" / "annotations.json").string(),
               "--labels", (root / "s" / "labels.csv").string()}) == kExitOk);
  CHECK(fs::exists(root / "st" / "stats.json"));
  for (const char* h : {"boxes_per_image", "relative_area", "collisions"}) {
    CHECK(fs::exists(root / "st" / ("hist_" + std::string(h) + ".csv")));
    const auto svg = slurp(root / "st" / ("hist_" + std::string(h) + ".svg"));
    CHECK(svg.starts_with("<svg"));
  }
}

TEST_CASE("full pipeline is byte-identical across runs and leaves inputs untouched") {
  const auto a = test::scratch_dir("cli_pipe_a");
  const auto b = test::scratch_dir("cli_pipe_b");
  const std::string ra = pipeline(a);
  const auto before = slurp(a / "synth" / "labels.csv") + slurp(a / "synth" / "annotations.json");
  const std::string rb = pipeline(b);
  CHECK(ra == rb);
  CHECK(ra.starts_with("method,RMSE,WMAE,N,AP,AP50,AP75,AP_S,AP_M,AP_L\n"));
  CHECK(before == slurp(a / "synth" / "labels.csv") + slurp(a / "synth" / "annotations.json"));
  CHECK(slurp(a / "split" / "split.csv") == slurp(b / "split" / "split.csv"));
  CHECK(slurp(a / "train" / "checkpoint.json") == slurp(b / "train" / "checkpoint.json"));
}
