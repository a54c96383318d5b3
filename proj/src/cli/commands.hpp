// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pedrisk/metrics.hpp"
#include "pedrisk/pcpm.hpp"
#include "pedrisk/synth.hpp"

namespace pedrisk::cli {

namespace fs = std::filesystem;

struct Common {
  std::uint64_t seed = 7;
  fs::path out_dir = "out";
  std::string effective_config;  // filled after parsing
};

struct SynthArgs {
  SynthConfig cfg;
};

struct MatchArgs {
  fs::path images;
  fs::path crossings;
  MatchOptions opts;
};

struct SplitArgs {
  fs::path annotations;
  fs::path labels;
  fs::path holdout;
  int k = 2;
};

struct StatsArgs {
  fs::path annotations;
  fs::path labels;
  bool svg = true;
};

struct CountsArgs {
  fs::path annotations;
  fs::path detections;
  fs::path images;
  fs::path split;
  double score_threshold = 0.5;
  bool coords = false;
};

struct EvalDetArgs {
  fs::path annotations;
  fs::path detections;
  EvalConfig cfg;
};

struct EvalRegArgs {
  fs::path labels;
  fs::path predictions;
  fs::path split;
  std::vector<std::string> folds;
  std::string name;
};

struct BaselineArgs {
  fs::path counts;
  fs::path labels;
  fs::path split;
  std::vector<std::string> train_folds;
  std::vector<std::string> eval_folds = {"test"};
  double lambda = 1.0;
};

struct TrainArgs {
  fs::path manifest;
  fs::path split;
  std::vector<std::string> train_folds;
  std::string variant = "self_att_visual";
  std::size_t d_model = 0;  // 0 = from the data
  std::vector<std::size_t> mlp_hidden;  // empty = two layers of width d_model
  bool no_hidden = false;
  bool coords = true;
  TrainConfig train;
};

struct PredictArgs {
  fs::path checkpoint;
  fs::path manifest;
  fs::path split;
  std::vector<std::string> folds;
  bool clamp = true;
};

struct ReportArgs {
  std::vector<fs::path> inputs;
};

int cmd_synth(const Common& c, const SynthArgs& a);
int cmd_match(const Common& c, const MatchArgs& a);
int cmd_split(const Common& c, const SplitArgs& a);
int cmd_stats(const Common& c, const StatsArgs& a);
int cmd_counts(const Common& c, const CountsArgs& a);
int cmd_eval_det(const Common& c, const EvalDetArgs& a);
int cmd_eval_reg(const Common& c, const EvalRegArgs& a);
int cmd_baseline(const Common& c, const BaselineArgs& a);
int cmd_train_pcpm(const Common& c, const TrainArgs& a);
int cmd_predict_pcpm(const Common& c, const PredictArgs& a);
int cmd_report(const Common& c, const ReportArgs& a);

}  // namespace pedrisk::cli
