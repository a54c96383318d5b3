// SPDX-License-Identifier: Apache-2.0
#include "pedrisk/cli.hpp"

#include <CLI11.hpp>
#include <functional>
#include <iostream>

#include "commands.hpp"
#include "pedrisk/error.hpp"

namespace pedrisk {
namespace {

using cli::Common;

CLI::App* add_sub(CLI::App& app, const std::string& name, const std::string& help) {
  CLI::App* sub = app.add_subcommand(name, help);
  sub->fallthrough();
  return sub;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Pedestrian-collision benchmark toolkit", "pedrisk"};
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  Common common;
  app.set_config("--config", "", "TOML config file; command-line flags override its keys");
  app.add_option("--seed", common.seed, "Random seed")->capture_default_str();
  app.add_option("--out-dir", common.out_dir, "Output directory")->capture_default_str();

  std::function<int()> action;

  // synth
  cli::SynthArgs synth;
  {
    auto* s = add_sub(app, "synth", "Generate a seeded synthetic benchmark");
    auto& c = synth.cfg;
    s->add_option("--n-images", c.n_images)->capture_default_str();
    s->add_option("--n-test", c.n_test, "Held-out images (the last ones)")->capture_default_str();
    s->add_option("--n-distractors", c.n_distractors, "Crossings with no image")->capture_default_str();
    s->add_option("--center-lat", c.city_center.lat)->capture_default_str();
    s->add_option("--center-lon", c.city_center.lon)->capture_default_str();
    s->add_option("--spread-m", c.spread_m, "Radius of the location disc")->capture_default_str();
    s->add_option("--image-width", c.image_width)->capture_default_str();
    s->add_option("--image-height", c.image_height)->capture_default_str();
    s->add_option("--num-classes", c.num_classes)->capture_default_str();
    s->add_option("--zipf-s", c.zipf_s)->capture_default_str();
    s->add_option("--boxes-mean", c.boxes_per_image_mean)->capture_default_str();
    s->add_option("--boxes-dispersion", c.boxes_dispersion)->capture_default_str();
    s->add_option("--min-boxes", c.min_boxes)->capture_default_str();
    s->add_option("--max-boxes", c.max_boxes)->capture_default_str();
    s->add_option("--d-model", c.d_model)->capture_default_str();
    s->add_option("--num-queries", c.num_queries)->capture_default_str();
    s->add_option("--num-noise-queries", c.num_noise_queries)->capture_default_str();
    s->add_option("--noise-sigma", c.noise_sigma, "Query noise")->capture_default_str();
    s->add_option("--detect-prob", c.detect_prob)->capture_default_str();
    s->add_option("--false-positives", c.false_positives_mean)->capture_default_str();
    s->add_option("--map-h", c.map_h)->capture_default_str();
    s->add_option("--map-w", c.map_w)->capture_default_str();
    s->add_option("--map-c", c.map_c)->capture_default_str();
    s->add_option("--map-scale", c.map_scale)->capture_default_str();
    s->add_option("--map-noise-sigma", c.map_noise_sigma)->capture_default_str();
    s->add_option("--intercept", c.intercept, "Log-rate intercept")->capture_default_str();
    s->add_option("--beta", c.beta, "Per-class log-rate coefficients")->capture_default_str()->delimiter(',');
    s->add_option("--attribute-classes", c.attribute_classes)->capture_default_str()->delimiter(',');
    s->add_option("--attribute-gamma", c.attribute_gamma)->capture_default_str();
    s->add_option("--bump-amplitude", c.bump_amplitude)->capture_default_str();
    s->add_option("--bump-sigma", c.bump_sigma)->capture_default_str();
    s->add_option("--bump-lat", c.bump_lat)->capture_default_str();
    s->add_option("--bump-lon", c.bump_lon)->capture_default_str();
    s->add_option("--dispersion", c.collision_dispersion, "Collision NB r; 0 = noiseless")->capture_default_str();
    s->callback([&] {
      action = [&] {
        synth.cfg.seed = common.seed;
        return cli::cmd_synth(common, synth);
      };
    });
  }

  cli::MatchArgs match;
  {
    auto* s = add_sub(app, "match", "Match images to their nearest crossing point");
    s->add_option("--images", match.images, "image_id,lat,lon,width,height CSV")->required()->check(CLI::ExistingFile);
    s->add_option("--crossings", match.crossings, "crossing_id,lat,lon,collisions CSV")->required()->check(CLI::ExistingFile);
    s->add_option("--prefer-radius", match.opts.prefer_radius_m)->capture_default_str();
    s->add_option("--max-radius", match.opts.max_radius_m)->capture_default_str();
    s->callback([&] { action = [&] { return cli::cmd_match(common, match); }; });
  }

  cli::SplitArgs split;
  {
    auto* s = add_sub(app, "split", "Distribution-preserving k-fold split");
    s->add_option("--annotations", split.annotations)->required()->check(CLI::ExistingFile);
    s->add_option("--labels", split.labels, "image_id,collisions CSV")->required()->check(CLI::ExistingFile);
    s->add_option("--holdout", split.holdout, "image_id,fold CSV; rows with fold 'test' stay out")->check(CLI::ExistingFile);
    s->add_option("--k", split.k)->capture_default_str();
    s->callback([&] { action = [&] { return cli::cmd_split(common, split); }; });
  }

  cli::StatsArgs stats;
  {
    auto* s = add_sub(app, "stats", "Dataset statistics and histograms");
    s->add_option("--annotations", stats.annotations)->required()->check(CLI::ExistingFile);
    s->add_option("--labels", stats.labels)->check(CLI::ExistingFile);
    s->add_flag("!--no-svg", stats.svg, "Skip the SVG charts");
    s->callback([&] { action = [&] { return cli::cmd_stats(common, stats); }; });
  }

  cli::CountsArgs counts;
  {
    auto* s = add_sub(app, "counts", "Per-class object counts per image");
    s->add_option("--annotations", counts.annotations, "Images and categories (and boxes)")->required()->check(CLI::ExistingFile);
    s->add_option("--detections", counts.detections, "Count detections instead of annotations")->check(CLI::ExistingFile);
    s->add_option("--score-threshold", counts.score_threshold)->capture_default_str();
    s->add_option("--images", counts.images, "Image CSV supplying locations")->check(CLI::ExistingFile);
    s->add_option("--split", counts.split, "Coordinate bounds are fitted on non-test images")->check(CLI::ExistingFile);
    s->add_flag("--coords", counts.coords, "Append normalised coordinates");
    s->callback([&] { action = [&] { return cli::cmd_counts(common, counts); }; });
  }

  cli::EvalDetArgs evdet;
  {
    auto* s = add_sub(app, "eval-det", "COCO-style AP with relative-area size bins");
    s->add_option("--annotations", evdet.annotations)->required()->check(CLI::ExistingFile);
    s->add_option("--detections", evdet.detections)->required()->check(CLI::ExistingFile);
    s->add_option("--iou-thresholds", evdet.cfg.iou_thresholds)->capture_default_str()->delimiter(',');
    s->add_option("--max-dets", evdet.cfg.max_detections_per_image)->capture_default_str();
    s->add_option("--small-below", evdet.cfg.size_bins.small_below)->capture_default_str();
    s->add_option("--large-above", evdet.cfg.size_bins.large_above)->capture_default_str();
    s->callback([&] { action = [&] { return cli::cmd_eval_det(common, evdet); }; });
  }

  cli::EvalRegArgs evreg;
  {
    auto* s = add_sub(app, "eval-reg", "RMSE and WMAE of collision predictions");
    s->add_option("--labels", evreg.labels)->required()->check(CLI::ExistingFile);
    s->add_option("--predictions", evreg.predictions, "image_id,predicted_collisions CSV")->required()->check(CLI::ExistingFile);
    s->add_option("--split", evreg.split)->check(CLI::ExistingFile);
    s->add_option("--folds", evreg.folds, "Restrict to these folds of --split")->delimiter(',');
    s->add_option("--name", evreg.name, "Method name in the report");
    s->callback([&] { action = [&] { return cli::cmd_eval_reg(common, evreg); }; });
  }

  cli::BaselineArgs base;
  {
    auto* s = add_sub(app, "baseline", "Constant predictors and the ridge count regressor");
    s->add_option("--counts", base.counts)->required()->check(CLI::ExistingFile);
    s->add_option("--labels", base.labels)->required()->check(CLI::ExistingFile);
    s->add_option("--split", base.split)->required()->check(CLI::ExistingFile);
    s->add_option("--train-folds", base.train_folds, "Default: every fold except the eval folds")->delimiter(',');
    s->add_option("--eval-folds", base.eval_folds)->capture_default_str()->delimiter(',');
    s->add_option("--lambda", base.lambda, "Ridge penalty on standardised features")->capture_default_str();
    s->callback([&] { action = [&] { return cli::cmd_baseline(common, base); }; });
  }

  cli::TrainArgs tr;
  {
    auto* s = add_sub(app, "train-pcpm", "Train the collision prediction module");
    s->add_option("--manifest", tr.manifest, "image_id,path,label CSV of SEB1 files")->required()->check(CLI::ExistingFile);
    s->add_option("--split", tr.split)->check(CLI::ExistingFile);
    s->add_option("--train-folds", tr.train_folds, "Default: every fold except 'test'")->delimiter(',');
    s->add_option("--variant", tr.variant)
        ->check(CLI::IsMember({"backbone_only", "linear", "self_att", "self_att_visual"}))
        ->capture_default_str();
    s->add_option("--d-model", tr.d_model, "0 = query width of the data")->capture_default_str();
    s->add_option("--mlp-hidden", tr.mlp_hidden, "Hidden widths; default two of d_model")->delimiter(',');
    s->add_flag("--no-hidden", tr.no_hidden, "Affine head without hidden layers");
    s->add_flag("!--no-coords", tr.coords, "Drop the coordinate inputs");
    s->add_option("--epochs", tr.train.epochs)->capture_default_str();
    s->add_option("--batch-size", tr.train.batch_size)->capture_default_str();
    s->add_option("--lr", tr.train.lr)->capture_default_str();
    s->add_option("--lr-decay-epoch", tr.train.lr_decay_epoch)->capture_default_str();
    s->add_option("--lr-decay", tr.train.lr_decay)->capture_default_str();
    s->add_flag("!--no-flip", tr.train.flip, "Disable random horizontal flips");
    s->callback([&] {
      action = [&] {
        tr.train.seed = common.seed;
        return cli::cmd_train_pcpm(common, tr);
      };
    });
  }

  cli::PredictArgs pred;
  {
    auto* s = add_sub(app, "predict-pcpm", "Predict collisions with a trained checkpoint");
    s->add_option("--checkpoint", pred.checkpoint)->required()->check(CLI::ExistingFile);
    s->add_option("--manifest", pred.manifest)->required()->check(CLI::ExistingFile);
    s->add_option("--split", pred.split)->check(CLI::ExistingFile);
    s->add_option("--folds", pred.folds, "Restrict to these folds of --split")->delimiter(',');
    s->add_flag("!--no-clamp", pred.clamp, "Report raw predictions instead of clamping at 0");
    s->callback([&] { action = [&] { return cli::cmd_predict_pcpm(common, pred); }; });
  }

  cli::ReportArgs rep;
  {
    auto* s = add_sub(app, "report", "Collect metric JSON files into one CSV table");
    s->add_option("inputs", rep.inputs, "Metric JSON files")->required()->check(CLI::ExistingFile);
    s->callback([&] { action = [&] { return cli::cmd_report(common, rep); }; });
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    common.effective_config = app.config_to_str(true, false);
    return action ? action() : kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace pedrisk
