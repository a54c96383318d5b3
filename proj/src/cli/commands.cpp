// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <algorithm>
#include <iostream>
#include <map>
#include <set>
#include <unordered_map>

#include "pedrisk/baselines.hpp"
#include "pedrisk/error.hpp"
#include "pedrisk/io/csv.hpp"
#include "pedrisk/io/formats.hpp"
#include "pedrisk/io/svg.hpp"

namespace pedrisk::cli {
namespace {

using io::Json;

void prepare(const Common& c) {
  fs::create_directories(c.out_dir);
  io::write_text(c.out_dir / "effective_config.toml", c.effective_config);
}

Json synth_config_json(const SynthConfig& c) {
  return {{"n_images", c.n_images},
          {"n_test", c.n_test},
          {"n_distractors", c.n_distractors},
          {"city_center", {{"lat", c.city_center.lat}, {"lon", c.city_center.lon}}},
          {"spread_m", c.spread_m},
          {"image_width", c.image_width},
          {"image_height", c.image_height},
          {"num_classes", c.num_classes},
          {"zipf_s", c.zipf_s},
          {"boxes_per_image_mean", c.boxes_per_image_mean},
          {"boxes_dispersion", c.boxes_dispersion},
          {"min_boxes", c.min_boxes},
          {"max_boxes", c.max_boxes},
          {"log_area_mean", c.log_area_mean},
          {"log_area_sigma", c.log_area_sigma},
          {"d_model", c.d_model},
          {"num_queries", c.num_queries},
          {"num_noise_queries", c.num_noise_queries},
          {"noise_sigma", c.noise_sigma},
          {"detect_prob", c.detect_prob},
          {"false_positives_mean", c.false_positives_mean},
          {"map", {c.map_h, c.map_w, c.map_c}},
          {"map_scale", c.map_scale},
          {"map_noise_sigma", c.map_noise_sigma},
          {"intercept", c.intercept},
          {"beta", c.beta},
          {"attribute_classes", c.attribute_classes},
          {"attribute_gamma", c.attribute_gamma},
          {"bump_amplitude", c.bump_amplitude},
          {"bump_sigma", c.bump_sigma},
          {"bump_center", {c.bump_lat, c.bump_lon}},
          {"collision_dispersion", c.collision_dispersion},
          {"seed", c.seed}};
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

// Image ids whose fold is selected; every id when no split is given.
template <typename Id>
std::vector<std::size_t> select_rows(const std::vector<Id>& ids, const fs::path& split_path,
                                     const std::vector<std::string>& folds, bool exclude_test_by_default) {
  std::vector<std::size_t> rows;
  if (split_path.empty()) {
    for (std::size_t i = 0; i < ids.size(); ++i) rows.push_back(i);
    return rows;
  }
  const auto split = io::read_split(split_path);
  const auto wanted = as_set(folds);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = split.find(ids[i]);
    if (it == split.end()) {
      throw ValidationError(split_path.string() + ": image '" + ids[i] + "' has no fold");
    }
    const bool keep = wanted.empty() ? !(exclude_test_by_default && it->second == "test")
                                     : wanted.contains(it->second);
    if (keep) rows.push_back(i);
  }
  return rows;
}

std::vector<std::string> embedding_ids(const std::vector<EmbeddingSet>& embs) {
  std::vector<std::string> ids;
  for (const auto& e : embs) ids.push_back(e.image_id);
  return ids;
}

Json reg_row(const std::string& method, const RegReport& r) {
  return {{"method", method}, {"rmse", r.rmse}, {"wmae", r.wmae}, {"n", r.n}};
}

}  // namespace

int cmd_synth(const Common& c, const SynthArgs& a) {
  prepare(c);
  const SynthDataset ds = generate(a.cfg);
  io::write_images(c.out_dir / "images.csv", ds.annotations.images);
  io::write_crossings(c.out_dir / "crossings.csv", ds.crossings);
  io::write_annotations(c.out_dir / "annotations.json", ds.annotations);
  io::write_detections(c.out_dir / "detections.json", ds.detections);
  io::write_labels(c.out_dir / "labels.csv", ds.labels);

  SplitAssignment holdout;
  for (const auto& im : ds.annotations.images) holdout[im.image_id] = "train";
  for (const auto& id : ds.test_ids) holdout[id] = "test";
  io::write_split(c.out_dir / "holdout.csv", holdout);

  fs::create_directories(c.out_dir / "embeddings");
  std::vector<io::ManifestEntry> manifest;
  std::vector<std::vector<std::string>> link_rows;
  for (std::size_t i = 0; i < ds.embeddings.size(); ++i) {
    const auto& e = ds.embeddings[i];
    const std::string rel = "embeddings/" + e.image_id + ".seb";
    io::write_embedding(c.out_dir / rel, e);
    manifest.push_back({e.image_id, rel, e.label});
    link_rows.push_back({e.image_id, io::format_double(ds.link_mean[i])});
  }
  io::write_manifest(c.out_dir / "manifest.csv", manifest);
  io::write_csv(c.out_dir / "link_means.csv", {"image_id", "link_mean"}, link_rows);

  const Json prov = {{"generator", "pedrisk synth"},
                     {"seed", a.cfg.seed},
                     {"config", synth_config_json(a.cfg)},
                     {"outputs",
                      {{"images", ds.annotations.images.size()},
                       {"crossings", ds.crossings.size()},
                       {"annotations", ds.annotations.annotations.size()},
                       {"detections", ds.detections.size()},
                       {"test_images", ds.test_ids.size()}}}};
  io::write_json(c.out_dir / "provenance.json", prov);
  std::cout << "synth: " << ds.annotations.images.size() << " images, " << ds.annotations.annotations.size()
            << " boxes, " << ds.crossings.size() << " crossings -> " << c.out_dir.string() << '\n';
  return 0;
}

int cmd_match(const Common& c, const MatchArgs& a) {
  const auto images = io::read_images(a.images);
  const auto crossings = io::read_crossings(a.crossings);
  prepare(c);
  const auto out = match_images(images, crossings, a.opts);
  io::write_matches(c.out_dir / "matches.csv", out.matches);
  io::write_rejected(c.out_dir / "rejected.csv", out.rejected,
                     "no crossing within " + io::format_double(a.opts.max_radius_m) + " m");
  io::write_labels(c.out_dir / "labels.csv", io::labels_from_matches(out.matches));
  const Json summary = {{"matched", out.matches.size()},
                        {"rejected", out.rejected.size()},
                        {"coverage", out.coverage ? Json(*out.coverage) : Json(nullptr)},
                        {"prefer_radius_m", a.opts.prefer_radius_m},
                        {"max_radius_m", a.opts.max_radius_m}};
  io::write_json(c.out_dir / "match_summary.json", summary);
  std::cout << "match: " << out.matches.size() << " matched, " << out.rejected.size() << " rejected\n";
  return 0;
}

int cmd_split(const Common& c, const SplitArgs& a) {
  const AnnotationSet full = io::read_annotations(a.annotations);
  const CollisionLabels labels = io::read_labels(a.labels);
  SplitAssignment holdout;
  if (!a.holdout.empty()) holdout = io::read_split(a.holdout);

  AnnotationSet pool;
  pool.categories = full.categories;
  std::set<std::string> test;
  for (const auto& im : full.images) {
    const auto it = holdout.find(im.image_id);
    if (it != holdout.end() && it->second == "test") {
      test.insert(im.image_id);
    } else {
      pool.images.push_back(im);
    }
  }
  for (const auto& ann : full.annotations) {
    if (!test.contains(ann.image_id)) pool.annotations.push_back(ann);
  }
  prepare(c);
  SplitAssignment split = stratified_split(pool, labels, a.k, c.seed);
  for (const auto& id : test) split[id] = "test";
  io::write_split(c.out_dir / "split.csv", split);

  const SplitBalance b = split_balance(pool, labels, split, a.k);
  const Json summary = {{"k", a.k},
                        {"seed", c.seed},
                        {"fold_sizes", b.fold_sizes},
                        {"test_images", test.size()},
                        {"class_imbalance", b.class_imbalance},
                        {"max_class_imbalance", b.max_class_imbalance},
                        {"fold_collision_means", b.fold_collision_means},
                        {"collision_mean_imbalance", b.collision_mean_imbalance}};
  io::write_json(c.out_dir / "split_summary.json", summary);
  std::cout << "split: max class imbalance " << b.max_class_imbalance << ", collision mean imbalance "
            << b.collision_mean_imbalance << '\n';
  return 0;
}

int cmd_stats(const Common& c, const StatsArgs& a) {
  const AnnotationSet set = io::read_annotations(a.annotations);
  const CollisionLabels labels = a.labels.empty() ? CollisionLabels{} : io::read_labels(a.labels);
  const StatsReport r = dataset_stats(set, labels);
  prepare(c);
  io::write_json(c.out_dir / "stats.json", io::to_json(r));
  const std::vector<std::tuple<std::string, const Histogram*, std::string>> hists = {
      {"boxes_per_image", &r.boxes_per_image_hist, "boxes per image"},
      {"relative_area", &r.relative_area_hist, "relative box area (log decades)"},
      {"collisions", &r.collisions_hist, "pedestrian collisions"},
  };
  for (const auto& [name, h, label] : hists) {
    io::write_histogram_csv(c.out_dir / ("hist_" + name + ".csv"), *h);
    if (a.svg) io::write_text(c.out_dir / ("hist_" + name + ".svg"), io::histogram_svg(*h, name, label));
  }
  std::cout << "stats: " << r.total_boxes << " boxes over " << r.num_images << " images\n";
  return 0;
}

int cmd_counts(const Common& c, const CountsArgs& a) {
  AnnotationSet set = io::read_annotations(a.annotations);
  if (!a.images.empty()) {
    std::unordered_map<std::string, GeoPoint> loc;
    for (const auto& im : io::read_images(a.images)) loc.emplace(im.image_id, im.location);
    for (auto& im : set.images) {
      const auto it = loc.find(im.image_id);
      if (it == loc.end()) {
        throw ValidationError(a.images.string() + ": no location for image '" + im.image_id + "'");
      }
      im.location = it->second;
    }
  }
  std::optional<CoordNormalizer> norm;
  if (a.coords) {
    std::vector<std::string> ids;
    for (const auto& im : set.images) ids.push_back(im.image_id);
    std::vector<GeoPoint> pts;
    for (const std::size_t i : select_rows(ids, a.split, {}, true)) pts.push_back(set.images[i].location);
    norm = CoordNormalizer::fit(pts);
  }
  CountFeatures f;
  if (!a.detections.empty()) {
    const auto dets = io::read_detections(a.detections);
    f = count_features(set, dets, a.score_threshold, norm);
  } else {
    f = count_features(set, norm);
  }
  prepare(c);
  io::write_count_features(c.out_dir / "counts.csv", f);
  std::cout << "counts: " << f.image_ids.size() << " rows, " << f.dim() << " features\n";
  return 0;
}

int cmd_eval_det(const Common& c, const EvalDetArgs& a) {
  const AnnotationSet gts = io::read_annotations(a.annotations);
  const auto dets = io::read_detections(a.detections);
  const APReport r = evaluate_detection(gts, dets, a.cfg);
  prepare(c);
  Json j = {{"method", a.detections.stem().string()}};
  const Json metrics = io::to_json(r);
  for (const auto& [k, v] : metrics.items()) j[k] = v;
  io::write_json(c.out_dir / "ap_report.json", j);
  std::cout << "eval-det: AP " << (r.ap ? io::format_double(*r.ap) : "n/a") << '\n';
  return 0;
}

int cmd_eval_reg(const Common& c, const EvalRegArgs& a) {
  const CollisionLabels labels = io::read_labels(a.labels);
  const auto preds = io::read_predictions(a.predictions);
  std::vector<std::string> ids;
  for (const auto& [id, v] : preds) ids.push_back(id);
  std::vector<RegressionPair> pairs;
  for (const std::size_t i : select_rows(ids, a.split, a.folds, false)) {
    const auto it = labels.find(preds[i].first);
    if (it == labels.end()) {
      throw ValidationError(a.predictions.string() + ": image '" + preds[i].first + "' has no label in " +
                            a.labels.string());
    }
    pairs.push_back({preds[i].first, static_cast<double>(it->second), preds[i].second});
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const RegressionPair& x, const RegressionPair& y) { return x.image_id < y.image_id; });
  const RegReport r = evaluate_regression(pairs);
  prepare(c);
  io::write_json(c.out_dir / "reg_report.json",
                 reg_row(a.name.empty() ? a.predictions.stem().string() : a.name, r));
  std::cout << "eval-reg: rmse " << r.rmse << " wmae " << r.wmae << " n " << r.n << '\n';
  return 0;
}

int cmd_baseline(const Common& c, const BaselineArgs& a) {
  const CountFeatures f = io::read_count_features(a.counts);
  const CollisionLabels labels = io::read_labels(a.labels);
  const SplitAssignment split = io::read_split(a.split);
  const auto eval_set = as_set(a.eval_folds);
  const auto train_set = as_set(a.train_folds);

  std::vector<std::size_t> train_rows, eval_rows;
  for (std::size_t i = 0; i < f.image_ids.size(); ++i) {
    const auto it = split.find(f.image_ids[i]);
    if (it == split.end()) throw ValidationError(a.split.string() + ": image '" + f.image_ids[i] + "' has no fold");
    if (!labels.contains(f.image_ids[i])) {
      throw ValidationError(a.labels.string() + ": image '" + f.image_ids[i] + "' has no label");
    }
    if (eval_set.contains(it->second)) {
      eval_rows.push_back(i);
    } else if (train_set.empty() || train_set.contains(it->second)) {
      train_rows.push_back(i);
    }
  }
  if (train_rows.empty()) throw ValidationError("baseline: no training rows selected");
  if (eval_rows.empty()) throw ValidationError("baseline: no evaluation rows selected");

  auto gather = [&](const std::vector<std::size_t>& rows, Matrix& x, std::vector<double>& y) {
    x.resize(rows.size(), f.dim());
    y.clear();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::copy(f.values.row(rows[r]).begin(), f.values.row(rows[r]).end(), x.row(r).begin());
      y.push_back(static_cast<double>(labels.at(f.image_ids[rows[r]])));
    }
  };
  Matrix xtr, xev;
  std::vector<double> ytr, yev;
  gather(train_rows, xtr, ytr);
  gather(eval_rows, xev, yev);

  prepare(c);
  Json results = Json::array();
  auto emit = [&](const std::string& method, const std::vector<double>& yhat) {
    std::vector<std::pair<std::string, double>> preds;
    std::vector<RegressionPair> pairs;
    for (std::size_t r = 0; r < eval_rows.size(); ++r) {
      preds.emplace_back(f.image_ids[eval_rows[r]], yhat[r]);
      pairs.push_back({f.image_ids[eval_rows[r]], yev[r], yhat[r]});
    }
    io::write_predictions(c.out_dir / ("predictions_" + method + ".csv"), preds);
    const RegReport rep = evaluate_regression(pairs);
    results.push_back(reg_row(method, rep));
    std::cout << "baseline " << method << ": rmse " << rep.rmse << " wmae " << rep.wmae << '\n';
  };
  for (const Statistic s : {Statistic::mode, Statistic::median, Statistic::mean}) {
    const ConstantPredictor p = fit_constant(ytr, s);
    io::write_json(c.out_dir / ("constant_" + std::string(statistic_name(s)) + ".json"), io::to_json(p));
    emit(std::string("constant_") + statistic_name(s), std::vector<double>(eval_rows.size(), p.value));
  }
  const LinearModel m = fit_count_regressor(xtr, ytr, a.lambda);
  io::write_json(c.out_dir / "ridge.json", io::to_json(m));
  emit("ridge_counts", predict(m, xev));
  io::write_json(c.out_dir / "baseline_report.json",
                 Json{{"train_images", train_rows.size()}, {"eval_images", eval_rows.size()}, {"results", results}});
  return 0;
}

int cmd_train_pcpm(const Common& c, const TrainArgs& a) {
  const auto all = io::load_embeddings(a.manifest);
  if (all.empty()) throw ValidationError(a.manifest.string() + ": no embeddings listed");
  std::vector<EmbeddingSet> data;
  for (const std::size_t i : select_rows(embedding_ids(all), a.split, a.train_folds, true)) data.push_back(all[i]);
  if (data.empty()) throw ValidationError("train-pcpm: no training embeddings selected");

  PCPMConfig pc;
  pc.variant = parse_variant(a.variant);
  pc.d_model = a.d_model ? a.d_model : data.front().queries.cols();
  pc.visual_channels = data.front().map_c;
  pc.include_coords = a.coords;
  if (a.no_hidden) {
    pc.mlp_hidden.clear();
  } else if (!a.mlp_hidden.empty()) {
    pc.mlp_hidden = a.mlp_hidden;
  } else {
    pc.mlp_hidden = {pc.d_model, pc.d_model};
  }
  prepare(c);
  const TrainResult r = train(data, pc, a.train, [](int epoch, double loss) {
    std::cout << "epoch " << epoch << " loss " << loss << '\n';
  });
  std::vector<std::vector<std::string>> rows;
  for (std::size_t e = 0; e < r.history.size(); ++e) {
    rows.push_back({std::to_string(e + 1), io::format_double(r.history[e])});
  }
  io::write_csv(c.out_dir / "history.csv", {"epoch", "train_loss"}, rows);
  const Json extra = {{"train", io::to_json(a.train)},
                      {"train_images", data.size()},
                      {"param_count", param_count(pc)},
                      {"history", r.history}};
  io::write_checkpoint(c.out_dir / "checkpoint.json", pc, r.params, extra);
  return 0;
}

int cmd_predict_pcpm(const Common& c, const PredictArgs& a) {
  const auto [pc, params] = io::read_checkpoint(a.checkpoint);
  const auto all = io::load_embeddings(a.manifest);
  std::vector<std::pair<std::string, double>> preds;
  for (const std::size_t i : select_rows(embedding_ids(all), a.split, a.folds, false)) {
    const double y = forward(params, pc, all[i]);
    preds.emplace_back(all[i].image_id, a.clamp ? std::max(0.0, y) : y);
  }
  std::sort(preds.begin(), preds.end());
  prepare(c);
  io::write_predictions(c.out_dir / "predictions.csv", preds);
  std::cout << "predict-pcpm: " << preds.size() << " predictions (" << variant_name(pc.variant) << ")\n";
  return 0;
}

int cmd_report(const Common& c, const ReportArgs& a) {
  const std::vector<std::string> columns = {"method", "RMSE", "WMAE", "N", "AP", "AP50", "AP75", "AP_S", "AP_M", "AP_L"};
  std::vector<std::vector<std::string>> rows;
  auto cell = [](const Json& j, const char* key) -> std::string {
    if (!j.contains(key) || j[key].is_null()) return "";
    if (j[key].is_number_integer()) return std::to_string(j[key].get<std::int64_t>());
    if (j[key].is_number()) return io::format_double(j[key].get<double>());
    return "";
  };
  auto add = [&](const Json& j, const std::string& fallback) {
    const std::string method = j.contains("method") && j["method"].is_string() ? j["method"].get<std::string>() : fallback;
    rows.push_back({method, cell(j, "rmse"), cell(j, "wmae"), cell(j, "n"), cell(j, "AP"), cell(j, "AP50"),
                    cell(j, "AP75"), cell(j, "AP_S"), cell(j, "AP_M"), cell(j, "AP_L")});
  };
  for (const auto& p : a.inputs) {
    const Json j = io::read_json(p);
    if (!j.is_object()) throw ValidationError(p.string() + ": expected a JSON object");
    if (j.contains("results")) {
      if (!j["results"].is_array()) throw ValidationError(p.string() + ": 'results' must be an array");
      for (const auto& r : j["results"]) add(r, p.stem().string());
    } else if (j.contains("rmse") || j.contains("AP")) {
      add(j, p.stem().string());
    } else {
      throw ValidationError(p.string() + ": not a metric report");
    }
  }
  prepare(c);
  io::write_csv(c.out_dir / "report.csv", columns, rows);
  std::cout << "report: " << rows.size() << " rows\n";
  return 0;
}

}  // namespace pedrisk::cli
