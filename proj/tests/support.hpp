// SPDX-License-Identifier: Apache-2.0
#pragma once
// Shared fixtures and independent reference implementations for the tests.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pedrisk/dataset.hpp"
#include "pedrisk/geo.hpp"
#include "pedrisk/metrics.hpp"
#include "pedrisk/pcpm.hpp"

namespace pedrisk::test {

namespace fs = std::filesystem;

inline fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pedrisk_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline double rel_err(double a, double b) {
  const double scale = std::max(std::fabs(a), std::fabs(b));
  return scale == 0.0 ? 0.0 : std::fabs(a - b) / scale;
}

// ---- regression metrics, written straight from their definitions ----

inline double naive_rmse(const std::vector<double>& y, const std::vector<double>& yhat) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const long double d = static_cast<long double>(y[i]) - yhat[i];
    s += d * d;
  }
  return static_cast<double>(std::sqrt(s / y.size()));
}

inline double naive_wmae(const std::vector<double>& y, const std::vector<double>& yhat) {
  long double num = 0.0L, den = 0.0L;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const long double w = static_cast<long double>(y[i]) + 1.0L;
    num += w * std::fabs(static_cast<long double>(y[i]) - yhat[i]);
    den += w;
  }
  return static_cast<double>(num / den);
}

// ---- detection AP: per-image greedy matching, pooled PR curve ----

inline double naive_iou(const BBox& a, const BBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

enum class Range { all, small, medium, large };

// AP over one relative-area range; nullopt when no class has a ground truth in
// range. Assumes fewer than max_detections_per_image detections per image.
inline std::optional<double> naive_ap(const AnnotationSet& gts, const std::vector<DetectionRecord>& dets,
                                      const std::vector<double>& thresholds, Range range,
                                      const SizeBinEdges& edges = {}) {
  auto in_range = [&](double rel) {
    switch (range) {
      case Range::small: return rel < edges.small_below;
      case Range::medium: return rel >= edges.small_below && rel <= edges.large_above;
      case Range::large: return rel > edges.large_above;
      default: return true;
    }
  };
  std::vector<ImageRecord> images = gts.images;
  std::sort(images.begin(), images.end(),
            [](const ImageRecord& a, const ImageRecord& b) { return a.image_id < b.image_id; });
  double total = 0.0;
  int terms = 0;
  for (const double t : thresholds) {
    for (std::size_t c = 0; c < gts.categories.size(); ++c) {
      struct Scored {
        double score;
        bool tp;
      };
      std::vector<Scored> pooled;
      int npos = 0;
      for (const auto& im : images) {
        const double img_area = static_cast<double>(im.width) * im.height;
        std::vector<BoxAnnotation> g;
        for (const auto& a : gts.annotations) {
          if (a.image_id == im.image_id && a.category_id == static_cast<int>(c)) g.push_back(a);
        }
        std::sort(g.begin(), g.end(),
                  [](const BoxAnnotation& a, const BoxAnnotation& b) { return a.annotation_id < b.annotation_id; });
        std::stable_partition(g.begin(), g.end(),
                              [&](const BoxAnnotation& a) { return in_range(a.bbox.area() / img_area); });
        std::vector<bool> g_ignore;
        for (const auto& a : g) {
          g_ignore.push_back(!in_range(a.bbox.area() / img_area));
          if (!g_ignore.back()) ++npos;
        }
        std::vector<DetectionRecord> d;
        for (const auto& x : dets) {
          if (x.image_id == im.image_id && x.category_id == static_cast<int>(c)) d.push_back(x);
        }
        std::stable_sort(d.begin(), d.end(),
                         [](const DetectionRecord& a, const DetectionRecord& b) { return a.score > b.score; });
        std::vector<bool> used(g.size(), false);
        for (const auto& x : d) {
          double best = std::min(t, 1.0 - 1e-10);
          int m = -1;
          for (std::size_t j = 0; j < g.size(); ++j) {
            if (used[j]) continue;
            if (m >= 0 && !g_ignore[static_cast<std::size_t>(m)] && g_ignore[j]) break;
            const double v = naive_iou(x.bbox, g[j].bbox);
            if (v < best) continue;
            best = v;
            m = static_cast<int>(j);
          }
          if (m >= 0) {
            used[static_cast<std::size_t>(m)] = true;
            if (!g_ignore[static_cast<std::size_t>(m)]) pooled.push_back({x.score, true});
          } else if (in_range(x.bbox.area() / img_area)) {
            pooled.push_back({x.score, false});
          }
        }
      }
      if (npos == 0) continue;
      std::stable_sort(pooled.begin(), pooled.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
      std::vector<double> rec, prec;
      int tp = 0, fp = 0;
      for (const auto& s : pooled) {
        (s.tp ? tp : fp) += 1;
        rec.push_back(static_cast<double>(tp) / npos);
        prec.push_back(static_cast<double>(tp) / (tp + fp));
      }
      double sum = 0.0;
      for (int r = 0; r <= 100; ++r) {
        const double level = r / 100.0;
        double best = 0.0;
        for (std::size_t i = 0; i < rec.size(); ++i) {
          if (rec[i] >= level) best = std::max(best, prec[i]);
        }
        sum += best;
      }
      total += sum / 101.0;
      ++terms;
    }
  }
  if (terms == 0) return std::nullopt;
  return total / terms;
}

struct Scene {
  AnnotationSet gts;
  std::vector<DetectionRecord> dets;
};

// Up to 3 images, up to 3 classes, up to 5 boxes per class and image.
inline Scene random_scene(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_img(1, 3), n_cls(1, 3), n_box(0, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Scene s;
  const int nc = n_cls(rng);
  std::vector<Category> cats;
  for (int c = 0; c < nc; ++c) cats.push_back({c, "c" + std::to_string(c)});
  s.gts.categories = CategoryRegistry(cats);
  const int ni = n_img(rng);
  int ann = 0;
  for (int i = 0; i < ni; ++i) {
    ImageRecord im{"im" + std::to_string(i), {0.0, 0.0}, 200, 100};
    s.gts.images.push_back(im);
    for (int c = 0; c < nc; ++c) {
      const int nb = n_box(rng);
      for (int b = 0; b < nb; ++b) {
        const double w = 2.0 + u(rng) * 90.0, h = 2.0 + u(rng) * 60.0;
        const BBox box{u(rng) * (200.0 - w), u(rng) * (100.0 - h), w, h};
        s.gts.annotations.push_back({"a" + std::to_string(ann++), im.image_id, c, box});
        if (u(rng) < 0.8) {
          const double j = 0.25 * u(rng);
          BBox d{box.x + j * w * (u(rng) - 0.5), box.y + j * h * (u(rng) - 0.5), w * (1.0 + j * (u(rng) - 0.5)),
                 h * (1.0 + j * (u(rng) - 0.5))};
          d.x = std::clamp(d.x, 0.0, 200.0 - d.w);
          d.y = std::clamp(d.y, 0.0, 100.0 - d.h);
          s.dets.push_back({im.image_id, u(rng) < 0.9 ? c : (c + 1) % nc, d, u(rng)});
        }
      }
      const int fps = n_box(rng) / 2;
      for (int f = 0; f < fps; ++f) {
        const double w = 2.0 + u(rng) * 90.0, h = 2.0 + u(rng) * 60.0;
        s.dets.push_back({im.image_id, c, {u(rng) * (200.0 - w), u(rng) * (100.0 - h), w, h}, u(rng)});
      }
    }
  }
  return s;
}

// ---- PCPM fixtures ----

inline EmbeddingSet random_embedding(std::mt19937_64& rng, std::size_t d, std::size_t rows, std::size_t masked,
                                     std::size_t mh, std::size_t mw, std::size_t mc) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EmbeddingSet e;
  e.image_id = "e";
  e.queries = Matrix(rows + masked, d);
  for (double& v : e.queries.values()) v = n01(rng);
  e.noise_mask.assign(rows + masked, 0);
  for (std::size_t i = 0; i < masked; ++i) e.noise_mask[i] = 1;
  std::shuffle(e.noise_mask.begin(), e.noise_mask.end(), rng);
  e.map_h = mh;
  e.map_w = mw;
  e.map_c = mc;
  e.backbone_map.resize(mh * mw * mc);
  for (double& v : e.backbone_map) v = n01(rng);
  e.coords = {u(rng), u(rng)};
  e.label = std::floor(20.0 * u(rng));
  return e;
}

struct Draw {
  PCPMConfig config;
  PCPMParams params;
  EmbeddingSet emb;
};

// Small random configuration of the given variant, with random weights scaled
// away from the Glorot init so every path carries gradient.
inline Draw random_draw(std::mt19937_64& rng, Variant v) {
  std::uniform_int_distribution<int> dd(2, 6), rows(1, 7), masked(0, 3), hid(0, 2), width(2, 5), mdim(1, 3);
  Draw r;
  r.config.variant = v;
  r.config.d_model = static_cast<std::size_t>(dd(rng));
  r.config.visual_channels = static_cast<std::size_t>(mdim(rng) + 1);
  r.config.include_coords = rng() % 2 == 0;
  r.config.mlp_hidden.clear();
  const int nh = hid(rng);
  for (int i = 0; i < nh; ++i) r.config.mlp_hidden.push_back(static_cast<std::size_t>(width(rng)));
  r.params = init_params(r.config, rng());
  std::normal_distribution<double> n01(0.0, 1.0);
  r.params.for_each([&](const std::string& name, std::span<double> vals) {
    for (double& x : vals) x = (name.starts_with("mlp_b") ? 0.3 : 0.8) * n01(rng);
  });
  r.emb = random_embedding(rng, r.config.d_model, static_cast<std::size_t>(rows(rng)),
                           static_cast<std::size_t>(masked(rng)), static_cast<std::size_t>(mdim(rng)),
                           static_cast<std::size_t>(mdim(rng)), r.config.visual_channels);
  return r;
}

// Largest relative error between backward() and central differences of the
// single-sample loss, over every parameter.
inline double max_gradient_error(const Draw& d, double eps = 1e-5) {
  const PCPMParams g = backward(d.params, d.config, d.emb, d.emb.label);
  std::vector<double> analytic;
  g.for_each([&](const std::string&, std::span<const double> v) { analytic.insert(analytic.end(), v.begin(), v.end()); });
  PCPMParams p = d.params;
  std::vector<std::span<double>> tensors;
  p.for_each([&](const std::string&, std::span<double> v) { tensors.push_back(v); });
  auto sample_loss = [&]() {
    const double f = forward(p, d.config, d.emb) - d.emb.label;
    return f * f;
  };
  double worst = 0.0;
  std::size_t k = 0;
  for (auto& t : tensors) {
    for (double& x : t) {
      const double keep = x;
      x = keep + eps;
      const double up = sample_loss();
      x = keep - eps;
      const double down = sample_loss();
      x = keep;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k++];
      // relative error with an absolute floor of 1e-6
      const double err = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-6});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

// ---- geo ----

inline std::optional<std::pair<std::size_t, double>> brute_nearest(const std::vector<CrossingPoint>& pts,
                                                                     const GeoPoint& q, double radius) {
  std::optional<std::pair<std::size_t, double>> best;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double dist = geodesic_distance(q, pts[i].location);
    if (dist > radius) continue;
    if (!best || dist < best->second ||
        (dist == best->second && pts[i].crossing_id < pts[best->first].crossing_id)) {
      best = {i, dist};
    }
  }
  return best;
}

inline GeoPoint random_point_near(std::mt19937_64& rng, const GeoPoint& c, double spread_m) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = spread_m * std::sqrt(u(rng));
  const double th = 2.0 * M_PI * u(rng);
  const double dlat = r * std::cos(th) / kEarthRadiusM * 180.0 / M_PI;
  const double dlon = r * std::sin(th) / (kEarthRadiusM * std::cos(c.lat * M_PI / 180.0)) * 180.0 / M_PI;
  return {c.lat + dlat, c.lon + dlon};
}

}  // namespace pedrisk::test
