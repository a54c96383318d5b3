// SPDX-License-Identifier: Apache-2.0
#include "pedrisk/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "pedrisk/error.hpp"

namespace pedrisk {
namespace {

using Rng = std::mt19937_64;

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

std::int64_t neg_binomial(Rng& rng, double mean, double r) {
  if (mean <= 0.0) return 0;
  if (r <= 0.0) return std::llround(mean);
  const double lambda = std::gamma_distribution<double>(r, mean / r)(rng);
  if (lambda <= 0.0) return 0;
  return std::poisson_distribution<std::int64_t>(lambda)(rng);
}

std::vector<double> gaussian_vector(Rng& rng, std::size_t n, double sigma) {
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

std::string padded(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%06zu", prefix, i);
  return buf;
}

GeoPoint disc_point(Rng& rng, const SynthConfig& c) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = c.spread_m * std::sqrt(u(rng));
  const double theta = 2.0 * std::numbers::pi * u(rng);
  const double dlat = r * std::cos(theta) / kEarthRadiusM * kRadToDeg;
  const double dlon =
      r * std::sin(theta) / (kEarthRadiusM * std::cos(c.city_center.lat * kDegToRad)) * kRadToDeg;
  return {c.city_center.lat + dlat, c.city_center.lon + dlon};
}

BBox random_box(Rng& rng, const SynthConfig& c) {
  const double img_w = c.image_width;
  const double img_h = c.image_height;
  std::normal_distribution<double> log_area(c.log_area_mean, c.log_area_sigma);
  std::normal_distribution<double> log_aspect(0.0, 0.5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double rel = std::clamp(std::exp(log_area(rng)), 1e-7, 0.5);
  const double area = std::max(1.0, rel * img_w * img_h);
  const double aspect = std::exp(log_aspect(rng));
  const double w = std::clamp(std::round(std::sqrt(area * aspect)), 1.0, img_w);
  const double h = std::clamp(std::round(area / w), 1.0, img_h);
  const double x = std::floor(u(rng) * (img_w - w + 1.0));
  const double y = std::floor(u(rng) * (img_h - h + 1.0));
  return {std::min(x, img_w - w), std::min(y, img_h - h), w, h};
}

BBox jitter_box(Rng& rng, const BBox& b, const SynthConfig& c) {
  std::normal_distribution<double> g(0.0, 0.05);
  const double img_w = c.image_width;
  const double img_h = c.image_height;
  const double x0 = std::clamp(b.x + g(rng) * b.w, 0.0, img_w - 1.0);
  const double y0 = std::clamp(b.y + g(rng) * b.h, 0.0, img_h - 1.0);
  const double x1 = std::clamp(b.x + b.w + g(rng) * b.w, x0 + 1.0, img_w);
  const double y1 = std::clamp(b.y + b.h + g(rng) * b.h, y0 + 1.0, img_h);
  return {x0, y0, x1 - x0, y1 - y0};
}

}  // namespace

std::vector<double> default_beta() {
  return {-0.0725, -0.1080, 0.0505,  0.1383,  -0.0864, 0.0346,  -0.0913, -0.0006, 0.1400,
          -0.0790, -0.0042, 0.0727,  -0.0096, -0.0475, 0.0466,  0.0267,  0.1022,  -0.0143,
          0.0825,  0.0078,  -0.0627, -0.0034, 0.0342,  0.0430,  0.0788,  0.1055,  -0.0594};
}

void SynthConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw ValidationError(std::string("synth config: ") + msg);
  };
  require(n_test <= n_images, "n_test exceeds n_images");
  require(spread_m >= 0.0 && std::isfinite(spread_m), "spread_m must be >= 0");
  require(image_width > 0 && image_height > 0, "image size must be positive");
  require(num_classes >= 1, "num_classes must be >= 1");
  require(zipf_s > 0.0, "zipf_s must be > 0");
  require(boxes_per_image_mean > 0.0 && boxes_dispersion >= 0.0, "box count parameters out of range");
  require(min_boxes >= 0 && max_boxes >= min_boxes, "box count bounds out of order");
  require(log_area_sigma >= 0.0, "log_area_sigma must be >= 0");
  require(d_model > 0 && num_queries > 0, "d_model and num_queries must be positive");
  require(noise_sigma >= 0.0 && map_noise_sigma >= 0.0, "noise sigmas must be >= 0");
  require(detect_prob >= 0.0 && detect_prob <= 1.0, "detect_prob must be in [0, 1]");
  require(false_positives_mean >= 0.0, "false_positives_mean must be >= 0");
  require(map_h > 0 && map_w > 0 && map_c > 0, "map dimensions must be positive");
  require(beta.size() == static_cast<std::size_t>(num_classes), "beta needs one entry per class");
  for (const int c : attribute_classes) require(c >= 0 && c < num_classes, "attribute class out of range");
  require(bump_sigma > 0.0, "bump_sigma must be > 0");
  require(collision_dispersion >= 0.0, "collision_dispersion must be >= 0");
  require(std::fabs(city_center.lat) < 89.0, "city centre too close to a pole");
}

CoordNormalizer SynthConfig::disc_normalizer() const {
  const double dlat = spread_m / kEarthRadiusM * kRadToDeg;
  const double dlon = dlat / std::cos(city_center.lat * kDegToRad);
  return {city_center.lat - dlat, city_center.lat + dlat, city_center.lon - dlon,
          city_center.lon + dlon};
}

std::vector<std::string> SynthDataset::train_ids() const {
  std::vector<std::string> out;
  const std::size_t n_train = annotations.images.size() - test_ids.size();
  for (std::size_t i = 0; i < n_train; ++i) out.push_back(annotations.images[i].image_id);
  return out;
}

SynthDataset generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthDataset out;
  out.config = cfg;
  out.annotations.categories = CategoryRegistry::defaults(cfg.num_classes);

  Rng rng(cfg.seed);
  const std::size_t nc = static_cast<std::size_t>(cfg.num_classes);
  const std::size_t d = cfg.d_model;

  // Fixed structure shared by every image of the run.
  std::vector<std::vector<double>> class_basis(nc);
  for (auto& b : class_basis) b = gaussian_vector(rng, d, 1.0);
  const auto attribute_dir = gaussian_vector(rng, d, 1.0);
  const auto background = gaussian_vector(rng, d, 1.0);
  std::vector<std::vector<double>> map_basis(nc);
  for (auto& b : map_basis) b = gaussian_vector(rng, cfg.map_c, 1.0 / std::sqrt(static_cast<double>(cfg.map_c)));
  std::vector<bool> attribute_class(nc, false);
  for (const int c : cfg.attribute_classes) attribute_class[static_cast<std::size_t>(c)] = true;

  std::vector<double> zipf(nc);
  for (std::size_t c = 0; c < nc; ++c) zipf[c] = std::pow(static_cast<double>(c + 1), -cfg.zipf_s);
  std::discrete_distribution<int> class_dist(zipf.begin(), zipf.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> query_noise(0.0, cfg.noise_sigma);
  std::normal_distribution<double> map_noise(0.0, cfg.map_noise_sigma);
  std::normal_distribution<double> junk(0.0, 3.0);
  std::poisson_distribution<int> fp_count(cfg.false_positives_mean);
  const auto norm = cfg.disc_normalizer();

  std::size_t ann_counter = 0;
  for (std::size_t i = 0; i < cfg.n_images; ++i) {
    ImageRecord img{padded("img_", i + 1), disc_point(rng, cfg), cfg.image_width, cfg.image_height};
    const auto nb = std::clamp<std::int64_t>(neg_binomial(rng, cfg.boxes_per_image_mean, cfg.boxes_dispersion),
                                             cfg.min_boxes, cfg.max_boxes);

    std::vector<double> counts(nc, 0.0);
    double attribute_sum = 0.0;
    std::vector<std::vector<double>> rows;
    for (std::int64_t b = 0; b < nb; ++b) {
      const int cls = class_dist(rng);
      const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
      const BBox box = random_box(rng, cfg);
      counts[static_cast<std::size_t>(cls)] += 1.0;
      if (attribute_class[static_cast<std::size_t>(cls)]) attribute_sum += sign;
      out.annotations.annotations.push_back(
          {padded("ann_", ++ann_counter), img.image_id, cls, box});
      if (unit(rng) < cfg.detect_prob) {
        const BBox det = jitter_box(rng, box, cfg);
        out.detections.push_back({img.image_id, cls, det, to_f32(0.5 + 0.5 * unit(rng))});
        if (rows.size() < cfg.num_queries) {
          std::vector<double> q = class_basis[static_cast<std::size_t>(cls)];
          axpy(sign, attribute_dir, q);
          rows.push_back(std::move(q));
        }
      }
    }
    const int fps = fp_count(rng);
    for (int f = 0; f < fps; ++f) {
      const int cls = class_dist(rng);
      out.detections.push_back({img.image_id, cls, random_box(rng, cfg), to_f32(0.6 * unit(rng))});
    }

    EmbeddingSet emb;
    emb.image_id = img.image_id;
    const std::size_t n_rows = cfg.num_queries + cfg.num_noise_queries;
    emb.queries.resize(n_rows, d);
    emb.noise_mask.assign(n_rows, 0);
    while (rows.size() < cfg.num_queries) rows.push_back(background);
    for (std::size_t k = 0; k < cfg.num_noise_queries; ++k) {
      std::vector<double> q(d);
      for (double& v : q) v = junk(rng);
      rows.push_back(std::move(q));
    }
    std::vector<std::size_t> perm(n_rows);
    for (std::size_t k = 0; k < n_rows; ++k) perm[k] = k;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t k = 0; k < n_rows; ++k) {
      const std::size_t src = perm[k];
      emb.noise_mask[k] = src >= cfg.num_queries ? 1 : 0;
      auto dst = emb.queries.row(k);
      for (std::size_t j = 0; j < d; ++j) {
        const double noise = src < cfg.num_queries ? query_noise(rng) : 0.0;
        dst[j] = to_f32(rows[src][j] + noise);
      }
    }

    std::vector<double> gap(cfg.map_c, 0.0);
    for (std::size_t c = 0; c < nc; ++c) {
      if (counts[c] > 0.0) axpy(counts[c] * cfg.map_scale, map_basis[c], gap);
    }
    emb.map_h = cfg.map_h;
    emb.map_w = cfg.map_w;
    emb.map_c = cfg.map_c;
    emb.backbone_map.resize(cfg.map_h * cfg.map_w * cfg.map_c);
    for (std::size_t s = 0; s < cfg.map_h * cfg.map_w; ++s) {
      for (std::size_t ch = 0; ch < cfg.map_c; ++ch) {
        emb.backbone_map[s * cfg.map_c + ch] = to_f32(gap[ch] + map_noise(rng));
      }
    }

    const auto xy = norm.apply(img.location);
    emb.coords = {to_f32(xy[0]), to_f32(xy[1])};
    const double dy = xy[0] - cfg.bump_lat;
    const double dx = xy[1] - cfg.bump_lon;
    const double bump =
        cfg.bump_amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * cfg.bump_sigma * cfg.bump_sigma));
    double eta = cfg.intercept + cfg.attribute_gamma * attribute_sum + bump;
    for (std::size_t c = 0; c < nc; ++c) eta += cfg.beta[c] * counts[c];
    const double mu = std::exp(eta);
    const std::int64_t y = neg_binomial(rng, mu, cfg.collision_dispersion);
    emb.label = static_cast<double>(y);

    out.link_mean.push_back(mu);
    out.labels[img.image_id] = y;
    out.crossings.push_back({padded("cx_", i + 1), img.location, y});
    out.embeddings.push_back(std::move(emb));
    out.annotations.images.push_back(std::move(img));
  }

  // Crossings with no image nearby; their counts follow the intercept rate.
  for (std::size_t k = 0; k < cfg.n_distractors; ++k) {
    const GeoPoint p = disc_point(rng, cfg);
    const auto y = neg_binomial(rng, std::exp(cfg.intercept), cfg.collision_dispersion);
    out.crossings.push_back({padded("cx_", cfg.n_images + k + 1), p, y});
  }

  for (std::size_t i = cfg.n_images - cfg.n_test; i < cfg.n_images; ++i) {
    out.test_ids.push_back(out.annotations.images[i].image_id);
  }
  return out;
}

}  // namespace pedrisk
