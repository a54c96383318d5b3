// SPDX-License-Identifier: Apache-2.0
#pragma once

// Seeded synthetic benchmark: located images with long-tailed street-object
// boxes, matching crossing points, detector outputs, query embeddings and
// negative-binomial collision counts.

#include <cstdint>
#include <string>
#include <vector>

#include "pedrisk/dataset.hpp"
#include "pedrisk/geo.hpp"
#include "pedrisk/metrics.hpp"
#include "pedrisk/pcpm.hpp"

namespace pedrisk {

// The per-class log-rate coefficients shipped as the default.
std::vector<double> default_beta();

struct SynthConfig {
  std::size_t n_images = 2500;
  std::size_t n_test = 500;              // last n_test images form the held-out set
  std::size_t n_distractors = 500;       // crossings with no image
  GeoPoint city_center{4.65, -74.1};
  double spread_m = 8000.0;              // disc radius
  int image_width = 13312;
  int image_height = 4000;

  int num_classes = 27;
  double zipf_s = 1.1;
  double boxes_per_image_mean = 56.5;
  double boxes_dispersion = 20.0;        // negative-binomial r of the box count
  int min_boxes = 2;
  int max_boxes = 275;
  double log_area_mean = -6.2;           // ln of the median relative box area
  double log_area_sigma = 1.3;

  std::size_t d_model = 32;
  std::size_t num_queries = 64;          // detector query slots
  std::size_t num_noise_queries = 8;     // masked denoising rows
  double noise_sigma = 0.1;              // query noise
  double detect_prob = 0.5;
  double false_positives_mean = 3.0;     // per image
  std::size_t map_h = 4;
  std::size_t map_w = 8;
  std::size_t map_c = 32;
  double map_scale = 0.5;
  double map_noise_sigma = 0.05;

  double intercept = 2.85;
  std::vector<double> beta = default_beta();
  std::vector<int> attribute_classes = {0, 2};
  double attribute_gamma = 0.045;
  double bump_amplitude = 0.2;
  double bump_sigma = 0.2;               // in normalised coordinates
  double bump_lat = 0.35;                // normalised centre
  double bump_lon = 0.6;
  double collision_dispersion = 50.0;    // negative-binomial r; 0 = y = round(mu)

  std::uint64_t seed = 7;

  // Throws ValidationError on inconsistent values.
  void validate() const;
  // Bounding rectangle of the location disc; used to normalise coordinates.
  CoordNormalizer disc_normalizer() const;
};

struct SynthDataset {
  SynthConfig config;
  AnnotationSet annotations;
  std::vector<CrossingPoint> crossings;
  std::vector<DetectionRecord> detections;
  std::vector<EmbeddingSet> embeddings;   // set.images order
  CollisionLabels labels;
  std::vector<double> link_mean;          // exp(log-mean) per image
  std::vector<std::string> test_ids;      // held-out images

  std::vector<std::string> train_ids() const;
};

SynthDataset generate(const SynthConfig& config);

}  // namespace pedrisk
