// SPDX-License-Identifier: Apache-2.0
#pragma once

// COCO-style detection AP over relative-area size bins, and the regression
// metrics RMSE and WMAE.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pedrisk/dataset.hpp"

namespace pedrisk {

struct DetectionRecord {
  std::string image_id;
  int category_id = 0;
  BBox bbox;
  double score = 0.0;
};

// 0.50, 0.55, ..., 0.95
std::vector<double> default_iou_thresholds();

struct EvalConfig {
  std::vector<double> iou_thresholds = default_iou_thresholds();
  SizeBinEdges size_bins;
  int max_detections_per_image = 100;

  // Throws ValidationError for empty or non-increasing thresholds, thresholds
  // outside (0, 1], or a non-positive detection cap.
  void validate() const;
};

struct APReport {
  std::optional<double> ap;
  std::optional<double> ap50;
  std::optional<double> ap75;
  std::optional<double> ap_small;
  std::optional<double> ap_medium;
  std::optional<double> ap_large;
};

double iou(const BBox& a, const BBox& b);

// Ground truth comes from `gts` (its images give the relative-area
// denominators). Per image, only the max_detections_per_image highest-scoring
// detections over all classes are kept. Throws ValidationError on unknown
// image or category ids and on malformed detections.
APReport evaluate_detection(const AnnotationSet& gts, std::span<const DetectionRecord> dets,
                            const EvalConfig& config = {});

struct RegressionPair {
  std::string image_id;
  double y = 0.0;     // ground-truth collisions, >= 0
  double yhat = 0.0;  // prediction
};

struct RegReport {
  double rmse = 0.0;
  double wmae = 0.0;
  std::size_t n = 0;
};

// Both throw ValidationError on an empty set, negative y or non-finite values.
double rmse(std::span<const RegressionPair> pairs);
double wmae(std::span<const RegressionPair> pairs);
RegReport evaluate_regression(std::span<const RegressionPair> pairs);

// Array forms used by the trainers and baselines.
double rmse(std::span<const double> y, std::span<const double> yhat);
double wmae(std::span<const double> y, std::span<const double> yhat);

}  // namespace pedrisk
