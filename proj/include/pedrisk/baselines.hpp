// SPDX-License-Identifier: Apache-2.0
#pragma once

// Constant central-tendency predictors and a ridge count regressor.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pedrisk/dataset.hpp"
#include "pedrisk/linalg.hpp"
#include "pedrisk/metrics.hpp"

namespace pedrisk {

enum class Statistic { mode, median, mean };

const char* statistic_name(Statistic s);
// Throws ValidationError for an unknown name.
Statistic parse_statistic(const std::string& name);

struct ConstantPredictor {
  Statistic statistic = Statistic::mean;
  double value = 0.0;
};

// mode: most frequent value, ties to the smallest; median: mean of the two
// middle order statistics for even sizes. Throws ValidationError when empty.
ConstantPredictor fit_constant(std::span<const double> labels, Statistic statistic);

struct CountFeatures {
  std::vector<std::string> image_ids;
  Matrix values;  // one row per image: C counts, then optional lat_norm, lon_norm
  std::size_t num_classes = 0;
  bool has_coords = false;

  std::size_t dim() const { return values.cols(); }
};

// Rows follow set.images order. When `coords` is given, the normalised image
// location is appended to each row.
CountFeatures count_features(const AnnotationSet& set,
                             const std::optional<CoordNormalizer>& coords = std::nullopt);

// Counts detections with score >= score_threshold. Images come from `images`.
CountFeatures count_features(const AnnotationSet& images, std::span<const DetectionRecord> dets,
                             double score_threshold,
                             const std::optional<CoordNormalizer>& coords = std::nullopt);

struct LinearModel {
  std::vector<double> weights;        // on standardised features
  double intercept = 0.0;
  std::vector<double> feature_mean;
  std::vector<double> feature_std;    // 1 for constant features
  std::vector<bool> constant_feature;  // weight pinned to 0
  double lambda = 1.0;
  bool lambda_fallback = false;  // lambda = 0 was singular and 1e-8 was used

  std::size_t dim() const { return weights.size(); }
  // Weights and intercept in the original feature units.
  std::vector<double> raw_weights() const;
  double raw_intercept() const;
};

inline constexpr double kRidgeFallbackLambda = 1e-8;

// Standardises the features, then solves ridge least squares with an
// unpenalised intercept. Throws ValidationError with fewer than two samples,
// a negative lambda or mismatched shapes.
LinearModel fit_count_regressor(const Matrix& features, std::span<const double> labels,
                                double lambda = 1.0);

// Affine prediction clamped to [0, inf). Throws ValidationError on a length
// mismatch.
double predict(const LinearModel& model, std::span<const double> features);
std::vector<double> predict(const LinearModel& model, const Matrix& features);

// sum of squared residuals of the unclamped prediction + lambda * |w|^2,
// with w on standardised features.
double ridge_objective(const LinearModel& model, const Matrix& features,
                       std::span<const double> labels);

}  // namespace pedrisk
