// SPDX-License-Identifier: Apache-2.0
#include "pedrisk/baselines.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "pedrisk/error.hpp"

namespace pedrisk {
namespace {

Matrix init_features(const AnnotationSet& set, const std::optional<CoordNormalizer>& coords,
                     CountFeatures& out) {
  out.num_classes = set.categories.size();
  out.has_coords = coords.has_value();
  Matrix m(set.images.size(), out.num_classes + (coords ? 2 : 0));
  for (std::size_t i = 0; i < set.images.size(); ++i) {
    out.image_ids.push_back(set.images[i].image_id);
    if (coords) {
      const auto xy = coords->apply(set.images[i].location);
      m(i, out.num_classes) = xy[0];
      m(i, out.num_classes + 1) = xy[1];
    }
  }
  return m;
}

double linear_response(const LinearModel& model, std::span<const double> x) {
  if (x.size() != model.dim()) {
    throw ValidationError("predict: feature length " + std::to_string(x.size()) +
                          " does not match model length " + std::to_string(model.dim()));
  }
  double s = model.intercept;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (model.constant_feature[j]) continue;
    s += model.weights[j] * (x[j] - model.feature_mean[j]) / model.feature_std[j];
  }
  return s;
}

}  // namespace

const char* statistic_name(Statistic s) {
  switch (s) {
    case Statistic::mode:
      return "mode";
    case Statistic::median:
      return "median";
    case Statistic::mean:
      return "mean";
  }
  return "?";
}

Statistic parse_statistic(const std::string& name) {
  if (name == "mode") return Statistic::mode;
  if (name == "median") return Statistic::median;
  if (name == "mean") return Statistic::mean;
  throw ValidationError("unknown statistic '" + name + "' (expected mode, median or mean)");
}

ConstantPredictor fit_constant(std::span<const double> labels, Statistic statistic) {
  if (labels.empty()) throw ValidationError("fit_constant: no training labels");
  std::vector<double> sorted(labels.begin(), labels.end());
  std::sort(sorted.begin(), sorted.end());
  ConstantPredictor p{statistic, 0.0};
  switch (statistic) {
    case Statistic::mode: {
      std::size_t best_run = 0;
      for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        if (j - i > best_run) {
          best_run = j - i;
          p.value = sorted[i];
        }
        i = j;
      }
      break;
    }
    case Statistic::median: {
      const std::size_t n = sorted.size();
      p.value = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
      break;
    }
    case Statistic::mean: {
      double s = 0.0;
      for (const double v : sorted) s += v;
      p.value = s / static_cast<double>(sorted.size());
      break;
    }
  }
  return p;
}

CountFeatures count_features(const AnnotationSet& set, const std::optional<CoordNormalizer>& coords) {
  CountFeatures out;
  out.values = init_features(set, coords, out);
  const auto counts = per_image_class_counts(set);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::size_t c = 0; c < out.num_classes; ++c) out.values(i, c) = static_cast<double>(counts[i][c]);
  }
  return out;
}

CountFeatures count_features(const AnnotationSet& images, std::span<const DetectionRecord> dets,
                             double score_threshold, const std::optional<CoordNormalizer>& coords) {
  CountFeatures out;
  out.values = init_features(images, coords, out);
  std::unordered_map<std::string, std::size_t> row;
  for (std::size_t i = 0; i < images.images.size(); ++i) row.emplace(images.images[i].image_id, i);
  for (std::size_t k = 0; k < dets.size(); ++k) {
    const auto& d = dets[k];
    const auto it = row.find(d.image_id);
    if (it == row.end()) {
      throw ValidationError("detection " + std::to_string(k) + " references unknown image '" +
                            d.image_id + "'");
    }
    if (!images.categories.contains(d.category_id)) {
      throw ValidationError("detection " + std::to_string(k) + " has unknown category_id " +
                            std::to_string(d.category_id));
    }
    if (d.score >= score_threshold) out.values(it->second, static_cast<std::size_t>(d.category_id)) += 1.0;
  }
  return out;
}

std::vector<double> LinearModel::raw_weights() const {
  std::vector<double> w(weights.size(), 0.0);
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (!constant_feature[j]) w[j] = weights[j] / feature_std[j];
  }
  return w;
}

double LinearModel::raw_intercept() const {
  double b = intercept;
  const auto w = raw_weights();
  for (std::size_t j = 0; j < w.size(); ++j) b -= w[j] * feature_mean[j];
  return b;
}

LinearModel fit_count_regressor(const Matrix& features, std::span<const double> labels, double lambda) {
  const std::size_t n = features.rows();
  const std::size_t p = features.cols();
  if (n < 2) throw ValidationError("fit_count_regressor: need at least two samples");
  if (labels.size() != n) throw ValidationError("fit_count_regressor: label count does not match feature rows");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("fit_count_regressor: lambda must be >= 0");

  LinearModel m;
  m.lambda = lambda;
  m.weights.assign(p, 0.0);
  m.feature_mean.assign(p, 0.0);
  m.feature_std.assign(p, 1.0);
  m.constant_feature.assign(p, false);

  for (std::size_t j = 0; j < p; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += features(i, j);
    const double mu = s / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (features(i, j) - mu) * (features(i, j) - mu);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    m.feature_mean[j] = mu;
    if (sd > 0.0) {
      m.feature_std[j] = sd;
    } else {
      m.constant_feature[j] = true;
    }
  }
  double ybar = 0.0;
  for (const double v : labels) ybar += v;
  ybar /= static_cast<double>(n);
  m.intercept = ybar;

  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < p; ++j) {
    if (!m.constant_feature[j]) active.push_back(j);
  }
  if (active.empty()) return m;

  const auto q = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd z(static_cast<Eigen::Index>(n), q);
  Eigen::VectorXd yc(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (Eigen::Index k = 0; k < q; ++k) {
      const std::size_t j = active[static_cast<std::size_t>(k)];
      z(ii, k) = (features(i, j) - m.feature_mean[j]) / m.feature_std[j];
    }
    yc(ii) = labels[i] - ybar;
  }
  Eigen::MatrixXd gram = z.transpose() * z;
  const Eigen::VectorXd rhs = z.transpose() * yc;

  double lam = lambda;
  if (lam == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    lu.setThreshold(1e-12);
    if (lu.rank() < q) {
      lam = kRidgeFallbackLambda;
      m.lambda = lam;
      m.lambda_fallback = true;
    }
  }
  gram.diagonal().array() += lam;
  const Eigen::VectorXd w = gram.ldlt().solve(rhs);
  if (!w.allFinite()) throw NumericalError("fit_count_regressor: ridge solve produced non-finite weights");
  for (Eigen::Index k = 0; k < q; ++k) m.weights[active[static_cast<std::size_t>(k)]] = w(k);
  return m;
}

double predict(const LinearModel& model, std::span<const double> features) {
  return std::max(0.0, linear_response(model, features));
}

std::vector<double> predict(const LinearModel& model, const Matrix& features) {
  std::vector<double> out(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) out[i] = predict(model, features.row(i));
  return out;
}

double ridge_objective(const LinearModel& model, const Matrix& features, std::span<const double> labels) {
  if (labels.size() != features.rows()) throw ValidationError("ridge_objective: shape mismatch");
  double obj = 0.0;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const double r = linear_response(model, features.row(i)) - labels[i];
    obj += r * r;
  }
  double wsq = 0.0;
  for (const double w : model.weights) wsq += w * w;
  return obj + model.lambda * wsq;
}

}  // namespace pedrisk
