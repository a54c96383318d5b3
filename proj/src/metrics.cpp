// SPDX-License-Identifier: Apache-2.0
#include "pedrisk/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>
#include <unordered_map>

#include "pedrisk/error.hpp"
#include "pedrisk/simd/kernels.hpp"

namespace pedrisk {
namespace {

constexpr int kRecallPoints = 101;
constexpr std::size_t kSlices = 4;  // all, small, medium, large

// Detections of one image and category, kept after the per-image cap, in
// descending score order; ground truths in annotation_id order.
struct Cell {
  std::size_t image_rank = 0;
  std::vector<std::size_t> dets;
  std::vector<std::size_t> gts;
  std::vector<double> ious;  // dets.size() x gts.size()
};

struct Entry {
  double score;
  bool tp;
};

bool in_slice(std::size_t slice, SizeBin bin) {
  return slice == 0 || static_cast<std::size_t>(bin) + 1 == slice;
}

double interpolated_ap(std::vector<Entry>& entries, std::size_t num_gt) {
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.score > b.score; });
  const std::size_t nd = entries.size();
  std::vector<double> recall(nd), precision(nd);
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < nd; ++i) {
    if (entries[i].tp) {
      tp += 1.0;
    } else {
      fp += 1.0;
    }
    recall[i] = tp / static_cast<double>(num_gt);
    precision[i] = tp / (tp + fp);
  }
  for (std::size_t i = nd; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double sum = 0.0;
  for (int r = 0; r < kRecallPoints; ++r) {
    const double thr = static_cast<double>(r) / (kRecallPoints - 1);
    const auto it = std::lower_bound(recall.begin(), recall.end(), thr);
    if (it == recall.end()) break;
    sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / kRecallPoints;
}

std::optional<double> mean_of(const std::vector<std::optional<double>>& xs) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& x : xs) {
    if (x) {
      s += *x;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return s / static_cast<double>(n);
}

std::optional<std::size_t> threshold_index(const std::vector<double>& thr, double want) {
  for (std::size_t i = 0; i < thr.size(); ++i) {
    if (std::fabs(thr[i] - want) < 1e-9) return i;
  }
  return std::nullopt;
}

void check_pair(double y, double yhat, std::size_t i) {
  if (!std::isfinite(y) || y < 0.0) {
    throw ValidationError("regression pair " + std::to_string(i) + ": ground truth must be a finite non-negative count");
  }
  if (!std::isfinite(yhat)) {
    throw ValidationError("regression pair " + std::to_string(i) + ": prediction is not finite");
  }
}

void check_arrays(std::span<const double> y, std::span<const double> yhat) {
  if (y.empty()) throw ValidationError("regression metrics need at least one pair");
  if (y.size() != yhat.size()) throw ValidationError("regression metrics: length mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) check_pair(y[i], yhat[i], i);
}

std::array<std::vector<double>, 2> split_pairs(std::span<const RegressionPair> pairs) {
  std::array<std::vector<double>, 2> out;
  out[0].reserve(pairs.size());
  out[1].reserve(pairs.size());
  for (const auto& p : pairs) {
    out[0].push_back(p.y);
    out[1].push_back(p.yhat);
  }
  return out;
}

}  // namespace

std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

void EvalConfig::validate() const {
  if (iou_thresholds.empty()) throw ValidationError("iou_thresholds must not be empty");
  for (std::size_t i = 0; i < iou_thresholds.size(); ++i) {
    const double t = iou_thresholds[i];
    if (!(t > 0.0 && t <= 1.0)) throw ValidationError("iou threshold outside (0, 1]");
    if (i > 0 && !(t > iou_thresholds[i - 1])) {
      throw ValidationError("iou_thresholds must be strictly increasing");
    }
  }
  if (max_detections_per_image < 1) throw ValidationError("max_detections_per_image must be >= 1");
  if (!(size_bins.small_below <= size_bins.large_above)) {
    throw ValidationError("size bin edges must be ordered");
  }
}

double iou(const BBox& a, const BBox& b) {
  double out = 0.0;
  simd::active().iou_one_to_many(a.x, a.y, a.w, a.h, &b.x, &b.y, &b.w, &b.h, &out, 1);
  return out;
}

APReport evaluate_detection(const AnnotationSet& gts, std::span<const DetectionRecord> dets,
                            const EvalConfig& config) {
  config.validate();
  validate_annotations(gts);

  // Canonical image order (by id) makes the result independent of input order.
  std::vector<std::size_t> image_order(gts.images.size());
  std::iota(image_order.begin(), image_order.end(), 0);
  std::sort(image_order.begin(), image_order.end(), [&](std::size_t a, std::size_t b) {
    return gts.images[a].image_id < gts.images[b].image_id;
  });
  std::unordered_map<std::string, std::size_t> rank_of;
  for (std::size_t r = 0; r < image_order.size(); ++r) {
    rank_of.emplace(gts.images[image_order[r]].image_id, r);
  }

  std::vector<std::vector<std::size_t>> dets_by_image(image_order.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    const auto& d = dets[i];
    const auto it = rank_of.find(d.image_id);
    if (it == rank_of.end()) {
      throw ValidationError("detection " + std::to_string(i) + " references unknown image '" +
                            d.image_id + "'");
    }
    if (!gts.categories.contains(d.category_id)) {
      throw ValidationError("detection " + std::to_string(i) + " has unknown category_id " +
                            std::to_string(d.category_id));
    }
    if (!(d.bbox.w > 0.0) || !(d.bbox.h > 0.0) || !std::isfinite(d.bbox.x) ||
        !std::isfinite(d.bbox.y) || !std::isfinite(d.bbox.w) || !std::isfinite(d.bbox.h)) {
      throw ValidationError("detection " + std::to_string(i) + " has a degenerate box");
    }
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw ValidationError("detection " + std::to_string(i) + " has score outside [0, 1]");
    }
    dets_by_image[it->second].push_back(i);
  }

  const auto det_less = [&](std::size_t a, std::size_t b) {
    const auto& da = dets[a];
    const auto& db = dets[b];
    if (da.score != db.score) return da.score > db.score;
    return std::tie(da.category_id, da.bbox.x, da.bbox.y, da.bbox.w, da.bbox.h) <
           std::tie(db.category_id, db.bbox.x, db.bbox.y, db.bbox.w, db.bbox.h);
  };
  const auto cap = static_cast<std::size_t>(config.max_detections_per_image);

  std::vector<std::size_t> gt_order(gts.annotations.size());
  std::iota(gt_order.begin(), gt_order.end(), 0);
  std::sort(gt_order.begin(), gt_order.end(), [&](std::size_t a, std::size_t b) {
    return gts.annotations[a].annotation_id < gts.annotations[b].annotation_id;
  });

  // cells keyed by (category, image rank)
  std::map<std::pair<int, std::size_t>, Cell> cells;
  for (const std::size_t g : gt_order) {
    const auto& a = gts.annotations[g];
    auto& cell = cells[{a.category_id, rank_of.at(a.image_id)}];
    cell.gts.push_back(g);
  }
  for (std::size_t r = 0; r < dets_by_image.size(); ++r) {
    auto& list = dets_by_image[r];
    std::stable_sort(list.begin(), list.end(), det_less);
    if (list.size() > cap) list.resize(cap);
    for (const std::size_t d : list) cells[{dets[d].category_id, r}].dets.push_back(d);
  }

  const auto& kernels = simd::active();
  std::vector<double> gx, gy, gw, gh;
  for (auto& [key, cell] : cells) {
    cell.image_rank = key.second;
    const std::size_t ng = cell.gts.size();
    gx.resize(ng);
    gy.resize(ng);
    gw.resize(ng);
    gh.resize(ng);
    for (std::size_t j = 0; j < ng; ++j) {
      const auto& b = gts.annotations[cell.gts[j]].bbox;
      gx[j] = b.x;
      gy[j] = b.y;
      gw[j] = b.w;
      gh[j] = b.h;
    }
    cell.ious.assign(cell.dets.size() * ng, 0.0);
    for (std::size_t i = 0; i < cell.dets.size(); ++i) {
      const auto& b = dets[cell.dets[i]].bbox;
      kernels.iou_one_to_many(b.x, b.y, b.w, b.h, gx.data(), gy.data(), gw.data(), gh.data(),
                              cell.ious.data() + i * ng, ng);
    }
  }

  const std::size_t nt = config.iou_thresholds.size();
  const std::size_t nc = gts.categories.size();
  // ap[slice][threshold][class]
  std::vector<std::vector<std::vector<std::optional<double>>>> ap(
      kSlices, std::vector<std::vector<std::optional<double>>>(
                   nt, std::vector<std::optional<double>>(nc)));

  std::vector<SizeBin> gt_bin(gts.annotations.size());
  for (std::size_t g = 0; g < gts.annotations.size(); ++g) {
    const auto& a = gts.annotations[g];
    gt_bin[g] = size_bin(relative_area(a, gts.images[image_order[rank_of.at(a.image_id)]]),
                         config.size_bins);
  }
  const auto det_bin = [&](std::size_t d) {
    const auto& img = gts.images[image_order[rank_of.at(dets[d].image_id)]];
    const double rel = dets[d].bbox.area() /
                       (static_cast<double>(img.width) * static_cast<double>(img.height));
    return size_bin(rel, config.size_bins);
  };

  for (std::size_t slice = 0; slice < kSlices; ++slice) {
    for (std::size_t c = 0; c < nc; ++c) {
      const auto first = cells.lower_bound({static_cast<int>(c), 0});
      const auto last = cells.lower_bound({static_cast<int>(c) + 1, 0});
      std::size_t num_gt = 0;
      std::vector<std::vector<Entry>> entries(nt);
      for (auto it = first; it != last; ++it) {
        const Cell& cell = it->second;
        const std::size_t ng = cell.gts.size();
        // Non-ignored ground truths first, stable within each group.
        std::vector<std::size_t> order;
        std::vector<bool> ignored;
        for (int pass = 0; pass < 2; ++pass) {
          for (std::size_t j = 0; j < ng; ++j) {
            const bool ig = !in_slice(slice, gt_bin[cell.gts[j]]);
            if (ig == (pass == 1)) {
              order.push_back(j);
              ignored.push_back(ig);
            }
          }
        }
        for (const bool ig : ignored) num_gt += ig ? 0 : 1;

        for (std::size_t t = 0; t < nt; ++t) {
          std::vector<bool> taken(ng, false);
          for (std::size_t i = 0; i < cell.dets.size(); ++i) {
            double best_iou = std::min(config.iou_thresholds[t], 1.0 - 1e-10);
            std::ptrdiff_t m = -1;
            for (std::size_t o = 0; o < order.size(); ++o) {
              if (taken[o]) continue;
              if (m >= 0 && !ignored[static_cast<std::size_t>(m)] && ignored[o]) break;
              const double v = cell.ious[i * ng + order[o]];
              if (v < best_iou) continue;
              best_iou = v;
              m = static_cast<std::ptrdiff_t>(o);
            }
            bool skip = false;
            bool tp = false;
            if (m >= 0) {
              taken[static_cast<std::size_t>(m)] = true;
              skip = ignored[static_cast<std::size_t>(m)];
              tp = !skip;
            } else {
              skip = !in_slice(slice, det_bin(cell.dets[i]));
            }
            if (!skip) entries[t].push_back({dets[cell.dets[i]].score, tp});
          }
        }
      }
      if (num_gt == 0) continue;
      for (std::size_t t = 0; t < nt; ++t) ap[slice][t][c] = interpolated_ap(entries[t], num_gt);
    }
  }

  const auto slice_mean = [&](std::size_t slice) {
    std::vector<std::optional<double>> per_t;
    for (std::size_t t = 0; t < nt; ++t) per_t.push_back(mean_of(ap[slice][t]));
    return mean_of(per_t);
  };
  APReport report;
  report.ap = slice_mean(0);
  if (const auto i50 = threshold_index(config.iou_thresholds, 0.5)) report.ap50 = mean_of(ap[0][*i50]);
  if (const auto i75 = threshold_index(config.iou_thresholds, 0.75)) report.ap75 = mean_of(ap[0][*i75]);
  report.ap_small = slice_mean(1);
  report.ap_medium = slice_mean(2);
  report.ap_large = slice_mean(3);
  return report;
}

double rmse(std::span<const double> y, std::span<const double> yhat) {
  check_arrays(y, yhat);
  const double ss = simd::active().sum_sq_diff(y.data(), yhat.data(), y.size());
  return std::sqrt(ss / static_cast<double>(y.size()));
}

double wmae(std::span<const double> y, std::span<const double> yhat) {
  check_arrays(y, yhat);
  const double num = simd::active().weighted_abs_diff(y.data(), yhat.data(), y.size());
  double den = 0.0;
  for (const double v : y) den += v + 1.0;
  return num / den;
}

double rmse(std::span<const RegressionPair> pairs) {
  const auto arr = split_pairs(pairs);
  return rmse(arr[0], arr[1]);
}

double wmae(std::span<const RegressionPair> pairs) {
  const auto arr = split_pairs(pairs);
  return wmae(arr[0], arr[1]);
}

RegReport evaluate_regression(std::span<const RegressionPair> pairs) {
  const auto arr = split_pairs(pairs);
  return {rmse(arr[0], arr[1]), wmae(arr[0], arr[1]), pairs.size()};
}

}  // namespace pedrisk
