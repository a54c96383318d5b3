// SPDX-License-Identifier: Apache-2.0
#include "pedrisk/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "pedrisk/error.hpp"

namespace pedrisk {
namespace {

constexpr int kStrataPerAxis = 4;
constexpr std::size_t kSwapAttemptsPerImage = 50;

Histogram make_linear_hist(double lo, double hi, double width) {
  Histogram h;
  const auto bins = static_cast<std::size_t>(std::llround((hi - lo) / width));
  for (std::size_t i = 0; i <= bins; ++i) h.edges.push_back(lo + width * static_cast<double>(i));
  h.counts.assign(bins, 0);
  return h;
}

Histogram make_decade_hist(int lo_exp, int hi_exp) {
  Histogram h;
  h.log_scale = true;
  for (int e = lo_exp; e <= hi_exp; ++e) h.edges.push_back(std::pow(10.0, e));
  h.counts.assign(h.edges.size() - 1, 0);
  return h;
}

void add_to_hist(Histogram& h, double v) {
  const auto it = std::upper_bound(h.edges.begin(), h.edges.end(), v);
  auto bin = static_cast<std::ptrdiff_t>(it - h.edges.begin()) - 1;
  bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(h.counts.size()) - 1);
  ++h.counts[static_cast<std::size_t>(bin)];
}

SummaryStats summarize(std::span<const double> xs) {
  SummaryStats s;
  if (xs.empty()) return s;
  s.min = *std::min_element(xs.begin(), xs.end());
  s.max = *std::max_element(xs.begin(), xs.end());
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (const double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return s;
}

// Rank-based quartile of each value; ties broken by position for determinism.
std::vector<int> quartiles(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<int> q(values.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    q[order[r]] = static_cast<int>(r * kStrataPerAxis / order.size());
  }
  return q;
}

std::unordered_map<std::string, std::size_t> image_positions(const AnnotationSet& set) {
  std::unordered_map<std::string, std::size_t> pos;
  pos.reserve(set.images.size());
  for (std::size_t i = 0; i < set.images.size(); ++i) {
    if (!pos.emplace(set.images[i].image_id, i).second) {
      throw ValidationError("duplicate image_id '" + set.images[i].image_id + "'");
    }
  }
  return pos;
}

}  // namespace

CategoryRegistry::CategoryRegistry(std::vector<Category> categories)
    : categories_(std::move(categories)) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (categories_[i].id != static_cast<int>(i)) {
      throw ValidationError("category ids must be contiguous from 0; got " +
                            std::to_string(categories_[i].id) + " at position " +
                            std::to_string(i));
    }
    if (!names.insert(categories_[i].name).second) {
      throw ValidationError("duplicate category name '" + categories_[i].name + "'");
    }
  }
}

CategoryRegistry CategoryRegistry::defaults(int count) {
  static const char* const kNamed[] = {
      "crosswalk",    "stop line",   "speed bump",     "traffic sign", "pedestrian sign",
      "stop sign",    "traffic light", "road lane",    "curb",         "sidewalk",
      "street light", "tree",        "roundabout",     "BRT station",  "median barrier",
  };
  std::vector<Category> cats;
  for (int i = 0; i < count; ++i) {
    const auto named = static_cast<int>(std::size(kNamed));
    cats.push_back({i, i < named ? kNamed[i] : "class_" + std::to_string(i)});
  }
  return CategoryRegistry(std::move(cats));
}

const char* size_bin_name(SizeBin b) {
  switch (b) {
    case SizeBin::small:
      return "small";
    case SizeBin::medium:
      return "medium";
    case SizeBin::large:
      return "large";
  }
  return "?";
}

double relative_area(const BoxAnnotation& box, const ImageRecord& image) {
  const auto& b = box.bbox;
  const bool finite = std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) &&
                      std::isfinite(b.h);
  if (!finite || b.w <= 0.0 || b.h <= 0.0 || b.x < 0.0 || b.y < 0.0 ||
      b.x + b.w > static_cast<double>(image.width) || b.y + b.h > static_cast<double>(image.height)) {
    throw ValidationError("annotation '" + box.annotation_id + "' lies outside image '" +
                          image.image_id + "' or has non-positive size");
  }
  if (image.width <= 0 || image.height <= 0) {
    throw ValidationError("image '" + image.image_id + "' has non-positive size");
  }
  return b.area() / (static_cast<double>(image.width) * static_cast<double>(image.height));
}

SizeBin size_bin(double rel_area, const SizeBinEdges& edges) {
  if (rel_area < edges.small_below) return SizeBin::small;
  if (rel_area > edges.large_above) return SizeBin::large;
  return SizeBin::medium;
}

void validate_annotations(const AnnotationSet& set) {
  const auto pos = image_positions(set);
  std::set<std::string> ann_ids;
  for (const auto& a : set.annotations) {
    const auto it = pos.find(a.image_id);
    if (it == pos.end()) {
      throw ValidationError("annotation '" + a.annotation_id + "' references unknown image '" +
                            a.image_id + "'");
    }
    if (!set.categories.contains(a.category_id)) {
      throw ValidationError("annotation '" + a.annotation_id + "' has unknown category_id " +
                            std::to_string(a.category_id));
    }
    if (!ann_ids.insert(a.annotation_id).second) {
      throw ValidationError("duplicate annotation id '" + a.annotation_id + "'");
    }
    relative_area(a, set.images[it->second]);
  }
}

std::string fold_label(int fold) { return "fold" + std::to_string(fold); }

std::vector<std::vector<std::int64_t>> per_image_class_counts(const AnnotationSet& set) {
  const auto pos = image_positions(set);
  std::vector<std::vector<std::int64_t>> counts(
      set.images.size(), std::vector<std::int64_t>(set.categories.size(), 0));
  for (const auto& a : set.annotations) {
    const auto it = pos.find(a.image_id);
    if (it == pos.end() || !set.categories.contains(a.category_id)) {
      throw ValidationError("annotation '" + a.annotation_id + "' has a dangling reference");
    }
    ++counts[it->second][static_cast<std::size_t>(a.category_id)];
  }
  return counts;
}

SplitAssignment stratified_split(const AnnotationSet& set, const CollisionLabels& labels, int k,
                                 std::uint64_t seed) {
  if (k < 2) throw ValidationError("stratified_split: k must be at least 2");
  const std::size_t n = set.images.size();
  if (n < static_cast<std::size_t>(k)) {
    throw ValidationError("stratified_split: " + std::to_string(n) + " images cannot fill " +
                          std::to_string(k) + " folds");
  }
  const auto counts = per_image_class_counts(set);
  const std::size_t num_classes = set.categories.size();

  std::vector<double> y(n), boxes(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = labels.find(set.images[i].image_id);
    if (it == labels.end()) {
      throw ValidationError("stratified_split: image '" + set.images[i].image_id +
                            "' has no collision label");
    }
    y[i] = static_cast<double>(it->second);
    boxes[i] = static_cast<double>(std::accumulate(counts[i].begin(), counts[i].end(), 0LL));
  }

  // Visit order: strata in fixed order, seeded shuffle inside each stratum.
  const auto qy = quartiles(y);
  const auto qb = quartiles(boxes);
  std::vector<std::vector<std::size_t>> strata(kStrataPerAxis * kStrataPerAxis);
  for (std::size_t i = 0; i < n; ++i) strata[qy[i] * kStrataPerAxis + qb[i]].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order;
  order.reserve(n);
  for (auto& s : strata) {
    std::shuffle(s.begin(), s.end(), rng);
    order.insert(order.end(), s.begin(), s.end());
  }

  std::vector<double> class_total(num_classes, 0.0);
  double y_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < num_classes; ++c) class_total[c] += static_cast<double>(counts[i][c]);
    y_total += y[i];
  }

  const std::size_t kk = static_cast<std::size_t>(k);
  const std::size_t base = n / kk;
  const std::size_t remainder = n % kk;
  std::vector<std::vector<double>> fold_class(kk, std::vector<double>(num_classes, 0.0));
  std::vector<double> fold_y(kk, 0.0);
  std::vector<std::size_t> fold_size(kk, 0);
  std::size_t folds_at_cap = 0;

  std::vector<std::size_t> fold_of(n, 0);
  for (const std::size_t i : order) {
    const double img_boxes = boxes[i];
    std::size_t best = kk;
    double best_score = 0.0;
    for (std::size_t f = 0; f < kk; ++f) {
      // A fold may grow to base+1 only while fewer than `remainder` folds have.
      if (fold_size[f] > base) continue;
      if (fold_size[f] == base && (remainder == 0 || folds_at_cap >= remainder)) continue;
      double score = 0.0;
      if (img_boxes > 0.0) {
        double fill = 0.0;
        for (std::size_t c = 0; c < num_classes; ++c) {
          if (counts[i][c] > 0) {
            fill += static_cast<double>(counts[i][c]) * fold_class[f][c] / class_total[c];
          }
        }
        score += fill / img_boxes;
      }
      if (y_total > 0.0) score += fold_y[f] / y_total;
      score += static_cast<double>(fold_size[f]) / static_cast<double>(n);
      if (best == kk || score < best_score) {
        best = f;
        best_score = score;
      }
    }
    for (std::size_t c = 0; c < num_classes; ++c) fold_class[best][c] += static_cast<double>(counts[i][c]);
    fold_y[best] += y[i];
    if (++fold_size[best] == base + 1) ++folds_at_cap;
    fold_of[i] = best;
  }

  // Refinement: seeded pairwise swaps across folds, kept when they lower the
  // squared relative deviation of per-class box counts and collision sums
  // from their size-proportional targets. Swaps keep fold sizes.
  auto dev = [&](double have, double total, std::size_t f) {
    if (total <= 0.0) return 0.0;
    const double target = total * static_cast<double>(fold_size[f]) / static_cast<double>(n);
    const double d = (have - target) / target;
    return d * d;
  };
  std::vector<std::size_t> touched;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t attempts = kSwapAttemptsPerImage * n;
  for (std::size_t t = 0; t < attempts; ++t) {
    const std::size_t i = pick(rng), j = pick(rng);
    const std::size_t a = fold_of[i], b = fold_of[j];
    if (a == b) continue;
    touched.clear();
    for (std::size_t c = 0; c < num_classes; ++c) {
      if (counts[i][c] != counts[j][c]) touched.push_back(c);
    }
    const double dy = y[j] - y[i];
    double delta = dev(fold_y[a] + dy, y_total, a) + dev(fold_y[b] - dy, y_total, b) - dev(fold_y[a], y_total, a) -
                   dev(fold_y[b], y_total, b);
    for (const std::size_t c : touched) {
      const double dc = static_cast<double>(counts[j][c] - counts[i][c]);
      delta += dev(fold_class[a][c] + dc, class_total[c], a) + dev(fold_class[b][c] - dc, class_total[c], b) -
               dev(fold_class[a][c], class_total[c], a) - dev(fold_class[b][c], class_total[c], b);
    }
    if (!(delta < -1e-15)) continue;
    for (const std::size_t c : touched) {
      const double dc = static_cast<double>(counts[j][c] - counts[i][c]);
      fold_class[a][c] += dc;
      fold_class[b][c] -= dc;
    }
    fold_y[a] += dy;
    fold_y[b] -= dy;
    fold_of[i] = b;
    fold_of[j] = a;
  }

  SplitAssignment out;
  for (std::size_t i = 0; i < n; ++i) out[set.images[i].image_id] = fold_label(static_cast<int>(fold_of[i]));
  return out;
}

SplitBalance split_balance(const AnnotationSet& set, const CollisionLabels& labels,
                           const SplitAssignment& split, int k) {
  if (k < 1) throw ValidationError("split_balance: k must be positive");
  const auto kk = static_cast<std::size_t>(k);
  const auto counts = per_image_class_counts(set);
  const std::size_t nc = set.categories.size();
  std::vector<std::vector<double>> boxes(kk, std::vector<double>(nc, 0.0));
  std::vector<double> ysum(kk, 0.0);
  SplitBalance b;
  b.fold_sizes.assign(kk, 0);
  for (std::size_t i = 0; i < set.images.size(); ++i) {
    const auto it = split.find(set.images[i].image_id);
    if (it == split.end()) continue;
    std::size_t f = kk;
    for (std::size_t j = 0; j < kk; ++j) {
      if (it->second == fold_label(static_cast<int>(j))) f = j;
    }
    if (f == kk) continue;
    ++b.fold_sizes[f];
    for (std::size_t c = 0; c < nc; ++c) boxes[f][c] += static_cast<double>(counts[i][c]);
    const auto y = labels.find(set.images[i].image_id);
    if (y == labels.end()) {
      throw ValidationError("split_balance: image '" + set.images[i].image_id + "' has no label");
    }
    ysum[f] += static_cast<double>(y->second);
  }
  auto spread = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    return mean > 0.0 ? (*hi - *lo) / mean : 0.0;
  };
  for (std::size_t c = 0; c < nc; ++c) {
    std::vector<double> per_fold(kk);
    for (std::size_t f = 0; f < kk; ++f) per_fold[f] = boxes[f][c];
    b.class_imbalance.push_back(spread(per_fold));
    b.max_class_imbalance = std::max(b.max_class_imbalance, b.class_imbalance.back());
  }
  for (std::size_t f = 0; f < kk; ++f) {
    b.fold_collision_means.push_back(b.fold_sizes[f] ? ysum[f] / static_cast<double>(b.fold_sizes[f]) : 0.0);
  }
  b.collision_mean_imbalance = spread(b.fold_collision_means);
  return b;
}

std::int64_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), 0LL); }

StatsReport dataset_stats(const AnnotationSet& set, const CollisionLabels& labels) {
  validate_annotations(set);
  const auto pos = image_positions(set);
  StatsReport r;
  r.num_images = static_cast<std::int64_t>(set.images.size());
  r.total_boxes = static_cast<std::int64_t>(set.annotations.size());
  r.boxes_per_image_hist = make_linear_hist(0.0, 280.0, 10.0);
  r.relative_area_hist = make_decade_hist(-8, 0);
  r.collisions_hist = make_linear_hist(0.0, 200.0, 1.0);
  for (const auto& c : set.categories.categories()) r.per_class_counts[c.name] = 0;

  std::vector<double> per_image(set.images.size(), 0.0);
  double area_sum = 0.0;
  for (const auto& a : set.annotations) {
    const std::size_t idx = pos.at(a.image_id);
    per_image[idx] += 1.0;
    ++r.per_class_counts[set.categories.name(a.category_id)];
    const double rel = relative_area(a, set.images[idx]);
    area_sum += rel;
    add_to_hist(r.relative_area_hist, rel);
  }
  if (!set.annotations.empty()) area_sum /= static_cast<double>(set.annotations.size());
  r.relative_area_mean = area_sum;
  r.boxes_per_image = summarize(per_image);
  for (const double b : per_image) add_to_hist(r.boxes_per_image_hist, b);

  std::vector<double> ys;
  ys.reserve(labels.size());
  for (const auto& [image_id, y] : labels) {
    if (!pos.contains(image_id)) {
      throw ValidationError("collision label references unknown image '" + image_id + "'");
    }
    if (y < 0) throw ValidationError("negative collision count for image '" + image_id + "'");
    ys.push_back(static_cast<double>(y));
    add_to_hist(r.collisions_hist, static_cast<double>(y));
  }
  r.labelled_images = static_cast<std::int64_t>(ys.size());
  r.collisions = summarize(ys);
  return r;
}

}  // namespace pedrisk
