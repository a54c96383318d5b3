// SPDX-License-Identifier: Apache-2.0
#pragma once

// Detection annotations, relative-area size bins, fold splits and dataset
// statistics.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pedrisk/geo.hpp"

namespace pedrisk {

struct Category {
  int id = 0;
  std::string name;
};

class CategoryRegistry {
 public:
  CategoryRegistry() = default;
  // Throws ValidationError unless ids are 0..C-1 in order and names are unique.
  explicit CategoryRegistry(std::vector<Category> categories);

  // Street-furniture classes named in prose, then numbered placeholders.
  static CategoryRegistry defaults(int count = 27);

  std::size_t size() const { return categories_.size(); }
  bool contains(int id) const { return id >= 0 && static_cast<std::size_t>(id) < categories_.size(); }
  const std::string& name(int id) const { return categories_.at(static_cast<std::size_t>(id)).name; }
  const std::vector<Category>& categories() const { return categories_; }

 private:
  std::vector<Category> categories_;
};

struct BBox {
  double x = 0.0;  // top-left origin, pixels
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct BoxAnnotation {
  std::string annotation_id;
  std::string image_id;
  int category_id = 0;
  BBox bbox;
};

struct AnnotationSet {
  CategoryRegistry categories;
  std::vector<ImageRecord> images;
  std::vector<BoxAnnotation> annotations;
};

// image_id -> pedestrian collisions
using CollisionLabels = std::map<std::string, std::int64_t>;

enum class SizeBin { small, medium, large };

const char* size_bin_name(SizeBin b);

// small < small_below <= medium <= large_above < large
struct SizeBinEdges {
  double small_below = 1e-4;
  double large_above = 0.1;
};

// (w*h) / (width*height). Throws ValidationError naming the annotation when
// the box leaves the image or is degenerate.
double relative_area(const BoxAnnotation& box, const ImageRecord& image);

SizeBin size_bin(double rel_area, const SizeBinEdges& edges = {});

// Throws ValidationError for dangling image ids, unknown categories, or boxes
// outside their image.
void validate_annotations(const AnnotationSet& set);

// image_id -> fold label ("fold0", "fold1", ..., or "test")
using SplitAssignment = std::map<std::string, std::string>;

std::string fold_label(int fold);

// Greedy distribution-preserving k-fold split. Strata are
// (collision quartile x boxes-per-image quartile); inside a stratum the images
// are visited in seeded random order and each goes to the open fold whose
// per-class box counts, collision sum and size are least filled relative to
// their targets. Seeded pairwise swaps between folds then lower the squared
// relative deviation of per-class box counts and collision sums from their
// targets. Fold sizes differ by at most one.
SplitAssignment stratified_split(const AnnotationSet& set, const CollisionLabels& labels, int k,
                                 std::uint64_t seed);

// How evenly a split spreads boxes and collisions over its folds. Images
// assigned to labels outside fold0..fold{k-1} are ignored.
struct SplitBalance {
  std::vector<std::size_t> fold_sizes;
  // per class: (max - min) / mean of the per-fold box counts; 0 if the class is absent
  std::vector<double> class_imbalance;
  double max_class_imbalance = 0.0;
  std::vector<double> fold_collision_means;
  // (max - min) / mean of the per-fold collision means
  double collision_mean_imbalance = 0.0;
};

SplitBalance split_balance(const AnnotationSet& set, const CollisionLabels& labels,
                           const SplitAssignment& split, int k);

struct Histogram {
  std::vector<double> edges;          // size bins+1, ascending
  std::vector<std::int64_t> counts;   // values outside the edges go to the end bins
  bool log_scale = false;

  std::int64_t total() const;
};

struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double min = 0.0;
  double max = 0.0;
};

struct StatsReport {
  std::int64_t num_images = 0;
  std::int64_t total_boxes = 0;
  SummaryStats boxes_per_image;
  Histogram boxes_per_image_hist;
  std::map<std::string, std::int64_t> per_class_counts;  // by category name
  double relative_area_mean = 0.0;
  Histogram relative_area_hist;
  SummaryStats collisions;
  Histogram collisions_hist;
  std::int64_t labelled_images = 0;
};

// Histogram edges: boxes per image in bins of 10 over [0, 280]; relative area
// in decades over [1e-8, 1]; collisions in bins of 1 over [0, 200].
StatsReport dataset_stats(const AnnotationSet& set, const CollisionLabels& labels);

// Per-class box counts per image, rows in set.images order.
std::vector<std::vector<std::int64_t>> per_image_class_counts(const AnnotationSet& set);

}  // namespace pedrisk
