// SPDX-License-Identifier: Apache-2.0
#include <random>
#include <set>

#include "doctest.h"
#include "pedrisk/dataset.hpp"
#include "pedrisk/error.hpp"

using namespace pedrisk;

namespace {

AnnotationSet tiny_set() {
  AnnotationSet s;
  s.categories = CategoryRegistry({{0, "tree"}, {1, "car"}});
  s.images = {{"a", {0, 0}, 100, 100}, {"b", {0, 0}, 100, 100}};
  s.annotations = {{"1", "a", 0, {0, 0, 10, 10}},
                   {"2", "a", 1, {10, 10, 50, 50}},
                   {"3", "b", 1, {0, 0, 100, 100}}};
  return s;
}

// Long-tailed random dataset with labels correlated to box counts.
std::pair<AnnotationSet, CollisionLabels> random_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  AnnotationSet s;
  s.categories = CategoryRegistry::defaults(8);
  CollisionLabels labels;
  std::geometric_distribution<int> nbox(0.05);
  std::discrete_distribution<int> cls({40, 20, 12, 8, 6, 4, 2, 1});
  std::poisson_distribution<int> noise(3);
  int ann = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = "im" + std::to_string(i);
    s.images.push_back({id, {0, 0}, 1000, 500});
    const int nb = 2 + nbox(rng);
    for (int b = 0; b < nb; ++b) s.annotations.push_back({"a" + std::to_string(ann++), id, cls(rng), {1, 1, 10, 10}});
    labels[id] = nb / 8 + noise(rng);
  }
  return {s, labels};
}

}  // namespace

TEST_CASE("category registry") {
  CHECK_THROWS_AS(CategoryRegistry({{1, "x"}}), ValidationError);
  CHECK_THROWS_AS(CategoryRegistry({{0, "x"}, {1, "x"}}), ValidationError);
  const auto d = CategoryRegistry::defaults();
  CHECK(d.size() == 27);
  std::set<std::string> names;
  for (const auto& c : d.categories()) names.insert(c.name);
  CHECK(names.size() == 27);
  CHECK(d.contains(26));
  CHECK_FALSE(d.contains(27));
}

TEST_CASE("relative area and size bins") {
  const auto s = tiny_set();
  CHECK(relative_area(s.annotations[0], s.images[0]) == doctest::Approx(0.01));
  CHECK(relative_area(s.annotations[2], s.images[1]) == 1.0);
  const SizeBinEdges e{0.01, 0.2};
  CHECK(size_bin(0.009, e) == SizeBin::small);
  CHECK(size_bin(0.01, e) == SizeBin::medium);
  CHECK(size_bin(0.2, e) == SizeBin::medium);
  CHECK(size_bin(0.21, e) == SizeBin::large);
  BoxAnnotation out{"x", "a", 0, {95, 0, 10, 10}};
  CHECK_THROWS_AS(relative_area(out, s.images[0]), ValidationError);
  BoxAnnotation flat{"y", "a", 0, {0, 0, 0, 10}};
  CHECK_THROWS_AS(relative_area(flat, s.images[0]), ValidationError);
}

TEST_CASE("annotation validation names the record") {
  auto s = tiny_set();
  CHECK_NOTHROW(validate_annotations(s));
  s.annotations.push_back({"9", "zzz", 0, {0, 0, 1, 1}});
  try {
    validate_annotations(s);
    FAIL("expected a throw");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("zzz") != std::string::npos);
  }
  s = tiny_set();
  s.annotations.push_back({"1", "a", 0, {0, 0, 1, 1}});
  CHECK_THROWS_AS(validate_annotations(s), ValidationError);
  s = tiny_set();
  s.annotations[0].category_id = 5;
  CHECK_THROWS_AS(validate_annotations(s), ValidationError);
}

TEST_CASE("dataset stats on a hand-built set") {
  const auto s = tiny_set();
  const CollisionLabels labels = {{"a", 3}, {"b", 0}};
  const auto r = dataset_stats(s, labels);
  CHECK(r.num_images == 2);
  CHECK(r.total_boxes == 3);
  CHECK(r.boxes_per_image.mean == 1.5);
  CHECK(r.boxes_per_image.std == 0.5);  // population
  CHECK(r.boxes_per_image.min == 1);
  CHECK(r.boxes_per_image.max == 2);
  CHECK(r.per_class_counts.at("car") == 2);
  CHECK(r.per_class_counts.at("tree") == 1);
  CHECK(r.collisions.mean == 1.5);
  CHECK(r.collisions.max == 3);
  CHECK(r.labelled_images == 2);
  CHECK(r.boxes_per_image_hist.total() == 2);
  CHECK(r.relative_area_hist.total() == 3);
  CHECK(r.relative_area_hist.log_scale);
  CHECK(r.collisions_hist.total() == 2);
  CHECK(r.relative_area_mean == doctest::Approx((0.01 + 0.25 + 1.0) / 3));
  CHECK_THROWS_AS(dataset_stats(s, CollisionLabels{{"nope", 1}}), ValidationError);
}

TEST_CASE("stratified split: sizes, determinism, balance") {
  const auto [s, labels] = random_dataset(1001, 9);
  const auto a = stratified_split(s, labels, 2, 7);
  const auto b = stratified_split(s, labels, 2, 7);
  CHECK(a == b);
  const auto bal = split_balance(s, labels, a, 2);
  REQUIRE(bal.fold_sizes.size() == 2);
  CHECK(bal.fold_sizes[0] + bal.fold_sizes[1] == 1001);
  CHECK(std::max(bal.fold_sizes[0], bal.fold_sizes[1]) - std::min(bal.fold_sizes[0], bal.fold_sizes[1]) <= 1);
  CHECK(bal.max_class_imbalance <= 0.05);
  CHECK(bal.collision_mean_imbalance <= 0.10);

  const auto k5 = stratified_split(s, labels, 5, 1);
  const auto bal5 = split_balance(s, labels, k5, 5);
  for (const auto n : bal5.fold_sizes) CHECK((n == 200 || n == 201));
  for (const auto& [id, f] : k5) CHECK(f.starts_with("fold"));
}

TEST_CASE("stratified split errors") {
  const auto [s, labels] = random_dataset(10, 1);
  CHECK_THROWS_AS(stratified_split(s, labels, 1, 0), ValidationError);
  CHECK_THROWS_AS(stratified_split(s, labels, 11, 0), ValidationError);
  CollisionLabels partial = labels;
  partial.erase(partial.begin());
  CHECK_THROWS_AS(stratified_split(s, partial, 2, 0), ValidationError);
}

TEST_CASE("per-image class counts") {
  const auto c = per_image_class_counts(tiny_set());
  REQUIRE(c.size() == 2);
  CHECK(c[0] == std::vector<std::int64_t>{1, 1});
  CHECK(c[1] == std::vector<std::int64_t>{0, 1});
}
