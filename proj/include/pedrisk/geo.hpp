// SPDX-License-Identifier: Apache-2.0
#pragma once

// Geodesic nearest-neighbour matching of street images to crossing points.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace pedrisk {

inline constexpr double kEarthRadiusM = 6371000.0;

struct GeoPoint {
  double lat = 0.0;  // degrees, WGS84
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct CrossingPoint {
  std::string crossing_id;
  GeoPoint location;
  std::int64_t collisions = 0;
};

struct ImageRecord {
  std::string image_id;
  GeoPoint location;
  int width = 0;
  int height = 0;
};

struct MatchResult {
  std::string image_id;
  std::string crossing_id;
  double distance_m = 0.0;
  std::int64_t collisions = 0;
};

// Throws ValidationError when lat/lon are outside their ranges or non-finite.
void validate_point(const GeoPoint& p, const std::string& context);

// Haversine great-circle distance on a sphere of radius kEarthRadiusM.
double geodesic_distance(const GeoPoint& a, const GeoPoint& b);

struct Neighbor {
  std::size_t index = 0;  // into SpatialIndex::points()
  double distance_m = 0.0;
};

// Uniform latitude/longitude grid. A radius query scans exactly the cells
// that can hold a point within the radius, so its answer equals exhaustive
// search. Ties on distance go to the lexicographically smallest crossing_id.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  SpatialIndex(std::vector<CrossingPoint> points, double cell_size_m);

  bool empty() const { return points_.empty(); }
  std::size_t size() const { return points_.size(); }
  const std::vector<CrossingPoint>& points() const { return points_; }
  double cell_size_m() const { return cell_size_m_; }

  // Nearest point over the whole index; nullopt only when the index is empty.
  std::optional<Neighbor> nearest(const GeoPoint& q) const;

  // Nearest point with distance <= radius_m, or nullopt.
  std::optional<Neighbor> nearest_within(const GeoPoint& q, double radius_m) const;

 private:
  std::int64_t cell_key(std::int64_t lat_idx, std::int64_t lon_idx) const {
    return lat_idx * lon_cells_ + lon_idx;
  }
  std::int64_t lat_index(double lat) const;
  std::int64_t lon_index(double lon) const;
  void scan_cell(std::int64_t key, const GeoPoint& q, double radius_m,
                 std::optional<Neighbor>& best) const;

  std::vector<CrossingPoint> points_;
  double cell_size_m_ = 0.0;
  double lat_cell_deg_ = 0.0;
  double lon_cell_deg_ = 0.0;
  std::int64_t lat_cells_ = 0;
  std::int64_t lon_cells_ = 0;
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> cells_;
};

// Throws ValidationError when cell_size_m <= 0 or a point is invalid.
SpatialIndex build_index(std::span<const CrossingPoint> points, double cell_size_m);

struct MatchOptions {
  double prefer_radius_m = 30.0;
  double max_radius_m = 100.0;
};

struct MatchOutcome {
  std::vector<MatchResult> matches;     // sorted by image_id
  std::vector<std::string> rejected;    // sorted
  std::optional<double> coverage;       // share of matches within prefer_radius_m
};

// Grid-indexed matcher. Throws ValidationError on an empty crossing set.
MatchOutcome match_images(std::span<const ImageRecord> images,
                          std::span<const CrossingPoint> points, MatchOptions opts = {});

// Quadratic reference matcher with identical semantics.
MatchOutcome match_images_exhaustive(std::span<const ImageRecord> images,
                                     std::span<const CrossingPoint> points,
                                     MatchOptions opts = {});

// Min-max normalisation of coordinates to [0, 1]^2 over a bounding rectangle.
struct CoordNormalizer {
  double lat_min = 0.0;
  double lat_max = 1.0;
  double lon_min = 0.0;
  double lon_max = 1.0;

  static CoordNormalizer fit(std::span<const GeoPoint> points);
  // Values outside the rectangle are clamped.
  std::array<double, 2> apply(const GeoPoint& p) const;
};

}  // namespace pedrisk
