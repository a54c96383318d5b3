// SPDX-License-Identifier: Apache-2.0
#include "pedrisk/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pedrisk/error.hpp"

namespace pedrisk {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
// Half the circumference: every pair of points is closer than this.
constexpr double kMaxDistanceM = std::numbers::pi * kEarthRadiusM;

bool better(const Neighbor& cand, const Neighbor& best, const std::vector<CrossingPoint>& pts) {
  if (cand.distance_m != best.distance_m) return cand.distance_m < best.distance_m;
  return pts[cand.index].crossing_id < pts[best.index].crossing_id;
}

bool better(double dist, const std::string& id, const Neighbor& best,
            std::span<const CrossingPoint> pts) {
  if (dist != best.distance_m) return dist < best.distance_m;
  return id < pts[best.index].crossing_id;
}

MatchOutcome finish(std::vector<MatchResult> matches, std::vector<std::string> rejected,
                    const MatchOptions& opts) {
  std::sort(matches.begin(), matches.end(),
            [](const MatchResult& a, const MatchResult& b) { return a.image_id < b.image_id; });
  std::sort(rejected.begin(), rejected.end());
  MatchOutcome out;
  if (!matches.empty()) {
    const auto close = std::count_if(matches.begin(), matches.end(), [&](const MatchResult& m) {
      return m.distance_m <= opts.prefer_radius_m;
    });
    out.coverage = static_cast<double>(close) / static_cast<double>(matches.size());
  }
  out.matches = std::move(matches);
  out.rejected = std::move(rejected);
  return out;
}

void check_options(const MatchOptions& opts, std::span<const CrossingPoint> points) {
  if (points.empty()) throw ValidationError("match_images: crossing point set is empty");
  if (!(opts.prefer_radius_m >= 0.0) || !(opts.max_radius_m > 0.0)) {
    throw ValidationError("match_images: radii must be positive");
  }
}

}  // namespace

void validate_point(const GeoPoint& p, const std::string& context) {
  if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || p.lat < -90.0 || p.lat > 90.0 ||
      p.lon < -180.0 || p.lon > 180.0) {
    throw ValidationError(context + ": coordinates out of range (" + std::to_string(p.lat) + ", " +
                          std::to_string(p.lon) + ")");
  }
}

double geodesic_distance(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double sdphi = std::sin((phi2 - phi1) * 0.5);
  const double sdlam = std::sin((b.lon - a.lon) * kDegToRad * 0.5);
  // Symmetric in (a, b): both squared sines are even, the cosine product commutes.
  const double h = sdphi * sdphi + std::cos(phi1) * std::cos(phi2) * sdlam * sdlam;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

SpatialIndex::SpatialIndex(std::vector<CrossingPoint> points, double cell_size_m)
    : points_(std::move(points)), cell_size_m_(cell_size_m) {
  if (!(cell_size_m > 0.0)) throw ValidationError("build_index: cell_size must be positive");
  double max_abs_lat = 0.0;
  for (const auto& p : points_) {
    validate_point(p.location, "crossing " + p.crossing_id);
    max_abs_lat = std::max(max_abs_lat, std::fabs(p.location.lat));
  }
  lat_cell_deg_ = cell_size_m / kEarthRadiusM * kRadToDeg;
  lat_cells_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(180.0 / lat_cell_deg_)));
  // Longitude cells roughly square at the most poleward latitude in the data.
  const double stretch = std::max(std::cos(std::min(max_abs_lat, 89.0) * kDegToRad), 1e-3);
  const double lon_guess = lat_cell_deg_ / stretch;
  lon_cells_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(360.0 / lon_guess)));
  lon_cell_deg_ = 360.0 / static_cast<double>(lon_cells_);

  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& loc = points_[i].location;
    cells_[cell_key(lat_index(loc.lat), lon_index(loc.lon))].push_back(
        static_cast<std::uint32_t>(i));
  }
}

std::int64_t SpatialIndex::lat_index(double lat) const {
  const auto idx = static_cast<std::int64_t>(std::floor((lat + 90.0) / lat_cell_deg_));
  return std::clamp<std::int64_t>(idx, 0, lat_cells_ - 1);
}

std::int64_t SpatialIndex::lon_index(double lon) const {
  auto idx = static_cast<std::int64_t>(std::floor((lon + 180.0) / lon_cell_deg_));
  idx %= lon_cells_;
  if (idx < 0) idx += lon_cells_;
  return idx;
}

void SpatialIndex::scan_cell(std::int64_t key, const GeoPoint& q, double radius_m,
                             std::optional<Neighbor>& best) const {
  const auto it = cells_.find(key);
  if (it == cells_.end()) return;
  for (const std::uint32_t idx : it->second) {
    const Neighbor cand{idx, geodesic_distance(q, points_[idx].location)};
    if (cand.distance_m > radius_m) continue;
    if (!best || better(cand, *best, points_)) best = cand;
  }
}

std::optional<Neighbor> SpatialIndex::nearest_within(const GeoPoint& q, double radius_m) const {
  std::optional<Neighbor> best;
  if (points_.empty()) return best;

  const double dlat_deg = radius_m / kEarthRadiusM * kRadToDeg;
  const double lat_lo = q.lat - dlat_deg;
  const double lat_hi = q.lat + dlat_deg;
  const std::int64_t i0 = lat_index(std::max(-90.0, lat_lo));
  const std::int64_t i1 = lat_index(std::min(90.0, lat_hi));

  // Longitude half-width of the search: from the haversine bound
  // sin^2(dlam/2) <= sin^2(r/2R) / (cos(phi_q) cos(phi_far)).
  bool all_lon = lat_lo <= -90.0 || lat_hi >= 90.0 || radius_m >= kMaxDistanceM;
  double dlon_deg = 180.0;
  if (!all_lon) {
    const double far_lat = std::min(89.999999, std::fabs(q.lat) + dlat_deg);
    const double denom = std::cos(q.lat * kDegToRad) * std::cos(far_lat * kDegToRad);
    const double s = std::sin(radius_m / (2.0 * kEarthRadiusM));
    const double ratio = denom > 0.0 ? s / std::sqrt(denom) : 2.0;
    if (ratio >= 1.0) {
      all_lon = true;
    } else {
      // Pad by a hair so rounding in the trig never drops an edge cell.
      dlon_deg = 2.0 * std::asin(ratio) * kRadToDeg * (1.0 + 1e-9) + 1e-12;
    }
  }

  for (std::int64_t i = i0; i <= i1; ++i) {
    if (all_lon || 2.0 * dlon_deg + 2.0 * lon_cell_deg_ >= 360.0) {
      for (std::int64_t j = 0; j < lon_cells_; ++j) scan_cell(cell_key(i, j), q, radius_m, best);
      continue;
    }
    const auto j0 = static_cast<std::int64_t>(std::floor((q.lon - dlon_deg + 180.0) / lon_cell_deg_));
    const auto j1 = static_cast<std::int64_t>(std::floor((q.lon + dlon_deg + 180.0) / lon_cell_deg_));
    for (std::int64_t j = j0; j <= j1; ++j) {
      std::int64_t jj = j % lon_cells_;
      if (jj < 0) jj += lon_cells_;
      scan_cell(cell_key(i, jj), q, radius_m, best);
    }
  }
  return best;
}

std::optional<Neighbor> SpatialIndex::nearest(const GeoPoint& q) const {
  if (points_.empty()) return std::nullopt;
  double radius = cell_size_m_;
  for (;;) {
    if (auto hit = nearest_within(q, radius)) return hit;
    if (radius >= kMaxDistanceM) return std::nullopt;
    radius = std::min(radius * 2.0, kMaxDistanceM);
  }
}

SpatialIndex build_index(std::span<const CrossingPoint> points, double cell_size_m) {
  return SpatialIndex(std::vector<CrossingPoint>(points.begin(), points.end()), cell_size_m);
}

MatchOutcome match_images(std::span<const ImageRecord> images,
                          std::span<const CrossingPoint> points, MatchOptions opts) {
  check_options(opts, points);
  const SpatialIndex index = build_index(points, opts.max_radius_m);
  std::vector<MatchResult> matches;
  std::vector<std::string> rejected;
  for (const auto& img : images) {
    validate_point(img.location, "image " + img.image_id);
    const auto hit = index.nearest_within(img.location, opts.max_radius_m);
    if (!hit) {
      rejected.push_back(img.image_id);
      continue;
    }
    const auto& cp = index.points()[hit->index];
    matches.push_back({img.image_id, cp.crossing_id, hit->distance_m, cp.collisions});
  }
  return finish(std::move(matches), std::move(rejected), opts);
}

MatchOutcome match_images_exhaustive(std::span<const ImageRecord> images,
                                     std::span<const CrossingPoint> points, MatchOptions opts) {
  check_options(opts, points);
  std::vector<MatchResult> matches;
  std::vector<std::string> rejected;
  for (const auto& img : images) {
    validate_point(img.location, "image " + img.image_id);
    Neighbor best{0, geodesic_distance(img.location, points[0].location)};
    for (std::size_t i = 1; i < points.size(); ++i) {
      const double d = geodesic_distance(img.location, points[i].location);
      if (better(d, points[i].crossing_id, best, points)) best = {i, d};
    }
    if (best.distance_m > opts.max_radius_m) {
      rejected.push_back(img.image_id);
      continue;
    }
    const auto& cp = points[best.index];
    matches.push_back({img.image_id, cp.crossing_id, best.distance_m, cp.collisions});
  }
  return finish(std::move(matches), std::move(rejected), opts);
}

CoordNormalizer CoordNormalizer::fit(std::span<const GeoPoint> points) {
  CoordNormalizer n;
  if (points.empty()) return n;
  n.lat_min = n.lat_max = points[0].lat;
  n.lon_min = n.lon_max = points[0].lon;
  for (const auto& p : points) {
    n.lat_min = std::min(n.lat_min, p.lat);
    n.lat_max = std::max(n.lat_max, p.lat);
    n.lon_min = std::min(n.lon_min, p.lon);
    n.lon_max = std::max(n.lon_max, p.lon);
  }
  return n;
}

std::array<double, 2> CoordNormalizer::apply(const GeoPoint& p) const {
  auto scale = [](double v, double lo, double hi) {
    if (!(hi > lo)) return 0.5;
    return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
  };
  return {scale(p.lat, lat_min, lat_max), scale(p.lon, lon_min, lon_max)};
}

}  // namespace pedrisk
