#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <unordered_map>
#include <vector>

#include "weathersense/core_types.hpp"
#include "weathersense/radar_dsp.hpp"  // distance-bin convention

namespace weathersense {

// ---------------------------------------------------------------------------
// Point clouds
// ---------------------------------------------------------------------------

struct LidarPoint {
  double x = 0.0, y = 0.0, z = 0.0;
  double intensity = 0.0;

  Vec3 pos() const { return {x, y, z}; }
  double range() const { return std::sqrt(x * x + y * y + z * z); }
};

struct PointCloud {
  std::vector<LidarPoint> points;
  std::uint64_t frame_index = 0;
  std::optional<BoundingBox3D> vehicle_box;
};

// Rectangular region of interest on the ground plane.
struct Roi {
  double x_min = 0.0, x_max = 20.0;
  double y_min = -2.0, y_max = 2.0;

  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
};

// Points within +-0.1 m of the ground plane count as ground detections.
inline constexpr double kGroundBand = 0.1;  // m

// ---------------------------------------------------------------------------
// Degradation metrics
// ---------------------------------------------------------------------------

// Population variance of the distances between the box origin (the corner
// nearest the sensor) and each in-box point. Proxy for how much of the
// object's structure the sensor still resolves. Empty box is reported as
// "no value", which is not the same as zero.
inline std::optional<double> dispersion(const PointCloud& cloud, const BoundingBox3D& box) {
  if (!box.valid()) throw DomainError("dispersion: invalid bounding box");
  const Vec3 origin = box.nearest_corner();
  std::vector<double> dists;
  for (const auto& p : cloud.points) {
    if (box.contains(p.pos())) dists.push_back((p.pos() - origin).norm());
  }
  if (dists.empty()) return std::nullopt;
  double mean = 0.0;
  for (double d : dists) mean += d;
  mean /= static_cast<double>(dists.size());
  double var = 0.0;
  for (double d : dists) var += (d - mean) * (d - mean);
  var /= static_cast<double>(dists.size());
  return var;
}

struct MinMaxDistance {
  double min = 0.0;
  double max = 0.0;
};

inline std::optional<MinMaxDistance> min_max_distance(const PointCloud& cloud) {
  if (cloud.points.empty()) return std::nullopt;
  MinMaxDistance mm{1e300, 0.0};
  for (const auto& p : cloud.points) {
    const double r = p.range();
    mm.min = std::min(mm.min, r);
    mm.max = std::max(mm.max, r);
  }
  return mm;
}

inline int ground_count(const PointCloud& cloud, const Roi& roi) {
  int count = 0;
  for (const auto& p : cloud.points) {
    if (std::fabs(p.z) <= kGroundBand && roi.contains(p.x, p.y)) ++count;
  }
  return count;
}

inline std::optional<double> mean_intensity(const PointCloud& cloud, const Roi& roi) {
  double sum = 0.0;
  int n = 0;
  for (const auto& p : cloud.points) {
    if (roi.contains(p.x, p.y)) {
      sum += p.intensity;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

// ---------------------------------------------------------------------------
// Feature vectors
// ---------------------------------------------------------------------------

struct LidarFeatureVector {
  double dispersion = 0.0;  // m^2, 0 when no vehicle box or empty box
  double density_mean = 0.0;
  double density_std = 0.0;
  double intensity_mean = 0.0;
  double intensity_std = 0.0;
  double min_distance = 0.0;        // m
  double max_distance = 0.0;        // m
  double delta_min_distance = 0.0;  // m, vs previous frame
  double delta_max_distance = 0.0;  // m
  double ground_count = 0.0;
  int distance_bin = 0;
  bool valid = false;
};

// Per-bin feature extraction over the range annuli [0,2), [2,4), ... [18,20).
// Neighbor densities use a 1 m sphere against the whole cloud; deltas are
// frame-over-frame and zero when there is no previous frame.
inline std::vector<LidarFeatureVector> lidar_features(
    const PointCloud& cloud, const PointCloud* prev_cloud = nullptr,
    const std::optional<BoundingBox3D>& vehicle_box = std::nullopt) {
  std::vector<LidarFeatureVector> out(kNumDistanceBins);
  for (int b = 0; b < kNumDistanceBins; ++b) out[b].distance_bin = b;

  std::vector<std::vector<std::size_t>> by_bin(kNumDistanceBins);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const int b = distance_bin_of(cloud.points[i].range());
    if (b >= 0) by_bin[b].push_back(i);
  }

  // Neighbor counts on a coarse hash grid; 1 m radius.
  auto cell_key = [](double v) { return static_cast<int>(std::floor(v)); };
  std::vector<double> neighbors(cloud.points.size(), 0.0);
  {
    std::unordered_map<std::int64_t, std::vector<std::size_t>> grid;
    auto key = [&](const LidarPoint& p) {
      const std::int64_t kx = cell_key(p.x) + 4096;
      const std::int64_t ky = cell_key(p.y) + 4096;
      const std::int64_t kz = cell_key(p.z) + 4096;
      return (kx << 26) | (ky << 13) | kz;
    };
    for (std::size_t i = 0; i < cloud.points.size(); ++i) grid[key(cloud.points[i])].push_back(i);
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      const LidarPoint& p = cloud.points[i];
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dz = -1; dz <= 1; ++dz) {
            const std::int64_t kx = cell_key(p.x) + 4096 + dx;
            const std::int64_t ky = cell_key(p.y) + 4096 + dy;
            const std::int64_t kz = cell_key(p.z) + 4096 + dz;
            const auto it = grid.find((kx << 26) | (ky << 13) | kz);
            if (it == grid.end()) continue;
            for (std::size_t j : it->second) {
              if (j == i) continue;
              const double ddx = p.x - cloud.points[j].x;
              const double ddy = p.y - cloud.points[j].y;
              const double ddz = p.z - cloud.points[j].z;
              if (ddx * ddx + ddy * ddy + ddz * ddz <= 1.0) neighbors[i] += 1.0;
            }
          }
        }
      }
    }
  }

  const Roi roi;
  const auto mm_now = min_max_distance(cloud);
  const auto mm_prev = prev_cloud ? min_max_distance(*prev_cloud)
                                  : std::optional<MinMaxDistance>{};
  const std::optional<double> disp =
      vehicle_box ? dispersion(cloud, *vehicle_box) : std::optional<double>{};

  auto mean_std = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    return std::pair<double, double>{mean, std::sqrt(var)};
  };

  for (int b = 0; b < kNumDistanceBins; ++b) {
    LidarFeatureVector& f = out[b];
    if (by_bin[b].empty()) continue;
    f.valid = true;
    std::vector<double> dens, inten;
    int ground = 0;
    for (std::size_t i : by_bin[b]) {
      const LidarPoint& p = cloud.points[i];
      dens.push_back(neighbors[i]);
      inten.push_back(p.intensity);
      if (std::fabs(p.z) <= kGroundBand && roi.contains(p.x, p.y)) ++ground;
    }
    auto [dm, ds] = mean_std(dens);
    f.density_mean = dm;
    f.density_std = ds;
    auto [im, is] = mean_std(inten);
    f.intensity_mean = im;
    f.intensity_std = is;
    f.ground_count = ground;
    if (mm_now) {
      f.min_distance = mm_now->min;
      f.max_distance = mm_now->max;
      if (mm_prev) {
        f.delta_min_distance = mm_now->min - mm_prev->min;
        f.delta_max_distance = mm_now->max - mm_prev->max;
      }
    }
    // Dispersion is attributed to the bin that holds the vehicle.
    if (disp && vehicle_box) {
      const double d = std::hypot(vehicle_box->center.x, vehicle_box->center.y);
      if (distance_bin_of(d) == b) f.dispersion = *disp;
    }
  }
  return out;
}

}  // namespace weathersense
