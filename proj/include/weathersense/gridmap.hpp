#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "weathersense/io.hpp"
#include "weathersense/radar_dsp.hpp"

namespace weathersense {

// ---------------------------------------------------------------------------
// Disturbance grid maps
// ---------------------------------------------------------------------------

inline constexpr double kGridCellSize = 0.5;  // m

// Per-frame binary maps of the rain-affected regions: a spatial occupancy
// grid over the ROI and a 1-D grid over the velocity axis. Built from the
// nearest range-Doppler cluster, which is where rain returns accumulate.
struct DisturbanceGridMap {
  double x_min = 0.0, x_max = 20.0;
  double y_min = -2.0, y_max = 2.0;
  double cell_size = kGridCellSize;
  int nx = 40, ny = 8;
  std::vector<std::uint8_t> spatial;  // row-major [ix][iy], 1 = disturbed

  std::vector<double> velocity_axis;      // m/s, one per Doppler bin
  std::vector<std::uint8_t> velocity;     // 1 = disturbed
  std::uint64_t source_frame = 0;

  static DisturbanceGridMap make(const RangeDopplerMap& map, const Roi& roi = {},
                                 double cell = kGridCellSize) {
    DisturbanceGridMap g;
    g.x_min = roi.x_min;
    g.x_max = roi.x_max;
    g.y_min = roi.y_min;
    g.y_max = roi.y_max;
    g.cell_size = cell;
    g.nx = static_cast<int>(std::lround((g.x_max - g.x_min) / cell));
    g.ny = static_cast<int>(std::lround((g.y_max - g.y_min) / cell));
    g.spatial.assign(static_cast<std::size_t>(g.nx) * g.ny, 0);
    g.velocity_axis = map.velocity_axis;
    g.velocity.assign(map.velocity_axis.size(), 0);
    return g;
  }

  bool cell_index(double x, double y, int& ix, int& iy) const {
    if (x < x_min || x >= x_max || y < y_min || y >= y_max) return false;
    ix = static_cast<int>((x - x_min) / cell_size);
    iy = static_cast<int>((y - y_min) / cell_size);
    return ix >= 0 && ix < nx && iy >= 0 && iy < ny;
  }

  bool spatial_at(int ix, int iy) const {
    return spatial[static_cast<std::size_t>(ix) * ny + iy] != 0;
  }

  int disturbed_spatial_count() const {
    int n = 0;
    for (auto v : spatial) n += v != 0;
    return n;
  }

  int disturbed_velocity_count() const {
    int n = 0;
    for (auto v : velocity) n += v != 0;
    return n;
  }

  // Far edge of the disturbed spatial region, in meters.
  double disturbed_extent() const {
    double extent = 0.0;
    for (int ix = 0; ix < nx; ++ix) {
      for (int iy = 0; iy < ny; ++iy) {
        if (spatial_at(ix, iy)) extent = std::max(extent, x_min + (ix + 1) * cell_size);
      }
    }
    return extent;
  }

  // Width of the disturbed velocity interval, in m/s.
  double disturbed_velocity_span() const {
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < velocity.size(); ++i) {
      if (velocity[i]) {
        lo = std::min(lo, velocity_axis[i]);
        hi = std::max(hi, velocity_axis[i]);
      }
    }
    return hi >= lo ? hi - lo : 0.0;
  }
};

// Velocity bins of nearest-cluster cells moving faster than twice the
// Doppler resolution are disturbed; spatial cells holding the detections of
// those cells are disturbed. The static column stays clear, and so do
// vehicle detections separated by velocity (they live in another cluster).
// A velocity bin only counts as disturbed when at least one of its
// detections lands inside the grid, which ties the two maps together.
inline DisturbanceGridMap build_grid_maps(const RDCluster* nearest_cluster,
                                          const std::vector<Detection>& detections,
                                          const RangeDopplerMap& map, const Roi& roi = {},
                                          std::uint64_t source_frame = 0) {
  DisturbanceGridMap grid = DisturbanceGridMap::make(map, roi);
  grid.source_frame = source_frame;
  if (nearest_cluster == nullptr || nearest_cluster->cell_indices.empty()) return grid;

  const double gate = 2.0 * map.velocity_resolution();
  const double rres = map.range_resolution();
  const double vres = map.velocity_resolution();

  for (const auto& cell : nearest_cluster->cell_indices) {
    const double v = map.velocity_axis[cell.velocity_bin];
    if (std::fabs(v) <= gate) continue;  // static band excluded
    const double r = map.range_axis[cell.range_bin];
    bool placed = false;
    for (const auto& det : detections) {
      if (std::fabs(det.range - r) > rres / 2 ||
          std::fabs(det.radial_velocity - v) > vres / 2) {
        continue;
      }
      int ix, iy;
      if (grid.cell_index(det.position.x, det.position.y, ix, iy)) {
        grid.spatial[static_cast<std::size_t>(ix) * grid.ny + iy] = 1;
        placed = true;
      }
    }
    if (placed) grid.velocity[cell.velocity_bin] = 1;
  }
  return grid;
}

// True when a tracked object can no longer be separated from the rain: its
// velocity sits inside the cluster's disturbed velocity span and its range
// inside the cluster's range span.
inline bool cluster_shape_flag(const RDCluster* nearest_cluster, const RangeDopplerMap& map,
                               double object_velocity, double object_range) {
  if (nearest_cluster == nullptr || nearest_cluster->cell_indices.empty()) return false;
  const double gate = 2.0 * map.velocity_resolution();
  double v_lo = 1e300, v_hi = -1e300;
  for (const auto& cell : nearest_cluster->cell_indices) {
    const double v = map.velocity_axis[cell.velocity_bin];
    if (std::fabs(v) <= gate) continue;
    v_lo = std::min(v_lo, v);
    v_hi = std::max(v_hi, v);
  }
  if (v_hi < v_lo) return false;  // no disturbed velocities at all
  const bool velocity_inside = object_velocity >= v_lo && object_velocity <= v_hi;
  const bool range_inside = object_range >= nearest_cluster->min_range &&
                            object_range <= nearest_cluster->max_range;
  return velocity_inside && range_inside;
}

// ---------------------------------------------------------------------------
// Serialization: PGM raster (0 clear, 255 disturbed) + JSON metadata
// ---------------------------------------------------------------------------

inline void write_grid_map(const std::filesystem::path& base_path,
                           const DisturbanceGridMap& grid) {
  std::vector<std::uint8_t> img(grid.spatial.size());
  // Raster rows are y cells, columns x cells.
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      img[static_cast<std::size_t>(iy) * grid.nx + ix] = grid.spatial_at(ix, iy) ? 255 : 0;
    }
  }
  write_pgm(base_path.string() + ".pgm", img, grid.nx, grid.ny);

  nlohmann::json j{{"x_min", grid.x_min},
                   {"x_max", grid.x_max},
                   {"y_min", grid.y_min},
                   {"y_max", grid.y_max},
                   {"cell_size", grid.cell_size},
                   {"nx", grid.nx},
                   {"ny", grid.ny},
                   {"source_frame", grid.source_frame},
                   {"velocity_axis", grid.velocity_axis}};
  nlohmann::json disturbed = nlohmann::json::array();
  for (std::size_t i = 0; i < grid.velocity.size(); ++i) {
    if (grid.velocity[i]) disturbed.push_back(i);
  }
  j["disturbed_velocity_bins"] = disturbed;
  nlohmann::json spatial = nlohmann::json::array();
  for (int ix = 0; ix < grid.nx; ++ix) {
    for (int iy = 0; iy < grid.ny; ++iy) {
      if (grid.spatial_at(ix, iy)) spatial.push_back({ix, iy});
    }
  }
  j["disturbed_spatial_cells"] = spatial;
  write_text_file(base_path.string() + ".json", j.dump(2) + "\n");
}

inline DisturbanceGridMap read_grid_map(const std::filesystem::path& base_path) {
  const auto j = nlohmann::json::parse(read_text_file(base_path.string() + ".json"));
  DisturbanceGridMap grid;
  grid.x_min = j.at("x_min").get<double>();
  grid.x_max = j.at("x_max").get<double>();
  grid.y_min = j.at("y_min").get<double>();
  grid.y_max = j.at("y_max").get<double>();
  grid.cell_size = j.at("cell_size").get<double>();
  grid.nx = j.at("nx").get<int>();
  grid.ny = j.at("ny").get<int>();
  grid.source_frame = j.at("source_frame").get<std::uint64_t>();
  j.at("velocity_axis").get_to(grid.velocity_axis);
  grid.spatial.assign(static_cast<std::size_t>(grid.nx) * grid.ny, 0);
  grid.velocity.assign(grid.velocity_axis.size(), 0);
  for (const auto& b : j.at("disturbed_velocity_bins")) {
    grid.velocity[b.get<std::size_t>()] = 1;
  }
  for (const auto& c : j.at("disturbed_spatial_cells")) {
    grid.spatial[static_cast<std::size_t>(c[0].get<int>()) * grid.ny + c[1].get<int>()] = 1;
  }
  return grid;
}

}  // namespace weathersense
