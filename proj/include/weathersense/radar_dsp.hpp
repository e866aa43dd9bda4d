#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "weathersense/core_types.hpp"
#include "weathersense/fft.hpp"

namespace weathersense {

// ---------------------------------------------------------------------------
// Raw data cube
// ---------------------------------------------------------------------------

// Complex baseband samples ordered [channel][chirp][fast-time].
struct RadarDataCube {
  RadarConfig config;
  std::vector<cplx> samples;

  std::size_t index(int channel, int chirp, int fast) const {
    return (static_cast<std::size_t>(channel) * config.num_chirps + chirp) *
               config.samples_per_chirp() +
           fast;
  }

  cplx& at(int channel, int chirp, int fast) { return samples[index(channel, chirp, fast)]; }
  const cplx& at(int channel, int chirp, int fast) const {
    return samples[index(channel, chirp, fast)];
  }

  bool dims_valid() const {
    return samples.size() == static_cast<std::size_t>(config.num_channels) *
                                 config.num_chirps * config.samples_per_chirp();
  }

  double energy() const {
    double e = 0.0;
    for (const auto& s : samples) e += std::norm(s);
    return e;
  }

  static RadarDataCube zeros(const RadarConfig& cfg) {
    RadarDataCube cube;
    cube.config = cfg;
    cube.samples.assign(static_cast<std::size_t>(cfg.num_channels) * cfg.num_chirps *
                            cfg.samples_per_chirp(),
                        cplx{0.0, 0.0});
    return cube;
  }
};

enum class WindowKind { Rect, Hann };

// ---------------------------------------------------------------------------
// Range-Doppler map
// ---------------------------------------------------------------------------

// Per-cell linear power over (range bin, velocity bin), noncoherently summed
// across channels. The velocity axis is FFT-shifted so bin N/2 is 0 m/s.
struct RangeDopplerMap {
  int num_range_bins = 0;
  int num_velocity_bins = 0;
  std::vector<double> cells;        // row-major [range][velocity]
  std::vector<double> range_axis;   // m
  std::vector<double> velocity_axis;  // m/s

  double& at(int r, int v) { return cells[static_cast<std::size_t>(r) * num_velocity_bins + v]; }
  double at(int r, int v) const {
    return cells[static_cast<std::size_t>(r) * num_velocity_bins + v];
  }

  double range_resolution() const {
    return num_range_bins > 1 ? range_axis[1] - range_axis[0] : 0.0;
  }
  double velocity_resolution() const {
    return num_velocity_bins > 1 ? velocity_axis[1] - velocity_axis[0] : 0.0;
  }

  double total_power() const {
    double p = 0.0;
    for (double c : cells) p += c;
    return p;
  }
};

// Per-channel complex range-Doppler spectra, axis-aligned with the power map.
// Needed to form the array snapshot for angular estimation.
struct ChannelSpectra {
  int num_channels = 0;
  int num_range_bins = 0;
  int num_velocity_bins = 0;
  std::vector<cplx> data;  // [channel][range][velocity]

  const cplx& at(int c, int r, int v) const {
    return data[(static_cast<std::size_t>(c) * num_range_bins + r) * num_velocity_bins + v];
  }
  cplx& at(int c, int r, int v) {
    return data[(static_cast<std::size_t>(c) * num_range_bins + r) * num_velocity_bins + v];
  }

  std::vector<cplx> snapshot(int r, int v) const {
    std::vector<cplx> s(num_channels);
    for (int c = 0; c < num_channels; ++c) s[c] = at(c, r, v);
    return s;
  }
};

inline std::vector<double> make_window(WindowKind kind, int n) {
  std::vector<double> w(n, 1.0);
  if (kind == WindowKind::Hann && n > 1) {
    for (int i = 0; i < n; ++i) {
      w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / (n - 1)));
    }
  }
  return w;
}

// Windowed per-channel 2D FFT over (fast-time, chirps). The fast-time
// spectrum is truncated to positive beat frequencies; the Doppler axis is
// shifted so the middle bin is 0 m/s. Non-power-of-two dims are zero-padded
// to the next power of two, which the returned axes reflect.
inline ChannelSpectra range_doppler_spectra(const RadarDataCube& cube, WindowKind window,
                                            RangeDopplerMap* map_out = nullptr) {
  if (!cube.dims_valid()) throw DomainError("range_doppler_spectra: cube dims mismatch config");
  const RadarConfig& cfg = cube.config;
  const int n_fast = cfg.samples_per_chirp();
  const int n_chirp = cfg.num_chirps;
  const int n_ch = cfg.num_channels;
  const std::size_t n_fft = next_power_of_two(n_fast);
  const std::size_t m_fft = next_power_of_two(n_chirp);
  const int n_range = static_cast<int>(n_fft / 2);
  const int n_vel = static_cast<int>(m_fft);

  const std::vector<double> w_fast = make_window(window, n_fast);
  const std::vector<double> w_chirp = make_window(window, n_chirp);

  ChannelSpectra spectra;
  spectra.num_channels = n_ch;
  spectra.num_range_bins = n_range;
  spectra.num_velocity_bins = n_vel;
  spectra.data.assign(static_cast<std::size_t>(n_ch) * n_range * n_vel, cplx{0.0, 0.0});

  if (map_out) {
    map_out->num_range_bins = n_range;
    map_out->num_velocity_bins = n_vel;
    map_out->cells.assign(static_cast<std::size_t>(n_range) * n_vel, 0.0);
  }

  // Fast-time FFT per chirp, then Doppler FFT per kept range bin.
  std::vector<std::vector<cplx>> range_spectra(n_chirp);
  std::vector<cplx> line(n_fft);
  std::vector<cplx> dopp(m_fft);
  const double norm = 1.0 / (static_cast<double>(n_fft) * static_cast<double>(m_fft));
  for (int c = 0; c < n_ch; ++c) {
    for (int m = 0; m < n_chirp; ++m) {
      std::fill(line.begin(), line.end(), cplx{0.0, 0.0});
      for (int n = 0; n < n_fast; ++n) line[n] = cube.at(c, m, n) * w_fast[n];
      fft_inplace(line);
      range_spectra[m].assign(line.begin(), line.begin() + n_range);
    }
    for (int r = 0; r < n_range; ++r) {
      std::fill(dopp.begin(), dopp.end(), cplx{0.0, 0.0});
      for (int m = 0; m < n_chirp; ++m) dopp[m] = range_spectra[m][r] * w_chirp[m];
      fft_inplace(dopp);
      const auto shifted = fftshift(dopp);
      for (int v = 0; v < n_vel; ++v) {
        spectra.at(c, r, v) = shifted[v];
        if (map_out) map_out->at(r, v) += std::norm(shifted[v]) * norm;
      }
    }
  }

  if (map_out) {
    const double range_per_bin =
        cfg.range_resolution() * static_cast<double>(n_fast) / static_cast<double>(n_fft);
    const double vel_per_bin =
        kSpeedOfLight / (2.0 * cfg.center_frequency * static_cast<double>(m_fft) *
                         cfg.chirp_repetition);
    map_out->range_axis.resize(n_range);
    for (int r = 0; r < n_range; ++r) map_out->range_axis[r] = r * range_per_bin;
    map_out->velocity_axis.resize(n_vel);
    for (int v = 0; v < n_vel; ++v) {
      map_out->velocity_axis[v] = (v - n_vel / 2) * vel_per_bin;
    }
  }
  return spectra;
}

inline RangeDopplerMap range_doppler_map(const RadarDataCube& cube, WindowKind window) {
  RangeDopplerMap map;
  range_doppler_spectra(cube, window, &map);
  return map;
}

// ---------------------------------------------------------------------------
// OS-CFAR
// ---------------------------------------------------------------------------

struct CellIndex {
  int range_bin = 0;
  int velocity_bin = 0;
  bool operator==(const CellIndex&) const = default;
};

// False-alarm probability of an OS-CFAR with `num_train` exponential training
// cells, rank `k` and scale `alpha`:  Pfa = prod_{j=N-k+1..N} j / (j + alpha).
inline double os_cfar_pfa(int num_train, int rank_k, double alpha) {
  double pfa = 1.0;
  for (int j = num_train - rank_k + 1; j <= num_train; ++j) {
    pfa *= static_cast<double>(j) / (static_cast<double>(j) + alpha);
  }
  return pfa;
}

// Solve the product formula for the scale that hits the requested Pfa.
inline double os_cfar_alpha_for_pfa(int num_train, int rank_k, double pfa) {
  if (num_train < 1 || rank_k < 1 || rank_k > num_train) {
    throw DomainError("os_cfar_alpha_for_pfa: invalid (num_train, rank_k)");
  }
  if (!(pfa > 0.0 && pfa < 1.0)) throw DomainError("os_cfar_alpha_for_pfa: pfa outside (0,1)");
  double lo = 0.0, hi = 1.0;
  while (os_cfar_pfa(num_train, rank_k, hi) > pfa) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (os_cfar_pfa(num_train, rank_k, mid) > pfa) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Ordered-statistic CFAR over a cross-shaped training window. Each side of
// the cell under test contributes `train_per_side` cells beyond the guards,
// split between the range and Doppler axes (`range_arm` per range direction,
// the rest along Doppler), so the full training set holds 2 * train_per_side
// cells. A Doppler-heavy split keeps part of the window outside clutter
// ridges that are narrow in velocity. At map borders the window shrinks and
// the rank is rescaled proportionally; a cell with no reachable training
// cells is never flagged.
inline std::vector<CellIndex> os_cfar(const RangeDopplerMap& map, int guard, int train_per_side,
                                      int rank_k, double alpha, int range_arm = -1) {
  if (train_per_side < 2) throw DomainError("os_cfar: train_per_side must be >= 2");
  if (rank_k < 1 || rank_k > 2 * train_per_side) {
    throw DomainError("os_cfar: rank_k outside [1, 2*train_per_side]");
  }
  if (!(alpha > 0.0)) throw DomainError("os_cfar: alpha must be positive");
  const int arm_r = range_arm < 0 ? train_per_side / 2 : range_arm;
  if (arm_r < 0 || arm_r > train_per_side) {
    throw DomainError("os_cfar: range_arm outside [0, train_per_side]");
  }
  const int arm_d = train_per_side - arm_r;

  const int full_count = 2 * train_per_side;
  std::vector<CellIndex> flagged;
  std::vector<double> train;
  train.reserve(full_count);

  for (int r = 0; r < map.num_range_bins; ++r) {
    for (int v = 0; v < map.num_velocity_bins; ++v) {
      train.clear();
      for (int d = guard + 1; d <= guard + arm_r; ++d) {
        if (r - d >= 0) train.push_back(map.at(r - d, v));
        if (r + d < map.num_range_bins) train.push_back(map.at(r + d, v));
      }
      for (int d = guard + 1; d <= guard + arm_d; ++d) {
        if (v - d >= 0) train.push_back(map.at(r, v - d));
        if (v + d < map.num_velocity_bins) train.push_back(map.at(r, v + d));
      }
      if (train.empty()) continue;  // nothing to estimate the clutter level from

      int k = rank_k;
      if (static_cast<int>(train.size()) < full_count) {
        k = static_cast<int>(std::lround(static_cast<double>(rank_k) * train.size() /
                                         static_cast<double>(full_count)));
        k = std::clamp(k, 1, static_cast<int>(train.size()));
      }
      std::nth_element(train.begin(), train.begin() + (k - 1), train.end());
      const double order_stat = train[k - 1];
      if (map.at(r, v) > alpha * order_stat) {
        flagged.push_back({r, v});
      }
    }
  }
  return flagged;
}

// ---------------------------------------------------------------------------
// Burg angular estimation
// ---------------------------------------------------------------------------

struct BurgModel {
  std::vector<cplx> reflection;  // one per stage, |k| <= 1
  std::vector<cplx> ar;          // a_1..a_p of A(z) = 1 + sum a_i z^-i
  double noise_power = 0.0;      // final prediction error power (mean)
};

// Burg recursion minimizing the summed forward/backward prediction error.
inline BurgModel burg_coefficients(const std::vector<cplx>& snapshot, int order) {
  const int n = static_cast<int>(snapshot.size());
  if (order < 1 || order >= n) throw DomainError("burg_coefficients: need 1 <= order < length");

  BurgModel model;
  model.reflection.assign(order, cplx{0.0, 0.0});
  model.ar.assign(order, cplx{0.0, 0.0});

  double energy = 0.0;
  for (const auto& s : snapshot) energy += std::norm(s);
  if (energy == 0.0) return model;  // zero-energy: all-zero model by definition

  std::vector<cplx> ef(snapshot);  // forward errors, valid on [m, n)
  std::vector<cplx> eb(snapshot);  // backward errors, valid on [m-1, n-1)
  std::vector<cplx> a;             // current AR coefficients a_1..a_m
  double err = energy / n;

  for (int m = 1; m <= order; ++m) {
    cplx num{0.0, 0.0};
    double den = 0.0;
    for (int i = m; i < n; ++i) {
      num += ef[i] * std::conj(eb[i - 1]);
      den += std::norm(ef[i]) + std::norm(eb[i - 1]);
    }
    cplx k{0.0, 0.0};
    if (den > 0.0) k = -2.0 * num / den;
    model.reflection[m - 1] = k;

    std::vector<cplx> a_next(m);
    for (int j = 0; j < m - 1; ++j) a_next[j] = a[j] + k * std::conj(a[m - 2 - j]);
    a_next[m - 1] = k;
    a = std::move(a_next);

    err *= std::max(0.0, 1.0 - std::norm(k));

    for (int i = n - 1; i >= m; --i) {
      const cplx ef_old = ef[i];
      ef[i] = ef_old + k * eb[i - 1];
      eb[i] = eb[i - 1] + std::conj(k) * ef_old;
    }
  }

  for (int j = 0; j < order; ++j) model.ar[j] = a[j];
  model.noise_power = err;
  return model;
}

// AR spatial spectrum over azimuth: P(theta) =
// sigma^2 / |1 + sum_i a_i exp(-j 2 pi d sin(theta) i)|^2 for element spacing
// d in wavelengths (0.5 by default).
inline std::vector<double> burg_spectrum(const BurgModel& model,
                                         const std::vector<double>& angle_grid,
                                         double element_spacing = 0.5) {
  std::vector<double> power(angle_grid.size(), 0.0);
  for (std::size_t g = 0; g < angle_grid.size(); ++g) {
    const double psi = 2.0 * kPi * element_spacing * std::sin(angle_grid[g]);
    cplx denom{1.0, 0.0};
    for (std::size_t i = 0; i < model.ar.size(); ++i) {
      const double ph = -psi * static_cast<double>(i + 1);
      denom += model.ar[i] * cplx{std::cos(ph), std::sin(ph)};
    }
    const double d2 = std::norm(denom);
    power[g] = d2 > 0.0 ? model.noise_power / d2 : 0.0;
  }
  return power;
}

inline std::vector<double> make_angle_grid(double max_abs_deg = 90.0, double step_deg = 0.1) {
  std::vector<double> grid;
  for (double a = -max_abs_deg; a <= max_abs_deg + 1e-9; a += step_deg) {
    grid.push_back(deg2rad(a));
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Clustering
// ---------------------------------------------------------------------------

// Connected component over flagged range-Doppler cells. Cells merge when
// their bin indices differ by at most 2 in both axes (one empty cell of
// tolerance), which reproduces how rain detections fuse with the static
// cluster.
struct RDCluster {
  std::vector<CellIndex> cell_indices;
  int size = 0;
  int min_range_bin = 0;
  int max_range_bin = 0;
  int min_velocity_bin = 0;
  int max_velocity_bin = 0;
  double range_span = 0.0;     // m
  double velocity_span = 0.0;  // m/s
  double min_range = 0.0;      // m
  double max_range = 0.0;      // m
  double min_velocity = 0.0;   // m/s
  double max_velocity = 0.0;   // m/s
  bool contains_zero_velocity = false;
};

inline std::vector<RDCluster> cluster_range_doppler(const std::vector<CellIndex>& flagged,
                                                    const RangeDopplerMap& map,
                                                    int merge_tolerance = 1) {
  const int reach = merge_tolerance + 1;
  const int n = static_cast<int>(flagged.size());
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };

  // Sort by range bin so neighbor search can early-out.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (flagged[a].range_bin != flagged[b].range_bin)
      return flagged[a].range_bin < flagged[b].range_bin;
    return flagged[a].velocity_bin < flagged[b].velocity_bin;
  });
  for (int oi = 0; oi < n; ++oi) {
    const CellIndex& a = flagged[order[oi]];
    for (int oj = oi + 1; oj < n; ++oj) {
      const CellIndex& b = flagged[order[oj]];
      if (b.range_bin - a.range_bin > reach) break;
      if (std::abs(b.velocity_bin - a.velocity_bin) <= reach) unite(order[oi], order[oj]);
    }
  }

  std::vector<std::vector<int>> groups(n);
  for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);

  const double half_vres = 0.5 * map.velocity_resolution();
  std::vector<RDCluster> clusters;
  for (const auto& g : groups) {
    if (g.empty()) continue;
    RDCluster cl;
    cl.min_range_bin = map.num_range_bins;
    cl.min_velocity_bin = map.num_velocity_bins;
    cl.max_range_bin = -1;
    cl.max_velocity_bin = -1;
    for (int idx : g) {
      const CellIndex& c = flagged[idx];
      cl.cell_indices.push_back(c);
      cl.min_range_bin = std::min(cl.min_range_bin, c.range_bin);
      cl.max_range_bin = std::max(cl.max_range_bin, c.range_bin);
      cl.min_velocity_bin = std::min(cl.min_velocity_bin, c.velocity_bin);
      cl.max_velocity_bin = std::max(cl.max_velocity_bin, c.velocity_bin);
      if (std::fabs(map.velocity_axis[c.velocity_bin]) < half_vres) {
        cl.contains_zero_velocity = true;
      }
    }
    std::sort(cl.cell_indices.begin(), cl.cell_indices.end(), [](const auto& a, const auto& b) {
      return a.range_bin != b.range_bin ? a.range_bin < b.range_bin
                                        : a.velocity_bin < b.velocity_bin;
    });
    cl.size = static_cast<int>(cl.cell_indices.size());
    cl.min_range = map.range_axis[cl.min_range_bin];
    cl.max_range = map.range_axis[cl.max_range_bin];
    cl.min_velocity = map.velocity_axis[cl.min_velocity_bin];
    cl.max_velocity = map.velocity_axis[cl.max_velocity_bin];
    cl.range_span = cl.max_range - cl.min_range;
    cl.velocity_span = cl.max_velocity - cl.min_velocity;
    clusters.push_back(std::move(cl));
  }
  std::sort(clusters.begin(), clusters.end(), [](const RDCluster& a, const RDCluster& b) {
    if (a.min_range_bin != b.min_range_bin) return a.min_range_bin < b.min_range_bin;
    return a.min_velocity_bin < b.min_velocity_bin;
  });
  return clusters;
}

// Index of the cluster containing the minimum-range cell, -1 when empty.
inline int nearest_cluster_index(const std::vector<RDCluster>& clusters) {
  return clusters.empty() ? -1 : 0;
}

// ---------------------------------------------------------------------------
// Radar feature extraction
// ---------------------------------------------------------------------------

struct RadarFeatureVector {
  double velocity_std = 0.0;        // m/s
  double density_mean = 0.0;        // neighbors within 1 m
  double density_std = 0.0;
  double intensity_mean = 0.0;      // dB
  double intensity_std = 0.0;       // dB
  double total_cluster_cells = 0.0;
  double nearest_cluster_size = 0.0;
  double rain_extent_estimate = 0.0;  // m
  double detection_count = 0.0;
  int distance_bin = 0;
  bool valid = false;
};

inline constexpr int kNumDistanceBins = 10;
inline constexpr double kDistanceBinWidth = 2.0;  // m

inline int distance_bin_of(double range) {
  if (range < 0.0 || range >= kNumDistanceBins * kDistanceBinWidth) return -1;
  return static_cast<int>(range / kDistanceBinWidth);
}

// Largest range of nearest-cluster cells whose velocity exceeds twice the
// Doppler resolution; 0 when the cluster is empty or purely static.
inline double rain_extent_from_cluster(const RDCluster& cluster, const RangeDopplerMap& map) {
  const double gate = 2.0 * map.velocity_resolution();
  double extent = 0.0;
  for (const auto& c : cluster.cell_indices) {
    if (std::fabs(map.velocity_axis[c.velocity_bin]) > gate) {
      extent = std::max(extent, map.range_axis[c.range_bin]);
    }
  }
  return extent;
}

inline std::vector<RadarFeatureVector> radar_features(
    const std::vector<Detection>& detections, const RangeDopplerMap& map,
    const std::vector<RDCluster>& clusters,
    const std::optional<BoundingBox3D>& /*vehicle_box*/ = std::nullopt) {
  double total_cells = 0.0;
  for (const auto& c : clusters) total_cells += c.size;
  const int nearest = nearest_cluster_index(clusters);
  const double nearest_size = nearest >= 0 ? clusters[nearest].size : 0.0;
  const double rain_extent =
      nearest >= 0 ? rain_extent_from_cluster(clusters[nearest], map) : 0.0;

  // Neighbor counts within a 1 m sphere, against the whole frame.
  std::vector<double> neighbor_count(detections.size(), 0.0);
  for (std::size_t i = 0; i < detections.size(); ++i) {
    for (std::size_t j = i + 1; j < detections.size(); ++j) {
      const Vec3 d = detections[i].position - detections[j].position;
      if (d.norm() <= 1.0) {
        neighbor_count[i] += 1.0;
        neighbor_count[j] += 1.0;
      }
    }
  }

  std::vector<RadarFeatureVector> out(kNumDistanceBins);
  for (int b = 0; b < kNumDistanceBins; ++b) {
    out[b].distance_bin = b;
  }

  std::vector<std::vector<std::size_t>> by_bin(kNumDistanceBins);
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const int b = distance_bin_of(detections[i].range);
    if (b >= 0) by_bin[b].push_back(i);
  }

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
    RadarFeatureVector& f = out[b];
    if (by_bin[b].empty()) continue;  // all-zero vector, valid stays false
    f.valid = true;
    f.detection_count = static_cast<double>(by_bin[b].size());
    std::vector<double> vel, dens, inten;
    for (std::size_t i : by_bin[b]) {
      vel.push_back(detections[i].radial_velocity);
      dens.push_back(neighbor_count[i]);
      inten.push_back(detections[i].power_db);
    }
    f.velocity_std = mean_std(vel).second;
    auto [dm, ds] = mean_std(dens);
    f.density_mean = dm;
    f.density_std = ds;
    auto [im, is] = mean_std(inten);
    f.intensity_mean = im;
    f.intensity_std = is;
    f.total_cluster_cells = total_cells;
    f.nearest_cluster_size = nearest_size;
    f.rain_extent_estimate = rain_extent;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full chain
// ---------------------------------------------------------------------------

struct RadarDspParams {
  WindowKind window = WindowKind::Hann;
  int cfar_guard = 2;
  int cfar_train_per_side = 16;  // training set = 32 cells
  int cfar_rank = 24;            // 3N/4 of 32
  int cfar_range_arm = 2;        // per range direction; the rest along Doppler
  double cfar_pfa = 1e-3;
  int burg_order = 6;
  double angle_step_deg = 0.1;
};

struct ProcessedRadarFrame {
  RangeDopplerMap map;
  std::vector<CellIndex> flagged;
  std::vector<Detection> detections;
  std::vector<RDCluster> clusters;
  int nearest_cluster = -1;
};

// Map -> OS-CFAR -> Burg azimuth per flagged cell -> clusters.
inline ProcessedRadarFrame process_radar_frame(const RadarDataCube& cube,
                                               const RadarDspParams& params = {}) {
  ProcessedRadarFrame frame;
  const ChannelSpectra spectra = range_doppler_spectra(cube, params.window, &frame.map);

  const double alpha = os_cfar_alpha_for_pfa(2 * params.cfar_train_per_side, params.cfar_rank,
                                             params.cfar_pfa);
  frame.flagged = os_cfar(frame.map, params.cfar_guard, params.cfar_train_per_side,
                          params.cfar_rank, alpha, params.cfar_range_arm);
  frame.clusters = cluster_range_doppler(frame.flagged, frame.map);
  frame.nearest_cluster = nearest_cluster_index(frame.clusters);

  const std::vector<double> grid = make_angle_grid(90.0, params.angle_step_deg);
  const int order = std::min(params.burg_order, cube.config.num_channels - 1);
  frame.detections.reserve(frame.flagged.size());
  for (const auto& cell : frame.flagged) {
    const auto snap = spectra.snapshot(cell.range_bin, cell.velocity_bin);
    const BurgModel model = burg_coefficients(snap, order);
    const auto spec = burg_spectrum(model, grid, cube.config.element_spacing);
    const std::size_t peak =
        std::distance(spec.begin(), std::max_element(spec.begin(), spec.end()));
    const double az = grid[peak];
    const double power_db = linear_to_db(std::max(frame.map.at(cell.range_bin, cell.velocity_bin),
                                                  1e-300));
    frame.detections.push_back(Detection::from_polar(frame.map.range_axis[cell.range_bin],
                                                     frame.map.velocity_axis[cell.velocity_bin],
                                                     az, power_db));
  }
  return frame;
}

}  // namespace weathersense
