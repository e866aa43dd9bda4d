#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "weathersense/core_types.hpp"
#include "weathersense/radar_dsp.hpp"  // distance bins

namespace weathersense {

// Training target on the score scale for each grade. Centers of the output
// membership functions, so a perfectly fitted tree scores exactly on target.
inline double label_target_score(Grade g) {
  switch (g) {
    case Grade::Poor: return 0.1;
    case Grade::Moderate: return 0.5;
    case Grade::Good: return 0.9;
  }
  return 0.1;
}

inline PerformanceLabel make_label(Grade g) { return {g, label_target_score(g)}; }

struct SampleProvenance {
  std::string condition;
  std::uint64_t frame = 0;
};

struct LabeledSample {
  std::string sensor;  // radar | lidar | camera
  int distance_bin = -1;  // -1 for camera (unbinned)
  std::vector<double> features;  // raw, not yet normalized
  PerformanceLabel label;
  SampleProvenance provenance;
  double raw_measurement = 0.0;  // the quantity the label came from
};

// ---------------------------------------------------------------------------
// Threshold fitting
// ---------------------------------------------------------------------------

inline double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw DomainError("percentile: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 1.0) * (values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - lo;
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

// Per-distance-bin label thresholds. Good when the measurement is at least
// good_min, poor when it falls below moderate_min.
struct BinThresholds {
  std::vector<double> good_min;      // one per distance bin
  std::vector<double> moderate_min;

  bool valid() const {
    if (good_min.size() != moderate_min.size() || good_min.empty()) return false;
    for (std::size_t i = 0; i < good_min.size(); ++i) {
      if (!(moderate_min[i] > 0.0 && moderate_min[i] <= good_min[i])) return false;
    }
    return true;
  }
};

// Fit thresholds from dry-condition reference samples: the good floor is a
// margin under the dry 25th percentile, the poor ceiling a deeper fraction
// of it. Self-calibrating, no hand-picked constants per dataset.
inline BinThresholds fit_bin_thresholds(const std::vector<std::vector<double>>& dry_per_bin,
                                        double good_margin = 0.8, double poor_margin = 0.35,
                                        bool enforce_monotone = false) {
  BinThresholds thr;
  const std::size_t nbins = dry_per_bin.size();
  thr.good_min.assign(nbins, 0.0);
  thr.moderate_min.assign(nbins, 0.0);
  double last_good = 1e-9;
  bool seen = false;
  for (std::size_t b = 0; b < nbins; ++b) {
    if (!dry_per_bin[b].empty()) {
      const double p25 = percentile(dry_per_bin[b], 0.25);
      thr.good_min[b] = std::max(1e-9, good_margin * p25);
      last_good = thr.good_min[b];
      if (!seen) {
        // Backfill any leading bins that had no reference data.
        for (std::size_t k = 0; k < b; ++k) thr.good_min[k] = last_good;
      }
      seen = true;
    } else {
      thr.good_min[b] = last_good;  // carry the nearest fitted value outward
    }
  }
  if (enforce_monotone) {
    // Counts fall with distance; keep the curve non-increasing.
    for (std::size_t b = 1; b < nbins; ++b) {
      thr.good_min[b] = std::min(thr.good_min[b], thr.good_min[b - 1]);
    }
  }
  for (std::size_t b = 0; b < nbins; ++b) {
    thr.moderate_min[b] = std::max(1e-9, thr.good_min[b] * poor_margin / good_margin);
  }
  return thr;
}

inline Grade grade_against_thresholds(double measurement, double good_min, double moderate_min) {
  if (measurement >= good_min) return Grade::Good;
  if (measurement < moderate_min) return Grade::Poor;
  return Grade::Moderate;
}

// ---------------------------------------------------------------------------
// Per-sensor labeling
// ---------------------------------------------------------------------------

// Radar: number of detection points on the test vehicle, graded against
// distance-dependent dry-reference curves.
inline PerformanceLabel label_radar(double vehicle_detection_count, double distance,
                                    const BinThresholds& thresholds) {
  if (vehicle_detection_count < 0.0) throw DomainError("label_radar: negative count");
  if (!thresholds.valid()) throw DomainError("label_radar: invalid thresholds");
  int bin = distance_bin_of(distance);
  if (bin < 0) bin = distance < 0.0 ? 0 : static_cast<int>(thresholds.good_min.size()) - 1;
  bin = std::min<int>(bin, static_cast<int>(thresholds.good_min.size()) - 1);
  return make_label(grade_against_thresholds(vehicle_detection_count, thresholds.good_min[bin],
                                             thresholds.moderate_min[bin]));
}

// Lidar: dispersion inside the vehicle bounding box; an empty box carries no
// information and grades poor.
inline PerformanceLabel label_lidar(const std::optional<double>& dispersion, int distance_bin,
                                    const BinThresholds& thresholds) {
  if (!thresholds.valid()) throw DomainError("label_lidar: invalid thresholds");
  if (!dispersion) return make_label(Grade::Poor);
  if (*dispersion < 0.0) throw DomainError("label_lidar: negative dispersion");
  const int bin =
      std::clamp(distance_bin, 0, static_cast<int>(thresholds.good_min.size()) - 1);
  return make_label(grade_against_thresholds(*dispersion, thresholds.good_min[bin],
                                             thresholds.moderate_min[bin]));
}

struct CameraLabelThresholds {
  double good = 0.6;
  double moderate = 0.3;
};

// Camera: product of detector confidence and IOU, so either failure mode
// pulls the grade down.
inline PerformanceLabel label_camera(double confidence, double iou_value,
                                     const CameraLabelThresholds& thresholds = {}) {
  if (!(confidence >= 0.0 && confidence <= 1.0) || !(iou_value >= 0.0 && iou_value <= 1.0)) {
    throw DomainError("label_camera: inputs outside [0,1]");
  }
  const double score = confidence * iou_value;
  Grade g = Grade::Moderate;
  if (score >= thresholds.good) {
    g = Grade::Good;
  } else if (score < thresholds.moderate) {
    g = Grade::Poor;
  }
  return make_label(g);
}

}  // namespace weathersense
