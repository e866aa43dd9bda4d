#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "weathersense/common.hpp"

namespace weathersense {

// ---------------------------------------------------------------------------
// Weather and lighting
// ---------------------------------------------------------------------------

enum class WeatherKind { Dry, Fog, LightRain, HeavyRain };
enum class LightCondition { Day, Night };

inline std::string to_string(WeatherKind k) {
  switch (k) {
    case WeatherKind::Dry: return "dry";
    case WeatherKind::Fog: return "fog";
    case WeatherKind::LightRain: return "light_rain";
    case WeatherKind::HeavyRain: return "heavy_rain";
  }
  return "dry";
}

inline std::string to_string(LightCondition l) {
  return l == LightCondition::Day ? "day" : "night";
}

// Weather cell of the test matrix. Rain intensities and the fog visibility
// default to the values the test facility provides; they can be overridden
// but must stay physical.
struct WeatherCondition {
  WeatherKind kind = WeatherKind::Dry;
  double rain_rate = 0.0;        // mm/h, 0 unless raining
  double fog_visibility = 0.0;   // m, finite only for fog
  LightCondition light = LightCondition::Day;

  static WeatherCondition dry(LightCondition l = LightCondition::Day) {
    return {WeatherKind::Dry, 0.0, 0.0, l};
  }
  static WeatherCondition fog(LightCondition l = LightCondition::Day) {
    return {WeatherKind::Fog, 0.0, 8.0, l};
  }
  static WeatherCondition light_rain(LightCondition l = LightCondition::Day) {
    return {WeatherKind::LightRain, 16.0, 0.0, l};
  }
  static WeatherCondition heavy_rain(LightCondition l = LightCondition::Day) {
    return {WeatherKind::HeavyRain, 98.0, 0.0, l};
  }

  bool valid() const {
    if (rain_rate < 0.0) return false;
    switch (kind) {
      case WeatherKind::Dry: return rain_rate == 0.0;
      case WeatherKind::Fog: return rain_rate == 0.0 && fog_visibility > 0.0;
      case WeatherKind::LightRain:
      case WeatherKind::HeavyRain: return rain_rate > 0.0;
    }
    return false;
  }

  std::string name() const { return to_string(kind) + "_" + to_string(light); }

  bool operator==(const WeatherCondition&) const = default;
};

// ---------------------------------------------------------------------------
// Radar configuration
// ---------------------------------------------------------------------------

// Chirp-sequence FMCW front-end parameters. Defaults mirror a 77 GHz
// automotive sensor with 16 receive channels and raw-data access.
struct RadarConfig {
  double center_frequency = 76.75e9;  // Hz
  double bandwidth = 1.5e9;           // Hz
  double sample_rate = 10.0e6;        // Hz
  double chirp_duration = 51.2e-6;    // s
  double chirp_repetition = 60.0e-6;  // s
  int num_chirps = 128;
  int num_channels = 16;
  double element_spacing = 0.5;  // in wavelengths

  double range_resolution() const { return kSpeedOfLight / (2.0 * bandwidth); }

  int samples_per_chirp() const {
    return static_cast<int>(std::lround(sample_rate * chirp_duration));
  }

  double wavelength() const { return kSpeedOfLight / center_frequency; }

  // Velocity covered by one Doppler bin.
  double velocity_resolution() const {
    return wavelength() / (2.0 * num_chirps * chirp_repetition);
  }

  double max_unambiguous_range() const {
    return samples_per_chirp() / 2 * range_resolution();
  }

  double max_unambiguous_velocity() const {
    return wavelength() / (4.0 * chirp_repetition);
  }

  bool valid() const {
    return center_frequency > 0 && bandwidth > 0 && sample_rate > 0 &&
           chirp_duration > 0 && chirp_repetition >= chirp_duration &&
           num_chirps >= 1 && num_channels >= 1 && element_spacing > 0;
  }

  bool operator==(const RadarConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Performance labels
// ---------------------------------------------------------------------------

enum class Grade { Poor, Moderate, Good };

inline std::string to_string(Grade g) {
  switch (g) {
    case Grade::Poor: return "poor";
    case Grade::Moderate: return "moderate";
    case Grade::Good: return "good";
  }
  return "poor";
}

inline int grade_rank(Grade g) { return static_cast<int>(g); }

struct PerformanceLabel {
  Grade grade = Grade::Poor;
  double score = 0.0;  // in [0, 1]

  bool operator==(const PerformanceLabel&) const = default;
};

// Tripartition of the score scale: [0, 1/3) poor, [1/3, 2/3) moderate,
// [2/3, 1] good.
inline PerformanceLabel grade_from_score(double score) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw DomainError("grade_from_score: score outside [0,1]");
  }
  Grade g = Grade::Good;
  if (score < 1.0 / 3.0) {
    g = Grade::Poor;
  } else if (score < 2.0 / 3.0) {
    g = Grade::Moderate;
  }
  return {g, score};
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

// Axis convention: sensor at the origin, x forward, y left, z up.
struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  bool operator==(const Vec3&) const = default;
};

struct BoundingBox3D {
  Vec3 center;
  Vec3 extents;  // length (x), width (y), height (z); all > 0
  double yaw = 0.0;

  bool valid() const { return extents.x > 0 && extents.y > 0 && extents.z > 0; }

  // Point-in-box test in the box frame (yaw about z through the center).
  bool contains(const Vec3& p) const {
    const double c = std::cos(-yaw), s = std::sin(-yaw);
    const double dx = p.x - center.x, dy = p.y - center.y;
    const double lx = c * dx - s * dy;
    const double ly = s * dx + c * dy;
    const double lz = p.z - center.z;
    return std::fabs(lx) <= extents.x / 2 && std::fabs(ly) <= extents.y / 2 &&
           std::fabs(lz) <= extents.z / 2;
  }

  // Corner of the box footprint nearest to the sensor origin, at ground level
  // of the box. Used as the distance reference for dispersion.
  Vec3 nearest_corner() const {
    const double c = std::cos(yaw), s = std::sin(yaw);
    Vec3 best;
    double best_d = 1e300;
    for (int ix = -1; ix <= 1; ix += 2) {
      for (int iy = -1; iy <= 1; iy += 2) {
        const double lx = ix * extents.x / 2, ly = iy * extents.y / 2;
        Vec3 corner{center.x + c * lx - s * ly, center.y + s * lx + c * ly,
                    center.z - extents.z / 2};
        const double d = corner.norm();
        if (d < best_d) {
          best_d = d;
          best = corner;
        }
      }
    }
    return best;
  }

  bool operator==(const BoundingBox3D&) const = default;
};

// ---------------------------------------------------------------------------
// Radar detections
// ---------------------------------------------------------------------------

// One output point of the radar chain: range/velocity from the map cell,
// azimuth from the angular spectrum, position from (range, azimuth).
struct Detection {
  double range = 0.0;            // m
  double radial_velocity = 0.0;  // m/s, negative toward the sensor
  double azimuth = 0.0;          // rad, positive left
  Vec3 position;                 // m
  double power_db = 0.0;         // dB

  static Detection from_polar(double range, double velocity, double azimuth,
                              double power_db) {
    Detection d;
    d.range = range;
    d.radial_velocity = velocity;
    d.azimuth = azimuth;
    d.position = {range * std::cos(azimuth), range * std::sin(azimuth), 0.0};
    d.power_db = power_db;
    return d;
  }
};

// ---------------------------------------------------------------------------
// JSON serialization (config persistence)
// ---------------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const WeatherCondition& w) {
  j = nlohmann::json{{"kind", to_string(w.kind)},
                     {"rain_rate", w.rain_rate},
                     {"fog_visibility", w.fog_visibility},
                     {"light", to_string(w.light)}};
}

inline WeatherKind weather_kind_from_string(const std::string& s) {
  if (s == "dry") return WeatherKind::Dry;
  if (s == "fog") return WeatherKind::Fog;
  if (s == "light_rain") return WeatherKind::LightRain;
  if (s == "heavy_rain") return WeatherKind::HeavyRain;
  throw DomainError("unknown weather kind: " + s);
}

inline void from_json(const nlohmann::json& j, WeatherCondition& w) {
  w.kind = weather_kind_from_string(j.at("kind").get<std::string>());
  w.rain_rate = j.at("rain_rate").get<double>();
  w.fog_visibility = j.at("fog_visibility").get<double>();
  const auto light = j.at("light").get<std::string>();
  if (light != "day" && light != "night") throw DomainError("unknown light: " + light);
  w.light = light == "day" ? LightCondition::Day : LightCondition::Night;
}

inline void to_json(nlohmann::json& j, const RadarConfig& c) {
  j = nlohmann::json{{"center_frequency", c.center_frequency},
                     {"bandwidth", c.bandwidth},
                     {"sample_rate", c.sample_rate},
                     {"chirp_duration", c.chirp_duration},
                     {"chirp_repetition", c.chirp_repetition},
                     {"num_chirps", c.num_chirps},
                     {"num_channels", c.num_channels},
                     {"element_spacing", c.element_spacing}};
}

inline void from_json(const nlohmann::json& j, RadarConfig& c) {
  j.at("center_frequency").get_to(c.center_frequency);
  j.at("bandwidth").get_to(c.bandwidth);
  j.at("sample_rate").get_to(c.sample_rate);
  j.at("chirp_duration").get_to(c.chirp_duration);
  j.at("chirp_repetition").get_to(c.chirp_repetition);
  j.at("num_chirps").get_to(c.num_chirps);
  j.at("num_channels").get_to(c.num_channels);
  j.at("element_spacing").get_to(c.element_spacing);
}

inline void to_json(nlohmann::json& j, const Vec3& v) {
  j = nlohmann::json{{"x", v.x}, {"y", v.y}, {"z", v.z}};
}

inline void from_json(const nlohmann::json& j, Vec3& v) {
  j.at("x").get_to(v.x);
  j.at("y").get_to(v.y);
  j.at("z").get_to(v.z);
}

inline void to_json(nlohmann::json& j, const BoundingBox3D& b) {
  j = nlohmann::json{{"center", b.center}, {"extents", b.extents}, {"yaw", b.yaw}};
}

inline void from_json(const nlohmann::json& j, BoundingBox3D& b) {
  j.at("center").get_to(b.center);
  j.at("extents").get_to(b.extents);
  j.at("yaw").get_to(b.yaw);
}

}  // namespace weathersense
