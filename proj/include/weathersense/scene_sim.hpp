#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "weathersense/camera_analysis.hpp"
#include "weathersense/core_types.hpp"
#include "weathersense/io.hpp"
#include "weathersense/lidar_analysis.hpp"
#include "weathersense/radar_dsp.hpp"
#include "weathersense/rng.hpp"

namespace weathersense {

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

// Vehicle-approach scenario: the target starts at `start_distance` and drives
// centrally toward the sensors, optionally decelerating near the end of the
// run. All randomness is derived from `seed`.
struct Scenario {
  BoundingBox3D vehicle_box{{20.0, 0.0, 0.75}, {4.2, 1.8, 1.5}, 0.0};
  double vehicle_velocity = 5.0;  // m/s toward the sensor (18 kph)
  double start_distance = 20.0;   // m, front face at frame 0
  Roi roi;
  double frame_rate = 10.0;  // Hz
  std::uint64_t seed = 1;

  // Optional deceleration: below this front-face distance, velocity ramps
  // linearly toward end_velocity at stop_distance. 0 disables the ramp.
  double decel_start_distance = 0.0;
  double end_velocity = 5.0;
  double stop_distance = 1.2;  // m, front face never passes this

  bool valid() const {
    return vehicle_box.valid() && vehicle_velocity > 0 && start_distance > 0 &&
           start_distance <= roi.x_max && frame_rate > 0 && stop_distance > 0;
  }

  double velocity_at_distance(double front_distance) const {
    if (decel_start_distance <= 0.0 || front_distance >= decel_start_distance) {
      return vehicle_velocity;
    }
    const double span = decel_start_distance - stop_distance;
    if (span <= 0.0) return end_velocity;
    const double f = std::clamp((front_distance - stop_distance) / span, 0.0, 1.0);
    return end_velocity + f * (vehicle_velocity - end_velocity);
  }

  // Front-face distance and velocity at a frame, stepped from frame 0.
  std::pair<double, double> state_at_frame(std::uint64_t frame_index) const {
    double d = start_distance;
    double v = velocity_at_distance(d);
    const double dt = 1.0 / frame_rate;
    for (std::uint64_t k = 0; k < frame_index; ++k) {
      v = velocity_at_distance(d);
      d = std::max(stop_distance, d - v * dt);
    }
    if (d <= stop_distance) v = 0.0;
    return {d, v};
  }

  BoundingBox3D vehicle_box_at(std::uint64_t frame_index) const {
    const auto [d, v] = state_at_frame(frame_index);
    BoundingBox3D box = vehicle_box;
    box.center.x = d + box.extents.x / 2.0;
    return box;
  }
};

inline void to_json(nlohmann::json& j, const Scenario& s) {
  j = nlohmann::json{{"vehicle_box", s.vehicle_box},
                     {"vehicle_velocity", s.vehicle_velocity},
                     {"start_distance", s.start_distance},
                     {"roi_x", {s.roi.x_min, s.roi.x_max}},
                     {"roi_y", {s.roi.y_min, s.roi.y_max}},
                     {"frame_rate", s.frame_rate},
                     {"seed", s.seed},
                     {"decel_start_distance", s.decel_start_distance},
                     {"end_velocity", s.end_velocity},
                     {"stop_distance", s.stop_distance}};
}

inline void from_json(const nlohmann::json& j, Scenario& s) {
  j.at("vehicle_box").get_to(s.vehicle_box);
  j.at("vehicle_velocity").get_to(s.vehicle_velocity);
  j.at("start_distance").get_to(s.start_distance);
  s.roi.x_min = j.at("roi_x")[0].get<double>();
  s.roi.x_max = j.at("roi_x")[1].get<double>();
  s.roi.y_min = j.at("roi_y")[0].get<double>();
  s.roi.y_max = j.at("roi_y")[1].get<double>();
  j.at("frame_rate").get_to(s.frame_rate);
  j.at("seed").get_to(s.seed);
  j.at("decel_start_distance").get_to(s.decel_start_distance);
  j.at("end_velocity").get_to(s.end_velocity);
  j.at("stop_distance").get_to(s.stop_distance);
}

// ---------------------------------------------------------------------------
// Weather models and calibrated presets
// ---------------------------------------------------------------------------

// Rain clutter seen by the radar: discrete droplet scatterers confined to a
// near-range extent with weather-dependent radial velocity statistics.
struct RainClutterModel {
  double extent = 5.0;             // m
  double scatterer_density = 1.5;  // per m^3
  double velocity_mean = 0.4;      // m/s, magnitude of radial speed
  double velocity_std = 0.35;      // m/s
  double reflectivity_scale = -22.0;  // dB relative to a unit scatterer

  bool valid() const { return extent > 0 && velocity_std > 0 && scatterer_density > 0; }
};

struct FogModel {
  double extinction = 0.375;    // 1/m, 3/visibility
  double ring_radius = 1.0;     // m
  int ring_point_count = 1900;  // full circle
  double intensity_floor = 0.015;

  bool valid() const { return extinction > 0 && ring_radius > 0; }
};

// Koschmieder relation between meteorological visibility and extinction.
inline double extinction_from_visibility(double visibility_m) {
  if (!(visibility_m > 0)) throw DomainError("extinction_from_visibility: visibility <= 0");
  return 3.0 / visibility_m;
}

// Calibrated model constants. Values are chosen once so the qualitative
// orderings of the weather study hold on simulated data, and are persisted
// in a versioned weather_presets.json.
struct WeatherPresets {
  int version = 1;

  RainClutterModel light_rain{5.0, 1.6, 0.4, 0.25, -18.0};
  RainClutterModel heavy_rain{11.0, 1.6, 0.7, 0.35, -16.0};
  FogModel fog{};

  // Radar scene constants.
  double radar_noise_std = 1.0;        // per-sample complex noise component
  int radar_static_count = 70;         // fixed facility clutter scatterers
  double radar_static_amp_min = 0.06;
  double radar_static_amp_max = 0.35;
  double radar_vehicle_amp = 1.0;
  int radar_vehicle_max_scatterers = 30;
  // Range weighting of received amplitude, compressed to (range_ref/R) and
  // capped: the receiver gain control keeps the display dynamic range
  // bounded, yet near-range droplets still dominate the map.
  double radar_range_ref = 5.0;  // m
  double radar_range_gain_cap = 2.5;
  // Fraction of vehicle scatterers that survive each weather.
  double radar_count_factor_dry = 1.0;
  double radar_count_factor_fog = 0.95;
  double radar_count_factor_light = 0.88;
  double radar_count_factor_heavy = 0.72;
  // Amplitude scaling of vehicle returns (water film on the radome).
  double radar_amp_factor_dry = 1.0;
  double radar_amp_factor_fog = 0.92;
  double radar_amp_factor_light = 0.80;
  double radar_amp_factor_heavy = 0.60;
  double rain_region_height = 2.0;  // m, vertical extent of sampled droplets

  // Lidar scene constants.
  int lidar_lines = 128;
  double lidar_vfov_deg = 45.0;      // total, symmetric about horizon
  double lidar_az_step_deg = 0.34;   // forward hemisphere scan step
  double lidar_mount_height = 0.75;  // m
  double lidar_max_range = 40.0;     // m
  double lidar_ground_reflectivity = 0.30;
  double lidar_vehicle_reflectivity = 0.95;
  double lidar_droplet_reflectivity = 0.12;
  double lidar_detection_threshold = 0.02;
  double lidar_intensity_noise = 0.04;
  double lidar_rain_alpha_light = 0.008;  // 1/m
  double lidar_rain_alpha_heavy = 0.020;
  int lidar_droplet_count_light = 250;
  int lidar_droplet_count_heavy = 700;
  int lidar_puddle_count_light = 16;
  int lidar_puddle_count_heavy = 20;
  double lidar_puddle_radius_min = 0.4;
  double lidar_puddle_radius_max = 1.1;
  // Road spray wets the lower body panels; their returns drop out in rain.
  double lidar_spray_light = 0.40;
  double lidar_spray_heavy = 0.60;
  double lidar_spray_height = 0.55;  // m, e-folding height

  // Camera scene constants.
  int camera_width = 256;
  int camera_height = 192;
  double camera_focal_px = 200.0;
  double camera_height_m = 1.2;
  double camera_airlight_day = 0.85;
  double camera_airlight_night = 0.28;
  double camera_night_darken = 0.22;
  double camera_night_blur_sigma = 1.2;
  double camera_fog_blur_sigma = 0.6;
  double camera_rain_blur_sigma = 0.5;
  int camera_rain_streaks_light = 40;
  int camera_rain_streaks_heavy = 120;
  double camera_noise_sigma = 0.01;

  const RainClutterModel& rain_model(const WeatherCondition& w) const {
    return w.kind == WeatherKind::HeavyRain ? heavy_rain : light_rain;
  }

  double radar_count_factor(const WeatherCondition& w) const {
    switch (w.kind) {
      case WeatherKind::Dry: return radar_count_factor_dry;
      case WeatherKind::Fog: return radar_count_factor_fog;
      case WeatherKind::LightRain: return radar_count_factor_light;
      case WeatherKind::HeavyRain: return radar_count_factor_heavy;
    }
    return 1.0;
  }

  double radar_amp_factor(const WeatherCondition& w) const {
    switch (w.kind) {
      case WeatherKind::Dry: return radar_amp_factor_dry;
      case WeatherKind::Fog: return radar_amp_factor_fog;
      case WeatherKind::LightRain: return radar_amp_factor_light;
      case WeatherKind::HeavyRain: return radar_amp_factor_heavy;
    }
    return 1.0;
  }

  // One-way extinction applied to lidar rays for a weather cell.
  double lidar_alpha(const WeatherCondition& w) const {
    switch (w.kind) {
      case WeatherKind::Fog: return extinction_from_visibility(w.fog_visibility);
      case WeatherKind::LightRain: return lidar_rain_alpha_light;
      case WeatherKind::HeavyRain: return lidar_rain_alpha_heavy;
      case WeatherKind::Dry: return 0.0;
    }
    return 0.0;
  }
};

inline void to_json(nlohmann::json& j, const RainClutterModel& m) {
  j = nlohmann::json{{"extent", m.extent},
                     {"scatterer_density", m.scatterer_density},
                     {"velocity_mean", m.velocity_mean},
                     {"velocity_std", m.velocity_std},
                     {"reflectivity_scale", m.reflectivity_scale}};
}

inline void from_json(const nlohmann::json& j, RainClutterModel& m) {
  j.at("extent").get_to(m.extent);
  j.at("scatterer_density").get_to(m.scatterer_density);
  j.at("velocity_mean").get_to(m.velocity_mean);
  j.at("velocity_std").get_to(m.velocity_std);
  j.at("reflectivity_scale").get_to(m.reflectivity_scale);
}

inline void to_json(nlohmann::json& j, const FogModel& m) {
  j = nlohmann::json{{"extinction", m.extinction},
                     {"ring_radius", m.ring_radius},
                     {"ring_point_count", m.ring_point_count},
                     {"intensity_floor", m.intensity_floor}};
}

inline void from_json(const nlohmann::json& j, FogModel& m) {
  j.at("extinction").get_to(m.extinction);
  j.at("ring_radius").get_to(m.ring_radius);
  j.at("ring_point_count").get_to(m.ring_point_count);
  j.at("intensity_floor").get_to(m.intensity_floor);
}

#define WS_PRESET_FIELDS(OP)                                                                   \
  OP(radar_noise_std) OP(radar_static_count) OP(radar_static_amp_min) OP(radar_static_amp_max) \
  OP(radar_vehicle_amp) OP(radar_vehicle_max_scatterers) OP(radar_range_ref)                   \
  OP(radar_range_gain_cap)                                                                     \
  OP(radar_count_factor_dry)            \
  OP(radar_count_factor_fog) OP(radar_count_factor_light) OP(radar_count_factor_heavy)         \
  OP(radar_amp_factor_dry) OP(radar_amp_factor_fog) OP(radar_amp_factor_light)                 \
  OP(radar_amp_factor_heavy) OP(rain_region_height) OP(lidar_lines) OP(lidar_vfov_deg) OP(lidar_az_step_deg)              \
  OP(lidar_mount_height) OP(lidar_max_range) OP(lidar_ground_reflectivity)                     \
  OP(lidar_vehicle_reflectivity) OP(lidar_droplet_reflectivity) OP(lidar_detection_threshold)  \
  OP(lidar_intensity_noise) OP(lidar_rain_alpha_light) OP(lidar_rain_alpha_heavy)              \
  OP(lidar_droplet_count_light) OP(lidar_droplet_count_heavy) OP(lidar_puddle_count_light)     \
  OP(lidar_puddle_count_heavy) OP(lidar_puddle_radius_min) OP(lidar_puddle_radius_max)         \
  OP(lidar_spray_light) OP(lidar_spray_heavy) OP(lidar_spray_height)                            \
  OP(camera_width) OP(camera_height) OP(camera_focal_px) OP(camera_height_m)                   \
  OP(camera_airlight_day) OP(camera_airlight_night) OP(camera_night_darken)                    \
  OP(camera_night_blur_sigma) OP(camera_fog_blur_sigma) OP(camera_rain_blur_sigma)             \
  OP(camera_rain_streaks_light) OP(camera_rain_streaks_heavy) OP(camera_noise_sigma)

inline void to_json(nlohmann::json& j, const WeatherPresets& p) {
  j = nlohmann::json{{"version", p.version},
                     {"light_rain", p.light_rain},
                     {"heavy_rain", p.heavy_rain},
                     {"fog", p.fog}};
#define WS_PUT(f) j[#f] = p.f;
  WS_PRESET_FIELDS(WS_PUT)
#undef WS_PUT
}

inline void from_json(const nlohmann::json& j, WeatherPresets& p) {
  j.at("version").get_to(p.version);
  if (p.version != 1) throw IoError("unsupported weather_presets version");
  j.at("light_rain").get_to(p.light_rain);
  j.at("heavy_rain").get_to(p.heavy_rain);
  j.at("fog").get_to(p.fog);
#define WS_GET(f) j.at(#f).get_to(p.f);
  WS_PRESET_FIELDS(WS_GET)
#undef WS_GET
}

#undef WS_PRESET_FIELDS

// ---------------------------------------------------------------------------
// Radar frame synthesis
// ---------------------------------------------------------------------------

struct RadarScatterer {
  double x = 0.0, y = 0.0;       // m
  double radial_velocity = 0.0;  // m/s
  double amplitude = 0.0;
  double phase = 0.0;            // rad

  double range() const { return std::hypot(x, y); }
  double azimuth() const { return std::atan2(y, x); }
};

// Sum of point-scatterer responses plus complex white noise:
//   s(c, m, n) = A exp(j (2 pi (f_b n T_s + f_D m T_r) + 2 pi d sin(az) c + phi))
// with f_b = 2 B R / (c0 T_chirp) and f_D = 2 v_r f_c / c0.
inline RadarDataCube synthesize_radar_cube(const RadarConfig& cfg,
                                           const std::vector<RadarScatterer>& scatterers,
                                           double noise_std, Rng noise_rng) {
  RadarDataCube cube = RadarDataCube::zeros(cfg);
  const int n_fast = cfg.samples_per_chirp();
  const int n_chirp = cfg.num_chirps;
  const int n_ch = cfg.num_channels;
  const double ts = 1.0 / cfg.sample_rate;
  const std::size_t total = cube.samples.size();

  // Accumulate on split real/imag planes; the complex inner product then
  // becomes four fused multiply-add streams.
  std::vector<double> acc_re(total, 0.0), acc_im(total, 0.0);
  std::vector<double> fast_re(n_fast), fast_im(n_fast);
  std::vector<cplx> chirp_rot(n_chirp), chan_rot(n_ch);

  bool warned = false;
  for (const auto& sc : scatterers) {
    const double r = sc.range();
    if (r >= cfg.max_unambiguous_range() && !warned) {
      std::cerr << "warning: scatterer at " << r
                << " m beyond unambiguous range; placement aliases\n";
      warned = true;
    }
    const double f_beat = 2.0 * cfg.bandwidth * r / (kSpeedOfLight * cfg.chirp_duration);
    const double f_dopp = 2.0 * sc.radial_velocity * cfg.center_frequency / kSpeedOfLight;
    const double psi = 2.0 * kPi * cfg.element_spacing * std::sin(sc.azimuth());

    const cplx wf = std::polar(1.0, 2.0 * kPi * f_beat * ts);
    const cplx wm = std::polar(1.0, 2.0 * kPi * f_dopp * cfg.chirp_repetition);
    const cplx wc = std::polar(1.0, psi);
    cplx acc = std::polar(sc.amplitude, sc.phase);
    for (int n = 0; n < n_fast; ++n) {
      fast_re[n] = acc.real();
      fast_im[n] = acc.imag();
      acc *= wf;
    }
    acc = cplx{1.0, 0.0};
    for (int m = 0; m < n_chirp; ++m) {
      chirp_rot[m] = acc;
      acc *= wm;
    }
    acc = cplx{1.0, 0.0};
    for (int c = 0; c < n_ch; ++c) {
      chan_rot[c] = acc;
      acc *= wc;
    }

    for (int c = 0; c < n_ch; ++c) {
      for (int m = 0; m < n_chirp; ++m) {
        const cplx coef = chan_rot[c] * chirp_rot[m];
        const double a = coef.real(), b = coef.imag();
        const std::size_t base = (static_cast<std::size_t>(c) * n_chirp + m) * n_fast;
        double* re = acc_re.data() + base;
        double* im = acc_im.data() + base;
        const double* ur = fast_re.data();
        const double* ui = fast_im.data();
        for (int n = 0; n < n_fast; ++n) {
          re[n] += a * ur[n] - b * ui[n];
          im[n] += a * ui[n] + b * ur[n];
        }
      }
    }
  }

  if (noise_std > 0.0) {
    for (std::size_t i = 0; i < total; ++i) {
      acc_re[i] += noise_rng.gaussian(0.0, noise_std);
      acc_im[i] += noise_rng.gaussian(0.0, noise_std);
    }
  }
  for (std::size_t i = 0; i < total; ++i) cube.samples[i] = cplx{acc_re[i], acc_im[i]};
  return cube;
}

namespace sim_stream {
// Sub-stream ids so optional effects never shift each other's draws.
inline constexpr std::uint64_t kRadarNoise = 101;
inline constexpr std::uint64_t kRadarVehicle = 102;
inline constexpr std::uint64_t kRadarStatic = 103;
inline constexpr std::uint64_t kRadarRain = 104;
inline constexpr std::uint64_t kLidarGround = 201;
inline constexpr std::uint64_t kLidarVehicle = 202;
inline constexpr std::uint64_t kLidarRing = 203;
inline constexpr std::uint64_t kLidarDroplets = 204;
inline constexpr std::uint64_t kLidarPuddles = 205;
inline constexpr std::uint64_t kCamera = 301;
}  // namespace sim_stream

inline std::vector<RadarScatterer> radar_scene_scatterers(const RadarConfig& cfg,
                                                          const Scenario& scenario,
                                                          const WeatherCondition& weather,
                                                          std::uint64_t frame_index,
                                                          const WeatherPresets& presets) {
  std::vector<RadarScatterer> out;
  const Rng base(scenario.seed);

  // Facility clutter: fixed per seed, zero velocity, strongly varied
  // amplitude. Placed every few decimeters so the static returns line the
  // whole range, the backbone every other detection clusters onto.
  {
    Rng rng = base.derive(sim_stream::kRadarStatic);
    const double far_edge = cfg.max_unambiguous_range() * 0.95;
    const double pitch = (far_edge - 1.0) / std::max(1, presets.radar_static_count);
    double r = 1.0;
    while (r < far_edge) {
      RadarScatterer s;
      const double az = rng.uniform(deg2rad(-25.0), deg2rad(25.0));
      s.x = r * std::cos(az);
      s.y = r * std::sin(az);
      const double u = rng.uniform(0.0, 1.0);
      const double rayleigh = std::sqrt(-std::log(std::max(1e-12, rng.next_double())));
      s.amplitude = (presets.radar_static_amp_min +
                     (presets.radar_static_amp_max - presets.radar_static_amp_min) * u * u) *
                    rayleigh *
                    std::min(presets.radar_range_gain_cap,
                             presets.radar_range_ref / std::max(0.5, r));
      s.phase = rng.uniform(0.0, 2.0 * kPi);
      out.push_back(s);
      r += pitch * rng.uniform(0.7, 1.3);
    }
  }

  // Vehicle: a tight cluster over the visible front face.
  const auto [dist, vel] = scenario.state_at_frame(frame_index);
  if (dist > 0.2 && dist < cfg.max_unambiguous_range()) {
    Rng rng = base.derive(sim_stream::kRadarVehicle, frame_index);
    const double base_count = presets.radar_vehicle_max_scatterers - 1.0 * dist;
    const double n_real = base_count * presets.radar_count_factor(weather) + rng.gaussian(0.0, 0.8);
    const int n = std::clamp(static_cast<int>(std::lround(n_real)), 5,
                             presets.radar_vehicle_max_scatterers);
    const double half_w = scenario.vehicle_box.extents.y / 2.0;
    for (int i = 0; i < n; ++i) {
      RadarScatterer s;
      s.x = dist + rng.uniform(0.0, 0.4);
      s.y = scenario.vehicle_box.center.y + rng.uniform(-half_w, half_w);
      s.radial_velocity = -vel + rng.gaussian(0.0, 0.02);
      s.amplitude = presets.radar_vehicle_amp * presets.radar_amp_factor(weather) *
                    rng.uniform(0.5, 1.0);
      s.amplitude *= std::min(presets.radar_range_gain_cap,
                              presets.radar_range_ref / std::max(0.5, s.range()));
      s.phase = rng.uniform(0.0, 2.0 * kPi);
      out.push_back(s);
    }
  }

  // Rain within the weather-dependent extent. Individual droplet ensembles
  // are resolvable at this range/velocity resolution; their occupancy of the
  // near-zero-velocity band is calibrated so the ordered statistic still
  // clears them while the flagged cells stay connected. Amplitudes fluctuate
  // Rayleigh-like and carry the radar-equation range weighting.
  if (weather.kind == WeatherKind::LightRain || weather.kind == WeatherKind::HeavyRain) {
    Rng rng = base.derive(sim_stream::kRadarRain, frame_index);
    const RainClutterModel& rain = presets.rain_model(weather);
    const double volume = rain.extent * (scenario.roi.y_max - scenario.roi.y_min) *
                          presets.rain_region_height;
    const int count = std::max(1, static_cast<int>(std::lround(
                                      rain.scatterer_density * volume * rng.uniform(0.95, 1.05))));
    const double amp_scale = std::pow(10.0, rain.reflectivity_scale / 20.0);
    for (int i = 0; i < count; ++i) {
      RadarScatterer s;
      s.x = rng.uniform(0.45, rain.extent);
      s.y = rng.uniform(scenario.roi.y_min + 0.2, scenario.roi.y_max - 0.2);
      const double sign = rng.next_double() < 0.5 ? -1.0 : 1.0;
      const double speed = std::clamp(std::fabs(rng.gaussian(rain.velocity_mean,
                                                             rain.velocity_std)),
                                      0.12, 3.0);
      s.radial_velocity = sign * speed;
      const double rayleigh = std::sqrt(-std::log(std::max(1e-12, rng.next_double())));
      s.amplitude = amp_scale * rayleigh *
                    std::min(presets.radar_range_gain_cap,
                             presets.radar_range_ref / std::max(0.5, s.range()));
      s.phase = rng.uniform(0.0, 2.0 * kPi);
      out.push_back(s);
    }

    // Splash and slow-drop returns carpet the rained-on range at near-zero
    // radial velocities, drifting gently from cell to cell; they are what
    // fuses the droplet returns and the static band into one near cluster.
    double cx = 0.22;
    double cv = rng.uniform(-0.3, 0.3);
    while (cx < rain.extent) {
      RadarScatterer s;
      s.x = cx;
      s.y = rng.uniform(scenario.roi.y_min + 0.2, scenario.roi.y_max - 0.2);
      s.radial_velocity = cv;
      const double rayleigh = std::sqrt(-std::log(std::max(1e-12, rng.next_double())));
      const double near_boost = cx < 1.5 ? 2.6 : 1.8;
      s.amplitude = near_boost * amp_scale * rayleigh *
                    std::min(presets.radar_range_gain_cap,
                             presets.radar_range_ref / std::max(0.5, cx));
      s.phase = rng.uniform(0.0, 2.0 * kPi);
      out.push_back(s);
      cx += rng.uniform(0.10, 0.185);
      cv += rng.uniform(-0.22, 0.22);
      if (cv > 0.5) cv = 0.5 - (cv - 0.5);
      if (cv < -0.5) cv = -0.5 - (cv + 0.5);
    }
  }
  return out;
}

inline RadarDataCube simulate_radar_frame(const RadarConfig& cfg, const Scenario& scenario,
                                          const WeatherCondition& weather,
                                          std::uint64_t frame_index,
                                          const WeatherPresets& presets = {}) {
  const auto scatterers = radar_scene_scatterers(cfg, scenario, weather, frame_index, presets);
  Rng noise = Rng(scenario.seed).derive(sim_stream::kRadarNoise, frame_index);
  return synthesize_radar_cube(cfg, scatterers, presets.radar_noise_std, noise);
}

// ---------------------------------------------------------------------------
// Lidar frame synthesis
// ---------------------------------------------------------------------------

// Survival and attenuation share the two-way transmission exp(-2 alpha R).
// A point is returned when it survives the transmission draw and its
// attenuated reflectivity clears the detector threshold.
inline PointCloud simulate_lidar_frame(const Scenario& scenario, const WeatherCondition& weather,
                                       std::uint64_t frame_index,
                                       const WeatherPresets& presets = {}) {
  PointCloud cloud;
  cloud.frame_index = frame_index;
  const Rng base(scenario.seed);
  const double alpha = presets.lidar_alpha(weather);
  const double floor_i = presets.fog.intensity_floor;
  const bool raining =
      weather.kind == WeatherKind::LightRain || weather.kind == WeatherKind::HeavyRain;

  // Puddle patches are a property of the run, not the frame.
  std::vector<std::array<double, 3>> puddles;  // x, y, radius
  if (raining) {
    Rng rng = base.derive(sim_stream::kLidarPuddles);
    const int n = weather.kind == WeatherKind::HeavyRain ? presets.lidar_puddle_count_heavy
                                                         : presets.lidar_puddle_count_light;
    for (int i = 0; i < n; ++i) {
      puddles.push_back({rng.uniform(scenario.roi.x_min, scenario.roi.x_max),
                         rng.uniform(scenario.roi.y_min, scenario.roi.y_max),
                         rng.uniform(presets.lidar_puddle_radius_min,
                                     presets.lidar_puddle_radius_max)});
    }
  }
  auto in_puddle = [&](double x, double y) {
    for (const auto& p : puddles) {
      const double dx = x - p[0], dy = y - p[1];
      if (dx * dx + dy * dy <= p[2] * p[2]) return true;
    }
    return false;
  };

  auto try_emit = [&](Rng& rng, double x, double y, double z, double reflectivity) {
    const double r = std::sqrt(x * x + y * y + z * z);
    const double trans = std::exp(-2.0 * alpha * r);
    if (rng.next_double() >= trans) return;  // absorbed or scattered away
    const double atten = reflectivity * trans;
    if (atten < presets.lidar_detection_threshold) return;
    double intensity = atten * (1.0 + rng.gaussian(0.0, presets.lidar_intensity_noise));
    intensity = std::max(intensity, floor_i);
    cloud.points.push_back({x, y, z, intensity});
  };

  const auto [dist, vel] = scenario.state_at_frame(frame_index);
  (void)vel;
  const double vehicle_half_w = scenario.vehicle_box.extents.y / 2.0;

  // Ground plane scan. The vehicle shadows the ground behind its front face
  // within its angular sector.
  {
    Rng rng = base.derive(sim_stream::kLidarGround, frame_index);
    const double h = presets.lidar_mount_height;
    const double el_step = deg2rad(presets.lidar_vfov_deg) / (presets.lidar_lines - 1);
    const double el_min = -deg2rad(presets.lidar_vfov_deg) / 2.0;
    const double az_step = deg2rad(presets.lidar_az_step_deg);
    for (int line = 0; line < presets.lidar_lines; ++line) {
      const double el = el_min + line * el_step;
      if (el >= -1e-6) continue;  // above horizon, no ground hit
      const double ground_range = h / std::tan(-el);
      if (ground_range > presets.lidar_max_range) continue;
      for (double az = -kPi / 2.0; az <= kPi / 2.0 + 1e-12; az += az_step) {
        const double x = ground_range * std::cos(az) + rng.gaussian(0.0, 0.01);
        const double y = ground_range * std::sin(az) + rng.gaussian(0.0, 0.01);
        const double z = rng.gaussian(0.0, 0.015);
        const double refl =
            presets.lidar_ground_reflectivity * (1.0 + rng.uniform(-0.15, 0.15));
        if (x > dist && std::fabs(y) <= vehicle_half_w + 0.05) {
          rng.next_double();  // occluded by the vehicle; keep streams aligned
          continue;
        }
        if (raining && in_puddle(x, y)) {
          rng.next_double();  // keep the stream aligned with the dry path
          continue;           // specular deflection, no return
        }
        try_emit(rng, x, y, z, refl);
      }
    }
  }

  // Vehicle front face, sampled on the sensor's angular grid so point counts
  // scale with solid angle.
  cloud.vehicle_box = scenario.vehicle_box_at(frame_index);
  if (dist > 0.5 && dist < presets.lidar_max_range) {
    Rng rng = base.derive(sim_stream::kLidarVehicle, frame_index);
    const double h = presets.lidar_mount_height;
    const double half_w = scenario.vehicle_box.extents.y / 2.0;
    const double top = scenario.vehicle_box.extents.z;
    const double ang = deg2rad(0.35);
    const double az_span = std::atan2(half_w, dist);
    const double el_lo = std::atan2(0.0 - h, dist);
    const double el_hi = std::atan2(top - h, dist);
    for (double az = -az_span; az <= az_span + 1e-12; az += ang) {
      for (double el = el_lo; el <= el_hi + 1e-12; el += ang) {
        const double y = dist * std::tan(az) + rng.gaussian(0.0, 0.005);
        const double z = h + dist * std::tan(el) + rng.gaussian(0.0, 0.005);
        if (std::fabs(y) > half_w || z < 0.0 || z > top) continue;
        const double x = dist + rng.uniform(0.0, 0.03);
        // Reflectivity is strongest at the face center (plates, body panels)
        // and falls off toward the edges.
        const double ny = y / half_w;
        const double nz = (z - top * 0.6) / (top * 0.5);
        const double refl = presets.lidar_vehicle_reflectivity *
                            (0.55 + 0.45 * std::exp(-(ny * ny + nz * nz))) *
                            (1.0 + rng.uniform(-0.05, 0.05));
        if (raining) {
          const double spray = weather.kind == WeatherKind::HeavyRain
                                   ? presets.lidar_spray_heavy
                                   : presets.lidar_spray_light;
          if (rng.next_double() < spray * std::exp(-z / presets.lidar_spray_height)) continue;
        }
        try_emit(rng, x, y, z, refl);
      }
    }
  }

  // Fog aerosol ring around the sensor; density scales with extinction.
  if (weather.kind == WeatherKind::Fog) {
    Rng rng = base.derive(sim_stream::kLidarRing, frame_index);
    const double scale = std::min(1.0, alpha / presets.fog.extinction);
    const int n = static_cast<int>(std::lround(presets.fog.ring_point_count * scale));
    for (int i = 0; i < n; ++i) {
      const double phi = rng.uniform(0.0, 2.0 * kPi);
      const double r = presets.fog.ring_radius + rng.gaussian(0.0, 0.03);
      const double z = rng.uniform(-0.1, 0.25);
      double intensity = 0.85 + rng.uniform(-0.06, 0.06);
      cloud.points.push_back({r * std::cos(phi), r * std::sin(phi), z, intensity});
    }
  }

  // Airborne droplets returned directly by the rain column.
  if (raining) {
    Rng rng = base.derive(sim_stream::kLidarDroplets, frame_index);
    const RainClutterModel& rain = presets.rain_model(weather);
    const int n = weather.kind == WeatherKind::HeavyRain ? presets.lidar_droplet_count_heavy
                                                         : presets.lidar_droplet_count_light;
    for (int i = 0; i < n; ++i) {
      const double x = rng.uniform(0.3, rain.extent);
      const double y = rng.uniform(scenario.roi.y_min, scenario.roi.y_max);
      const double z = rng.uniform(0.0, 1.8);
      try_emit(rng, x, y, z, presets.lidar_droplet_reflectivity);
    }
  }

  return cloud;
}

// ---------------------------------------------------------------------------
// Camera frame synthesis
// ---------------------------------------------------------------------------

namespace camera_detail {

inline double hash_noise(std::uint64_t seed, int x, int y) {
  return (splitmix64(seed ^ (static_cast<std::uint64_t>(x) << 32 ^ static_cast<std::uint64_t>(y))) >>
          11) *
         (1.0 / 9007199254740992.0);
}

inline void separable_gaussian_blur(Image& img, double sigma) {
  if (sigma <= 0.0) return;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double ksum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    ksum += kernel[i + radius];
  }
  for (auto& k : kernel) k /= ksum;

  Image tmp = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc[3] = {0, 0, 0};
      for (int i = -radius; i <= radius; ++i) {
        const int xi = std::clamp(x + i, 0, img.width - 1);
        const std::size_t p = img.idx(xi, y);
        acc[0] += kernel[i + radius] * img.pixels[p];
        acc[1] += kernel[i + radius] * img.pixels[p + 1];
        acc[2] += kernel[i + radius] * img.pixels[p + 2];
      }
      tmp.set(x, y, acc[0], acc[1], acc[2]);
    }
  }
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc[3] = {0, 0, 0};
      for (int i = -radius; i <= radius; ++i) {
        const int yi = std::clamp(y + i, 0, img.height - 1);
        const std::size_t p = tmp.idx(x, yi);
        acc[0] += kernel[i + radius] * tmp.pixels[p];
        acc[1] += kernel[i + radius] * tmp.pixels[p + 1];
        acc[2] += kernel[i + radius] * tmp.pixels[p + 2];
      }
      img.set(x, y, acc[0], acc[1], acc[2]);
    }
  }
}

}  // namespace camera_detail

// Projected 2D box of the vehicle front face for a frame.
inline Box2D camera_truth_box(const Scenario& scenario, std::uint64_t frame_index,
                              const WeatherPresets& presets = {}) {
  const auto [dist, vel] = scenario.state_at_frame(frame_index);
  (void)vel;
  const double f = presets.camera_focal_px;
  const int w = presets.camera_width, h = presets.camera_height;
  const double half_w = scenario.vehicle_box.extents.y / 2.0;
  const double top = scenario.vehicle_box.extents.z;
  const double d = std::max(dist, 0.5);
  const int x0 = static_cast<int>(std::lround(w / 2.0 - f * half_w / d));
  const int x1 = static_cast<int>(std::lround(w / 2.0 + f * half_w / d));
  const int y0 = static_cast<int>(std::lround(h / 2.0 - f * (top - presets.camera_height_m) / d));
  const int y1 = static_cast<int>(std::lround(h / 2.0 - f * (0.0 - presets.camera_height_m) / d));
  Box2D box{std::clamp(x0, 0, w - 1), std::clamp(y0, 0, h - 1), std::clamp(x1, 1, w),
            std::clamp(y1, 1, h)};
  if (box.x1 <= box.x0) box.x1 = box.x0 + 1;
  if (box.y1 <= box.y0) box.y1 = box.y0 + 1;
  return box;
}

inline Image simulate_camera_frame(const Scenario& scenario, const WeatherCondition& weather,
                                   std::uint64_t frame_index,
                                   const WeatherPresets& presets = {}) {
  const int W = presets.camera_width, H = presets.camera_height;
  const double f = presets.camera_focal_px;
  const double cam_h = presets.camera_height_m;
  Image img = Image::filled(W, H, 0, 0, 0);
  img.exposure_tag = weather.light;
  const auto [dist, vel] = scenario.state_at_frame(frame_index);
  (void)vel;
  Rng rng = Rng(scenario.seed).derive(sim_stream::kCamera, frame_index);

  // Scene radiance and per-pixel depth (day appearance).
  std::vector<double> depth(static_cast<std::size_t>(W) * H, 200.0);
  const int horizon = H / 2;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double r, g, b;
      if (y <= horizon) {
        const double t = static_cast<double>(y) / std::max(1, horizon);
        r = 0.55 + 0.18 * t;
        g = 0.60 + 0.16 * t;
        b = 0.68 + 0.12 * t;
      } else {
        const double d_row = f * cam_h / (y - horizon);
        depth[static_cast<std::size_t>(y) * W + x] = std::min(200.0, d_row);
        const double tex = camera_detail::hash_noise(scenario.seed, x / 2, y / 2);
        const double shade = 0.30 + 0.10 * std::exp(-d_row / 25.0);
        r = shade + 0.12 * tex;
        g = shade + 0.13 * tex;
        b = shade + 0.10 * tex;
      }
      img.set(x, y, r, g, b);
    }
  }

  // A few fixed dark posts for background structure.
  for (int k = 0; k < 4; ++k) {
    const double px = 28.0 + k * 62.0 + 8.0 * camera_detail::hash_noise(scenario.seed, k, 7);
    for (int y = horizon - 26; y < horizon + 4; ++y) {
      for (int x = static_cast<int>(px); x < static_cast<int>(px) + 4; ++x) {
        if (x >= 0 && x < W && y >= 0 && y < H) {
          img.set(x, y, 0.18, 0.18, 0.20);
          depth[static_cast<std::size_t>(y) * W + x] = 30.0;
        }
      }
    }
  }

  // Vehicle front face.
  const Box2D vb = camera_truth_box(scenario, frame_index, presets);
  const bool vehicle_visible = dist > 0.5 && dist < 60.0;
  if (vehicle_visible) {
    for (int y = vb.y0; y < vb.y1; ++y) {
      for (int x = vb.x0; x < vb.x1; ++x) {
        const double fy = (y - vb.y0) / std::max(1.0, static_cast<double>(vb.height()));
        const double fx = (x - vb.x0) / std::max(1.0, static_cast<double>(vb.width()));
        double r = 0.86, g = 0.86, b = 0.88;  // white body
        if (fy < 0.38 && fx > 0.14 && fx < 0.86) {
          r = g = 0.16;
          b = 0.20;  // windshield
        } else if (fy > 0.62 && fy < 0.80) {
          r = g = b = 0.45;  // grille / bumper band
        } else if (fy > 0.86 && (fx < 0.18 || fx > 0.82)) {
          r = g = b = 0.08;  // wheels
        }
        const double tex = camera_detail::hash_noise(scenario.seed ^ 0x5bd1u, x, y);
        img.set(x, y, clamp01(r + 0.03 * tex), clamp01(g + 0.03 * tex), clamp01(b + 0.03 * tex));
        depth[static_cast<std::size_t>(y) * W + x] = dist;
      }
    }
  }

  // Night: darken, then vehicle running lights.
  const bool night = weather.light == LightCondition::Night;
  if (night) {
    for (auto& p : img.pixels) p *= presets.camera_night_darken;
    if (vehicle_visible) {
      const int ly = vb.y0 + static_cast<int>(0.70 * vb.height());
      const int lx1 = vb.x0 + static_cast<int>(0.15 * vb.width());
      const int lx2 = vb.x0 + static_cast<int>(0.85 * vb.width());
      const int lr = std::max(1, vb.width() / 12);
      for (int y = ly - lr; y <= ly + lr; ++y) {
        for (int x = 0; x < W; ++x) {
          const bool near1 = (x - lx1) * (x - lx1) + (y - ly) * (y - ly) <= lr * lr;
          const bool near2 = (x - lx2) * (x - lx2) + (y - ly) * (y - ly) <= lr * lr;
          if ((near1 || near2) && y >= 0 && y < H) img.set(x, y, 0.95, 0.95, 0.88);
        }
      }
    }
  }

  // Haze: I = J t + A (1 - t), t = exp(-beta d) per pixel.
  if (weather.kind == WeatherKind::Fog) {
    const double beta = extinction_from_visibility(weather.fog_visibility);
    const double airlight = night ? presets.camera_airlight_night : presets.camera_airlight_day;
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const double t = std::exp(-beta * depth[static_cast<std::size_t>(y) * W + x]);
        const std::size_t p = img.idx(x, y);
        for (int c = 0; c < 3; ++c) {
          img.pixels[p + c] = img.pixels[p + c] * t + airlight * (1.0 - t);
        }
      }
    }
  }

  // Rain streaks.
  if (weather.kind == WeatherKind::LightRain || weather.kind == WeatherKind::HeavyRain) {
    const int n = weather.kind == WeatherKind::HeavyRain ? presets.camera_rain_streaks_heavy
                                                         : presets.camera_rain_streaks_light;
    for (int i = 0; i < n; ++i) {
      double x = rng.uniform(0.0, W - 1.0);
      double y = rng.uniform(0.0, H - 1.0);
      const double len = rng.uniform(6.0, 14.0);
      const double ang = deg2rad(70.0 + rng.uniform(-10.0, 10.0));
      const double dx = std::cos(ang), dy = std::sin(ang);
      const double bright = night ? 0.06 : 0.12;
      for (int s = 0; s < static_cast<int>(len); ++s) {
        const int xi = static_cast<int>(x), yi = static_cast<int>(y);
        if (xi >= 0 && xi < W && yi >= 0 && yi < H) {
          const std::size_t p = img.idx(xi, yi);
          for (int c = 0; c < 3; ++c) img.pixels[p + c] = clamp01(img.pixels[p + c] + bright);
        }
        x += dx;
        y += dy;
      }
    }
  }

  // Optical blur by condition, then sensor noise.
  double sigma = 0.0;
  if (night) sigma = std::max(sigma, presets.camera_night_blur_sigma);
  if (weather.kind == WeatherKind::Fog) sigma = std::max(sigma, presets.camera_fog_blur_sigma);
  if (weather.kind == WeatherKind::LightRain || weather.kind == WeatherKind::HeavyRain) {
    sigma = std::max(sigma, presets.camera_rain_blur_sigma);
  }
  camera_detail::separable_gaussian_blur(img, sigma);

  if (presets.camera_noise_sigma > 0.0) {
    for (auto& p : img.pixels) p = clamp01(p + rng.gaussian(0.0, presets.camera_noise_sigma));
  }
  return img;
}

// ---------------------------------------------------------------------------
// Dataset generation
// ---------------------------------------------------------------------------

struct DatasetCell {
  std::string condition;
  WeatherCondition weather;
  Scenario scenario;
};

struct ManifestEntry {
  std::string condition;
  std::string sensor;  // radar | lidar | camera
  std::uint64_t frame = 0;
  std::string path;
  std::string truth_path;
};

struct DatasetManifest {
  int version = 1;
  std::uint64_t frames_per_cell = 0;
  RadarConfig radar_config;
  WeatherPresets presets;
  std::vector<DatasetCell> cells;
  std::vector<ManifestEntry> entries;
};

inline void to_json(nlohmann::json& j, const DatasetCell& c) {
  j = nlohmann::json{{"condition", c.condition}, {"weather", c.weather},
                     {"scenario", c.scenario}};
}

inline void from_json(const nlohmann::json& j, DatasetCell& c) {
  j.at("condition").get_to(c.condition);
  j.at("weather").get_to(c.weather);
  j.at("scenario").get_to(c.scenario);
}

inline void to_json(nlohmann::json& j, const ManifestEntry& e) {
  j = nlohmann::json{{"condition", e.condition},
                     {"sensor", e.sensor},
                     {"frame", e.frame},
                     {"path", e.path},
                     {"truth", e.truth_path}};
}

inline void from_json(const nlohmann::json& j, ManifestEntry& e) {
  j.at("condition").get_to(e.condition);
  j.at("sensor").get_to(e.sensor);
  j.at("frame").get_to(e.frame);
  j.at("path").get_to(e.path);
  j.at("truth").get_to(e.truth_path);
}

inline void to_json(nlohmann::json& j, const DatasetManifest& m) {
  j = nlohmann::json{{"version", m.version},
                     {"frames_per_cell", m.frames_per_cell},
                     {"radar_config", m.radar_config},
                     {"presets", m.presets},
                     {"cells", m.cells},
                     {"entries", m.entries}};
}

inline void from_json(const nlohmann::json& j, DatasetManifest& m) {
  j.at("version").get_to(m.version);
  if (m.version != 1) throw IoError("unsupported manifest version");
  j.at("frames_per_cell").get_to(m.frames_per_cell);
  j.at("radar_config").get_to(m.radar_config);
  j.at("presets").get_to(m.presets);
  j.at("cells").get_to(m.cells);
  j.at("entries").get_to(m.entries);
}

// Ground-truth sidecar written next to each frame triplet.
inline nlohmann::json frame_truth_json(const DatasetCell& cell, std::uint64_t frame,
                                       const WeatherPresets& presets) {
  const auto [dist, vel] = cell.scenario.state_at_frame(frame);
  nlohmann::json j{{"frame", frame},
                   {"condition", cell.condition},
                   {"weather", cell.weather},
                   {"vehicle_box", cell.scenario.vehicle_box_at(frame)},
                   {"vehicle_distance", dist},
                   {"vehicle_velocity", vel}};
  double rain_extent = 0.0;
  if (cell.weather.kind == WeatherKind::LightRain) rain_extent = presets.light_rain.extent;
  if (cell.weather.kind == WeatherKind::HeavyRain) rain_extent = presets.heavy_rain.extent;
  j["rain_extent"] = rain_extent;
  return j;
}

// The standard eight-cell weather/light matrix around one scenario.
inline std::vector<DatasetCell> default_condition_matrix(const Scenario& scenario) {
  std::vector<DatasetCell> cells;
  for (const LightCondition l : {LightCondition::Day, LightCondition::Night}) {
    for (const auto& w : {WeatherCondition::dry(l), WeatherCondition::fog(l),
                          WeatherCondition::light_rain(l), WeatherCondition::heavy_rain(l)}) {
      cells.push_back({w.name(), w, scenario});
    }
  }
  return cells;
}

// Writes every frame of the matrix plus ground truth and the manifest.
// Frames are independent, so cells*frames are distributed over `threads`;
// outputs do not depend on the thread count.
inline DatasetManifest generate_dataset(const std::vector<DatasetCell>& matrix,
                                        std::uint64_t frames_per_cell,
                                        const std::filesystem::path& out_dir,
                                        const RadarConfig& radar_cfg = {},
                                        const WeatherPresets& presets = {}, int threads = 1) {
  if (frames_per_cell < 1) throw DomainError("generate_dataset: frames_per_cell must be >= 1");
  DatasetManifest manifest;
  manifest.frames_per_cell = frames_per_cell;
  manifest.radar_config = radar_cfg;
  manifest.presets = presets;
  manifest.cells = matrix;

  std::filesystem::create_directories(out_dir);

  struct Job {
    std::size_t cell;
    std::uint64_t frame;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < matrix.size(); ++c) {
    for (std::uint64_t fr = 0; fr < frames_per_cell; ++fr) jobs.push_back({c, fr});
  }

  auto run_job = [&](const Job& job) {
    const DatasetCell& cell = matrix[job.cell];
    const std::string base = cell.condition + "/";
    const std::string fr = std::to_string(job.frame);
    const auto cube = simulate_radar_frame(radar_cfg, cell.scenario, cell.weather, job.frame,
                                           presets);
    write_radar_cube(out_dir / (base + "radar/frame_" + fr + ".bin"), cube);
    const auto cloud = simulate_lidar_frame(cell.scenario, cell.weather, job.frame, presets);
    write_point_cloud_csv(out_dir / (base + "lidar/frame_" + fr + ".csv"), cloud);
    const auto img = simulate_camera_frame(cell.scenario, cell.weather, job.frame, presets);
    write_ppm(out_dir / (base + "camera/frame_" + fr + ".ppm"), img);
    write_text_file(out_dir / (base + "truth/frame_" + fr + ".json"),
                    frame_truth_json(cell, job.frame, presets).dump(2) + "\n");
  };

  const int nthreads = std::max(1, threads);
  if (nthreads == 1 || jobs.size() < 2) {
    for (const auto& job : jobs) run_job(job);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < nthreads; ++t) {
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= jobs.size()) return;
          run_job(jobs[i]);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  for (const auto& job : jobs) {
    const DatasetCell& cell = matrix[job.cell];
    const std::string fr = std::to_string(job.frame);
    const std::string truth = cell.condition + "/truth/frame_" + fr + ".json";
    manifest.entries.push_back(
        {cell.condition, "radar", job.frame, cell.condition + "/radar/frame_" + fr + ".bin", truth});
    manifest.entries.push_back(
        {cell.condition, "lidar", job.frame, cell.condition + "/lidar/frame_" + fr + ".csv", truth});
    manifest.entries.push_back(
        {cell.condition, "camera", job.frame, cell.condition + "/camera/frame_" + fr + ".ppm", truth});
  }

  nlohmann::json mj = manifest;
  write_text_file(out_dir / "manifest.json", mj.dump(2) + "\n");
  return manifest;
}

inline DatasetManifest load_manifest(const std::filesystem::path& dataset_dir) {
  const auto j = nlohmann::json::parse(read_text_file(dataset_dir / "manifest.json"));
  return j.get<DatasetManifest>();
}

}  // namespace weathersense
