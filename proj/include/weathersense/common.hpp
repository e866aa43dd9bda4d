#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace weathersense {

// Propagation speed used throughout the radar arithmetic. The round value
// keeps derived quantities (0.1 m range resolution at 1.5 GHz bandwidth)
// exact, which is the convention the sensor datasheet numbers follow.
inline constexpr double kSpeedOfLight = 3.0e8;  // m/s

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// Thrown when an argument violates a documented precondition.
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Thrown on file-format or filesystem failures.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace weathersense
