#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "weathersense/camera_analysis.hpp"
#include "weathersense/lidar_analysis.hpp"
#include "weathersense/radar_dsp.hpp"

namespace weathersense {

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

inline void ensure_parent_dir(const std::filesystem::path& p) {
  const auto dir = p.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  ensure_parent_dir(path);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Stable numeric formatting for CSV output.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

// ---------------------------------------------------------------------------
// Radar cube binary format
// ---------------------------------------------------------------------------
// 32-byte header: magic "WSRDCUBE" | u32 fast | u32 chirps | u32 channels |
// u32 dtype (1 = complex64) | 8 reserved bytes. Payload: float32 (re, im)
// pairs, little-endian, ordered [channel][chirp][fast-time].

inline constexpr char kCubeMagic[8] = {'W', 'S', 'R', 'D', 'C', 'U', 'B', 'E'};
inline constexpr std::uint32_t kCubeDtypeComplex64 = 1;

inline void write_radar_cube(const std::filesystem::path& path, const RadarDataCube& cube) {
  if (!cube.dims_valid()) throw IoError("write_radar_cube: cube dims mismatch");
  ensure_parent_dir(path);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());

  char header[32] = {};
  std::memcpy(header, kCubeMagic, 8);
  const std::uint32_t dims[4] = {static_cast<std::uint32_t>(cube.config.samples_per_chirp()),
                                 static_cast<std::uint32_t>(cube.config.num_chirps),
                                 static_cast<std::uint32_t>(cube.config.num_channels),
                                 kCubeDtypeComplex64};
  std::memcpy(header + 8, dims, 16);
  f.write(header, 32);

  std::vector<float> payload;
  payload.reserve(cube.samples.size() * 2);
  for (const auto& s : cube.samples) {
    payload.push_back(static_cast<float>(s.real()));
    payload.push_back(static_cast<float>(s.imag()));
  }
  f.write(reinterpret_cast<const char*>(payload.data()),
          static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!f) throw IoError("write failed: " + path.string());
}

// Reads the sample block; the caller supplies the RadarConfig the cube was
// generated with (persisted alongside in the manifest) and dims are checked.
inline RadarDataCube read_radar_cube(const std::filesystem::path& path, const RadarConfig& cfg) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  char header[32];
  f.read(header, 32);
  if (!f || std::memcmp(header, kCubeMagic, 8) != 0) {
    throw IoError("bad radar cube header: " + path.string());
  }
  std::uint32_t dims[4];
  std::memcpy(dims, header + 8, 16);
  if (dims[3] != kCubeDtypeComplex64) throw IoError("unsupported cube dtype: " + path.string());
  if (dims[0] != static_cast<std::uint32_t>(cfg.samples_per_chirp()) ||
      dims[1] != static_cast<std::uint32_t>(cfg.num_chirps) ||
      dims[2] != static_cast<std::uint32_t>(cfg.num_channels)) {
    throw IoError("cube dims do not match config: " + path.string());
  }
  const std::size_t count = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  std::vector<float> payload(count * 2);
  f.read(reinterpret_cast<char*>(payload.data()),
         static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!f) throw IoError("truncated cube payload: " + path.string());

  RadarDataCube cube;
  cube.config = cfg;
  cube.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    cube.samples[i] = cplx{payload[2 * i], payload[2 * i + 1]};
  }
  return cube;
}

// ---------------------------------------------------------------------------
// Point cloud CSV
// ---------------------------------------------------------------------------

inline void write_point_cloud_csv(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ostringstream ss;
  ss << "x,y,z,intensity\n";
  for (const auto& p : cloud.points) {
    ss << fmt_double(p.x) << ',' << fmt_double(p.y) << ',' << fmt_double(p.z) << ','
       << fmt_double(p.intensity) << '\n';
  }
  write_text_file(path, ss.str());
}

inline PointCloud read_point_cloud_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path.string());
  PointCloud cloud;
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty point cloud file: " + path.string());
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cols = split_csv_line(line);
    if (cols.size() != 4) throw IoError("bad point cloud row in " + path.string());
    LidarPoint p;
    p.x = std::stod(cols[0]);
    p.y = std::stod(cols[1]);
    p.z = std::stod(cols[2]);
    p.intensity = std::stod(cols[3]);
    cloud.points.push_back(p);
  }
  return cloud;
}

// ---------------------------------------------------------------------------
// Detections CSV
// ---------------------------------------------------------------------------

inline void write_detections_csv(const std::filesystem::path& path,
                                 const std::vector<Detection>& detections) {
  std::ostringstream ss;
  ss << "range,velocity,azimuth,x,y,z,power_db\n";
  for (const auto& d : detections) {
    ss << fmt_double(d.range) << ',' << fmt_double(d.radial_velocity) << ','
       << fmt_double(d.azimuth) << ',' << fmt_double(d.position.x) << ','
       << fmt_double(d.position.y) << ',' << fmt_double(d.position.z) << ','
       << fmt_double(d.power_db) << '\n';
  }
  write_text_file(path, ss.str());
}

// ---------------------------------------------------------------------------
// PPM / PGM rasters (binary, 8-bit)
// ---------------------------------------------------------------------------

inline std::uint8_t quantize8(double v) {
  const double c = clamp01(v);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

inline void write_ppm(const std::filesystem::path& path, const Image& img) {
  if (!img.valid()) throw IoError("write_ppm: invalid image");
  ensure_parent_dir(path);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      row[3 * x + 0] = quantize8(img.r(x, y));
      row[3 * x + 1] = quantize8(img.g(x, y));
      row[3 * x + 2] = quantize8(img.b(x, y));
    }
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!f) throw IoError("write failed: " + path.string());
}

inline void skip_pnm_whitespace(std::istream& f) {
  for (;;) {
    int c = f.peek();
    if (c == '#') {
      std::string comment;
      std::getline(f, comment);
    } else if (std::isspace(c)) {
      f.get();
    } else {
      break;
    }
  }
}

inline Image read_ppm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  std::string magic;
  f >> magic;
  if (magic != "P6") throw IoError("not a P6 ppm: " + path.string());
  int w, h, maxv;
  skip_pnm_whitespace(f);
  f >> w;
  skip_pnm_whitespace(f);
  f >> h;
  skip_pnm_whitespace(f);
  f >> maxv;
  if (!f || maxv != 255 || w < 1 || h < 1) throw IoError("bad ppm header: " + path.string());
  f.get();  // single whitespace after header
  Image img = Image::filled(w, h, 0, 0, 0);
  std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h * 3);
  f.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!f) throw IoError("truncated ppm: " + path.string());
  for (std::size_t i = 0; i < data.size(); ++i) img.pixels[i] = data[i] / 255.0;
  return img;
}

inline void write_pgm(const std::filesystem::path& path, const std::vector<std::uint8_t>& gray,
                      int width, int height) {
  if (static_cast<std::size_t>(width) * height != gray.size()) {
    throw IoError("write_pgm: size mismatch");
  }
  ensure_parent_dir(path);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << "P5\n" << width << " " << height << "\n255\n";
  f.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

inline Image image_from_gray(const std::vector<std::uint8_t>& gray, int width, int height) {
  Image img = Image::filled(width, height, 0, 0, 0);
  for (int i = 0; i < width * height; ++i) {
    const double v = gray[i] / 255.0;
    img.pixels[3 * i] = img.pixels[3 * i + 1] = img.pixels[3 * i + 2] = v;
  }
  return img;
}

// Log-power export of a range-Doppler map for visual inspection. Fixed
// 60 dB display span below the map peak.
inline void write_map_pgm(const std::filesystem::path& path, const RangeDopplerMap& map) {
  double peak = 0.0;
  for (double c : map.cells) peak = std::max(peak, c);
  const double peak_db = linear_to_db(std::max(peak, 1e-300));
  const double span_db = 60.0;
  std::vector<std::uint8_t> gray(map.cells.size());
  for (std::size_t i = 0; i < map.cells.size(); ++i) {
    const double db = linear_to_db(std::max(map.cells[i], 1e-300));
    gray[i] = quantize8((db - (peak_db - span_db)) / span_db);
  }
  write_pgm(path, gray, map.num_velocity_bins, map.num_range_bins);
}

}  // namespace weathersense
