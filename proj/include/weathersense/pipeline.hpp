#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "weathersense/camera_analysis.hpp"
#include "weathersense/core_types.hpp"
#include "weathersense/fuzzy.hpp"
#include "weathersense/ga.hpp"
#include "weathersense/gridmap.hpp"
#include "weathersense/io.hpp"
#include "weathersense/labeling.hpp"
#include "weathersense/lidar_analysis.hpp"
#include "weathersense/radar_dsp.hpp"
#include "weathersense/scene_sim.hpp"

namespace weathersense {

// ---------------------------------------------------------------------------
// Feature adapters: fixed alphabetical feature order per sensor tree.
// Dispersion is a label-side measurement (it needs the ground-truth box), so
// the lidar tree consumes only the truth-free fields.
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& radar_feature_names() {
  static const std::vector<std::string> names{
      "density_mean",       "density_std",           "detection_count",
      "intensity_mean",     "intensity_std",         "nearest_cluster_size",
      "rain_extent_estimate", "total_cluster_cells", "velocity_std"};
  return names;
}

inline std::vector<double> radar_feature_values(const RadarFeatureVector& f) {
  return {f.density_mean,        f.density_std,         f.detection_count,
          f.intensity_mean,      f.intensity_std,       f.nearest_cluster_size,
          f.rain_extent_estimate, f.total_cluster_cells, f.velocity_std};
}

inline const std::vector<std::string>& lidar_feature_names() {
  static const std::vector<std::string> names{
      "delta_max_distance", "delta_min_distance", "density_mean",
      "density_std",        "ground_count",       "intensity_mean",
      "intensity_std",      "max_distance",       "min_distance"};
  return names;
}

inline std::vector<double> lidar_feature_values(const LidarFeatureVector& f) {
  return {f.delta_max_distance, f.delta_min_distance, f.density_mean,
          f.density_std,        f.ground_count,       f.intensity_mean,
          f.intensity_std,      f.max_distance,       f.min_distance};
}

inline const std::vector<std::string>& camera_feature_names() {
  static const std::vector<std::string> names{"brightness", "contrast", "sharpness"};
  return names;
}

inline std::vector<double> camera_feature_values(const CameraFeatureVector& f) {
  return {f.brightness, f.contrast, f.sharpness};
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

struct FeatureRow {
  std::string sensor;
  std::string condition;
  std::uint64_t frame = 0;
  int bin = -1;  // -1 for camera
  bool valid = true;
  std::map<std::string, double> values;  // missing key = empty cell
};

struct ExtractOptions {
  bool lenient = false;
  int threads = 1;
  RadarDspParams dsp;
};

struct ExtractionResult {
  std::vector<FeatureRow> rows;
  std::vector<LabeledSample> samples;
  BinThresholds radar_thresholds;
  BinThresholds lidar_thresholds;
  CameraLabelThresholds camera_thresholds;
  std::vector<std::string> missing_files;
};

namespace pipeline_detail {

// Detections attributable to the test vehicle: inside the (slightly padded)
// truth box footprint and matching its radial velocity.
inline int vehicle_detection_count(const std::vector<Detection>& detections,
                                   const BoundingBox3D& box, double vehicle_velocity,
                                   double velocity_res) {
  BoundingBox3D padded = box;
  padded.extents.x += 0.6;
  padded.extents.y += 0.6;
  padded.extents.z += 10.0;  // the radar chain reports z = 0
  const double v_gate = std::max(3.0 * velocity_res, 0.3);
  int count = 0;
  for (const auto& d : detections) {
    if (!padded.contains(d.position)) continue;
    if (std::fabs(d.radial_velocity - (-vehicle_velocity)) > v_gate) continue;
    ++count;
  }
  return count;
}

struct FrameTruth {
  BoundingBox3D vehicle_box;
  double vehicle_distance = 0.0;
  double vehicle_velocity = 0.0;
  WeatherCondition weather;
  double rain_extent = 0.0;
};

inline FrameTruth load_truth(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_text_file(path));
  FrameTruth t;
  j.at("vehicle_box").get_to(t.vehicle_box);
  j.at("vehicle_distance").get_to(t.vehicle_distance);
  j.at("vehicle_velocity").get_to(t.vehicle_velocity);
  j.at("weather").get_to(t.weather);
  j.at("rain_extent").get_to(t.rain_extent);
  return t;
}

struct FrameExtraction {
  std::string condition;
  std::uint64_t frame = 0;
  FrameTruth truth;
  bool ok = false;
  std::string missing;

  std::vector<RadarFeatureVector> radar_bins;
  int radar_vehicle_count = 0;
  std::vector<LidarFeatureVector> lidar_bins;
  std::optional<double> lidar_dispersion;
  std::optional<MinMaxDistance> lidar_minmax;
  bool lidar_cloud_empty = true;
  CameraFeatureVector camera;
  double camera_confidence = 0.0;
  double camera_iou = 0.0;
};

}  // namespace pipeline_detail

// Runs the full measurement chain over one dataset frame triplet.
inline pipeline_detail::FrameExtraction extract_frame(const DatasetManifest& manifest,
                                                      const std::filesystem::path& dataset_dir,
                                                      const DatasetCell& cell,
                                                      std::uint64_t frame,
                                                      const RadarDspParams& dsp) {
  pipeline_detail::FrameExtraction out;
  out.condition = cell.condition;
  out.frame = frame;
  const std::string fr = std::to_string(frame);
  const auto truth_path = dataset_dir / cell.condition / "truth" / ("frame_" + fr + ".json");
  out.truth = pipeline_detail::load_truth(truth_path);

  // Radar chain.
  const auto cube = read_radar_cube(
      dataset_dir / cell.condition / "radar" / ("frame_" + fr + ".bin"), manifest.radar_config);
  const ProcessedRadarFrame processed = process_radar_frame(cube, dsp);
  out.radar_bins = radar_features(processed.detections, processed.map, processed.clusters,
                                  out.truth.vehicle_box);
  out.radar_vehicle_count = pipeline_detail::vehicle_detection_count(
      processed.detections, out.truth.vehicle_box, out.truth.vehicle_velocity,
      processed.map.velocity_resolution());

  // Lidar metrics; deltas need the previous frame when it exists.
  const auto cloud = read_point_cloud_csv(dataset_dir / cell.condition / "lidar" /
                                          ("frame_" + fr + ".csv"));
  PointCloud prev;
  bool have_prev = false;
  if (frame > 0) {
    const auto prev_path =
        dataset_dir / cell.condition / "lidar" / ("frame_" + std::to_string(frame - 1) + ".csv");
    if (std::filesystem::exists(prev_path)) {
      prev = read_point_cloud_csv(prev_path);
      have_prev = true;
    }
  }
  out.lidar_bins = lidar_features(cloud, have_prev ? &prev : nullptr, std::nullopt);
  out.lidar_dispersion = dispersion(cloud, out.truth.vehicle_box);
  out.lidar_minmax = min_max_distance(cloud);
  out.lidar_cloud_empty = cloud.points.empty();

  // Camera metrics plus the proxy detector against a clean-condition
  // template of the same pose.
  const auto img =
      read_ppm(dataset_dir / cell.condition / "camera" / ("frame_" + fr + ".ppm"));
  out.camera = camera_features(img);
  const Box2D truth_box = camera_truth_box(cell.scenario, frame, manifest.presets);
  const Image clean = simulate_camera_frame(cell.scenario, WeatherCondition::dry(), frame,
                                            manifest.presets);
  Image templ = Image::filled(std::max(3, truth_box.width()), std::max(3, truth_box.height()),
                              0, 0, 0);
  for (int y = 0; y < templ.height; ++y) {
    for (int x = 0; x < templ.width; ++x) {
      const int sx = std::min(clean.width - 1, truth_box.x0 + x);
      const int sy = std::min(clean.height - 1, truth_box.y0 + y);
      templ.set(x, y, clean.r(sx, sy), clean.g(sx, sy), clean.b(sx, sy));
    }
  }
  const ProxyDetection det = proxy_detect(img, templ, truth_box);
  out.camera_confidence = det.confidence;
  out.camera_iou = det.iou;

  out.ok = true;
  return out;
}

inline ExtractionResult extract_dataset(const DatasetManifest& manifest,
                                        const std::filesystem::path& dataset_dir,
                                        const ExtractOptions& options = {}) {
  struct Job {
    std::size_t cell;
    std::uint64_t frame;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < manifest.cells.size(); ++c) {
    for (std::uint64_t fr = 0; fr < manifest.frames_per_cell; ++fr) jobs.push_back({c, fr});
  }
  std::vector<pipeline_detail::FrameExtraction> frames(jobs.size());

  auto run_job = [&](std::size_t i) {
    const Job& job = jobs[i];
    try {
      frames[i] = extract_frame(manifest, dataset_dir, manifest.cells[job.cell], job.frame,
                                options.dsp);
    } catch (const IoError& e) {
      frames[i].condition = manifest.cells[job.cell].condition;
      frames[i].frame = job.frame;
      frames[i].ok = false;
      frames[i].missing = e.what();
    }
  };

  const int nthreads = std::max(1, options.threads);
  if (nthreads == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) run_job(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < nthreads; ++t) {
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= jobs.size()) return;
          run_job(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  ExtractionResult result;
  for (const auto& fe : frames) {
    if (!fe.ok) result.missing_files.push_back(fe.missing);
  }
  if (!result.missing_files.empty() && !options.lenient) {
    std::string msg = "extract: missing or corrupt frames:";
    for (const auto& m : result.missing_files) msg += "\n  " + m;
    throw IoError(msg);
  }

  // Dry-condition references for threshold fitting.
  std::vector<std::vector<double>> dry_radar_counts(kNumDistanceBins);
  std::vector<std::vector<double>> dry_lidar_dispersion(kNumDistanceBins);
  for (const auto& fe : frames) {
    if (!fe.ok || fe.truth.weather.kind != WeatherKind::Dry) continue;
    const int bin = distance_bin_of(fe.truth.vehicle_distance);
    if (bin < 0) continue;
    dry_radar_counts[bin].push_back(fe.radar_vehicle_count);
    if (fe.lidar_dispersion) dry_lidar_dispersion[bin].push_back(*fe.lidar_dispersion);
  }
  const bool have_dry = std::any_of(dry_radar_counts.begin(), dry_radar_counts.end(),
                                    [](const auto& v) { return !v.empty(); });
  if (have_dry) {
    result.radar_thresholds = fit_bin_thresholds(dry_radar_counts, 0.8, 0.35, true);
    result.lidar_thresholds = fit_bin_thresholds(dry_lidar_dispersion, 0.8, 0.35, false);
  }

  // Feature rows and labeled samples, in deterministic order.
  for (const auto& fe : frames) {
    if (!fe.ok) continue;
    const int vehicle_bin = distance_bin_of(fe.truth.vehicle_distance);

    for (int b = 0; b < kNumDistanceBins; ++b) {
      const RadarFeatureVector& f = fe.radar_bins[b];
      FeatureRow row{"radar", fe.condition, fe.frame, b, f.valid, {}};
      const auto vals = radar_feature_values(f);
      for (std::size_t i = 0; i < vals.size(); ++i) row.values[radar_feature_names()[i]] = vals[i];
      result.rows.push_back(std::move(row));
    }
    for (int b = 0; b < kNumDistanceBins; ++b) {
      const LidarFeatureVector& f = fe.lidar_bins[b];
      FeatureRow row{"lidar", fe.condition, fe.frame, b, f.valid, {}};
      if (!fe.lidar_cloud_empty) {
        const auto vals = lidar_feature_values(f);
        for (std::size_t i = 0; i < vals.size(); ++i) {
          row.values[lidar_feature_names()[i]] = vals[i];
        }
        // Dispersion belongs to the vehicle's bin; its absence is an
        // explicit empty cell rather than zero.
        if (b == vehicle_bin && fe.lidar_dispersion) {
          row.values["dispersion"] = *fe.lidar_dispersion;
        }
      }
      result.rows.push_back(std::move(row));
    }
    {
      FeatureRow row{"camera", fe.condition, fe.frame, -1, true, {}};
      const auto vals = camera_feature_values(fe.camera);
      for (std::size_t i = 0; i < vals.size(); ++i) {
        row.values[camera_feature_names()[i]] = vals[i];
      }
      row.values["proxy_confidence"] = fe.camera_confidence;
      row.values["proxy_iou"] = fe.camera_iou;
      result.rows.push_back(std::move(row));
    }

    if (have_dry && vehicle_bin >= 0) {
      LabeledSample radar;
      radar.sensor = "radar";
      radar.distance_bin = vehicle_bin;
      radar.features = radar_feature_values(fe.radar_bins[vehicle_bin]);
      radar.label = label_radar(fe.radar_vehicle_count, fe.truth.vehicle_distance,
                                result.radar_thresholds);
      radar.provenance = {fe.condition, fe.frame};
      radar.raw_measurement = fe.radar_vehicle_count;
      result.samples.push_back(std::move(radar));

      LabeledSample lidar;
      lidar.sensor = "lidar";
      lidar.distance_bin = vehicle_bin;
      lidar.features = lidar_feature_values(fe.lidar_bins[vehicle_bin]);
      lidar.label = label_lidar(fe.lidar_dispersion, vehicle_bin, result.lidar_thresholds);
      lidar.provenance = {fe.condition, fe.frame};
      lidar.raw_measurement = fe.lidar_dispersion.value_or(0.0);
      result.samples.push_back(std::move(lidar));
    }
    {
      LabeledSample cam;
      cam.sensor = "camera";
      cam.distance_bin = -1;
      cam.features = camera_feature_values(fe.camera);
      cam.label = label_camera(fe.camera_confidence, fe.camera_iou, result.camera_thresholds);
      cam.provenance = {fe.condition, fe.frame};
      cam.raw_measurement = fe.camera_confidence * fe.camera_iou;
      result.samples.push_back(std::move(cam));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Feature / label CSV round trip
// ---------------------------------------------------------------------------

inline std::string fmt_double_exact(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline const std::vector<std::string>& feature_csv_columns() {
  static const std::vector<std::string> cols{
      "brightness",          "contrast",           "delta_max_distance",
      "delta_min_distance",  "density_mean",       "density_std",
      "detection_count",     "dispersion",         "ground_count",
      "intensity_mean",      "intensity_std",      "max_distance",
      "min_distance",        "nearest_cluster_size", "proxy_confidence",
      "proxy_iou",           "rain_extent_estimate", "sharpness",
      "total_cluster_cells", "velocity_std"};
  return cols;
}

inline void write_features_csv(const std::filesystem::path& path,
                               const std::vector<FeatureRow>& rows) {
  std::ostringstream ss;
  ss << "sensor,condition,frame,bin,valid";
  for (const auto& c : feature_csv_columns()) ss << ',' << c;
  ss << '\n';
  for (const auto& r : rows) {
    ss << r.sensor << ',' << r.condition << ',' << r.frame << ','
       << (r.bin >= 0 ? std::to_string(r.bin) : "") << ',' << (r.valid ? 1 : 0);
    for (const auto& c : feature_csv_columns()) {
      ss << ',';
      const auto it = r.values.find(c);
      if (it != r.values.end()) ss << fmt_double_exact(it->second);
    }
    ss << '\n';
  }
  write_text_file(path, ss.str());
}

inline std::vector<FeatureRow> read_features_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty features csv: " + path.string());
  const auto header = split_csv_line(line);
  std::vector<FeatureRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cols = split_csv_line(line);
    if (cols.size() != header.size()) throw IoError("bad features row in " + path.string());
    FeatureRow r;
    r.sensor = cols[0];
    r.condition = cols[1];
    r.frame = std::stoull(cols[2]);
    r.bin = cols[3].empty() ? -1 : std::stoi(cols[3]);
    r.valid = cols[4] == "1";
    for (std::size_t i = 5; i < cols.size(); ++i) {
      if (!cols[i].empty()) r.values[header[i]] = std::stod(cols[i]);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void write_labels_csv(const std::filesystem::path& path,
                             const std::vector<LabeledSample>& samples) {
  std::ostringstream ss;
  ss << "sensor,condition,frame,bin,label,score,measurement\n";
  for (const auto& s : samples) {
    ss << s.sensor << ',' << s.provenance.condition << ',' << s.provenance.frame << ','
       << (s.distance_bin >= 0 ? std::to_string(s.distance_bin) : "") << ','
       << to_string(s.label.grade) << ',' << fmt_double_exact(s.label.score) << ','
       << fmt_double_exact(s.raw_measurement) << '\n';
  }
  write_text_file(path, ss.str());
}

struct LabelRow {
  std::string sensor;
  std::string condition;
  std::uint64_t frame = 0;
  int bin = -1;
  PerformanceLabel label;
  double measurement = 0.0;
};

inline std::vector<LabelRow> read_labels_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty labels csv: " + path.string());
  std::vector<LabelRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto cols = split_csv_line(line);
    if (cols.size() != 7) throw IoError("bad labels row in " + path.string());
    LabelRow r;
    r.sensor = cols[0];
    r.condition = cols[1];
    r.frame = std::stoull(cols[2]);
    r.bin = cols[3].empty() ? -1 : std::stoi(cols[3]);
    Grade g = Grade::Poor;
    if (cols[4] == "good") g = Grade::Good;
    else if (cols[4] == "moderate") g = Grade::Moderate;
    else if (cols[4] != "poor") throw IoError("bad grade in " + path.string());
    r.label = {g, std::stod(cols[5])};
    r.measurement = std::stod(cols[6]);
    rows.push_back(std::move(r));
  }
  return rows;
}

// Join features.csv and labels.csv back into training samples.
inline std::vector<LabeledSample> join_samples(const std::vector<FeatureRow>& features,
                                               const std::vector<LabelRow>& labels) {
  std::map<std::tuple<std::string, std::string, std::uint64_t, int>, const FeatureRow*> index;
  for (const auto& f : features) {
    index[{f.sensor, f.condition, f.frame, f.bin}] = &f;
  }
  std::vector<LabeledSample> samples;
  for (const auto& l : labels) {
    const auto it = index.find({l.sensor, l.condition, l.frame, l.bin});
    if (it == index.end()) continue;
    const FeatureRow& f = *it->second;
    const std::vector<std::string>* names = nullptr;
    if (l.sensor == "radar") names = &radar_feature_names();
    else if (l.sensor == "lidar") names = &lidar_feature_names();
    else names = &camera_feature_names();
    LabeledSample s;
    s.sensor = l.sensor;
    s.distance_bin = l.bin;
    for (const auto& n : *names) {
      const auto vit = f.values.find(n);
      s.features.push_back(vit != f.values.end() ? vit->second : 0.0);
    }
    s.label = l.label;
    s.provenance = {l.condition, l.frame};
    s.raw_measurement = l.measurement;
    samples.push_back(std::move(s));
  }
  return samples;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainOptions {
  GAConfig ga;
  double holdout_fraction = 0.2;
  std::uint64_t split_seed = 17;
};

struct TreeTrainReport {
  std::string sensor;
  int distance_bin = -1;
  int train_size = 0;
  int holdout_size = 0;
  double best_fitness = 0.0;
  double holdout_accuracy = 1.0;
  std::array<std::array<int, 3>, 3> confusion{};  // [truth][predicted]
  std::vector<double> history;
  bool degenerate = false;
};

struct TrainResult {
  FuzzyModel model;
  std::vector<TreeTrainReport> reports;
};

inline TrainResult train_model(const std::vector<LabeledSample>& samples,
                               const TrainOptions& options = {}) {
  TrainResult result;

  struct TreeKey {
    std::string sensor;
    int bin;
  };
  std::vector<TreeKey> keys;
  for (int b = 0; b < kNumDistanceBins; ++b) keys.push_back({"radar", b});
  for (int b = 0; b < kNumDistanceBins; ++b) keys.push_back({"lidar", b});
  keys.push_back({"camera", -1});

  for (const auto& key : keys) {
    std::vector<LabeledSample> subset;
    for (const auto& s : samples) {
      if (s.sensor == key.sensor && s.distance_bin == key.bin) subset.push_back(s);
    }
    if (subset.empty()) continue;

    const std::vector<std::string>& names = key.sensor == "radar"   ? radar_feature_names()
                                            : key.sensor == "lidar" ? lidar_feature_names()
                                                                    : camera_feature_names();

    // Deterministic shuffled split.
    Rng rng = Rng(options.split_seed).derive(std::hash<std::string>{}(key.sensor), key.bin + 1);
    std::vector<std::size_t> order(subset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.next_below(i)]);
    }
    const std::size_t holdout_n = static_cast<std::size_t>(
        std::floor(options.holdout_fraction * static_cast<double>(subset.size())));
    std::vector<LabeledSample> train_set, holdout_set;
    for (std::size_t i = 0; i < order.size(); ++i) {
      (i < holdout_n ? holdout_set : train_set).push_back(subset[order[i]]);
    }
    if (train_set.empty()) {
      train_set = holdout_set;
      holdout_set.clear();
    }

    FuzzyTree tree_template = FuzzyTree::make_default(key.sensor, key.bin, names);
    std::vector<std::vector<double>> feat;
    for (const auto& s : train_set) feat.push_back(s.features);
    tree_template.norms = FeatureNorms::fit(feat);

    GAConfig ga = options.ga;
    ga.seed = splitmix64(options.ga.seed ^ (std::hash<std::string>{}(key.sensor) + key.bin + 7));
    const EvolveResult evo = evolve(ga, tree_template, train_set);
    FuzzyTree tree = decode_chromosome(evo.best, tree_template);

    TreeTrainReport report;
    report.sensor = key.sensor;
    report.distance_bin = key.bin;
    report.train_size = static_cast<int>(train_set.size());
    report.holdout_size = static_cast<int>(holdout_set.size());
    report.best_fitness = evo.best_fitness;
    report.history = evo.history;
    report.degenerate = evo.degenerate;
    const auto& eval_set = holdout_set.empty() ? train_set : holdout_set;
    int correct = 0;
    for (const auto& s : eval_set) {
      const TreeEvaluation ev = evaluate_tree(tree, s.features);
      report.confusion[grade_rank(s.label.grade)][grade_rank(ev.label.grade)] += 1;
      if (ev.label.grade == s.label.grade) ++correct;
    }
    report.holdout_accuracy =
        eval_set.empty() ? 1.0 : static_cast<double>(correct) / eval_set.size();
    result.reports.push_back(report);
    result.model.trees.push_back(std::move(tree));
  }
  return result;
}

inline void write_fitness_history_csv(const std::filesystem::path& path,
                                      const std::vector<TreeTrainReport>& reports) {
  std::ostringstream ss;
  ss << "sensor,bin,generation,best_fitness\n";
  for (const auto& r : reports) {
    for (std::size_t g = 0; g < r.history.size(); ++g) {
      ss << r.sensor << ',' << r.distance_bin << ',' << g << ',' << fmt_double(r.history[g])
         << '\n';
    }
  }
  write_text_file(path, ss.str());
}

inline nlohmann::json train_report_json(const TrainResult& result) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& r : result.reports) {
    trees.push_back({{"sensor", r.sensor},
                     {"bin", r.distance_bin},
                     {"train_size", r.train_size},
                     {"holdout_size", r.holdout_size},
                     {"best_fitness", r.best_fitness},
                     {"holdout_accuracy", r.holdout_accuracy},
                     {"degenerate", r.degenerate},
                     {"confusion", r.confusion}});
  }
  return nlohmann::json{{"trees", trees}};
}

// ---------------------------------------------------------------------------
// Monitoring
// ---------------------------------------------------------------------------

struct MonitorBinResult {
  int bin = -1;
  bool has_tree = false;
  double score = 0.0;
  Grade grade = Grade::Poor;
  bool clamped = false;
};

struct MonitorRecord {
  std::string condition;
  std::uint64_t frame = 0;
  std::string sensor;
  std::vector<MonitorBinResult> bins;  // single entry (bin -1) for camera
  std::string grid_map_base;           // radar only, may be empty
};

struct MonitorOptions {
  int threads = 1;
  RadarDspParams dsp;
  bool write_grid_maps = true;
};

inline MonitorBinResult monitor_evaluate(const FuzzyModel& model, const std::string& sensor,
                                         int bin, const std::vector<double>& raw_features) {
  MonitorBinResult out;
  out.bin = bin;
  const FuzzyTree* tree = model.find(sensor, bin);
  if (tree == nullptr) return out;
  out.has_tree = true;
  const TreeEvaluation ev = evaluate_tree(*tree, raw_features);
  out.score = ev.label.score;
  out.grade = ev.label.grade;
  out.clamped = ev.clamped;
  return out;
}

inline std::vector<MonitorRecord> monitor_dataset(const DatasetManifest& manifest,
                                                  const std::filesystem::path& dataset_dir,
                                                  const FuzzyModel& model,
                                                  const std::filesystem::path& out_dir,
                                                  const MonitorOptions& options = {}) {
  std::vector<MonitorRecord> records;
  std::filesystem::create_directories(out_dir);

  for (const auto& cell : manifest.cells) {
    for (std::uint64_t frame = 0; frame < manifest.frames_per_cell; ++frame) {
      const std::string fr = std::to_string(frame);

      // Radar.
      {
        const auto cube = read_radar_cube(
            dataset_dir / cell.condition / "radar" / ("frame_" + fr + ".bin"),
            manifest.radar_config);
        const ProcessedRadarFrame processed = process_radar_frame(cube, options.dsp);
        const auto bins = radar_features(processed.detections, processed.map, processed.clusters);
        MonitorRecord rec{cell.condition, frame, "radar", {}, {}};
        for (int b = 0; b < kNumDistanceBins; ++b) {
          rec.bins.push_back(monitor_evaluate(model, "radar", b,
                                              radar_feature_values(bins[b])));
        }
        if (options.write_grid_maps) {
          const RDCluster* nearest =
              processed.nearest_cluster >= 0 ? &processed.clusters[processed.nearest_cluster]
                                             : nullptr;
          const DisturbanceGridMap grid = build_grid_maps(nearest, processed.detections,
                                                          processed.map, Roi{}, frame);
          const auto base = out_dir / "gridmaps" / (cell.condition + "_frame_" + fr);
          std::filesystem::create_directories(base.parent_path());
          write_grid_map(base, grid);
          rec.grid_map_base = base.string();
        }
        records.push_back(std::move(rec));
      }

      // Lidar.
      {
        const auto cloud = read_point_cloud_csv(dataset_dir / cell.condition / "lidar" /
                                                ("frame_" + fr + ".csv"));
        PointCloud prev;
        bool have_prev = false;
        if (frame > 0) {
          const auto prev_path = dataset_dir / cell.condition / "lidar" /
                                 ("frame_" + std::to_string(frame - 1) + ".csv");
          if (std::filesystem::exists(prev_path)) {
            prev = read_point_cloud_csv(prev_path);
            have_prev = true;
          }
        }
        const auto bins = lidar_features(cloud, have_prev ? &prev : nullptr, std::nullopt);
        MonitorRecord rec{cell.condition, frame, "lidar", {}, {}};
        for (int b = 0; b < kNumDistanceBins; ++b) {
          rec.bins.push_back(monitor_evaluate(model, "lidar", b, lidar_feature_values(bins[b])));
        }
        records.push_back(std::move(rec));
      }

      // Camera.
      {
        const auto img = read_ppm(dataset_dir / cell.condition / "camera" /
                                  ("frame_" + fr + ".ppm"));
        const auto feats = camera_features(img);
        MonitorRecord rec{cell.condition, frame, "camera", {}, {}};
        rec.bins.push_back(monitor_evaluate(model, "camera", -1, camera_feature_values(feats)));
        records.push_back(std::move(rec));
      }
    }
  }
  return records;
}

inline std::string monitor_record_jsonl(const MonitorRecord& rec) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : rec.bins) {
    nlohmann::json jb{{"bin", b.bin}, {"has_tree", b.has_tree}};
    if (b.has_tree) {
      jb["score"] = b.score;
      jb["grade"] = to_string(b.grade);
      jb["clamped"] = b.clamped;
    }
    bins.push_back(jb);
  }
  nlohmann::json j{{"condition", rec.condition},
                   {"frame", rec.frame},
                   {"sensor", rec.sensor},
                   {"bins", bins}};
  if (!rec.grid_map_base.empty()) j["grid_map"] = rec.grid_map_base;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

struct ReportSummary {
  // Condition name -> mean values over the dataset.
  std::map<std::string, double> radar_vehicle_count_mean;
  std::map<std::string, double> nearest_cluster_size_mean;
  std::map<std::string, double> dispersion_mean_beyond_6m;
  std::map<std::string, double> lidar_min_distance_mean;
  std::map<std::string, double> lidar_mean_intensity_mean;
  std::map<std::string, double> ground_count_mean;
  std::map<std::string, double> sharpness_mean;
  std::map<std::string, double> brightness_mean;
  std::map<std::string, double> contrast_mean;
};

inline nlohmann::json report_summary_json(const ReportSummary& s) {
  return nlohmann::json{{"radar_vehicle_count_mean", s.radar_vehicle_count_mean},
                        {"nearest_cluster_size_mean", s.nearest_cluster_size_mean},
                        {"dispersion_mean_beyond_6m", s.dispersion_mean_beyond_6m},
                        {"lidar_min_distance_mean", s.lidar_min_distance_mean},
                        {"lidar_mean_intensity_mean", s.lidar_mean_intensity_mean},
                        {"ground_count_mean", s.ground_count_mean},
                        {"sharpness_mean", s.sharpness_mean},
                        {"brightness_mean", s.brightness_mean},
                        {"contrast_mean", s.contrast_mean}};
}

// Simple multi-curve PPM line plot; curves are drawn in fixed colors over a
// white canvas, x spanning [x_lo, x_hi].
inline void plot_curves_ppm(const std::filesystem::path& path,
                            const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& curves,
                            double x_lo, double x_hi) {
  const int W = 420, H = 300;
  Image img = Image::filled(W, H, 1.0, 1.0, 1.0);
  double y_lo = 1e300, y_hi = -1e300;
  for (const auto& [name, pts] : curves) {
    for (const auto& [x, y] : pts) {
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  if (y_hi <= y_lo) {
    y_hi = y_lo + 1.0;
  }
  const double pad = 0.05 * (y_hi - y_lo);
  y_lo -= pad;
  y_hi += pad;

  static const double colors[8][3] = {{0, 0, 0},       {0.85, 0.1, 0.1}, {0.1, 0.2, 0.85},
                                      {0.1, 0.6, 0.15}, {0.7, 0.5, 0.0},  {0.5, 0.1, 0.6},
                                      {0.0, 0.6, 0.6},  {0.4, 0.4, 0.4}};
  auto to_px = [&](double x, double y, int& px, int& py) {
    px = static_cast<int>(std::lround((x - x_lo) / (x_hi - x_lo) * (W - 20))) + 10;
    py = H - 10 - static_cast<int>(std::lround((y - y_lo) / (y_hi - y_lo) * (H - 20)));
    return px >= 0 && px < W && py >= 0 && py < H;
  };

  int ci = 0;
  for (const auto& [name, pts] : curves) {
    const double* col = colors[ci % 8];
    ++ci;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      int x0, y0, x1, y1;
      if (!to_px(pts[i - 1].first, pts[i - 1].second, x0, y0)) continue;
      if (!to_px(pts[i].first, pts[i].second, x1, y1)) continue;
      const int steps = std::max(std::abs(x1 - x0), std::abs(y1 - y0)) + 1;
      for (int s = 0; s <= steps; ++s) {
        const int x = x0 + (x1 - x0) * s / steps;
        const int y = y0 + (y1 - y0) * s / steps;
        if (x >= 0 && x < W && y >= 0 && y < H) img.set(x, y, col[0], col[1], col[2]);
      }
    }
  }
  write_ppm(path, img);
}

inline ReportSummary report_dataset(const DatasetManifest& manifest,
                                    const std::filesystem::path& dataset_dir,
                                    const std::filesystem::path& out_dir,
                                    const ExtractOptions& options = {}) {
  std::filesystem::create_directories(out_dir);
  ReportSummary summary;

  struct Acc {
    double sum = 0.0;
    int n = 0;
    void add(double v) {
      sum += v;
      ++n;
    }
    double mean() const { return n > 0 ? sum / n : 0.0; }
  };
  std::map<std::string, Acc> det_count, cluster_size, disp6, min_dist, mean_int, ground,
      sharp, bright, contr;
  // Per-condition detection-count curve over distance.
  std::map<std::string, std::vector<std::pair<double, double>>> det_curves, disp_curves,
      mindist_curves, intensity_curves;

  std::ostringstream radar_csv, lidar_csv, camera_csv;
  radar_csv << "condition,frame,vehicle_distance,vehicle_detection_count,nearest_cluster_size,"
               "rain_extent_estimate\n";
  lidar_csv << "condition,frame,vehicle_distance,dispersion,min_distance,max_distance,"
               "mean_intensity,ground_count\n";
  camera_csv << "condition,frame,sharpness,brightness,contrast,proxy_confidence,proxy_iou\n";

  for (const auto& cell : manifest.cells) {
    for (std::uint64_t frame = 0; frame < manifest.frames_per_cell; ++frame) {
      const auto fe = extract_frame(manifest, dataset_dir, cell, frame, options.dsp);
      const std::string& c = cell.condition;

      det_count[c].add(fe.radar_vehicle_count);
      double rain_extent = 0.0;
      double nearest_size = 0.0;
      for (int b = 0; b < kNumDistanceBins; ++b) {
        if (fe.radar_bins[b].valid) {
          nearest_size = fe.radar_bins[b].nearest_cluster_size;
          rain_extent = fe.radar_bins[b].rain_extent_estimate;
          break;
        }
      }
      cluster_size[c].add(nearest_size);
      radar_csv << c << ',' << frame << ',' << fmt_double(fe.truth.vehicle_distance) << ','
                << fe.radar_vehicle_count << ',' << fmt_double(nearest_size) << ','
                << fmt_double(rain_extent) << '\n';
      det_curves[c].push_back({fe.truth.vehicle_distance,
                               static_cast<double>(fe.radar_vehicle_count)});

      const Roi roi;
      PointCloud cloud = read_point_cloud_csv(dataset_dir / c / "lidar" /
                                              ("frame_" + std::to_string(frame) + ".csv"));
      const int gcount = ground_count(cloud, roi);
      const auto mi = mean_intensity(cloud, roi);
      ground[c].add(gcount);
      if (mi) mean_int[c].add(*mi);
      if (fe.lidar_minmax) min_dist[c].add(fe.lidar_minmax->min);
      if (fe.truth.vehicle_distance > 6.0) {
        disp6[c].add(fe.lidar_dispersion.value_or(0.0));
      }
      lidar_csv << c << ',' << frame << ',' << fmt_double(fe.truth.vehicle_distance) << ',';
      if (fe.lidar_dispersion) lidar_csv << fmt_double_exact(*fe.lidar_dispersion);
      lidar_csv << ',';
      if (fe.lidar_minmax) {
        lidar_csv << fmt_double(fe.lidar_minmax->min) << ',' << fmt_double(fe.lidar_minmax->max);
      } else {
        lidar_csv << ',';
      }
      lidar_csv << ',';
      if (mi) lidar_csv << fmt_double(*mi);
      lidar_csv << ',' << gcount << '\n';
      disp_curves[c].push_back({fe.truth.vehicle_distance, fe.lidar_dispersion.value_or(0.0)});
      if (fe.lidar_minmax) {
        mindist_curves[c].push_back({fe.truth.vehicle_distance, fe.lidar_minmax->min});
      }
      if (mi) intensity_curves[c].push_back({fe.truth.vehicle_distance, *mi});

      sharp[c].add(fe.camera.sharpness);
      bright[c].add(fe.camera.brightness);
      contr[c].add(fe.camera.contrast);
      camera_csv << c << ',' << frame << ',' << fmt_double_exact(fe.camera.sharpness) << ','
                 << fmt_double_exact(fe.camera.brightness) << ','
                 << fmt_double_exact(fe.camera.contrast) << ','
                 << fmt_double(fe.camera_confidence) << ',' << fmt_double(fe.camera_iou) << '\n';
    }
  }

  write_text_file(out_dir / "radar_metrics.csv", radar_csv.str());
  write_text_file(out_dir / "lidar_metrics.csv", lidar_csv.str());
  write_text_file(out_dir / "camera_metrics.csv", camera_csv.str());

  auto collect = [](std::map<std::string, Acc>& acc, std::map<std::string, double>& out) {
    for (auto& [k, v] : acc) out[k] = v.mean();
  };
  collect(det_count, summary.radar_vehicle_count_mean);
  collect(cluster_size, summary.nearest_cluster_size_mean);
  collect(disp6, summary.dispersion_mean_beyond_6m);
  collect(min_dist, summary.lidar_min_distance_mean);
  collect(mean_int, summary.lidar_mean_intensity_mean);
  collect(ground, summary.ground_count_mean);
  collect(sharp, summary.sharpness_mean);
  collect(bright, summary.brightness_mean);
  collect(contr, summary.contrast_mean);

  write_text_file(out_dir / "summary.json", report_summary_json(summary).dump(2) + "\n");

  auto sort_curves = [](std::map<std::string, std::vector<std::pair<double, double>>>& m) {
    std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> out;
    for (auto& [k, v] : m) {
      std::sort(v.begin(), v.end());
      out.push_back({k, v});
    }
    return out;
  };
  plot_curves_ppm(out_dir / "detection_count_vs_distance.ppm", sort_curves(det_curves), 0, 20);
  plot_curves_ppm(out_dir / "dispersion_vs_distance.ppm", sort_curves(disp_curves), 0, 20);
  plot_curves_ppm(out_dir / "min_distance_vs_distance.ppm", sort_curves(mindist_curves), 0, 20);
  plot_curves_ppm(out_dir / "mean_intensity_vs_distance.ppm", sort_curves(intensity_curves), 0,
                  20);
  return summary;
}

}  // namespace weathersense
