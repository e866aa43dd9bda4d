#include <doctest.h>

#include <filesystem>

#include "weathersense/pipeline.hpp"

using namespace weathersense;

namespace {

// Shared tiny dataset: coarse Doppler and few channels keep the radar chain
// fast while the geometry stays identical to the default setup.
struct TestDataset {
  std::filesystem::path dir;
  DatasetManifest manifest;

  TestDataset() {
    dir = std::filesystem::temp_directory_path() / "ws_pipeline_ds";
    std::filesystem::remove_all(dir);
    Scenario sc;
    sc.seed = 404;
    RadarConfig cfg;
    cfg.num_chirps = 32;
    cfg.num_channels = 8;
    std::vector<DatasetCell> cells{{"dry_day", WeatherCondition::dry(), sc},
                                   {"fog_day", WeatherCondition::fog(), sc}};
    manifest = generate_dataset(cells, 4, dir, cfg);
  }
};

TestDataset& dataset() {
  static TestDataset ds;
  return ds;
}

}  // namespace

TEST_CASE("extraction produces rows, samples and fitted thresholds") {
  auto& ds = dataset();
  const ExtractionResult res = extract_dataset(ds.manifest, ds.dir);
  // 2 conditions x 4 frames x (10 radar + 10 lidar + 1 camera) rows.
  CHECK(res.rows.size() == 2 * 4 * 21);
  CHECK(res.samples.size() > 0);
  CHECK(res.radar_thresholds.valid());
  CHECK(res.lidar_thresholds.valid());
  CHECK(res.missing_files.empty());

  int camera_rows = 0, lidar_valid = 0;
  for (const auto& r : res.rows) {
    if (r.sensor == "camera") {
      ++camera_rows;
      CHECK(r.bin == -1);
      CHECK(r.values.count("sharpness") == 1);
      CHECK(r.values.count("proxy_confidence") == 1);
    }
    if (r.sensor == "lidar" && r.valid) ++lidar_valid;
  }
  CHECK(camera_rows == 8);
  CHECK(lidar_valid > 0);

  SUBCASE("dry labels are predominantly good") {
    int dry_good = 0, dry_total = 0;
    for (const auto& s : res.samples) {
      if (s.provenance.condition != "dry_day") continue;
      ++dry_total;
      if (s.label.grade == Grade::Good) ++dry_good;
    }
    CHECK(dry_total > 0);
    CHECK(dry_good * 2 >= dry_total);  // detailed percentages in acceptance
  }

  SUBCASE("feature and label csv round trips are lossless for training") {
    const auto out = ds.dir / "extracted";
    write_features_csv(out / "features.csv", res.rows);
    write_labels_csv(out / "labels.csv", res.samples);
    const auto features = read_features_csv(out / "features.csv");
    const auto labels = read_labels_csv(out / "labels.csv");
    CHECK(features.size() == res.rows.size());
    REQUIRE(labels.size() == res.samples.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      CHECK(labels[i].label.grade == res.samples[i].label.grade);
      CHECK(labels[i].label.score == res.samples[i].label.score);
      CHECK(labels[i].measurement == res.samples[i].raw_measurement);
    }
    const auto joined = join_samples(features, labels);
    REQUIRE(joined.size() == res.samples.size());
    for (std::size_t i = 0; i < joined.size(); ++i) {
      CHECK(joined[i].sensor == res.samples[i].sensor);
      CHECK(joined[i].distance_bin == res.samples[i].distance_bin);
      REQUIRE(joined[i].features.size() == res.samples[i].features.size());
      for (std::size_t k = 0; k < joined[i].features.size(); ++k) {
        CHECK(joined[i].features[k] == res.samples[i].features[k]);
      }
    }
  }
}

TEST_CASE("extraction reports corrupt frames by name") {
  auto& ds = dataset();
  const auto victim = ds.dir / "fog_day" / "radar" / "frame_1.bin";
  const std::string original = read_text_file(victim);
  write_text_file(victim, "garbage");

  CHECK_THROWS_AS(extract_dataset(ds.manifest, ds.dir), IoError);
  try {
    extract_dataset(ds.manifest, ds.dir);
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("frame_1.bin") != std::string::npos);
  }

  ExtractOptions lenient;
  lenient.lenient = true;
  const ExtractionResult res = extract_dataset(ds.manifest, ds.dir, lenient);
  CHECK(res.missing_files.size() == 1);
  CHECK(res.rows.size() == (2 * 4 - 1) * 21);

  write_text_file(victim, original);
}

TEST_CASE("training builds a model and a report; monitoring consumes it") {
  auto& ds = dataset();
  const ExtractionResult res = extract_dataset(ds.manifest, ds.dir);

  TrainOptions options;
  options.ga.population = 10;
  options.ga.generations = 4;
  options.ga.seed = 3;
  const TrainResult trained = train_model(res.samples, options);
  CHECK(!trained.model.trees.empty());
  CHECK(trained.model.find("camera", -1) != nullptr);

  // Model JSON round trip preserves evaluations.
  nlohmann::json mj = trained.model;
  const FuzzyModel back = nlohmann::json::parse(mj.dump()).get<FuzzyModel>();
  const FuzzyTree* cam = back.find("camera", -1);
  REQUIRE(cam != nullptr);
  const std::vector<double> probe{0.002, 0.05, 0.01};
  CHECK(evaluate_tree(*cam, probe).label.score ==
        evaluate_tree(*trained.model.find("camera", -1), probe).label.score);

  // Determinism: same options, same bytes.
  const TrainResult again = train_model(res.samples, options);
  nlohmann::json mj2 = again.model;
  CHECK(mj.dump() == mj2.dump());

  // Reports cover every trained tree with a confusion matrix.
  int total = 0;
  for (const auto& r : trained.reports) {
    int cm = 0;
    for (const auto& row : r.confusion) {
      for (int v : row) cm += v;
    }
    CHECK(cm == (r.holdout_size > 0 ? r.holdout_size : r.train_size));
    ++total;
  }
  CHECK(total == static_cast<int>(trained.model.trees.size()));

  SUBCASE("monitor emits one record per sensor frame plus grid maps") {
    const auto out = ds.dir / "monitor_out";
    const auto records = monitor_dataset(ds.manifest, ds.dir, trained.model, out);
    CHECK(records.size() == 2 * 4 * 3);
    int radar_records = 0;
    for (const auto& rec : records) {
      if (rec.sensor == "radar") {
        ++radar_records;
        CHECK(!rec.grid_map_base.empty());
        CHECK(std::filesystem::exists(rec.grid_map_base + ".pgm"));
        CHECK(std::filesystem::exists(rec.grid_map_base + ".json"));
        CHECK(rec.bins.size() == kNumDistanceBins);
      }
      if (rec.sensor == "camera") {
        REQUIRE(rec.bins.size() == 1);
        CHECK(rec.bins[0].has_tree);
      }
      // JSON-lines serialization parses back.
      const auto j = nlohmann::json::parse(monitor_record_jsonl(rec));
      CHECK(j.at("sensor").get<std::string>() == rec.sensor);
    }
    CHECK(radar_records == 8);
  }
}

TEST_CASE("report computes per-condition summaries and plots") {
  auto& ds = dataset();
  const auto out = ds.dir / "report_out";
  const ReportSummary summary = report_dataset(ds.manifest, ds.dir, out);
  CHECK(summary.ground_count_mean.at("dry_day") > summary.ground_count_mean.at("fog_day"));
  CHECK(summary.lidar_mean_intensity_mean.at("fog_day") >
        summary.lidar_mean_intensity_mean.at("dry_day"));
  CHECK(std::filesystem::exists(out / "summary.json"));
  CHECK(std::filesystem::exists(out / "radar_metrics.csv"));
  CHECK(std::filesystem::exists(out / "lidar_metrics.csv"));
  CHECK(std::filesystem::exists(out / "camera_metrics.csv"));
  CHECK(std::filesystem::exists(out / "detection_count_vs_distance.ppm"));

  SUBCASE("reports are byte-stable") {
    const auto out2 = ds.dir / "report_out2";
    report_dataset(ds.manifest, ds.dir, out2);
    CHECK(read_text_file(out / "summary.json") == read_text_file(out2 / "summary.json"));
    CHECK(read_text_file(out / "lidar_metrics.csv") ==
          read_text_file(out2 / "lidar_metrics.csv"));
  }
}

TEST_CASE("extraction is thread-count independent") {
  auto& ds = dataset();
  ExtractOptions opt1;
  opt1.threads = 1;
  ExtractOptions opt2;
  opt2.threads = 2;
  const ExtractionResult a = extract_dataset(ds.manifest, ds.dir, opt1);
  const ExtractionResult b = extract_dataset(ds.manifest, ds.dir, opt2);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].sensor == b.rows[i].sensor);
    CHECK(a.rows[i].values == b.rows[i].values);
  }
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(a.samples[i].raw_measurement == b.samples[i].raw_measurement);
  }
}
