// weathersense: synthesize weather-degraded sensor frames, extract
// degradation features, train fuzzy-tree monitors and grade live frames.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdlib>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "weathersense/pipeline.hpp"

namespace ws = weathersense;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::uint64_t env_seed_default() {
  if (const char* env = std::getenv("WEATHERSENSE_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      std::cerr << "warning: ignoring non-numeric WEATHERSENSE_SEED\n";
    }
  }
  return 1;
}

// Config-file values sit between built-in defaults (plus the seed env var)
// and explicit flags: a flag always wins.
struct ConfigFile {
  nlohmann::json values = nlohmann::json::object();
  std::set<std::string> consumed;

  void load(const std::string& path) {
    values = nlohmann::json::parse(ws::read_text_file(path));
    if (!values.is_object()) throw ws::DomainError("config file must hold a JSON object");
  }

  template <typename T>
  void apply(const CLI::Option* opt, const std::string& key, T& target) {
    if (values.contains(key)) {
      consumed.insert(key);
      if (opt == nullptr || opt->count() == 0) target = values.at(key).get<T>();
    }
  }

  void reject_unknown() const {
    for (const auto& [key, value] : values.items()) {
      if (!consumed.count(key)) {
        throw CLI::ValidationError("config", "unknown config key: " + key);
      }
    }
  }
};

std::vector<ws::DatasetCell> parse_conditions(const std::string& list,
                                              const ws::Scenario& scenario) {
  if (list == "all") return ws::default_condition_matrix(scenario);
  std::vector<ws::DatasetCell> cells;
  std::string cur;
  auto flush = [&]() {
    if (cur.empty()) return;
    std::string name = cur;
    cur.clear();
    ws::LightCondition light = ws::LightCondition::Day;
    std::string kind = name;
    if (name.size() > 4 && name.substr(name.size() - 4) == "_day") {
      kind = name.substr(0, name.size() - 4);
    } else if (name.size() > 6 && name.substr(name.size() - 6) == "_night") {
      kind = name.substr(0, name.size() - 6);
      light = ws::LightCondition::Night;
    }
    ws::WeatherCondition w;
    if (kind == "dry") w = ws::WeatherCondition::dry(light);
    else if (kind == "fog") w = ws::WeatherCondition::fog(light);
    else if (kind == "light_rain") w = ws::WeatherCondition::light_rain(light);
    else if (kind == "heavy_rain") w = ws::WeatherCondition::heavy_rain(light);
    else throw CLI::ValidationError("--conditions", "unknown condition: " + name);
    cells.push_back({w.name(), w, scenario});
  };
  for (char c : list) {
    if (c == ',') flush();
    else cur.push_back(c);
  }
  flush();
  if (cells.empty()) throw CLI::ValidationError("--conditions", "no conditions given");
  return cells;
}

int cmd_simulate(const std::string& config_path, const std::string& conditions,
                 std::uint64_t frames, std::uint64_t seed, const std::string& out,
                 const std::string& presets_path, int threads, bool verbose,
                 const CLI::Option* opt_cond, const CLI::Option* opt_frames,
                 const CLI::Option* opt_seed, const CLI::Option* opt_out,
                 const CLI::Option* opt_threads) {
  ConfigFile cfg;
  std::string cond = conditions;
  std::uint64_t n_frames = frames;
  std::uint64_t the_seed = seed;
  std::string out_dir = out;
  int n_threads = threads;
  if (!config_path.empty()) {
    cfg.load(config_path);
    cfg.apply(opt_cond, "conditions", cond);
    cfg.apply(opt_frames, "frames", n_frames);
    cfg.apply(opt_seed, "seed", the_seed);
    cfg.apply(opt_out, "out", out_dir);
    cfg.apply(opt_threads, "threads", n_threads);
    cfg.reject_unknown();
  }
  if (n_frames < 1) throw CLI::ValidationError("--frames", "must be >= 1");

  ws::WeatherPresets presets;
  if (!presets_path.empty()) {
    presets = nlohmann::json::parse(ws::read_text_file(presets_path)).get<ws::WeatherPresets>();
  }
  ws::Scenario scenario;
  scenario.seed = the_seed;
  const auto cells = parse_conditions(cond, scenario);
  const ws::RadarConfig radar_cfg;
  if (verbose) {
    for (const auto& cell : cells) std::cerr << "condition: " << cell.condition << "\n";
    std::cerr << "frames per condition: " << n_frames << ", seed " << the_seed << "\n";
  }
  ws::generate_dataset(cells, n_frames, out_dir, radar_cfg, presets, n_threads);
  std::cout << "wrote " << cells.size() * n_frames << " frame triplets under " << out_dir
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weathersense: weather-degradation analysis and sensor monitoring toolkit"};
  app.require_subcommand(1);

  const std::uint64_t default_seed = env_seed_default();

  // --- simulate ---------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "generate a synthetic weather/sensor dataset");
  std::string sim_conditions = "all";
  std::uint64_t sim_frames = 50;
  std::uint64_t sim_seed = default_seed;
  std::string sim_out = "dataset";
  std::string sim_presets;
  std::string sim_config;
  int sim_threads = 1;
  bool sim_verbose = false;
  auto* sim_opt_cond = sim->add_option("--conditions", sim_conditions,
                                       "'all' or comma list, e.g. dry_day,fog_night");
  auto* sim_opt_frames = sim->add_option("--frames", sim_frames, "frames per condition");
  auto* sim_opt_seed = sim->add_option("--seed", sim_seed, "master seed");
  auto* sim_opt_out = sim->add_option("--out", sim_out, "output dataset directory");
  sim->add_option("--presets", sim_presets, "weather presets JSON");
  auto* sim_opt_threads = sim->add_option("--threads", sim_threads, "worker threads");
  sim->add_option("--config", sim_config, "JSON config file (flags take precedence)");
  sim->add_flag("--verbose", sim_verbose, "progress output on stderr");

  // --- extract ----------------------------------------------------------
  auto* ext = app.add_subcommand("extract", "run the measurement chains over a dataset");
  std::string ext_dataset = "dataset";
  std::string ext_out = "extracted";
  bool ext_lenient = false;
  int ext_threads = 1;
  ext->add_option("--dataset", ext_dataset, "dataset directory (with manifest.json)");
  ext->add_option("--out", ext_out, "output directory for features.csv / labels.csv");
  ext->add_flag("--lenient", ext_lenient, "skip missing frames instead of failing");
  ext->add_option("--threads", ext_threads, "worker threads");

  // --- train ------------------------------------------------------------
  auto* trn = app.add_subcommand("train", "tune fuzzy trees with the genetic optimizer");
  std::string trn_in = "extracted";
  std::string trn_out = "model";
  int trn_population = 60;
  int trn_generations = 150;
  std::uint64_t trn_seed = default_seed;
  int trn_threads = 1;
  double trn_holdout = 0.2;
  trn->add_option("--in", trn_in, "directory holding features.csv and labels.csv");
  trn->add_option("--out", trn_out, "output directory for model.json and reports");
  trn->add_option("--population", trn_population, "GA population size");
  trn->add_option("--generations", trn_generations, "GA generations (0 = unoptimized)");
  trn->add_option("--seed", trn_seed, "GA seed");
  trn->add_option("--threads", trn_threads, "fitness evaluation threads");
  trn->add_option("--holdout", trn_holdout, "held-out fraction for the report");

  // --- monitor ----------------------------------------------------------
  auto* mon = app.add_subcommand("monitor", "grade frames with a trained model");
  std::string mon_dataset = "dataset";
  std::string mon_model = "model/model.json";
  std::string mon_out = "monitor";
  int mon_threads = 1;
  mon->add_option("--dataset", mon_dataset, "dataset directory");
  mon->add_option("--model", mon_model, "trained model JSON");
  mon->add_option("--out", mon_out, "output directory (monitor.jsonl, gridmaps/)");
  mon->add_option("--threads", mon_threads, "worker threads");

  // --- report -----------------------------------------------------------
  auto* rep = app.add_subcommand("report", "summarize weather effects over a dataset");
  std::string rep_dataset = "dataset";
  std::string rep_out = "report";
  rep->add_option("--dataset", rep_dataset, "dataset directory");
  rep->add_option("--out", rep_out, "output directory for CSV summaries and plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (sim->parsed()) {
      return cmd_simulate(sim_config, sim_conditions, sim_frames, sim_seed, sim_out, sim_presets,
                          sim_threads, sim_verbose, sim_opt_cond, sim_opt_frames, sim_opt_seed,
                          sim_opt_out, sim_opt_threads);
    }

    if (ext->parsed()) {
      const auto manifest = ws::load_manifest(ext_dataset);
      ws::ExtractOptions options;
      options.lenient = ext_lenient;
      options.threads = ext_threads;
      ws::ExtractionResult result;
      try {
        result = ws::extract_dataset(manifest, ext_dataset, options);
      } catch (const ws::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
      }
      std::filesystem::create_directories(ext_out);
      ws::write_features_csv(std::filesystem::path(ext_out) / "features.csv", result.rows);
      ws::write_labels_csv(std::filesystem::path(ext_out) / "labels.csv", result.samples);
      nlohmann::json thr{{"radar_good_min", result.radar_thresholds.good_min},
                         {"radar_moderate_min", result.radar_thresholds.moderate_min},
                         {"lidar_good_min", result.lidar_thresholds.good_min},
                         {"lidar_moderate_min", result.lidar_thresholds.moderate_min},
                         {"camera_good", result.camera_thresholds.good},
                         {"camera_moderate", result.camera_thresholds.moderate}};
      ws::write_text_file(std::filesystem::path(ext_out) / "thresholds.json",
                          thr.dump(2) + "\n");
      for (const auto& m : result.missing_files) std::cerr << "skipped: " << m << "\n";
      std::cout << "extracted " << result.rows.size() << " feature rows, "
                << result.samples.size() << " labeled samples\n";
      return kExitOk;
    }

    if (trn->parsed()) {
      const auto features =
          ws::read_features_csv(std::filesystem::path(trn_in) / "features.csv");
      const auto labels = ws::read_labels_csv(std::filesystem::path(trn_in) / "labels.csv");
      const auto samples = ws::join_samples(features, labels);
      if (trn_generations == 0) {
        std::cerr << "warning: --generations 0, returning unoptimized initial model\n";
      }
      ws::TrainOptions options;
      options.ga.population = trn_population;
      options.ga.generations = trn_generations;
      options.ga.seed = trn_seed;
      options.ga.threads = trn_threads;
      options.holdout_fraction = trn_holdout;
      const ws::TrainResult result = ws::train_model(samples, options);
      std::filesystem::create_directories(trn_out);
      nlohmann::json mj = result.model;
      ws::write_text_file(std::filesystem::path(trn_out) / "model.json", mj.dump(2) + "\n");
      ws::write_fitness_history_csv(std::filesystem::path(trn_out) / "fitness_history.csv",
                                    result.reports);
      ws::write_text_file(std::filesystem::path(trn_out) / "train_report.json",
                          ws::train_report_json(result).dump(2) + "\n");
      std::cout << "trained " << result.model.trees.size() << " trees\n";
      return kExitOk;
    }

    if (mon->parsed()) {
      const auto manifest = ws::load_manifest(mon_dataset);
      const auto model =
          nlohmann::json::parse(ws::read_text_file(mon_model)).get<ws::FuzzyModel>();
      ws::MonitorOptions options;
      options.threads = mon_threads;
      const auto records =
          ws::monitor_dataset(manifest, mon_dataset, model, mon_out, options);
      std::ostringstream ss;
      for (const auto& rec : records) ss << ws::monitor_record_jsonl(rec) << '\n';
      ws::write_text_file(std::filesystem::path(mon_out) / "monitor.jsonl", ss.str());
      std::cout << "monitored " << records.size() << " sensor frames\n";
      return kExitOk;
    }

    if (rep->parsed()) {
      const auto manifest = ws::load_manifest(rep_dataset);
      ws::report_dataset(manifest, rep_dataset, rep_out);
      std::cout << "report written to " << rep_out << "\n";
      return kExitOk;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ws::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
