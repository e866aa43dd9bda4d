#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "weathersense/scene_sim.hpp"

using weathersense::read_text_file;

namespace {

std::string cli_path() {
  const char* env = std::getenv("WEATHERSENSE_CLI");
  return env ? env : "";
}

int run_cli(const std::string& args, const std::string& workdir) {
  const std::string cmd = "cd " + workdir + " && " + cli_path() + " " + args +
                          " >cli_stdout.txt 2>cli_stderr.txt";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("cli exit code contract" * doctest::skip(cli_path().empty())) {
  const auto dir = fresh_dir("ws_cli_codes");
  // Usage errors exit 2.
  CHECK(run_cli("simulate --frames 0", dir.string()) == 2);
  CHECK(run_cli("simulate --conditions bogus --frames 1", dir.string()) == 2);
  CHECK(run_cli("frobnicate", dir.string()) == 2);
  // Runtime failures exit 1.
  CHECK(run_cli("extract --dataset does_not_exist", dir.string()) == 1);
  CHECK(run_cli("monitor --dataset does_not_exist --model nope.json", dir.string()) == 1);
  // Help exits 0.
  CHECK(run_cli("--help", dir.string()) == 0);
  CHECK(run_cli("simulate --help", dir.string()) == 0);
}

TEST_CASE("cli simulate is reproducible and honors the seed env var" *
          doctest::skip(cli_path().empty())) {
  const auto dir = fresh_dir("ws_cli_sim");
  CHECK(run_cli("simulate --conditions dry_day --frames 2 --seed 9 --out a", dir.string()) == 0);
  CHECK(run_cli("simulate --conditions dry_day --frames 2 --seed 9 --out b", dir.string()) == 0);
  CHECK(read_text_file(dir / "a" / "manifest.json") == read_text_file(dir / "b" / "manifest.json"));
  CHECK(read_text_file(dir / "a" / "dry_day" / "lidar" / "frame_1.csv") ==
        read_text_file(dir / "b" / "dry_day" / "lidar" / "frame_1.csv"));
  CHECK(read_text_file(dir / "a" / "dry_day" / "radar" / "frame_0.bin") ==
        read_text_file(dir / "b" / "dry_day" / "radar" / "frame_0.bin"));

  // WEATHERSENSE_SEED is the lowest-precedence seed source.
  const std::string env_cmd = "cd " + dir.string() + " && WEATHERSENSE_SEED=9 " + cli_path() +
                              " simulate --conditions dry_day --frames 2 --out c "
                              ">/dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(env_cmd.c_str())) == 0);
  CHECK(read_text_file(dir / "a" / "dry_day" / "radar" / "frame_0.bin") ==
        read_text_file(dir / "c" / "dry_day" / "radar" / "frame_0.bin"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli config file fills defaults but flags win" * doctest::skip(cli_path().empty())) {
  const auto dir = fresh_dir("ws_cli_cfg");
  weathersense::write_text_file(dir / "cfg.json", "{\"frames\": 2, \"seed\": 9}\n");
  CHECK(run_cli("simulate --conditions dry_day --config cfg.json --out a", dir.string()) == 0);
  CHECK(std::filesystem::exists(dir / "a" / "dry_day" / "lidar" / "frame_1.csv"));
  CHECK_FALSE(std::filesystem::exists(dir / "a" / "dry_day" / "lidar" / "frame_2.csv"));

  // Flag overrides the config value.
  CHECK(run_cli("simulate --conditions dry_day --config cfg.json --frames 1 --out b",
                dir.string()) == 0);
  CHECK_FALSE(std::filesystem::exists(dir / "b" / "dry_day" / "lidar" / "frame_1.csv"));
  // Config seed equals flag seed: same bytes.
  CHECK(run_cli("simulate --conditions dry_day --frames 2 --seed 9 --out c", dir.string()) == 0);
  CHECK(read_text_file(dir / "a" / "dry_day" / "radar" / "frame_0.bin") ==
        read_text_file(dir / "c" / "dry_day" / "radar" / "frame_0.bin"));

  // Unknown config keys are rejected as usage errors.
  weathersense::write_text_file(dir / "bad.json", "{\"framez\": 2}\n");
  CHECK(run_cli("simulate --conditions dry_day --config bad.json --out d", dir.string()) == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli extract on an empty dataset succeeds with empty outputs" *
          doctest::skip(cli_path().empty())) {
  const auto dir = fresh_dir("ws_cli_empty");
  weathersense::generate_dataset({}, 1, dir / "ds");
  CHECK(run_cli("extract --dataset ds --out ex", dir.string()) == 0);
  const std::string features = read_text_file(dir / "ex" / "features.csv");
  CHECK(features.find("sensor,condition,frame,bin,valid") == 0);
  CHECK(features.find('\n') == features.size() - 1);  // header only
  std::filesystem::remove_all(dir);
}
