#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "dfrc/io.hpp"
#include "dfrc/scenario.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace dfrc;
namespace fs = std::filesystem;

#ifndef DFRC_CLI_PATH
#error "DFRC_CLI_PATH must point at the command-line binary"
#endif

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / "dfrc_cli_test";
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DFRC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("design command writes result, beampattern and metrics artifacts") {
  TempDir tmp;
  const Scenario sc = testutil::make_scenario(6, 2, {0.0}, 3, 2.0);
  io::write_scenario(tmp.file("scenario.json"), sc);

  const int rc = run_cli("design-sdr --scenario " + tmp.file("scenario.json") + " --out " +
                         tmp.path.string() + " --gamma-c-db 10 --gamma-e-db 0");
  REQUIRE(rc == 0);

  // Every artifact parses back through the library readers.
  const DesignResult result = io::read_result(tmp.file("result.json"));
  CHECK(result.covariance.rows() == 6);
  CHECK(result.objective > 0.0);

  const auto [angles, powers] = io::read_beampattern_csv(tmp.file("beampattern.csv"));
  CHECK(angles.size() == sc.config.angle_grid().size());

  const auto metrics = nlohmann::json::parse(slurp(tmp.file("metrics.json")));
  CHECK(metrics.contains("user_sinr"));
  CHECK(metrics.contains("beampattern_mse"));
}

TEST_CASE("design runs are reproducible byte for byte") {
  TempDir tmp;
  const Scenario sc = testutil::make_scenario(5, 2, {10.0}, 7, 5.0);
  io::write_scenario(tmp.file("scenario.json"), sc);
  fs::create_directories(tmp.file("a"));
  fs::create_directories(tmp.file("b"));
  for (const char* sub : {"a", "b"}) {
    const int rc = run_cli("design-zf --scenario " + tmp.file("scenario.json") + " --out " +
                           tmp.file(sub));
    REQUIRE(rc == 0);
  }
  CHECK(slurp(tmp.file("a") + "/result.json") == slurp(tmp.file("b") + "/result.json"));
  CHECK(slurp(tmp.file("a") + "/beampattern.csv") == slurp(tmp.file("b") + "/beampattern.csv"));
}

TEST_CASE("single-trial single-point sweep emits a one-row table") {
  TempDir tmp;
  const int code = run_cli("sweep --axis gamma-c-db --values 10 --designer sdr --trials 1 "
                           "--users 2 --antennas 5 --grid-resolution-deg 5 --seed 3 --out " +
                           tmp.path.string());
  REQUIRE(code == 0);
  const SweepResult sweep = io::read_sweep_csv(tmp.file("sweep.csv"));
  REQUIRE(sweep.points.size() == 1);
  CHECK(sweep.points[0].axis_value == doctest::Approx(10.0));
  CHECK(sweep.points[0].feasible_trials + sweep.points[0].infeasible_trials == 1);
}

TEST_CASE("infeasible scenarios exit with code 2 and a machine-readable record") {
  TempDir tmp;
  const Scenario sc = testutil::make_aligned_scenario(6, 2, 0.0, 11, 2.0);
  io::write_scenario(tmp.file("scenario.json"), sc);
  const int rc = run_cli("design-sdr --scenario " + tmp.file("scenario.json") + " --out " +
                         tmp.path.string() + " --gamma-c-db 10 --gamma-e-db 0");
  CHECK(rc == 2);
  const auto record = nlohmann::json::parse(slurp(tmp.file("infeasible.json")));
  CHECK(record.at("status") == "Infeasible");
  CHECK(record.at("command") == "design-sdr");
  CHECK(record.contains("message"));
}

TEST_CASE("radar-only command writes its reference artifacts") {
  TempDir tmp;
  const Scenario sc = testutil::make_scenario(5, 1, {20.0}, 5, 5.0);
  io::write_scenario(tmp.file("scenario.json"), sc);
  const int rc = run_cli("radar-only --scenario " + tmp.file("scenario.json") + " --out " +
                         tmp.path.string());
  REQUIRE(rc == 0);
  const auto record = nlohmann::json::parse(slurp(tmp.file("radar_only.json")));
  CHECK(record.at("objective").get<double>() >= 0.0);
  CHECK(record.at("alpha").get<double>() > 0.0);
  const auto [angles, powers] = io::read_beampattern_csv(tmp.file("beampattern.csv"));
  CHECK(!angles.empty());
}
