#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <sys/wait.h>

#include "bohm/experiments.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result bohmlab(const std::string& args) {
  const std::string cmd = std::string("\"") + BOHMLAB_PATH + "\" " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "bohm_cli_test";
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const std::string& name, const nlohmann::json& cfg) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << cfg.dump(2);
  return p;
}

nlohmann::json tiny_equivariance() {
  return nlohmann::json::parse(R"({
    "experiment": "equivariance",
    "seed": 3,
    "grid": {"points_per_axis": 64, "lo": -10.0, "hi": 10.0},
    "hamiltonian": {"masses": [1.0], "time_step": 0.01},
    "state": {"type": "gaussian", "packets": [{"center": -1.0, "sigma": 1.0, "momentum": 1.0}]},
    "evolution": {"t_final": 0.2, "frame_stride": 2},
    "ensemble": {"samples": 500, "bins": 16}
  })");
}

std::string metrics_hash(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  return nlohmann::json::parse(in).at("metrics_hash").get<std::string>();
}

}  // namespace

TEST(Cli, ListsEveryExperiment) {
  const Result r = bohmlab("list-experiments");
  EXPECT_EQ(r.code, 0);
  for (const auto& info : bohm::experiments::catalog()) EXPECT_NE(r.output.find(info.name), std::string::npos) << info.name;
}

TEST(Cli, ValidationFailuresExitTwoAndNameTheKey) {
  auto cfg = tiny_equivariance();
  cfg["grid"]["points_per_axis"] = 7;
  Result r = bohmlab("run " + write_config("n7.json", cfg).string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("grid.points_per_axis"), std::string::npos) << r.output;

  cfg = tiny_equivariance();
  cfg["ensemble"]["smaples"] = 10;
  r = bohmlab("run " + write_config("typo.json", cfg).string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("ensemble.smaples"), std::string::npos) << r.output;

  r = bohmlab("run");
  EXPECT_EQ(r.code, 2);
  r = bohmlab("frobnicate");
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, SameSeedSameMetricsHash) {
  const fs::path cfg = write_config("eq.json", tiny_equivariance());
  const fs::path a = scratch() / "a", b = scratch() / "b", c = scratch() / "c";
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
  const Result ra = bohmlab("run " + cfg.string() + " --output " + a.string() + " --seed 11");
  const Result rb = bohmlab("run " + cfg.string() + " --output " + b.string() + " --seed 11 --threads 2");
  ASSERT_NE(ra.code, 1) << ra.output;
  ASSERT_NE(rb.code, 1) << rb.output;
  EXPECT_EQ(metrics_hash(a), metrics_hash(b));
  bohmlab("run " + cfg.string() + " --output " + c.string() + " --seed 12");
  EXPECT_NE(metrics_hash(a), metrics_hash(c));
}
