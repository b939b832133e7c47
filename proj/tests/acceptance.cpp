// Runs the shipped experiment configs and reports one line per acceptance
// criterion. Exits 0 only when every criterion passes.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bohm/experiments.hpp"
#include "bohm/linalg.hpp"

namespace ex = bohm::experiments;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int id;
  std::string title;
  std::vector<std::pair<std::string, std::vector<std::string>>> parts;  // config -> checks (empty: all)
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {1, "continuity, closed system", {{"continuity", {}}}},
      {2, "truncated continuity", {{"subsystem_currents", {"truncated.relative_residual", "truncated.halving_ratio"}}}},
      {3, "dual-route truncated current", {{"subsystem_currents", {"dual_route_relative"}}}},
      {4, "equivariance", {{"equivariance", {}}}},
      {5, "truncated trajectories", {{"bohm_truncated", {}}}},
      {6, "classical Liouville", {{"classical_liouville", {}}}},
      {7, "truncated phase velocity", {{"classical_truncated", {}}}},
      {8, "large-number scaling", {{"scaling", {}}}},
      {9, "entropy identities", {{"cat_mixture", {}}}},
      {10, "entropy growth", {{"free_expansion", {}}}},
      {11, "thermodynamics", {{"thermo", {}}, {"first_law", {}}}},
      {12, "Bohmian volume", {{"thermal_box", {}}}},
      {13, "canonical typicality", {{"typicality", {}}}},
  };
  return list;
}

struct Ran {
  ex::RunResult result;
  double seconds = 0.0;
  std::string error;
};

}  // namespace

int main(int argc, char** argv) {
  bohm::linalg::ensure_blas_kernels(argv);
  const fs::path config_dir = argc > 1 ? fs::path(argv[1]) : fs::path(BOHM_CONFIG_DIR);
  const fs::path out_root = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "bohm_acceptance";
  fs::create_directories(out_root);

  std::map<std::string, Ran> cache;
  auto run = [&](const std::string& name) -> const Ran& {
    auto it = cache.find(name);
    if (it != cache.end()) return it->second;
    Ran ran;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const ex::Prepared p = ex::prepare_file(config_dir / (name + ".json"));
      ex::RunContext ctx{out_root / name, p.seed};
      ran.result = ex::execute(p, ctx).result;
    } catch (const std::exception& e) {
      ran.error = e.what();
    }
    ran.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return cache.emplace(name, std::move(ran)).first->second;
  };

  int failed = 0;
  for (const auto& c : criteria()) {
    bool ok = true;
    std::vector<std::string> detail;
    double seconds = 0.0;
    for (const auto& [config, wanted] : c.parts) {
      const bool fresh = !cache.count(config);
      const Ran& r = run(config);
      if (fresh) seconds += r.seconds;
      if (!r.error.empty()) {
        ok = false;
        detail.push_back(config + ": error: " + r.error);
        continue;
      }
      std::size_t matched = 0;
      for (const auto& chk : r.result.checks) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), chk.name) == wanted.end()) continue;
        ++matched;
        ok = ok && chk.passed;
        std::ostringstream line;
        line << (chk.passed ? "ok   " : "FAIL ") << config << '.' << chk.name << " = " << std::setprecision(6)
             << chk.value << ' ' << chk.relation << ' ' << chk.threshold;
        detail.push_back(line.str());
      }
      if (matched == 0 || (!wanted.empty() && matched != wanted.size())) {
        ok = false;
        detail.push_back(config + ": expected checks missing");
      }
    }
    failed += !ok;
    std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << std::setw(2) << c.id << "  " << c.title << "  ("
              << std::fixed << std::setprecision(1) << seconds << " s)" << std::defaultfloat << '\n';
    for (const auto& d : detail) std::cout << "        " << d << '\n';
    std::cout.flush();
  }
  std::cout << (failed == 0 ? "all acceptance criteria passed" : std::to_string(failed) + " criteria failed") << '\n';
  return failed == 0 ? 0 : 1;
}
