#include <CLI11.hpp>

#include <cstdlib>
#include <iomanip>
#include <iostream>

#include "bohm/experiments.hpp"
#include "bohm/linalg.hpp"
#include "bohm/parallel.hpp"

namespace ex = bohm::experiments;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kValidationError = 2;
constexpr int kAcceptanceFailure = 3;

int list_experiments() {
  std::size_t width = 0;
  for (const auto& e : ex::catalog()) width = std::max(width, e.name.size());
  for (const auto& e : ex::catalog()) {
    std::cout << std::left << std::setw(static_cast<int>(width) + 2) << e.name << e.description << "\n"
              << std::string(width + 2, ' ') << "sections:";
    for (const auto& s : e.sections) std::cout << ' ' << s;
    std::cout << '\n';
  }
  return kOk;
}

int run(const std::string& config_path, const std::string& output, const std::uint64_t* seed, int threads) {
  ex::Prepared prepared;
  try {
    prepared = ex::prepare_file(config_path);
  } catch (const bohm::config::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kValidationError;
  }
  if (threads > 0) bohm::set_thread_count(threads);
  ex::RunContext ctx;
  ctx.seed = seed ? *seed : prepared.seed;
  ctx.output_dir = !output.empty() ? output
                   : !prepared.output_dir.empty() ? prepared.output_dir
                                                  : "bohmlab_out/" + prepared.experiment;
  ex::Outcome out;
  try {
    out = ex::execute(prepared, ctx);
  } catch (const std::exception& e) {
    std::cerr << prepared.experiment << " failed: " << e.what() << '\n';
    return kRuntimeError;
  }
  std::cout << prepared.experiment << " -> " << ctx.output_dir.string() << "\n";
  for (const auto& c : out.result.checks)
    std::cout << "  [" << (c.passed ? "pass" : "FAIL") << "] " << c.name << " = " << std::setprecision(6) << c.value
              << ' ' << c.relation << ' ' << c.threshold << '\n';
  std::cout << "  metrics hash " << out.manifest.metrics_hash << '\n';
  return out.result.passed() ? kOk : kAcceptanceFailure;
}

}  // namespace

int main(int argc, char** argv) {
  bohm::linalg::ensure_blas_kernels(argv);
  CLI::App app{"Probability-current laboratory: config-driven experiments"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "run one experiment config");
  std::string config_path, output;
  std::uint64_t seed = 0;
  int threads = 0;
  run_cmd->add_option("config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--output", output, "output directory (overrides output_dir)");
  auto* seed_opt = run_cmd->add_option("--seed", seed, "64-bit seed (overrides the config seed)");
  run_cmd->add_option("--threads", threads, "worker threads (default: BOHM_THREADS or 1)")
      ->check(CLI::PositiveNumber);

  app.add_subcommand("list-experiments", "list experiments and the config sections they read");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidationError;
  }
  if (app.got_subcommand("list-experiments")) return list_experiments();
  return run(config_path, output, seed_opt->count() ? &seed : nullptr, threads);
}
