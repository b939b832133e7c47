#pragma once

// Named, config-driven experiments. A config is parsed and validated in
// full before anything runs; running writes outputs into a directory and
// returns headline metrics plus built-in numerical checks.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "bohm/config.hpp"

namespace bohm::experiments {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentInfo {
  std::string name;
  std::string description;
  std::vector<std::string> sections;  // config sections read besides experiment/seed/output_dir
};

/// Every experiment in a fixed order.
const std::vector<ExperimentInfo>& catalog();

/// A numerical acceptance test built into an experiment.
struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  // "<", "<=", ">", ">=", "=="
  bool passed = false;
};

Check make_check(std::string name, double value, std::string relation, double threshold);

struct RunContext {
  std::filesystem::path output_dir;
  std::uint64_t seed = 1;
};

struct RunResult {
  std::string experiment;
  nlohmann::json metrics = nlohmann::json::object();
  std::vector<Check> checks;
  std::vector<std::filesystem::path> files;  // relative to output_dir
  bool passed() const;
};

/// A validated experiment ready to run.
struct Prepared {
  std::string experiment;
  nlohmann::json config;
  std::uint64_t seed = 1;
  std::string output_dir;  // from the config, may be empty
  std::function<RunResult(const RunContext&)> run;
};

/// Parses and validates; throws config::ConfigError naming the config path.
Prepared prepare(const nlohmann::json& config);
/// Reads a JSON file (strict, no comments) and prepares it.
Prepared prepare_file(const std::filesystem::path& path);

struct Manifest {
  nlohmann::json json;
  std::string metrics_hash;
};

/// SHA-256 of a byte string or a file, lowercase hex.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Builds manifest.json in ctx.output_dir: config echo, version, seed,
/// wall time, emitted files with hashes, metrics, checks and metrics hash.
Manifest write_manifest(const Prepared& prepared, const RunContext& ctx, const RunResult& result,
                        double wall_seconds);

/// Prepared.run plus manifest; creates the output directory.
struct Outcome {
  RunResult result;
  Manifest manifest;
};
Outcome execute(const Prepared& prepared, const RunContext& ctx);

}  // namespace bohm::experiments
