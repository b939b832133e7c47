#pragma once

// Shared config parsers and output helpers for the experiment runners.

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "bohm/classical.hpp"
#include "bohm/config.hpp"
#include "bohm/experiments.hpp"
#include "bohm/lattice.hpp"
#include "bohm/schrodinger.hpp"
#include "bohm/subsystem.hpp"

namespace bohm::experiments::detail {

using config::Section;
using Runner = std::function<RunResult(const RunContext&)>;

struct QuantumSetup {
  Grid grid;
  HamiltonianSpec h;
  WaveField psi;
};

Grid parse_grid(const Section& s);
HamiltonianSpec parse_hamiltonian(const Section& s, const Grid& grid);
WaveField parse_state(const Section& s, const Grid& grid, const HamiltonianSpec& h);
/// Reads the grid, hamiltonian and state children of `s`.
QuantumSetup parse_setup(const Section& s);

struct Evolution {
  double t_final = 1.0;
  int frame_stride = 1;
};
Evolution parse_evolution(const Section& s);

struct EnsembleParams {
  std::size_t samples = 10000;
  int bins = 32;
  int substeps = 4;
  double eps_rel = 1e-12;
  std::size_t polylines = 20;
};
EnsembleParams parse_ensemble(const Section& s);

SubsystemPartition parse_partition(const Section& s, const Grid& grid);

classical::ClassicalHSpec parse_classical(const Section& s);

/// Gaussian (mean + row-major covariance) or thermal (beta) phase ensemble.
struct ClassicalEnsemble {
  std::size_t samples = 10000;
  bool thermal = false;
  double beta = 1.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  classical::PhaseEnsemble sample(const classical::ClassicalHSpec& h, std::uint64_t seed) const;
  classical::InitialDensity density() const;
};
ClassicalEnsemble parse_classical_ensemble(const Section& s, const classical::ClassicalHSpec& h);

struct ClassicalEvolution {
  double time_step = 1e-3;
  long steps = 1000;
  long record_stride = 100;
};
ClassicalEvolution parse_classical_evolution(const Section& s);

/// lo, hi, points from a {lo, hi, points} object.
std::vector<double> parse_axis(const Section& s, long min_points);
std::vector<double> linspace(double lo, double hi, std::size_t n);

std::ofstream open_csv(const RunContext& ctx, RunResult& result, const std::string& name);
void add_file(RunResult& result, const RunContext& ctx, const std::filesystem::path& relative);
/// Every regular file below a subdirectory of the output.
void add_tree(RunResult& result, const RunContext& ctx, const std::filesystem::path& relative);

double median(std::vector<double> v);

/// Largest allowed fall of an entropy series below its running maximum,
/// as a fraction of the total rise, for a trend to count as non-decreasing.
inline constexpr double kTrendTolerance = 0.05;

/// Turns a library precondition failure found while parsing into a
/// ConfigError at `path`.
template <typename Fn>
auto at_path(const std::string& path, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const config::ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw config::ConfigError(path, e.what());
  }
}

Runner prepare_evolve(const Section& root);
Runner prepare_continuity(const Section& root);
Runner prepare_subsystem_currents(const Section& root);
Runner prepare_bohm_full(const Section& root);
Runner prepare_bohm_truncated(const Section& root);
Runner prepare_equivariance(const Section& root);
Runner prepare_free_expansion(const Section& root);
Runner prepare_classical_liouville(const Section& root);
Runner prepare_classical_truncated(const Section& root);
Runner prepare_scaling(const Section& root);
Runner prepare_entropy_series(const Section& root);
Runner prepare_thermo(const Section& root);
Runner prepare_first_law(const Section& root);
Runner prepare_typicality(const Section& root);
Runner prepare_cat_mixture(const Section& root);

}  // namespace bohm::experiments::detail
