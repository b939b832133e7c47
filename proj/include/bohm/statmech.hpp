#pragma once

// Entropies, canonical thermodynamics and the typicality experiment.
// Units: hbar = m_ref = k = 1, so entropies are in nats.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bohm/lattice.hpp"
#include "bohm/schrodinger.hpp"

namespace bohm::statmech {

// ---------------------------------------------------------------- spectra

enum class SpectrumSource { box, harmonic, two_level, spin_chain, numeric };

const char* to_string(SpectrumSource s);

struct Spectrum {
  SpectrumSource source = SpectrumSource::numeric;
  std::vector<double> levels;  // ascending
  double volume = 0.0;         // box length for the 1D box, else unused
  /// Finite Hilbert space: every level is present and no tail check applies.
  bool complete = false;
};

/// n^2 pi^2 / (2 m L^2), n = 1..count.
Spectrum box_spectrum(double length, double mass, std::size_t count);
/// omega (n + 1/2), n = 0..count-1.
Spectrum harmonic_spectrum(double omega, std::size_t count);
/// {0, gap}.
Spectrum two_level_spectrum(double gap);
Spectrum numeric_spectrum(std::vector<double> levels, bool complete, double volume = 0.0);
Spectrum numeric_spectrum(const std::vector<Eigenstate>& states, double volume = 0.0);

/// Smallest box level count whose Boltzmann tail e^{-(E_max - E_1)/T} stays
/// below 1e-15 at `max_temperature`.
std::size_t box_level_count(double length, double mass, double max_temperature);
std::size_t harmonic_level_count(double omega, double max_temperature);

struct Canonical {
  double beta = 1.0;
  double log_z = 0.0;
  double log_excess = 0.0;  // ln sum e^{-beta (E_n - E_0)}
  std::vector<double> probabilities;
  double energy = 0.0;   // sum p_n E_n
  double entropy = 0.0;  // -sum p_n ln p_n
};

/// Z = e^{-beta E_0} sum e^{-beta (E_n - E_0)}. Throws TruncationInsufficient
/// when an incomplete spectrum's last relative weight is not below 1e-12.
Canonical partition_function(const Spectrum& spectrum, double beta);

// ---------------------------------------------------------------- entropies

/// -sum lambda ln lambda of a density operator (orthonormal basis, trace 1).
/// Eigenvalues down to -1e-10 are clipped to zero; anything lower, a trace
/// off by more than 1e-10 or a non-Hermitian input throws NotADensityMatrix.
double von_neumann_entropy(const Eigen::MatrixXcd& rho);
/// Same for a probability vector (diagonal density matrix).
double von_neumann_entropy(std::span<const double> probabilities);

/// ln dim. Throws InvalidExtent for dim < 1.
double quantum_boltzmann_entropy(double dim);

/// Semiclassical cell count: product over lengths of
/// max(1, floor(length * 2 p_cutoff / (2 pi))).
std::uint64_t macrostate_dim(std::span<const double> lengths, double p_cutoff);

struct Box {
  std::vector<std::pair<double, double>> intervals;  // closed, one per coordinate
  bool contains(std::span<const double> x) const;
  double volume() const;
};

struct Macrostate {
  std::string label;
  std::vector<Box> boxes;  // union
  double dim = 1.0;        // Hilbert-space dimension or phase volume in cell units
  double volume() const;
};

enum class DecompositionKind { hilbert_direct_sum, phase_cells };

struct MacrostateDecomposition {
  DecompositionKind kind = DecompositionKind::hilbert_direct_sum;
  std::vector<Macrostate> cells;
};

/// Index of the first cell containing x (ties on shared faces go to the lower
/// index). Throws OutsideAllCells.
std::size_t macrostate_of(std::span<const double> x, const MacrostateDecomposition& decomp);

/// N particles on [lo, hi]: macrostate n = number of particles in the left
/// half, built from every left/right assignment. dim = C(N, n) * d^N with d
/// the per-particle cell count of one half at `p_cutoff`.
MacrostateDecomposition half_occupation_decomposition(int particles, double lo, double hi,
                                                      double p_cutoff);

/// Histogram of points on a regular product grid.
struct Histogram {
  std::vector<double> lo, hi;
  std::vector<int> bins;
  std::vector<double> probabilities;  // row-major, first axis slowest
  std::size_t outside = 0;            // points that fell outside the range
  double cell_volume() const;
};

/// `points` holds `dims` values per point.
Histogram histogram(std::span<const double> points, std::size_t dims, std::vector<double> lo,
                    std::vector<double> hi, std::vector<int> bins);

/// -sum_c p_c ln(p_c dz / vol_c).
double gibbs_entropy(const Histogram& h, double dz);
/// -sum_M P_M ln(P_M / W_M), W_M the cell volume in units of dz.
double coarse_grained_gibbs(std::span<const double> probabilities, std::span<const double> cell_counts);
/// ln(volume / dz). Throws EmptyRegion for a non-positive volume.
double boltzmann_entropy(double volume, double dz);
double boltzmann_entropy(const Box& region, double dz);

/// N times the Gibbs entropy of the pooled one-particle marginal. `states`
/// holds `particles * per_particle` values per system; every particle's
/// block is histogrammed on the same one-particle grid.
double one_particle_boltzmann(std::span<const double> states, std::size_t particles,
                              std::size_t per_particle, std::vector<double> lo,
                              std::vector<double> hi, std::vector<int> bins, double dz1);

/// True when no value drops more than `tolerance` below the running maximum.
bool nondecreasing_trend(std::span<const double> series, double tolerance);

/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------- thermodynamics

using SpectrumFamily = std::function<Spectrum(double volume)>;

struct ThermoPoint {
  double volume = 0.0, temperature = 0.0;
  double log_z = 0.0, free_energy = 0.0;
  double energy = 0.0, entropy = 0.0, pressure = 0.0;  // differenced
  double energy_direct = 0.0, entropy_direct = 0.0, pressure_direct = 0.0;
};

struct ThermoTable {
  std::vector<double> volumes, temperatures;
  std::vector<ThermoPoint> points;  // volume slowest
  double relative_step = 1e-4;      // central-difference step as a fraction of V or T

  const ThermoPoint& at(std::size_t iv, std::size_t it) const {
    return points[iv * temperatures.size() + it];
  }
};

/// Central differences of T ln Z at every node with step relative_step * T
/// (or * V): E = T^2 d lnZ/dT, S = d(T lnZ)/dT, P = T d lnZ/dV. The direct
/// columns are sum p E, -sum p ln p and -sum p dE_n/dV. Throws GridTooCoarse
/// when either axis has fewer than five points.
ThermoTable thermo_table(const SpectrumFamily& family, std::vector<double> volumes,
                         std::vector<double> temperatures, double relative_step = 1e-4);

enum class ThermoRoute { differenced, direct };

struct FirstLawReport {
  std::vector<double> residuals;  // every edge
  std::vector<double> isochoric;  // edges along T at fixed V
  double max = 0.0, median = 0.0, isochoric_median = 0.0;
};

/// |dE - Tbar dS + Pbar dV| / (|dE| + tiny) along every grid edge.
FirstLawReport first_law_residual(const ThermoTable& table, ThermoRoute route = ThermoRoute::differenced);

void write_thermo_csv(const std::filesystem::path& path, const ThermoTable& table);

// ---------------------------------------------------------------- thermal box

struct VolumeReport {
  double max_current = 0.0;   // sup |j| of the thermal rdm, anticommutator route
  double max_velocity = 0.0;  // sup |j / rho| over the grid
  std::size_t samples = 0, inside = 0;
  double sample_min = 0.0, sample_max = 0.0;
  double spread_fraction = 0.0;  // (max - min) / L
  std::size_t levels = 0;
};

/// Thermal mixture of the analytic box eigenfunctions on a 1D dirichlet grid.
ScalarField thermal_box_density(const Grid& grid, double mass, double temperature,
                                std::size_t* levels = nullptr);

/// Thermal box [lo, hi]: rdm current (needs rows within the dense budget),
/// then Bohmian positions sampled from the thermal density. The positions
/// are static because the current vanishes.
VolumeReport bohmian_volume_check(const Grid& grid, double mass, double temperature,
                                  std::size_t samples, std::uint64_t seed, bool with_current = true);

// ---------------------------------------------------------------- typicality

/// Open transverse-field Ising chain
/// H = -J sum_i c_i sz_i sz_{i+1} - g sum_i sx_i - h sum_i sz_i, c_i = bond_coupling on
/// the bond between the subsystem and the rest and 1 elsewhere.
struct SpinChain {
  int spins = 10;
  int subsystem = 1;  // first spins
  double exchange = 1.0;
  double field = 0.9;
  double longitudinal = 0.5;  // h sum sz_i; breaks integrability
  double bond_coupling = 0.1;
};

inline constexpr int kMaxChainSpins = 12;

/// Dense 2^N Hamiltonian, spin 0 is the most significant bit. Throws
/// DiagonalizationBudget above kMaxChainSpins.
Eigen::MatrixXd chain_hamiltonian(const SpinChain& chain);
/// Hamiltonian of the first `subsystem` spins alone.
Eigen::MatrixXd subsystem_hamiltonian(const SpinChain& chain);

/// Tr over all but the first n_a spins of |psi><psi|.
Eigen::MatrixXcd reduce_to_first_spins(const Eigen::VectorXcd& psi, int spins, int n_a);

/// e^{-beta H} / Z for a small Hermitian H.
Eigen::MatrixXcd canonical_state(const Eigen::MatrixXd& h, double beta);
/// Half the sum of |eigenvalues| of a - b.
double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

/// Minimizes the trace distance between rho and the canonical state of h
/// over beta in [-beta_bound, beta_bound] (Brent).
std::pair<double, double> fit_beta(const Eigen::MatrixXcd& rho, const Eigen::MatrixXd& h,
                                   double beta_bound = 20.0);

struct TypicalityOptions {
  double reference_beta = 0.5;  // window centre = canonical energy of the full chain at this beta
  std::size_t min_levels = 30;
  int trials = 20;
  std::uint64_t seed = 1;
};

struct TypicalityTrial {
  double fitted_beta = 0.0, fitted_distance = 0.0;
  double entropy_distance = 0.0;  // against the entropy-route beta
};

struct TypicalityReport {
  int spins = 0;
  double energy_center = 0.0, window_width = 0.0;
  std::size_t levels_in_window = 0;
  double entropy_beta = 0.0;
  std::vector<TypicalityTrial> trials;
  double median_distance = 0.0, median_fitted_beta = 0.0, median_entropy_distance = 0.0;
};

/// Symmetric window [E - w/2, E + w/2] around the canonical energy at the
/// reference beta, widened until it holds min_levels levels. Each trial draws
/// Gaussian complex coefficients over the window eigenvectors. The entropy
/// route uses windows of the same width shifted by +-w:
/// beta = (ln N(E + w) - ln N(E - w)) / (2 w).
TypicalityReport canonical_typicality(const SpinChain& chain, const TypicalityOptions& options);

}  // namespace bohm::statmech
