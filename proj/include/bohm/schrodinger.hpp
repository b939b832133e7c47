#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bohm/lattice.hpp"

namespace bohm {

/// 0.5 * m_a * omega_a^2 * |x_a - center|^2 for every particle.
struct HarmonicPotential {
  std::vector<double> omega;
  double center = 0.0;
};

/// height * exp(-|x_a - center|^2 / (2 width^2)) felt by every particle.
struct GaussianBarrier {
  double height = 1.0;
  double width = 1.0;
  double center = 0.0;
};

/// lambda * |x_first - x_second|^2.
struct PairCoupling {
  double lambda = 0.0;
  int first = 0;
  int second = 1;
};

/// mu * sigma_z * x (first component of `particle`), diagonal in the spin basis.
struct SpinCoupling {
  double mu = 0.0;
  int particle = 0;
};

using PotentialTerm = std::variant<HarmonicPotential, GaussianBarrier, PairCoupling, SpinCoupling>;

enum class Stepper { split_step_spectral, crank_nicolson };

const char* to_string(Stepper s);

struct HamiltonianSpec {
  std::vector<double> masses;          // one per particle, in units of the reference mass
  std::vector<PotentialTerm> potential;  // empty: free particles (box via dirichlet walls)
  double time_step = 1e-3;
  Stepper stepper = Stepper::split_step_spectral;
};

/// Throws StepperBoundaryMismatch / InvalidExtent when spec and grid disagree.
/// The stepper/boundary pairing is only checked when check_stepper is set.
void validate(const HamiltonianSpec& h, const Grid& grid, bool check_stepper = true);

/// True when dt exceeds dx^2 * m_min / pi; evolve() warns but proceeds.
bool exceeds_stability_heuristic(const HamiltonianSpec& h, const Grid& grid);

/// Potential energy at every grid point for one collective spin component.
std::vector<double> potential_values(const HamiltonianSpec& h, const Grid& grid, std::size_t spin);

/// H psi using the shared derivative operator (spectral or 3-point Laplacian).
std::vector<Complex> apply_hamiltonian(const HamiltonianSpec& h, const DerivativeOperator& op,
                                       std::span<const Complex> amplitudes);

/// <psi|H|psi>. Throws if the imaginary residue exceeds 1e-10.
double energy(const WaveField& psi, const HamiltonianSpec& h);

/// One-step propagator with precomputed phase factors.
class Propagator {
 public:
  Propagator(const Grid& grid, HamiltonianSpec h, double dt);
  void step(WaveField& psi) const;
  double dt() const { return dt_; }

 private:
  void split_step(std::span<Complex> psi, std::size_t spin) const;
  void cayley_axis(std::span<Complex> psi, std::size_t spin, int axis, double tau) const;

  Grid grid_;
  HamiltonianSpec h_;
  double dt_;
  std::vector<std::vector<double>> potential_;           // per spin component
  std::vector<std::vector<Complex>> half_potential_phase_;  // split-step only
  std::vector<Complex> kinetic_phase_;                   // split-step only
};

struct FrameStoreOptions {
  /// Frames beyond this count are written to spill_dir and read back lazily.
  std::size_t memory_cap = 4096;
  std::filesystem::path spill_dir;  // empty: a fresh directory under the temp path
};

/// Ordered wave-field frames, partly in memory and partly on disk.
class FrameSequence {
 public:
  explicit FrameSequence(FrameStoreOptions options = {});

  void push(WaveField frame);
  std::size_t size() const { return times_.size(); }
  double time(std::size_t i) const { return times_.at(i); }
  const std::vector<double>& times() const { return times_; }
  WaveField frame(std::size_t i) const;
  std::size_t spilled() const { return spilled_paths_.size(); }

  /// Writes every frame as .fld plus a frames.json index into dir.
  void write(const std::filesystem::path& dir) const;

 private:
  FrameStoreOptions options_;
  std::vector<double> times_;
  std::vector<WaveField> in_memory_;
  std::vector<std::filesystem::path> spilled_paths_;
};

/// Frames at t0, t0 + stride*dt, ..., t_final (dt sign follows t_final - t0).
FrameSequence evolve(const WaveField& psi, const HamiltonianSpec& h, double t_final,
                     int frame_stride, FrameStoreOptions store = {});

/// Reads a directory written by FrameSequence::write.
FrameSequence read_frames(const std::filesystem::path& dir, FrameStoreOptions store = {});

struct Eigenstate {
  double energy;
  WaveField state;
};

struct EigenOptions {
  std::size_t dense_budget = 4096;
  double imaginary_time_step = 10.0;
  double residual_tolerance = 1e-7;
  double energy_stall = 1e-8;
  int max_iterations = 5000;
};

/// Lowest `count` eigenstates, ascending. Dense diagonalization when the
/// amplitude count fits the dense budget, otherwise implicit imaginary-time
/// propagation with Gram-Schmidt deflation.
std::vector<Eigenstate> eigenstates(const HamiltonianSpec& h, const Grid& grid, int count,
                                    const EigenOptions& options = {});

/// ||H psi - E psi|| with quadrature weight.
double eigen_residual(const HamiltonianSpec& h, const WaveField& psi, double e);

}  // namespace bohm
