#pragma once

// A/B particle partitions: marginal densities, truncated currents (by
// integrating the full current over B and from the reduced density matrix),
// truncated velocities and subsystem continuity residuals.

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "bohm/currents.hpp"
#include "bohm/lattice.hpp"
#include "bohm/schrodinger.hpp"

namespace bohm {

struct SubsystemPartition {
  std::vector<int> a;  // particles kept
  std::vector<int> b;  // particles traced out
};

/// Throws PartitionMismatch unless a and b are disjoint, nonempty and cover
/// every particle of the grid.
void validate(const SubsystemPartition& part, const Grid& grid);

/// Partition with A = `a` and B = the remaining particles.
SubsystemPartition complement_partition(const Grid& grid, std::vector<int> a);

/// Grid of the A particles (spin dims kept).
Grid subsystem_grid(const Grid& grid, const SubsystemPartition& part);

ScalarField marginal_density(const ScalarField& rho, const SubsystemPartition& part);

/// A-components of j integrated over the B axes.
VectorField truncated_current_integral(const VectorField& j, const SubsystemPartition& part);

/// Marginal density and truncated current of a full frame.
FieldFrame truncated_frame(const FieldFrame& full, const SubsystemPartition& part);

/// Kernel rho_A(x s; x' s'), rows and columns ordered spin-major like
/// WaveField amplitudes on the A grid. The operator acting on grid values is
/// weight * matrix, so sum_i matrix(i,i) * weight = 1.
struct ReducedDensityMatrix {
  Grid grid;
  Eigen::MatrixXcd matrix;
  double time = 0.0;

  /// The density operator in the orthonormal grid basis (trace 1).
  Eigen::MatrixXcd operator_matrix() const { return matrix * grid.weight(); }
  /// Spin-traced diagonal: the A-marginal density.
  ScalarField diagonal() const;
  double purity() const;
};

/// Dense budget for rdm rows (A points times A spin dimension).
inline constexpr std::size_t kDenseBudget = 4096;

/// Tr_B |psi><psi|. Throws DenseBudgetExceeded above kDenseBudget rows.
ReducedDensityMatrix reduced_density_matrix(const WaveField& psi, const SubsystemPartition& part,
                                            std::size_t dense_budget = kDenseBudget);

/// sum_n weights[n] |psi_n><psi_n| for states on one grid (no partial trace).
ReducedDensityMatrix mixed_density_matrix(const std::vector<WaveField>& states,
                                          const std::vector<double>& weights);

/// Diagonal of the anticommutator {v_A, rho_A}/2 with v = -i/m d, spin traced.
/// `masses` lists the masses of the A particles in A order.
VectorField truncated_current_from_rdm(const ReducedDensityMatrix& rdm,
                                       const std::vector<double>& masses,
                                       const DerivativeOperator& op);
VectorField truncated_current_from_rdm(const ReducedDensityMatrix& rdm,
                                       const std::vector<double>& masses);

/// Masses of the A particles taken from a full Hamiltonian.
std::vector<double> subsystem_masses(const HamiltonianSpec& h, const SubsystemPartition& part);

VelocityField truncated_velocity(const ScalarField& rho_a, const VectorField& j_tr,
                                 double eps_rel = 1e-12);

/// Continuity residual of consecutive (rho_A, j_tr_A) frames on the A grid.
ContinuityResidual truncated_continuity_residual(const FieldFrame& before, const FieldFrame& middle,
                                                 const FieldFrame& after);

/// Velocity of the A particles in the full field at a fixed B configuration,
/// given as one grid index per B axis. Lives on the A grid.
VectorField conditional_velocity(const WaveField& psi, const HamiltonianSpec& h,
                                 const SubsystemPartition& part,
                                 const std::vector<int>& b_indices, double eps_rel = 1e-12);

/// `.rdm` container: grid header plus the complex kernel, row-major.
void write_rdm(const std::filesystem::path& path, const ReducedDensityMatrix& rdm);
ReducedDensityMatrix read_rdm(const std::filesystem::path& path);

}  // namespace bohm
