#pragma once

// Probability density, per-axis probability currents, regularized velocity
// fields and continuity-equation residuals computed from wave-field frames.

#include <filesystem>
#include <vector>

#include "bohm/lattice.hpp"
#include "bohm/schrodinger.hpp"

namespace bohm {

/// Density and currents at one instant. Currents carry one component per
/// grid axis.
struct FieldFrame {
  double time = 0.0;
  ScalarField rho;
  VectorField currents;
};

/// Spin-summed |psi_s|^2 at every grid point.
ScalarField density(const WaveField& psi);

/// j_k = (1/m_a) sum_s Im(conj(psi_s) d_k psi_s) for axis k of particle a.
VectorField current(const WaveField& psi, const HamiltonianSpec& h, const DerivativeOperator& op);
VectorField current(const WaveField& psi, const HamiltonianSpec& h);

FieldFrame field_frame(const WaveField& psi, const HamiltonianSpec& h, const DerivativeOperator& op);

struct VelocityField {
  VectorField velocity;
  std::size_t floored = 0;  // points where rho was below the floor
};

/// v = j / max(rho, eps_rel * max rho). eps_rel must lie in (0, 1e-3].
VelocityField velocity(const ScalarField& rho, const VectorField& j, double eps_rel = 1e-12);
VelocityField velocity(const FieldFrame& frame, double eps_rel = 1e-12);

/// d(rho)/dt (central difference) + sum_k d_k j_k at the middle frame.
ScalarField continuity_residual_field(const FieldFrame& before, const FieldFrame& middle,
                                      const FieldFrame& after, const DerivativeOperator& op);

struct ContinuityResidual {
  double time = 0.0;
  double absolute = 0.0;  // L2 norm of the residual field
  double relative = 0.0;  // absolute / L2 norm of d(rho)/dt
};

/// Throws NonuniformFrames when the two time gaps differ.
ContinuityResidual continuity_residual(const FieldFrame& before, const FieldFrame& middle,
                                       const FieldFrame& after, const DerivativeOperator& op);

/// Residual at every interior frame of a sequence.
std::vector<ContinuityResidual> continuity_series(const std::vector<FieldFrame>& frames,
                                                  const DerivativeOperator& op);

std::vector<FieldFrame> field_frames(const FrameSequence& frames, const HamiltonianSpec& h);

/// CSV with header time,abs_residual,rel_residual.
void write_residual_csv(const std::filesystem::path& path,
                        const std::vector<ContinuityResidual>& series);

}  // namespace bohm
