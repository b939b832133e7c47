#pragma once

// Classical phase-space ensembles for separable Hamiltonians
// H = sum_a p_a^2 / 2 m_a + V(x), one spatial dimension per particle.
// A state is z = (x_0, p_0, x_1, p_1, ...).

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "bohm/subsystem.hpp"

namespace bohm::classical {

/// 0.5 * m_a * omega_a^2 * x_a^2.
struct HarmonicTerm {
  std::vector<double> omega;  // one entry, or one per particle
};
/// lambda * (x_first - x_second)^2.
struct PairTerm {
  double lambda = 0.0;
  int first = 0;
  int second = 1;
};
/// Open chain: sum_a 0.5 * coupling * (x_{a+1} - x_a)^2.
struct ChainTerm {
  double coupling = 0.0;
};
/// g * x_a^4 for every particle. Makes V non-quadratic.
struct QuarticTerm {
  double g = 0.0;
};

using ClassicalTerm = std::variant<HarmonicTerm, PairTerm, ChainTerm, QuarticTerm>;

struct ClassicalHSpec {
  std::vector<double> masses;        // one per particle
  std::vector<ClassicalTerm> terms;  // empty: free particles
};

void validate(const ClassicalHSpec& h);
int particle_count(const ClassicalHSpec& h);

double potential(const ClassicalHSpec& h, std::span<const double> z);
double energy(const ClassicalHSpec& h, std::span<const double> z);
/// -dV/dx_a for every particle, analytic.
std::vector<double> force(const ClassicalHSpec& h, std::span<const double> z);
/// (dH/dp_a, -dH/dx_a) interleaved like z.
std::vector<double> hamilton_velocity(const ClassicalHSpec& h, std::span<const double> z);

/// True when V is a quadratic form 0.5 x^T K x.
bool is_quadratic(const ClassicalHSpec& h);
/// K for quadratic V; throws AnalyticDensityUnavailable otherwise.
Eigen::MatrixXd stiffness(const ClassicalHSpec& h);
/// Generator A of the linear flow dz/dt = A z (quadratic V only).
Eigen::MatrixXd flow_generator(const ClassicalHSpec& h);

/// Phase velocity with an optional linear damping -gamma p_a added to dp_a/dt.
struct PhaseFlow {
  ClassicalHSpec h;
  double damping = 0.0;
};
std::vector<double> phase_velocity(const PhaseFlow& flow, std::span<const double> z);
/// Analytic divergence sum_a (d/dx_a dx_a/dt + d/dp_a dp_a/dt): the mixed
/// second partials of H cancel term by term, damping contributes -gamma N.
double divergence(const PhaseFlow& flow, std::span<const double> z);
/// max |divergence| over the sample points.
double incompressibility_check(const PhaseFlow& flow, const std::vector<std::vector<double>>& points);

struct PhaseEnsemble {
  int particles = 1;
  std::vector<double> states;  // [sample][2N]
  double time = 0.0;
  std::uint64_t seed = 0;

  std::size_t width() const { return 2 * static_cast<std::size_t>(particles); }
  std::size_t count() const { return states.size() / width(); }
  std::span<const double> at(std::size_t i) const { return {states.data() + i * width(), width()}; }
  std::span<double> at(std::size_t i) { return {states.data() + i * width(), width()}; }
};

/// Multivariate normal samples, one random stream per sample.
PhaseEnsemble sample_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                              std::size_t count, std::uint64_t seed);
/// Canonical ensemble exp(-beta H) of a quadratic H with positive-definite K:
/// x ~ N(0, K^-1 / beta), p ~ N(0, M / beta).
PhaseEnsemble sample_thermal(const ClassicalHSpec& h, double beta, std::size_t count,
                             std::uint64_t seed);
/// Covariance of the canonical ensemble of a quadratic H.
Eigen::MatrixXd thermal_covariance(const ClassicalHSpec& h, double beta);

struct PhaseTrajectories {
  std::vector<double> times;
  std::vector<PhaseEnsemble> snapshots;
};

/// Velocity Verlet, snapshots every `record_stride` steps plus the last.
PhaseTrajectories evolve_ensemble(const ClassicalHSpec& h, const PhaseEnsemble& ens, double dt,
                                  long steps, long record_stride);

struct GaussianDensity {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};
struct ThermalDensity {
  double beta = 1.0;
};
using InitialDensity = std::variant<GaussianDensity, ThermalDensity>;

/// log rho(z, t) up to a t-independent constant. Gaussian densities are
/// transported exactly by the linear flow; throws AnalyticDensityUnavailable
/// for a Gaussian under non-quadratic V.
double log_density(const ClassicalHSpec& h, const InitialDensity& rho0, std::span<const double> z,
                   double t);

/// max over samples and snapshots of |rho(z(t), t) / rho(z(0), 0) - 1|.
double liouville_constancy(const ClassicalHSpec& h, const InitialDensity& rho0,
                           const PhaseTrajectories& traj);

struct PhaseBinning {
  int bins_x = 0;  // 0: Scott's rule
  int bins_p = 0;
  std::size_t min_count = 20;
};

struct PhaseBin {
  int ix = 0, ip = 0;
  double x = 0.0, p = 0.0;  // bin centre
  std::size_t count = 0;
  bool occupied = false;  // count >= min_count
  double mean[2] = {0.0, 0.0};       // truncated velocity (dx/dt, dp/dt)
  double reference[2] = {0.0, 0.0};  // bin mean of the reference field
  double se[2] = {0.0, 0.0};         // standard error of (v - reference)
  double min_distance = 0.0;         // min over samples of |v_i - mean|
};

struct TruncatedPhaseVelocity {
  int particle = 0;
  double x_lo = 0.0, x_width = 1.0, p_lo = 0.0, p_width = 1.0;
  int nx = 1, np = 1;
  std::vector<PhaseBin> bins;  // row-major over (ix, ip)
};

using ReferenceVelocity = std::function<std::array<double, 2>(std::span<const double> z)>;

/// Conditional ensemble mean of the A particle's phase velocity within
/// (x_A, p_A) bins. A must hold exactly one particle. When `reference` is
/// given, each bin also reports the mean of reference(z) over its samples
/// and the standard error of v - reference.
TruncatedPhaseVelocity truncated_phase_velocity(const ClassicalHSpec& h, const PhaseEnsemble& ens,
                                                const SubsystemPartition& part,
                                                const PhaseBinning& binning = {},
                                                const ReferenceVelocity& reference = {});

/// E[v_A | z_A] for a Gaussian ensemble under quadratic H (closed form).
std::array<double, 2> gaussian_conditional_velocity(const ClassicalHSpec& h,
                                                    const GaussianDensity& rho, int particle,
                                                    double x, double p);

/// Gaussian density of a quadratic flow at time t.
GaussianDensity transported_gaussian(const ClassicalHSpec& h, const GaussianDensity& rho0, double t);

struct ScalingRow {
  std::size_t n = 0;
  double mean = 0.0;
  double spread = 0.0;    // sample standard deviation over realizations
  double relative = 0.0;  // spread / mean
};
struct ScalingTable {
  std::vector<ScalingRow> rows;
  double slope = 0.0;  // of log(relative) against log(n)
};

using SystemSampler = std::function<std::vector<double>(std::size_t n, std::uint64_t seed,
                                                        std::uint64_t stream)>;
using Observable = std::function<double(std::span<const double> z)>;

/// For every n: `realizations` independent systems of size n, the
/// observable's mean and spread, then the log-log slope. Throws
/// InsufficientSamples for fewer than two realizations.
ScalingTable ensemble_average_scaling(const Observable& observable, const SystemSampler& sampler,
                                      const std::vector<std::size_t>& sizes,
                                      std::size_t realizations, std::uint64_t seed);

/// One realization of n independent thermal oscillators (mass, omega, beta).
SystemSampler thermal_oscillator_sampler(double mass, double omega, double beta);

struct MarginalContinuity {
  double predicted_change = 0.0;  // L1 of -dt div(rho v_tr) on the bins
  double actual_change = 0.0;     // L1 of rho(t+dt) - rho(t)
  double mismatch = 0.0;          // L1 of predicted - actual
};

/// Histogram rho_A at t, one explicit Euler continuity step with the binned
/// truncated velocity, compared with the histogram of the evolved ensemble.
MarginalContinuity binned_continuity_check(const ClassicalHSpec& h, const PhaseEnsemble& now,
                                           const PhaseEnsemble& later, const SubsystemPartition& part,
                                           int bins);

/// `.ens` container: header {particles, samples, time, seed} plus states.
void write_ensemble(const std::filesystem::path& path, const PhaseEnsemble& ens);
PhaseEnsemble read_ensemble(const std::filesystem::path& path);

}  // namespace bohm::classical
