#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "bohm/currents.hpp"
#include "bohm/error.hpp"
#include "bohm/states.hpp"
#include "test_support.hpp"

using namespace bohm;
using namespace bohm::testing;
using std::numbers::pi;

namespace {

// Middle-frame residual for a run of three steps of size dt starting at t0.
ContinuityResidual residual_at(const WaveField& psi0, const HamiltonianSpec& base, double dt,
                               double t_mid) {
  HamiltonianSpec h = base;
  h.time_step = dt;
  WaveField start = psi0;
  if (t_mid - dt > 0.0) start = evolve(psi0, h, t_mid - dt, 1000000).frame(1);
  const auto frames = evolve(start, h, start.time + 2 * dt, 1);
  DerivativeOperator op(psi0.grid);
  const auto ff = field_frames(frames, h);
  return continuity_residual(ff[0], ff[1], ff[2], op);
}

}  // namespace

TEST(Density, PlaneWaveIsUniform) {
  Grid g = grid1d(64, 0.0, 2.0, Boundary::periodic);
  const auto rho = density(states::plane_wave(g, 2.0 * pi));
  for (double v : rho.values) EXPECT_NEAR(v, 0.5, 1e-14);
}

TEST(Density, SpinorSumsComponents) {
  Grid g = grid1d(64, -8.0, 8.0, Boundary::periodic, {2});
  Grid g1 = grid1d(64, -8.0, 8.0, Boundary::periodic);
  const WaveField f = states::gaussian_packet(g1, {{0.5, 1.0, 1.5}});
  WaveField psi(g);
  for (std::size_t p = 0; p < g.points(); ++p) {
    psi.amplitudes[p] = f.amplitudes[p] / std::sqrt(2.0);
    psi.amplitudes[g.points() + p] = Complex(0, 1) * f.amplitudes[p] / std::sqrt(2.0);
  }
  const auto rho = density(psi);
  for (std::size_t p = 0; p < g.points(); ++p) EXPECT_NEAR(rho.values[p], std::norm(f.amplitudes[p]), 1e-15);
}

TEST(Density, EntangledMatchesBruteForce) {
  Grid g = grid_particles(2, 48, -6.0, 6.0, Boundary::periodic);
  const auto psi = states::entangled_gaussian(g, {1.2, 0.4, 0.7, 1.0, 0.3, -0.2});
  const auto rho = density(psi);
  double total = 0.0;
  for (std::size_t p = 0; p < g.points(); ++p) {
    const Complex a = psi.amplitudes[p];
    EXPECT_NEAR(rho.values[p], a.real() * a.real() + a.imag() * a.imag(), 1e-14);
    total += rho.values[p];
  }
  EXPECT_NEAR(total * g.weight(), 1.0, 1e-9);
}

TEST(Density, SpinTraceConsistency) {
  Grid g = grid1d(32, -4.0, 4.0, Boundary::periodic, {2});
  Grid g1 = grid1d(32, -4.0, 4.0, Boundary::periodic);
  WaveField psi(g);
  const auto up = states::gaussian_packet(g1, {{-1.0, 0.7, 2.0}});
  const auto down = states::gaussian_packet(g1, {{1.0, 0.5, -1.0}});
  for (std::size_t p = 0; p < g.points(); ++p) {
    psi.amplitudes[p] = 0.6 * up.amplitudes[p];
    psi.amplitudes[g.points() + p] = 0.8 * down.amplitudes[p];
  }
  const auto rho = density(psi);
  for (std::size_t p = 0; p < g.points(); ++p)
    EXPECT_EQ(rho.values[p], std::norm(psi.amplitudes[p]) + std::norm(psi.amplitudes[g.points() + p]));
}

TEST(Current, PlaneWave) {
  Grid g = grid1d(64, 0.0, 1.0, Boundary::periodic);
  const double k = 6.0 * pi;
  HamiltonianSpec h = hamiltonian(1, Stepper::split_step_spectral);
  h.masses = {2.0};
  const auto psi = states::plane_wave(g, k);
  const auto j = current(psi, h);
  const auto rho = density(psi);
  for (std::size_t p = 0; p < g.points(); ++p)
    EXPECT_NEAR(j.components[0][p], k / 2.0 * rho.values[p], 1e-11);
  const auto v = velocity(rho, j);
  for (double x : v.velocity.components[0]) EXPECT_NEAR(x, k / 2.0, 1e-10);
}

TEST(Current, RealEigenstateCarriesNone) {
  Grid g = grid1d(127, 0.0, 1.0, Boundary::dirichlet);
  HamiltonianSpec h = hamiltonian(1, Stepper::crank_nicolson);
  for (int level : {1, 2, 3}) {
    const auto j = current(states::box_eigenstate(g, level), h);
    EXPECT_LT(j.max_abs(), 1e-12);
  }
}

TEST(Current, MovingGaussianIntegratesToMomentum) {
  Grid g = grid1d(256, -15.0, 15.0, Boundary::periodic);
  HamiltonianSpec h = hamiltonian(1, Stepper::split_step_spectral);
  h.masses = {1.5};
  const double k0 = 2.5;
  const auto j = current(states::gaussian_packet(g, {{-1.0, 1.0, k0}}), h);
  EXPECT_NEAR(integrate(ScalarField(g, j.components[0])), k0 / 1.5, 1e-6);
}

TEST(Velocity, NodeIsRegularizedAndFlagged) {
  Grid g = grid1d(127, 0.0, 1.0, Boundary::dirichlet);
  HamiltonianSpec h = hamiltonian(1, Stepper::crank_nicolson);
  const auto psi = states::box_eigenstate(g, 2);
  const auto frame = field_frame(psi, h, DerivativeOperator(g));
  const auto v = velocity(frame);
  EXPECT_GE(v.floored, 1u);
  for (double x : v.velocity.components[0]) EXPECT_TRUE(std::isfinite(x));
  const auto v0 = velocity(field_frame(states::box_eigenstate(g, 1), h, DerivativeOperator(g)));
  EXPECT_EQ(v0.velocity.max_abs(), 0.0);
  EXPECT_THROW(velocity(frame, 0.0), InvalidExtent);
  EXPECT_THROW(velocity(frame, 1e-2), InvalidExtent);
}

TEST(Continuity, StationaryStateVanishes) {
  Grid g = grid1d(128, -10.0, 10.0, Boundary::periodic);
  HamiltonianSpec h = hamiltonian(1, Stepper::split_step_spectral);
  h.potential.push_back(HarmonicPotential{{1.0}});
  WaveField psi(g);
  const auto phi = states::hermite_function(g, 0, 1.0, 1.0);
  for (std::size_t p = 0; p < g.points(); ++p) psi.amplitudes[p] = phi[p];
  psi.normalize();
  const auto r = residual_at(psi, h, 1e-3, 0.0);
  EXPECT_LT(r.absolute, 1e-10);
}

TEST(Continuity, FreeGaussianSecondOrderInTime) {
  Grid g = grid1d(256, -20.0, 20.0, Boundary::periodic);
  HamiltonianSpec h = hamiltonian(1, Stepper::split_step_spectral);
  const auto psi = states::gaussian_packet(g, {{-2.0, 1.0, 1.5}});
  const auto coarse = residual_at(psi, h, 1e-3, 0.5);
  const auto fine = residual_at(psi, h, 5e-4, 0.5);
  EXPECT_LT(coarse.relative, 1e-4);
  EXPECT_GE(coarse.absolute / fine.absolute, 3.5);
}

TEST(Continuity, CoherentStateBelowTolerance) {
  Grid g = grid1d(256, -12.0, 12.0, Boundary::periodic);
  HamiltonianSpec h = hamiltonian(1, Stepper::split_step_spectral);
  h.potential.push_back(HarmonicPotential{{1.0}});
  const auto psi = states::coherent_state(g, 1.0, 1.0, 2.0, 0.0);
  const auto r = residual_at(psi, h, 1e-3, 0.7);
  EXPECT_LT(r.relative, 1e-4);
  // self-convergence: the residual at 2x time resolution is smaller
  EXPECT_LT(residual_at(psi, h, 5e-4, 0.7).relative, r.relative);
}

TEST(Continuity, CrankNicolsonBoxConvergesInSpace) {
  // On dirichlet grids the residual is set by the central-difference
  // operator, so it shrinks with dx at second order.
  HamiltonianSpec h = hamiltonian(1, Stepper::crank_nicolson);
  double prev = 0.0;
  for (int n : {255, 511}) {
    Grid g = grid1d(n, 0.0, 10.0, Boundary::dirichlet);
    const auto psi = states::gaussian_packet(g, {{5.0, 0.5, 1.0}});
    const auto r = residual_at(psi, h, 1e-4, 0.2);
    if (prev > 0.0) EXPECT_GE(prev / r.absolute, 3.5);
    prev = r.absolute;
  }
}

TEST(Continuity, NonuniformFramesRejected) {
  Grid g = grid1d(64, -8.0, 8.0, Boundary::periodic);
  HamiltonianSpec h = hamiltonian(1, Stepper::split_step_spectral);
  auto psi = states::gaussian_packet(g, {{0.0, 1.0, 1.0}});
  DerivativeOperator op(g);
  auto a = field_frame(psi, h, op);
  auto b = a, c = a;
  b.time = 0.1;
  c.time = 0.3;
  EXPECT_THROW(continuity_residual(a, b, c, op), NonuniformFrames);
}

TEST(Continuity, EhrenfestDriftMatchesIntegratedCurrent) {
  Grid g = grid1d(256, -16.0, 16.0, Boundary::periodic);
  HamiltonianSpec h = hamiltonian(1, Stepper::split_step_spectral);
  h.potential.push_back(HarmonicPotential{{0.8}});
  const auto frames = evolve(states::gaussian_packet(g, {{1.0, 0.9, 0.7}}), h, 0.402, 1);
  auto mean_x = [&](const WaveField& psi) {
    const auto rho = density(psi);
    double s = 0.0;
    for (std::size_t p = 0; p < g.points(); ++p) s += g.coordinates()[p] * rho.values[p];
    return s * g.weight();
  };
  const std::size_t mid = 200;
  const double drift = (mean_x(frames.frame(mid + 1)) - mean_x(frames.frame(mid - 1))) / 2e-3;
  const auto j = current(frames.frame(mid), h);
  EXPECT_NEAR(drift, integrate(ScalarField(g, j.components[0])), 1e-5);
}

TEST(Continuity, ResidualCsvHasHeader) {
  const auto path = std::filesystem::temp_directory_path() / "bohm_residual_test.csv";
  write_residual_csv(path, {{0.1, 1e-6, 1e-5}});
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "time,abs_residual,rel_residual");
  std::filesystem::remove(path);
}
