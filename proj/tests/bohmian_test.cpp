#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "bohm/bohmian.hpp"
#include "bohm/error.hpp"
#include "bohm/parallel.hpp"
#include "bohm/states.hpp"
#include "test_support.hpp"

using namespace bohm;
using namespace bohm::testing;
using std::numbers::pi;

namespace {

double periodic_gap(double a, double b, double len) {
  double d = std::fmod(std::abs(a - b), len);
  return std::min(d, len - d);
}

std::vector<double> times_between(double t0, double t1, int count) {
  std::vector<double> t;
  for (int i = 0; i <= count; ++i) t.push_back(t0 + (t1 - t0) * i / count);
  return t;
}

}  // namespace

TEST(Sampling, UniformPassesChiSquare) {
  Grid g = grid1d(64, 0, 1, Boundary::periodic);
  ScalarField rho(g, std::vector<double>(64, 1.0));
  const std::size_t n = 100000;
  const auto x = sample_initial(rho, n, 12345);
  const int bins = 50;
  std::vector<double> counts(bins, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    ASSERT_GE(x.at(i)[0], 0.0);
    ASSERT_LT(x.at(i)[0], 1.0);
    counts[static_cast<std::size_t>(std::min(bins - 1, static_cast<int>(x.at(i)[0] * bins)))] += 1.0;
  }
  const double expected = static_cast<double>(n) / bins;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(bins - 1), chi2));
  EXPECT_GT(p, 0.01);
}

TEST(Sampling, OneHotCell) {
  Grid g = grid1d(32, -4, 4, Boundary::periodic);
  ScalarField rho(g);
  rho.values[10] = 1.0 / g.weight();
  const auto x = sample_initial(rho, 1000, 7);
  const double c = g.coordinates()[10];
  for (std::size_t i = 0; i < x.count(); ++i) EXPECT_LE(std::abs(x.at(i)[0] - c), 0.5 * g.spacing());
}

TEST(Sampling, GaussianMoments) {
  Grid g = grid1d(256, -8, 8, Boundary::periodic);
  const double mu = 0.7, sigma = 1.1;
  const auto rho = density(states::gaussian_packet(g, {{mu, sigma, 0.0}}));
  const std::size_t n = 100000;
  const auto x = sample_initial(rho, n, 99);
  double m = 0.0, v = 0.0;
  for (double xi : x.values) m += xi;
  m /= n;
  for (double xi : x.values) v += (xi - m) * (xi - m);
  v /= (n - 1);
  EXPECT_NEAR(m, mu, 3.0 * sigma / std::sqrt(n));
  EXPECT_NEAR(v, sigma * sigma, 3.0 * sigma * sigma * std::sqrt(2.0 / n));
}

TEST(Trajectories, PlaneWaveStraightLines) {
  Grid g = grid1d(64, 0, 1, Boundary::periodic);
  HamiltonianSpec h = hamiltonian(1, Stepper::split_step_spectral);
  h.masses = {2.0};
  const double k = 4 * pi;
  const auto psi = states::plane_wave(g, k);
  const auto v = velocity(field_frame(psi, h, DerivativeOperator(g))).velocity;
  const auto frames = constant_velocity_frames(v, times_between(0.0, 0.5, 10));
  const auto x0 = sample_initial(density(psi), 200, 3);
  const auto ens = integrate_trajectories(frames, x0, Flavor::full, 3);
  for (std::size_t s = 0; s < ens.samples; ++s)
    for (std::size_t t = 0; t < ens.times.size(); ++t)
      EXPECT_LT(periodic_gap(ens.at(s, t, 0), x0.at(s)[0] + k / 2.0 * ens.times[t], 1.0), 1e-9);
}

TEST(Trajectories, GroundStateIsStatic) {
  Grid g = grid1d(127, 0, 1, Boundary::dirichlet);
  HamiltonianSpec h = hamiltonian(1, Stepper::crank_nicolson, 1e-3);
  const auto frames = full_velocity_frames(evolve(states::box_eigenstate(g, 1), h, 0.1, 10), h);
  const auto x0 = sample_initial(density(states::box_eigenstate(g, 1)), 100, 5);
  const auto ens = integrate_trajectories(frames, x0, Flavor::full, 5);
  for (std::size_t s = 0; s < ens.samples; ++s)
    EXPECT_LT(std::abs(ens.at(s, ens.times.size() - 1, 0) - x0.at(s)[0]), 1e-9);
}

TEST(Trajectories, CoherentStateFollowsPacketCentre) {
  Grid g = grid1d(256, -10, 10, Boundary::periodic);
  HamiltonianSpec h = hamiltonian(1, Stepper::split_step_spectral, 1e-3);
  h.potential.push_back(HarmonicPotential{{1.0}});
  const double amp = 2.0;
  const auto psi = states::coherent_state(g, 1.0, 1.0, amp, 0.0);
  const auto frames = full_velocity_frames(evolve(psi, h, 3.0, 10), h);
  const auto x0 = sample_initial(density(psi), 300, 11);
  const auto ens = integrate_trajectories(frames, x0, Flavor::full, 11);
  double worst = 0.0;
  for (std::size_t s = 0; s < ens.samples; ++s)
    for (std::size_t t = 0; t < ens.times.size(); ++t)
      worst = std::max(worst, std::abs(ens.at(s, t, 0) - (x0.at(s)[0] + amp * std::cos(ens.times[t]) - amp)));
  EXPECT_LT(worst, 1e-3);
  EXPECT_EQ(order_inversions(ens), 0u);
}

TEST(Trajectories, DeterministicAcrossThreadCounts) {
  Grid g = grid1d(128, -10, 10, Boundary::periodic);
  HamiltonianSpec h = hamiltonian(1, Stepper::split_step_spectral, 2e-3);
  const auto psi = states::gaussian_packet(g, {{-2.0, 0.8, 1.0}});
  const auto frames = full_velocity_frames(evolve(psi, h, 0.5, 5), h);
  set_thread_count(1);
  const auto a = integrate_trajectories(frames, sample_initial(density(psi), 500, 42), Flavor::full, 42);
  set_thread_count(3);
  const auto b = integrate_trajectories(frames, sample_initial(density(psi), 500, 42), Flavor::full, 42);
  set_thread_count(1);
  EXPECT_EQ(a.paths, b.paths);
}

TEST(Trajectories, NoCrossingForFreePacket) {
  Grid g = grid1d(256, -20, 20, Boundary::periodic);
  HamiltonianSpec h = hamiltonian(1, Stepper::split_step_spectral, 1e-3);
  const auto psi = states::gaussian_packet(g, {{-3.0, 0.7, 1.5}});
  const auto frames = full_velocity_frames(evolve(psi, h, 1.0, 10), h);
  const auto ens = integrate_trajectories(frames, sample_initial(density(psi), 2000, 8), Flavor::full, 8);
  EXPECT_EQ(order_inversions(ens), 0u);
}

TEST(Trajectories, DirichletReflectionAndEscape) {
  Grid g = grid1d(31, 0, 1, Boundary::dirichlet);
  VectorField v(g);
  for (double& c : v.components[0]) c = 1.0;
  Configurations x0{1, {1.0 - 0.5 * g.spacing()}};
  // one step overshoots by less than dx: reflected
  auto frames = constant_velocity_frames(v, {0.0, 0.6 * g.spacing()});
  const auto ens = integrate_trajectories(frames, x0, Flavor::full, 0, {1});
  EXPECT_EQ(ens.reflections, 1u);
  EXPECT_LE(ens.at(0, 1, 0), 1.0);
  // a deep exit is an error
  frames = constant_velocity_frames(v, {0.0, 3.0 * g.spacing()});
  EXPECT_THROW(integrate_trajectories(frames, x0, Flavor::full, 0, {1}), TrajectoryEscapedDomain);
}

TEST(Equivariance, NoiseFloorAndFreeGaussian) {
  Grid g = grid1d(256, -20, 20, Boundary::periodic);
  HamiltonianSpec h = hamiltonian(1, Stepper::split_step_spectral, 1e-3);
  const auto psi = states::gaussian_packet(g, {{-4.0, 0.7, 3.0}});
  const std::size_t n = 10000;
  const int bins = 32;
  const auto seq = evolve(psi, h, 1.0, 10);
  const auto frames = full_velocity_frames(seq, h);
  const auto ens = integrate_trajectories(frames, sample_initial(density(psi), n, 2024), Flavor::full, 2024);
  EXPECT_LT(equivariance_distance(ens, 0, density(psi), bins), 2.0 * std::sqrt(double(bins) / n));
  const auto rho_t = density(seq.frame(seq.size() - 1));
  EXPECT_LT(equivariance_distance(ens, ens.times.size() - 1, rho_t, bins), 0.05);

  VectorField zero(g);
  const auto frozen = integrate_trajectories(constant_velocity_frames(zero, frames.times),
                                             sample_initial(density(psi), n, 2024), Flavor::full, 2024);
  EXPECT_GT(equivariance_distance(frozen, frozen.times.size() - 1, rho_t, bins), 0.2);
}

TEST(Equivariance, TruncatedMarginalAndDistinctPaths) {
  // equal widths: the positions are uncorrelated and only the phase
  // exp(i kappa x0 x1) entangles the particles
  Grid g2 = grid_particles(2, 128, -12, 12, Boundary::periodic);
  HamiltonianSpec h = hamiltonian(2, Stepper::split_step_spectral, 5e-3);
  const auto psi = states::entangled_gaussian(g2, {1.0, 1.0, 2.0, 0.0, 0.0, 0.0});
  const SubsystemPartition part{{0}, {1}};
  const auto seq = evolve(psi, h, 1.0, 4);
  const auto full_frames = full_velocity_frames(seq, h);
  const auto tr_frames = truncated_velocity_frames(seq, h, part);
  const auto x0 = sample_initial(density(psi), 2000, 77);
  const auto full = integrate_trajectories(full_frames, x0, Flavor::full, 77);
  const auto tr = integrate_trajectories(tr_frames, project(x0, {0}), Flavor::truncated, 77);
  const auto rho_a = marginal_density(density(seq.frame(seq.size() - 1)), part);
  EXPECT_LT(equivariance_distance(tr, tr.times.size() - 1, rho_a, 16), 0.08);
  const std::size_t last = full.times.size() - 1;
  std::size_t far = 0;
  for (std::size_t s = 0; s < full.samples; ++s)
    if (periodic_gap(full.at(s, last, 0), tr.at(s, last, 0), 24.0) > 10 * g2.spacing()) ++far;
  EXPECT_GT(far, full.samples / 20);
}

TEST(TrajectoryIo, RoundTrip) {
  TrajectoryEnsemble ens;
  ens.flavor = Flavor::truncated;
  ens.seed = 5;
  ens.times = {0.0, 0.5};
  ens.samples = 2;
  ens.coords = 1;
  ens.paths = {0.1, 0.2, 0.3, 0.4};
  const auto path = std::filesystem::temp_directory_path() / "bohm_test.trj";
  write_trajectories(path, ens);
  const auto back = read_trajectories(path);
  EXPECT_EQ(back.paths, ens.paths);
  EXPECT_EQ(back.flavor, Flavor::truncated);
  EXPECT_EQ(back.times, ens.times);
  std::filesystem::remove(path);
}
