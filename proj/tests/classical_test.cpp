#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "bohm/classical.hpp"
#include "bohm/error.hpp"

using namespace bohm;
using namespace bohm::classical;

namespace {

ClassicalHSpec oscillator(double omega = 1.0) { return {{1.0}, {HarmonicTerm{{omega}}}}; }

ClassicalHSpec chain(int n) {
  ClassicalHSpec h;
  h.masses.assign(static_cast<std::size_t>(n), 1.0);
  h.masses[1] = 2.0;
  h.terms = {HarmonicTerm{{0.7}}, ChainTerm{1.3}};
  return h;
}

ClassicalHSpec coupled_pair(double lambda) { return {{1.0, 1.5}, {HarmonicTerm{{1.0, 0.8}}, PairTerm{lambda, 0, 1}}}; }

double hamiltonian_fd(const ClassicalHSpec& h, std::vector<double> z, std::size_t k) {
  const double step = 1e-5;
  z[k] += step;
  const double up = energy(h, z);
  z[k] -= 2 * step;
  const double down = energy(h, z);
  return (up - down) / (2 * step);
}

}  // namespace

TEST(HamiltonVelocity, HarmonicAndFree) {
  const auto v = hamilton_velocity(oscillator(), std::vector<double>{1.0, 0.0});
  EXPECT_DOUBLE_EQ(v[0], 0.0);
  EXPECT_DOUBLE_EQ(v[1], -1.0);
  const auto f = hamilton_velocity(ClassicalHSpec{{1.0}, {}}, std::vector<double>{0.0, 2.0});
  EXPECT_DOUBLE_EQ(f[0], 2.0);
  EXPECT_DOUBLE_EQ(f[1], 0.0);
}

TEST(HamiltonVelocity, ChainMatchesFiniteDifference) {
  const auto h = chain(5);
  const std::vector<double> z{0.3, -0.2, 1.1, 0.5, -0.7, 0.9, 0.4, -1.2, 0.05, 0.6};
  const auto v = hamilton_velocity(h, z);
  for (std::size_t a = 0; a < 5; ++a) {
    EXPECT_NEAR(v[2 * a], hamiltonian_fd(h, z, 2 * a + 1), 1e-8);
    EXPECT_NEAR(v[2 * a + 1], -hamiltonian_fd(h, z, 2 * a), 1e-8);
  }
}

TEST(HamiltonVelocity, QuarticAndPairMatchFiniteDifference) {
  ClassicalHSpec h{{1.0, 0.5}, {QuarticTerm{0.25}, PairTerm{0.4, 0, 1}}};
  const std::vector<double> z{0.8, 0.1, -0.6, 0.3};
  const auto v = hamilton_velocity(h, z);
  for (std::size_t a = 0; a < 2; ++a) {
    EXPECT_NEAR(v[2 * a], hamiltonian_fd(h, z, 2 * a + 1), 1e-8);
    EXPECT_NEAR(v[2 * a + 1], -hamiltonian_fd(h, z, 2 * a), 1e-8);
  }
}

TEST(Evolve, HarmonicEnergyBounded) {
  PhaseEnsemble ens;
  ens.states = {1.0, 0.0};
  const auto traj = evolve_ensemble(oscillator(), ens, 1e-3, 10000, 100);
  double worst = 0.0;
  for (const auto& s : traj.snapshots) worst = std::max(worst, std::abs(energy(oscillator(), s.at(0)) / 0.5 - 1.0));
  EXPECT_LT(worst, 1e-6);
}

TEST(Evolve, EnergyErrorScalesAsStepSquared) {
  PhaseEnsemble ens;
  ens.states = {1.0, 0.3};
  const auto h = oscillator(1.0);
  const double e0 = energy(h, ens.at(0));
  auto worst = [&](double dt, long steps) {
    const auto traj = evolve_ensemble(h, ens, dt, steps, 1);
    double w = 0.0;
    for (const auto& s : traj.snapshots) w = std::max(w, std::abs(energy(h, s.at(0)) - e0));
    return w;
  };
  const double c1 = worst(0.02, 20000) / (0.02 * 0.02);
  const double c2 = worst(0.01, 40000) / (0.01 * 0.01);
  EXPECT_NEAR(c1 / c2, 1.0, 0.05);
}

TEST(Evolve, FreeParticlesMoveLinearly) {
  PhaseEnsemble ens;
  ens.particles = 2;
  ens.states = {0.5, 2.0, -1.0, -0.25};
  ClassicalHSpec h{{1.0, 4.0}, {}};
  const auto traj = evolve_ensemble(h, ens, 1e-2, 1000, 1000);
  const auto z = traj.snapshots.back().at(0);
  EXPECT_NEAR(traj.times.back(), 10.0, 1e-12);
  EXPECT_NEAR(z[0], 0.5 + 2.0 * 10.0, 1e-12);
  EXPECT_NEAR(z[2], -1.0 - 0.25 / 4.0 * 10.0, 1e-12);
  EXPECT_DOUBLE_EQ(z[1], 2.0);
}

TEST(Evolve, HarmonicPeriodFit) {
  const double omega = 2.0, dt = 1e-3;
  PhaseEnsemble ens;
  ens.states = {1.0, 0.0};
  const auto traj = evolve_ensemble(oscillator(omega), ens, dt, 20000, 1);
  // upward zero crossings of p, refined linearly
  std::vector<double> crossings;
  for (std::size_t k = 1; k < traj.snapshots.size(); ++k) {
    const double a = traj.snapshots[k - 1].at(0)[0], b = traj.snapshots[k].at(0)[0];
    if (a < 0.0 && b >= 0.0) crossings.push_back(traj.times[k - 1] + dt * a / (a - b));
  }
  ASSERT_GE(crossings.size(), 3u);
  const double period = (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
  EXPECT_NEAR(period, 2 * std::numbers::pi / omega, 10 * dt * dt);
}

TEST(Incompressibility, ExactForHamiltonianFlowsPositiveForDamping) {
  const std::vector<std::vector<double>> pts{{0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, {1, 2, 3, 4, 5, 6}};
  EXPECT_EQ(incompressibility_check(PhaseFlow{chain(3), 0.0}, pts), 0.0);
  EXPECT_EQ(incompressibility_check(PhaseFlow{{{1.0}, {HarmonicTerm{{1.0}}}}, 0.0}, {{1.0, 0.0}}), 0.0);
  EXPECT_DOUBLE_EQ(incompressibility_check(PhaseFlow{chain(3), 0.2}, pts), 0.6);
}

TEST(Incompressibility, AnalyticDivergenceMatchesFiniteDifference) {
  const PhaseFlow flow{chain(3), 0.35};
  std::vector<double> z{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  double div = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    auto up = z, down = z;
    up[k] += 1e-5;
    down[k] -= 1e-5;
    div += (phase_velocity(flow, up)[k] - phase_velocity(flow, down)[k]) / 2e-5;
  }
  EXPECT_NEAR(div, divergence(flow, z), 1e-8);
}

TEST(Liouville, HarmonicGaussianConstant) {
  Eigen::Vector2d mean(1.0, 0.5);
  Eigen::Matrix2d cov;
  cov << 0.3, 0.1, 0.1, 0.5;
  const auto ens = sample_gaussian(mean, cov, 400, 11);
  const auto traj = evolve_ensemble(oscillator(1.3), ens, 1e-3, 5000, 250);
  EXPECT_LT(liouville_constancy(oscillator(1.3), GaussianDensity{mean, cov}, traj), 1e-5);
}

TEST(Liouville, FreeGaussianShearConstant) {
  Eigen::Vector2d mean(0.0, 1.0);
  Eigen::Matrix2d cov;
  cov << 0.2, -0.05, -0.05, 0.4;
  const ClassicalHSpec h{{2.0}, {}};
  const auto traj = evolve_ensemble(h, sample_gaussian(mean, cov, 400, 12), 1e-3, 3000, 300);
  EXPECT_LT(liouville_constancy(h, GaussianDensity{mean, cov}, traj), 1e-5);
}

TEST(Liouville, ResidualIsSecondOrderInStep) {
  Eigen::Vector4d mean(0.5, 0.0, -0.3, 0.2);
  Eigen::Matrix4d cov = Eigen::Matrix4d::Identity() * 0.3;
  cov(0, 2) = cov(2, 0) = 0.1;
  const auto h = coupled_pair(0.4);
  const auto ens = sample_gaussian(mean, cov, 200, 5);
  const double r1 = liouville_constancy(h, GaussianDensity{mean, cov}, evolve_ensemble(h, ens, 0.02, 100, 100));
  const double r2 = liouville_constancy(h, GaussianDensity{mean, cov}, evolve_ensemble(h, ens, 0.01, 200, 200));
  EXPECT_GT(r1 / r2, 3.5);
}

TEST(Liouville, ThermalDensityConstantUpToEnergyError) {
  const auto h = chain(4);
  const auto ens = sample_thermal(h, 1.5, 300, 3);
  const auto traj = evolve_ensemble(h, ens, 1e-3, 2000, 500);
  EXPECT_LT(liouville_constancy(h, ThermalDensity{1.5}, traj), 1e-5);
}

TEST(Liouville, GaussianUnderQuarticThrows) {
  ClassicalHSpec h{{1.0}, {QuarticTerm{0.1}}};
  EXPECT_THROW(log_density(h, GaussianDensity{Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity()},
                           std::vector<double>{0.0, 0.0}, 1.0),
               AnalyticDensityUnavailable);
}

TEST(TruncatedVelocity, UncoupledEqualsOwnVelocity) {
  const ClassicalHSpec h{{1.0, 1.0}, {HarmonicTerm{{1.0, 2.0}}}};
  const auto ens = sample_thermal(h, 1.0, 20000, 21);
  const auto field = truncated_phase_velocity(h, ens, {{0}, {1}}, {}, [&](std::span<const double> z) {
    return std::array<double, 2>{z[1], -z[0]};
  });
  for (const auto& b : field.bins) {
    if (!b.occupied) continue;
    EXPECT_NEAR(b.mean[0], b.reference[0], 1e-12);
    EXPECT_NEAR(b.mean[1], b.reference[1], 1e-12);
  }
}

TEST(TruncatedVelocity, CoupledGaussianMatchesConditionalMean) {
  const auto h = coupled_pair(0.6);
  Eigen::Vector4d mean(0.5, 0.0, -0.5, 0.3);
  Eigen::Matrix4d cov = Eigen::Matrix4d::Identity() * 0.4;
  cov(0, 2) = cov(2, 0) = 0.15;
  cov(1, 2) = cov(2, 1) = -0.1;
  const GaussianDensity rho0{mean, cov};
  const auto traj = evolve_ensemble(h, sample_gaussian(mean, cov, 100000, 31), 1e-3, 700, 700);
  const GaussianDensity rho = transported_gaussian(h, rho0, traj.times.back());
  const auto field = truncated_phase_velocity(h, traj.snapshots.back(), {{0}, {1}}, {},
                                              [&](std::span<const double> z) {
                                                return gaussian_conditional_velocity(h, rho, 0, z[0], z[1]);
                                              });
  std::size_t occupied = 0, within = 0;
  for (const auto& b : field.bins) {
    if (!b.occupied) continue;
    ++occupied;
    const bool ok = std::abs(b.mean[1] - b.reference[1]) <= 3 * b.se[1] + 1e-12 &&
                    std::abs(b.mean[0] - b.reference[0]) <= 3 * b.se[0] + 1e-12;
    within += ok;
  }
  ASSERT_GT(occupied, 50u);
  EXPECT_GE(static_cast<double>(within), 0.95 * static_cast<double>(occupied));
}

TEST(TruncatedVelocity, BimodalPartnerVelocityDiffersFromEverySample) {
  // x_B is +-2 with equal weight and independent of A, so within any A bin the
  // momentum change is -2 lambda (x_A -+ 2) and the mean lies between the modes
  const ClassicalHSpec h{{1.0, 1.0}, {PairTerm{0.5, 0, 1}}};
  PhaseEnsemble ens;
  ens.particles = 2;
  const auto base = sample_gaussian(Eigen::Vector4d::Zero(), Eigen::Matrix4d::Identity() * 0.04, 20000, 8);
  ens.states = base.states;
  for (std::size_t i = 0; i < ens.count(); ++i) ens.at(i)[2] += (i % 2 == 0 ? 2.0 : -2.0);
  const auto field = truncated_phase_velocity(h, ens, {{0}, {1}}, {8, 8, 20});
  std::size_t checked = 0;
  for (const auto& b : field.bins) {
    if (!b.occupied) continue;
    ++checked;
    EXPECT_GT(b.min_distance, 1.0);
  }
  EXPECT_GT(checked, 5u);
}

TEST(Scaling, ThermalOscillatorsHalfPower) {
  const Observable total_energy = [](std::span<const double> z) {
    double e = 0.0;
    for (std::size_t a = 0; a < z.size() / 2; ++a) e += 0.5 * (z[2 * a] * z[2 * a] + z[2 * a + 1] * z[2 * a + 1]);
    return e;
  };
  const auto table = ensemble_average_scaling(total_energy, thermal_oscillator_sampler(1.0, 1.0, 1.0),
                                              {16, 32, 64, 128, 256, 512, 1024}, 2000, 17);
  EXPECT_NEAR(table.slope, -0.5, 0.05);
  // sum of N exponential(1) energies: relative spread 1/sqrt(N)
  EXPECT_NEAR(table.rows.front().relative, 0.25, 0.02);
}

TEST(Scaling, ConstantObservableHasNoSpread) {
  const auto table = ensemble_average_scaling([](std::span<const double>) { return 3.0; },
                                              thermal_oscillator_sampler(1.0, 1.0, 1.0), {4, 8}, 10, 1);
  for (const auto& r : table.rows) EXPECT_EQ(r.spread, 0.0);
}

TEST(Scaling, SingleRealizationThrows) {
  EXPECT_THROW(ensemble_average_scaling([](std::span<const double>) { return 1.0; },
                                        thermal_oscillator_sampler(1.0, 1.0, 1.0), {4}, 1, 1),
               InsufficientSamples);
}

TEST(MarginalContinuity, EulerStepTracksHistogram) {
  const auto h = coupled_pair(0.5);
  Eigen::Vector4d mean(1.0, 0.0, -0.5, 0.5);
  const auto ens = sample_gaussian(mean, Eigen::Matrix4d::Identity() * 0.2, 400000, 41);
  const auto traj = evolve_ensemble(h, ens, 1e-3, 20, 20);
  const auto check = binned_continuity_check(h, traj.snapshots.front(), traj.snapshots.back(), {{0}, {1}}, 24);
  EXPECT_GT(check.actual_change, 0.0);
  EXPECT_LT(check.mismatch, 0.5 * check.actual_change);
}

TEST(Ensemble, ThermalMomentsAndRoundTrip) {
  const auto h = chain(3);
  const auto ens = sample_thermal(h, 2.0, 50000, 9);
  double pp = 0.0;
  for (std::size_t i = 0; i < ens.count(); ++i) pp += ens.at(i)[3] * ens.at(i)[3];
  EXPECT_NEAR(pp / static_cast<double>(ens.count()), 2.0 / 2.0, 0.03);  // m_1 / beta

  const auto path = std::filesystem::temp_directory_path() / "classical_test.ens";
  write_ensemble(path, ens);
  const auto back = read_ensemble(path);
  EXPECT_EQ(back.particles, 3);
  EXPECT_EQ(back.seed, 9u);
  EXPECT_EQ(back.states, ens.states);
  std::filesystem::remove(path);
}

TEST(Ensemble, DeterministicGivenSeed) {
  const auto a = sample_thermal(chain(3), 1.0, 100, 77);
  const auto b = sample_thermal(chain(3), 1.0, 100, 77);
  EXPECT_EQ(a.states, b.states);
}
