#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <unsupported/Eigen/KroneckerProduct>

#include "bohm/classical.hpp"
#include "bohm/error.hpp"
#include "bohm/linalg.hpp"
#include "bohm/rng.hpp"
#include "bohm/statmech.hpp"
#include "test_support.hpp"

using namespace bohm;
using namespace bohm::statmech;

namespace {

constexpr double pi = std::numbers::pi;

Eigen::MatrixXcd random_density(int dim, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  Eigen::MatrixXcd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      const double re = rng.normal();
      a(i, j) = Complex(re, rng.normal());
    }
  Eigen::MatrixXcd rho = a * a.adjoint();
  return rho / rho.trace();
}

Eigen::MatrixXcd random_unitary(int dim, std::uint64_t seed) {
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(random_density(dim, seed) + Eigen::MatrixXcd::Identity(dim, dim) * Complex(0, 1));
  return qr.householderQ();
}

double oscillator_entropy(double beta, double omega) {
  const double x = beta * omega;
  return x / std::expm1(x) - std::log(-std::expm1(-x));
}

Spectrum box_family(double length) { return box_spectrum(length, 1.0, box_level_count(length, 1.0, 2.05)); }

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return v;
}

}  // namespace

TEST(VonNeumann, PureStateIsZero) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Random(6);
  v.normalize();
  EXPECT_NEAR(von_neumann_entropy(Eigen::MatrixXcd(v * v.adjoint())), 0.0, 1e-12);
}

TEST(VonNeumann, MaximallyMixedQubitIsLn2) {
  EXPECT_DOUBLE_EQ(von_neumann_entropy(Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(2, 2) * 0.5)), std::log(2.0));
  const double p[] = {0.5, 0.5};
  EXPECT_DOUBLE_EQ(von_neumann_entropy(p), std::log(2.0));
}

TEST(VonNeumann, ThermalOscillatorMatchesClosedForm) {
  const auto c = partition_function(harmonic_spectrum(1.0, harmonic_level_count(1.0, 1.0)), 1.0);
  EXPECT_NEAR(von_neumann_entropy(c.probabilities), oscillator_entropy(1.0, 1.0), 1e-8);
  EXPECT_NEAR(c.entropy, oscillator_entropy(1.0, 1.0), 1e-8);
}

TEST(VonNeumann, UnitaryInvariance) {
  const auto rho = random_density(6, 3);
  const auto u = random_unitary(6, 4);
  EXPECT_NEAR(von_neumann_entropy(rho), von_neumann_entropy(Eigen::MatrixXcd(u * rho * u.adjoint())), 1e-10);
}

TEST(VonNeumann, BoundedByLogDimension) {
  for (int dim = 2; dim <= 8; ++dim) {
    const Eigen::MatrixXcd mixed = Eigen::MatrixXcd::Identity(dim, dim) / static_cast<double>(dim);
    EXPECT_NEAR(von_neumann_entropy(mixed), std::log(dim), 1e-12);
    EXPECT_LT(von_neumann_entropy(random_density(dim, static_cast<std::uint64_t>(dim))), std::log(dim) - 1e-6);
  }
}

TEST(VonNeumann, AdditiveOnProducts) {
  const auto a = random_density(2, 5), b = random_density(3, 6);
  const Eigen::MatrixXcd ab = Eigen::kroneckerProduct(a, b);
  EXPECT_NEAR(von_neumann_entropy(ab), von_neumann_entropy(a) + von_neumann_entropy(b), 1e-9);
}

TEST(VonNeumann, RejectsNonDensityMatrices) {
  Eigen::MatrixXcd bad = Eigen::MatrixXcd::Zero(2, 2);
  bad(0, 0) = 1.2;
  bad(1, 1) = -0.2;
  EXPECT_THROW(von_neumann_entropy(bad), NotADensityMatrix);
  EXPECT_THROW(von_neumann_entropy(Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(2, 2))), NotADensityMatrix);
  // tiny negative eigenvalues are round-off and get clipped
  Eigen::MatrixXcd ok = Eigen::MatrixXcd::Zero(2, 2);
  ok(0, 0) = 1.0 + 5e-11;
  ok(1, 1) = -5e-11;
  EXPECT_NEAR(von_neumann_entropy(ok), 0.0, 1e-9);
}

TEST(QuantumBoltzmann, DimensionCounts) {
  EXPECT_EQ(quantum_boltzmann_entropy(1), 0.0);
  EXPECT_DOUBLE_EQ(quantum_boltzmann_entropy(2), std::log(2.0));
  EXPECT_THROW(quantum_boltzmann_entropy(0), InvalidExtent);
  const double one[] = {1.0};
  EXPECT_EQ(macrostate_dim(one, pi), 1u);
  EXPECT_EQ(macrostate_dim(one, 10 * pi), 10u);
  const double half[] = {0.5};
  EXPECT_EQ(macrostate_dim(half, 10 * pi), 5u);
  const double two[] = {1.0, 0.5};
  EXPECT_EQ(macrostate_dim(two, 10 * pi), 50u);
  const double tiny[] = {1e-3};
  EXPECT_EQ(macrostate_dim(tiny, pi), 1u);
}

TEST(Macrostates, HalfSplitAndTieRule) {
  MacrostateDecomposition d;
  d.cells = {{"left", {Box{{{0.0, 0.5}}}}, 1.0}, {"right", {Box{{{0.5, 1.0}}}}, 1.0}};
  const double left[] = {0.2}, mid[] = {0.5}, right[] = {0.7}, out[] = {1.5};
  EXPECT_EQ(macrostate_of(left, d), 0u);
  EXPECT_EQ(macrostate_of(mid, d), 0u);
  EXPECT_EQ(macrostate_of(right, d), 1u);
  EXPECT_THROW(macrostate_of(out, d), OutsideAllCells);
}

TEST(Macrostates, HalfOccupationCounts) {
  const auto d = half_occupation_decomposition(4, 0.0, 1.0, 20 * pi);
  ASSERT_EQ(d.cells.size(), 5u);
  EXPECT_DOUBLE_EQ(d.cells[2].dim, 6.0 * std::pow(10.0, 4));
  EXPECT_DOUBLE_EQ(d.cells[4].dim, std::pow(10.0, 4));
  EXPECT_EQ(d.cells[2].boxes.size(), 6u);
  const double x[] = {0.1, 0.9, 0.2, 0.3};
  EXPECT_EQ(macrostate_of(x, d), 3u);
  double total = 0.0;
  for (const auto& c : d.cells) total += c.volume();
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Gibbs, UniformOverWCells) {
  // 4 cells of volume 0.25 on [0,1], uniform: -sum p ln(p dz / vol) = ln(1/dz)
  std::vector<double> pts;
  for (int i = 0; i < 400; ++i) pts.push_back((i + 0.5) / 400.0);
  const auto h = histogram(pts, 1, {0.0}, {1.0}, {4});
  EXPECT_NEAR(gibbs_entropy(h, 1.0 / 8.0), std::log(8.0), 1e-12);
}

TEST(Gibbs, GaussianMatchesDifferentialEntropy) {
  Eigen::Matrix2d cov;
  cov << 0.5, 0.2, 0.2, 2.0;
  const auto ens = classical::sample_gaussian(Eigen::Vector2d::Zero(), cov, 100000, 2);
  const auto h = histogram(ens.states, 2, {-4.0, -8.0}, {4.0, 8.0}, {40, 40});
  const double dz = 2 * pi;
  const double exact = 1.0 + std::log(2 * pi) + 0.5 * std::log(cov.determinant()) - std::log(dz);
  EXPECT_NEAR(gibbs_entropy(h, dz), exact, 0.02 * std::abs(exact));
}

TEST(Gibbs, CellShiftIdentity) {
  const auto ens = classical::sample_gaussian(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity(), 5000, 3);
  const auto h = histogram(ens.states, 2, {-5.0, -5.0}, {5.0, 5.0}, {20, 20});
  for (double c : {0.1, 2.0, 37.0})
    EXPECT_NEAR(gibbs_entropy(h, c * 0.3), gibbs_entropy(h, 0.3) - std::log(c), 1e-12);
}

TEST(Gibbs, ClosedHarmonicEvolutionIsFlat) {
  Eigen::Matrix2d cov;
  cov << 0.3, 0.0, 0.0, 1.5;
  const classical::ClassicalHSpec h{{1.0}, {classical::HarmonicTerm{{1.0}}}};
  const auto ens = classical::sample_gaussian(Eigen::Vector2d(0.5, 0.0), cov, 100000, 4);
  const auto traj = classical::evolve_ensemble(h, ens, 1e-2, 628, 78);
  std::vector<double> s;
  for (const auto& snap : traj.snapshots)
    s.push_back(gibbs_entropy(histogram(snap.states, 2, {-6.0, -6.0}, {6.0, 6.0}, {40, 40}), 2 * pi));
  const double lo = *std::min_element(s.begin(), s.end()), hi = *std::max_element(s.begin(), s.end());
  EXPECT_LT(hi - lo, 0.03);
}

TEST(CoarseGrained, Baselines) {
  const double one[] = {1.0, 0.0, 0.0}, w1[] = {1.0, 1.0, 1.0};
  EXPECT_EQ(coarse_grained_gibbs(one, w1), 0.0);
  const double eq[] = {0.25, 0.25, 0.25, 0.25}, w4[] = {1.0, 1.0, 1.0, 1.0};
  EXPECT_NEAR(coarse_grained_gibbs(eq, w4), std::log(4.0), 1e-15);
}

TEST(Boltzmann, VolumeRules) {
  EXPECT_EQ(boltzmann_entropy(0.3, 0.3), 0.0);
  EXPECT_NEAR(boltzmann_entropy(2.0, 0.1) - boltzmann_entropy(1.0, 0.1), std::log(2.0), 1e-14);
  EXPECT_THROW(boltzmann_entropy(0.0, 1.0), EmptyRegion);
  EXPECT_NEAR(boltzmann_entropy(Box{{{0.0, 2.0}, {0.0, 3.0}}}, 1.5), std::log(4.0), 1e-14);
}

TEST(OneParticleBoltzmann, SingleParticleEqualsGibbs) {
  const auto ens = classical::sample_gaussian(Eigen::Vector2d::Zero(), Eigen::Matrix2d::Identity(), 20000, 7);
  const auto h = histogram(ens.states, 2, {-5.0, -5.0}, {5.0, 5.0}, {20, 20});
  EXPECT_DOUBLE_EQ(one_particle_boltzmann(ens.states, 1, 2, {-5.0, -5.0}, {5.0, 5.0}, {20, 20}, 2 * pi),
                   gibbs_entropy(h, 2 * pi));
}

TEST(OneParticleBoltzmann, IndependentParticlesScaleWithN) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(6, 6);
  const auto ens = classical::sample_gaussian(Eigen::VectorXd::Zero(6), cov, 30000, 8);
  std::vector<double> first;
  for (std::size_t i = 0; i < ens.count(); ++i) {
    first.push_back(ens.at(i)[0]);
    first.push_back(ens.at(i)[1]);
  }
  const double single = gibbs_entropy(histogram(first, 2, {-5.0, -5.0}, {5.0, 5.0}, {20, 20}), 2 * pi);
  const double pooled = one_particle_boltzmann(ens.states, 3, 2, {-5.0, -5.0}, {5.0, 5.0}, {20, 20}, 2 * pi);
  EXPECT_NEAR(pooled, 3 * single, 0.01 * std::abs(3 * single));
}

TEST(OneParticleBoltzmann, UniformGasTracksBoltzmannEntropy) {
  const std::size_t particles = 4;
  std::vector<double> s1, sb;
  for (double v : {1.0, 2.0, 4.0, 8.0}) {
    std::vector<double> x;
    CounterRng rng(11, static_cast<std::uint64_t>(v));
    for (std::size_t i = 0; i < 20000 * particles; ++i) x.push_back(v * rng.uniform());
    s1.push_back(one_particle_boltzmann(x, particles, 1, {0.0}, {v}, {20}, 0.01));
    sb.push_back(boltzmann_entropy(std::pow(v, particles), std::pow(0.01, particles)));
  }
  for (std::size_t k = 1; k < s1.size(); ++k) {
    const double a = s1[k] - s1[0], b = sb[k] - sb[0];
    EXPECT_NEAR(a, b, 0.05 * std::abs(b));
  }
}

TEST(Trends, NondecreasingAndSpearman) {
  const double up[] = {0.0, 0.5, 0.49, 0.8}, down[] = {1.0, 0.5, 0.2};
  EXPECT_TRUE(nondecreasing_trend(up, 0.02));
  EXPECT_FALSE(nondecreasing_trend(up, 0.001));
  EXPECT_FALSE(nondecreasing_trend(down, 0.1));
  const double x[] = {1, 2, 3, 4}, y[] = {10, 5, 4, 1}, tie[] = {1, 1, 2, 2};
  EXPECT_DOUBLE_EQ(spearman(x, y), -1.0);
  EXPECT_NEAR(spearman(x, tie), std::sqrt(0.8), 1e-12);
}

TEST(PartitionFunction, TwoLevel) {
  const auto c = partition_function(two_level_spectrum(0.7), 1.3);
  EXPECT_NEAR(c.log_z, std::log(1.0 + std::exp(-1.3 * 0.7)), 1e-15);
  EXPECT_NEAR(c.probabilities[0] + c.probabilities[1], 1.0, 1e-15);
}

TEST(PartitionFunction, HarmonicLadderGeometricSeries) {
  for (double beta : {0.5, 1.0, 3.0}) {
    const auto c = partition_function(harmonic_spectrum(1.2, harmonic_level_count(1.2, 1.0 / beta)), beta);
    EXPECT_NEAR(std::exp(c.log_z), std::exp(-0.6 * beta) / (1.0 - std::exp(-1.2 * beta)), 1e-10);
    double sum = 0.0;
    for (double p : c.probabilities) sum += p;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(PartitionFunction, BoxMatchesBruteForceSum) {
  double z = 0.0;
  for (int n = 1; n <= 10000; ++n) z += std::exp(-n * n * pi * pi / 2.0);
  const auto c = partition_function(box_spectrum(1.0, 1.0, box_level_count(1.0, 1.0, 1.0)), 1.0);
  EXPECT_NEAR(c.log_z, std::log(z), 1e-12);
}

TEST(PartitionFunction, TruncationGuard) {
  EXPECT_THROW(partition_function(box_spectrum(1.0, 1.0, 3), 0.01), TruncationInsufficient);
  EXPECT_THROW(partition_function(two_level_spectrum(1.0), 0.0), InvalidExtent);
}

TEST(Thermo, DifferencedMatchesDirect) {
  const auto t = thermo_table(box_family, linspace(0.8, 1.2, 9), linspace(0.5, 2.0, 9));
  for (const auto& p : t.points) {
    EXPECT_NEAR(p.energy, p.energy_direct, 1e-4 * std::abs(p.energy_direct));
    EXPECT_NEAR(p.entropy, p.entropy_direct, 1e-4 * std::abs(p.entropy_direct));
    EXPECT_NEAR(p.pressure, p.pressure_direct, 1e-4 * std::abs(p.pressure_direct));
    EXPECT_GT(p.entropy, 0.0);
  }
}

TEST(Thermo, HarmonicEnergyCoth) {
  auto fam = [](double) { return harmonic_spectrum(1.0, harmonic_level_count(1.0, 2.05)); };
  const auto t = thermo_table(fam, linspace(1.0, 2.0, 5), linspace(0.5, 2.0, 7));
  for (const auto& p : t.points) {
    const double exact = 0.5 / std::tanh(0.5 / p.temperature);
    EXPECT_NEAR(p.energy, exact, 1e-4 * exact);
    EXPECT_NEAR(p.pressure, 0.0, 1e-9);
  }
}

TEST(Thermo, CoarseGridRejected) {
  EXPECT_THROW(thermo_table(box_family, linspace(0.8, 1.2, 4), linspace(0.5, 2.0, 9)), GridTooCoarse);
}

TEST(FirstLaw, BoxFamilyConvergesSecondOrder) {
  const auto coarse = first_law_residual(thermo_table(box_family, linspace(0.8, 1.2, 21), linspace(0.5, 2.0, 21)));
  const auto fine = first_law_residual(thermo_table(box_family, linspace(0.8, 1.2, 41), linspace(0.5, 2.0, 41)));
  EXPECT_LT(fine.median, 1e-3);
  EXPECT_LT(fine.isochoric_median, 1e-3);
  EXPECT_GT(coarse.median / fine.median, 3.5);
}

TEST(FirstLaw, TwoLevelClosedForm) {
  auto fam = [](double) { return two_level_spectrum(1.0); };
  const auto r = first_law_residual(thermo_table(fam, linspace(1.0, 2.0, 5), linspace(0.5, 2.0, 2001)),
                                    ThermoRoute::direct);
  EXPECT_LT(r.max, 1e-6);
}

TEST(ThermalBox, CurrentVanishesAndSamplesStayInside) {
  const Grid g = bohm::testing::grid1d(255, 0.0, 1.0, Boundary::dirichlet);
  const auto r = bohmian_volume_check(g, 1.0, 1.0, 10000, 5);
  EXPECT_LT(r.max_current, 1e-12);
  EXPECT_LT(r.max_velocity, 1e-9);
  EXPECT_EQ(r.inside, 10000u);
}

TEST(ThermalBox, HotBoxFillsVolume) {
  const Grid g = bohm::testing::grid1d(1023, 0.0, 1.0, Boundary::dirichlet);
  const auto r = bohmian_volume_check(g, 1.0, 1e4, 10000, 6, false);
  EXPECT_EQ(r.inside, 10000u);
  EXPECT_GE(r.spread_fraction, 0.99);
  EXPECT_THROW(bohmian_volume_check(bohm::testing::grid1d(63, 0.0, 1.0, Boundary::dirichlet), 1.0, 1e4, 10, 1, false),
               GridTooCoarse);
}

TEST(SpinChain, HamiltonianStructure) {
  SpinChain c{4, 1};
  const auto h = chain_hamiltonian(c);
  EXPECT_EQ(h.rows(), 16);
  EXPECT_LT((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  // all up: -J (c + 1 + 1) - 4 h
  EXPECT_DOUBLE_EQ(h(0, 0), -(0.1 + 2.0) - 4 * 0.5);
  EXPECT_DOUBLE_EQ(h(0, 8), -0.9);  // flip of spin 0 (most significant bit)
  EXPECT_THROW(chain_hamiltonian(SpinChain{13, 1}), DiagonalizationBudget);
  const auto ha = subsystem_hamiltonian(c);
  EXPECT_DOUBLE_EQ(ha(0, 1), -0.9);
}

TEST(SpinChain, ReductionOfProductState) {
  Eigen::VectorXcd a(2), b(4);
  a << 0.6, Complex(0, 0.8);
  b << 0.5, 0.5, 0.5, 0.5;
  const Eigen::VectorXcd psi = Eigen::kroneckerProduct(a, b);
  const auto rho = reduce_to_first_spins(psi, 3, 1);
  EXPECT_LT((rho - a * a.adjoint()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SpinChain, FitRecoversCanonicalBeta) {
  const auto ha = subsystem_hamiltonian(SpinChain{6, 2});
  const auto rho = canonical_state(ha, 0.7);
  EXPECT_NEAR(rho.trace().real(), 1.0, 1e-14);
  const auto [beta, d] = fit_beta(rho, ha);
  EXPECT_NEAR(beta, 0.7, 1e-6);
  EXPECT_LT(d, 1e-8);
  EXPECT_NEAR(trace_distance(rho, rho), 0.0, 1e-15);
}

TEST(Typicality, ModerateChainIsNearCanonical) {
  const auto r = canonical_typicality(SpinChain{9, 1}, TypicalityOptions{0.5, 30, 12, 3});
  EXPECT_EQ(r.trials.size(), 12u);
  EXPECT_GE(r.levels_in_window, 30u);
  EXPECT_LT(r.median_distance, 0.1);
  EXPECT_GT(r.median_fitted_beta, 0.0);
  EXPECT_TRUE(std::isfinite(r.entropy_beta));
}

TEST(Typicality, DecoupledShellGivesDiagonalState) {
  SpinChain c{6, 1};
  c.bond_coupling = 0.0;
  const auto eig = linalg::symmetric_eigen(chain_hamiltonian(c));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(subsystem_hamiltonian(c));
  CounterRng rng(2, 0);
  for (Eigen::Index n = 0; n < eig.values.size(); n += 7) {
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(eig.values.size());
    for (Eigen::Index m = 0; m < eig.values.size(); ++m)
      if (std::abs(eig.values(m) - eig.values(n)) < 1e-9) psi += rng.normal() * eig.vectors.col(m).cast<Complex>();
    psi.normalize();
    const Eigen::MatrixXcd rho = ea.eigenvectors().transpose().cast<Complex>() * reduce_to_first_spins(psi, 6, 1) *
                                 ea.eigenvectors().cast<Complex>();
    EXPECT_LT(std::abs(rho(0, 1)), 1e-10);
  }
}

TEST(Typicality, WindowNeedsLevels) {
  EXPECT_THROW(canonical_typicality(SpinChain{4, 1}, TypicalityOptions{0.5, 100, 2, 1}), WindowEmpty);
}

TEST(Thermo, CsvHeader) {
  const auto t = thermo_table(box_family, linspace(0.8, 1.2, 5), linspace(0.5, 2.0, 5));
  const auto path = std::filesystem::temp_directory_path() / "thermo_test.csv";
  write_thermo_csv(path, t);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("volume,temperature,log_z", 0), 0u);
  std::filesystem::remove(path);
}
