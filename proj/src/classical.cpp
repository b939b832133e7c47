#include "bohm/classical.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unsupported/Eigen/MatrixFunctions>

#include "bohm/error.hpp"
#include "bohm/io.hpp"
#include "bohm/parallel.hpp"
#include "bohm/rng.hpp"

namespace bohm::classical {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double omega_of(const HarmonicTerm& t, int a) {
  return t.omega.size() == 1 ? t.omega[0] : t.omega[static_cast<std::size_t>(a)];
}

inline double xs(std::span<const double> z, int a) { return z[2 * static_cast<std::size_t>(a)]; }
inline double ps(std::span<const double> z, int a) { return z[2 * static_cast<std::size_t>(a) + 1]; }

}  // namespace

int particle_count(const ClassicalHSpec& h) { return static_cast<int>(h.masses.size()); }

void validate(const ClassicalHSpec& h) {
  const int n = particle_count(h);
  if (n < 1) throw InvalidExtent("classical hamiltonian needs at least one mass");
  for (double m : h.masses)
    if (!(m > 0.0)) throw InvalidExtent("masses must be positive");
  for (const auto& term : h.terms)
    std::visit(overloaded{
                   [&](const HarmonicTerm& t) {
                     if (t.omega.size() != 1 && t.omega.size() != h.masses.size())
                       throw InvalidExtent("harmonic.omega needs one entry or one per particle");
                   },
                   [&](const PairTerm& t) {
                     if (t.first < 0 || t.second < 0 || t.first >= n || t.second >= n || t.first == t.second)
                       throw InvalidExtent("pair term needs two distinct particles");
                   },
                   [](const ChainTerm&) {},
                   [](const QuarticTerm&) {},
               },
               term);
}

double potential(const ClassicalHSpec& h, std::span<const double> z) {
  const int n = particle_count(h);
  double v = 0.0;
  for (const auto& term : h.terms)
    std::visit(overloaded{
                   [&](const HarmonicTerm& t) {
                     for (int a = 0; a < n; ++a) {
                       const double w = omega_of(t, a);
                       v += 0.5 * h.masses[static_cast<std::size_t>(a)] * w * w * xs(z, a) * xs(z, a);
                     }
                   },
                   [&](const PairTerm& t) {
                     const double d = xs(z, t.first) - xs(z, t.second);
                     v += t.lambda * d * d;
                   },
                   [&](const ChainTerm& t) {
                     for (int a = 0; a + 1 < n; ++a) {
                       const double d = xs(z, a + 1) - xs(z, a);
                       v += 0.5 * t.coupling * d * d;
                     }
                   },
                   [&](const QuarticTerm& t) {
                     for (int a = 0; a < n; ++a) v += t.g * std::pow(xs(z, a), 4);
                   },
               },
               term);
  return v;
}

double energy(const ClassicalHSpec& h, std::span<const double> z) {
  double k = 0.0;
  for (int a = 0; a < particle_count(h); ++a)
    k += ps(z, a) * ps(z, a) / (2.0 * h.masses[static_cast<std::size_t>(a)]);
  return k + potential(h, z);
}

std::vector<double> force(const ClassicalHSpec& h, std::span<const double> z) {
  const int n = particle_count(h);
  std::vector<double> f(static_cast<std::size_t>(n), 0.0);
  for (const auto& term : h.terms)
    std::visit(overloaded{
                   [&](const HarmonicTerm& t) {
                     for (int a = 0; a < n; ++a) {
                       const double w = omega_of(t, a);
                       f[static_cast<std::size_t>(a)] -= h.masses[static_cast<std::size_t>(a)] * w * w * xs(z, a);
                     }
                   },
                   [&](const PairTerm& t) {
                     const double d = xs(z, t.first) - xs(z, t.second);
                     f[static_cast<std::size_t>(t.first)] -= 2.0 * t.lambda * d;
                     f[static_cast<std::size_t>(t.second)] += 2.0 * t.lambda * d;
                   },
                   [&](const ChainTerm& t) {
                     for (int a = 0; a + 1 < n; ++a) {
                       const double d = xs(z, a + 1) - xs(z, a);
                       f[static_cast<std::size_t>(a)] += t.coupling * d;
                       f[static_cast<std::size_t>(a + 1)] -= t.coupling * d;
                     }
                   },
                   [&](const QuarticTerm& t) {
                     for (int a = 0; a < n; ++a) f[static_cast<std::size_t>(a)] -= 4.0 * t.g * std::pow(xs(z, a), 3);
                   },
               },
               term);
  return f;
}

std::vector<double> hamilton_velocity(const ClassicalHSpec& h, std::span<const double> z) {
  const auto f = force(h, z);
  std::vector<double> v(z.size());
  for (int a = 0; a < particle_count(h); ++a) {
    v[2 * static_cast<std::size_t>(a)] = ps(z, a) / h.masses[static_cast<std::size_t>(a)];
    v[2 * static_cast<std::size_t>(a) + 1] = f[static_cast<std::size_t>(a)];
  }
  return v;
}

bool is_quadratic(const ClassicalHSpec& h) {
  for (const auto& term : h.terms)
    if (std::holds_alternative<QuarticTerm>(term)) return false;
  return true;
}

Eigen::MatrixXd stiffness(const ClassicalHSpec& h) {
  if (!is_quadratic(h)) throw AnalyticDensityUnavailable("potential is not quadratic");
  const int n = particle_count(h);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (const auto& term : h.terms)
    std::visit(overloaded{
                   [&](const HarmonicTerm& t) {
                     for (int a = 0; a < n; ++a) k(a, a) += h.masses[static_cast<std::size_t>(a)] * omega_of(t, a) * omega_of(t, a);
                   },
                   [&](const PairTerm& t) {
                     k(t.first, t.first) += 2.0 * t.lambda;
                     k(t.second, t.second) += 2.0 * t.lambda;
                     k(t.first, t.second) -= 2.0 * t.lambda;
                     k(t.second, t.first) -= 2.0 * t.lambda;
                   },
                   [&](const ChainTerm& t) {
                     for (int a = 0; a + 1 < n; ++a) {
                       k(a, a) += t.coupling;
                       k(a + 1, a + 1) += t.coupling;
                       k(a, a + 1) -= t.coupling;
                       k(a + 1, a) -= t.coupling;
                     }
                   },
                   [](const QuarticTerm&) {},
               },
               term);
  return k;
}

Eigen::MatrixXd flow_generator(const ClassicalHSpec& h) {
  const Eigen::MatrixXd k = stiffness(h);
  const int n = particle_count(h);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    a(2 * i, 2 * i + 1) = 1.0 / h.masses[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) a(2 * i + 1, 2 * j) = -k(i, j);
  }
  return a;
}

std::vector<double> phase_velocity(const PhaseFlow& flow, std::span<const double> z) {
  auto v = hamilton_velocity(flow.h, z);
  for (int a = 0; a < particle_count(flow.h); ++a) v[2 * static_cast<std::size_t>(a) + 1] -= flow.damping * ps(z, a);
  return v;
}

double divergence(const PhaseFlow& flow, std::span<const double> z) {
  (void)z;
  // d/dx_a (p_a / m_a) = 0 and d/dp_a (-dV/dx_a) = 0 for separable H; the
  // damping term -gamma p_a contributes -gamma per particle.
  return -flow.damping * particle_count(flow.h);
}

double incompressibility_check(const PhaseFlow& flow, const std::vector<std::vector<double>>& points) {
  double worst = 0.0;
  for (const auto& z : points) worst = std::max(worst, std::abs(divergence(flow, z)));
  return worst;
}

PhaseEnsemble sample_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                              std::size_t count, std::uint64_t seed) {
  const Eigen::Index w = mean.size();
  if (w % 2 != 0 || cov.rows() != w || cov.cols() != w) throw InvalidExtent("mean/cov shape mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw InvalidExtent("covariance is not positive definite");
  const Eigen::MatrixXd l = llt.matrixL();
  PhaseEnsemble ens;
  ens.particles = static_cast<int>(w / 2);
  ens.seed = seed;
  ens.states.resize(count * static_cast<std::size_t>(w));
  parallel_for(count, [&](std::size_t i) {
    CounterRng rng(seed, i);
    Eigen::VectorXd g(w);
    for (Eigen::Index k = 0; k < w; ++k) g(k) = rng.normal();
    const Eigen::VectorXd z = mean + l * g;
    for (Eigen::Index k = 0; k < w; ++k) ens.states[i * static_cast<std::size_t>(w) + static_cast<std::size_t>(k)] = z(k);
  });
  return ens;
}

Eigen::MatrixXd thermal_covariance(const ClassicalHSpec& h, double beta) {
  if (!(beta > 0.0)) throw InvalidExtent("beta must be positive");
  const Eigen::MatrixXd k = stiffness(h);
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success)
    throw AnalyticDensityUnavailable("thermal ensemble needs a positive-definite stiffness");
  const Eigen::MatrixXd kinv = llt.solve(Eigen::MatrixXd::Identity(k.rows(), k.cols()));
  const int n = particle_count(h);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    cov(2 * i + 1, 2 * i + 1) = h.masses[static_cast<std::size_t>(i)] / beta;
    for (int j = 0; j < n; ++j) cov(2 * i, 2 * j) = kinv(i, j) / beta;
  }
  return cov;
}

PhaseEnsemble sample_thermal(const ClassicalHSpec& h, double beta, std::size_t count,
                             std::uint64_t seed) {
  const int n = particle_count(h);
  return sample_gaussian(Eigen::VectorXd::Zero(2 * n), thermal_covariance(h, beta), count, seed);
}

PhaseTrajectories evolve_ensemble(const ClassicalHSpec& h, const PhaseEnsemble& ens, double dt,
                                  long steps, long record_stride) {
  validate(h);
  if (ens.particles != particle_count(h)) throw AxisMismatch("ensemble and hamiltonian disagree on N");
  if (record_stride < 1 || steps < 0) throw InvalidExtent("steps >= 0 and record_stride >= 1 required");
  PhaseTrajectories out;
  long n_records = 1 + steps / record_stride + (steps % record_stride != 0 ? 1 : 0);
  out.times.resize(static_cast<std::size_t>(n_records));
  out.snapshots.assign(static_cast<std::size_t>(n_records), ens);
  long r = 0;
  out.times[0] = ens.time;
  for (long k = 1; k <= steps; ++k)
    if (k % record_stride == 0 || k == steps) {
      ++r;
      out.times[static_cast<std::size_t>(r)] = ens.time + static_cast<double>(k) * dt;
      out.snapshots[static_cast<std::size_t>(r)].time = out.times[static_cast<std::size_t>(r)];
    }
  const int n = ens.particles;
  parallel_for(ens.count(), [&](std::size_t s) {
    std::vector<double> z(ens.at(s).begin(), ens.at(s).end());
    auto f = force(h, z);
    std::size_t rec = 0;
    for (long k = 1; k <= steps; ++k) {
      for (int a = 0; a < n; ++a) z[2 * static_cast<std::size_t>(a) + 1] += 0.5 * dt * f[static_cast<std::size_t>(a)];
      for (int a = 0; a < n; ++a)
        z[2 * static_cast<std::size_t>(a)] += dt * z[2 * static_cast<std::size_t>(a) + 1] / h.masses[static_cast<std::size_t>(a)];
      f = force(h, z);
      for (int a = 0; a < n; ++a) z[2 * static_cast<std::size_t>(a) + 1] += 0.5 * dt * f[static_cast<std::size_t>(a)];
      if (k % record_stride == 0 || k == steps) {
        ++rec;
        auto dst = out.snapshots[rec].at(s);
        std::copy(z.begin(), z.end(), dst.begin());
      }
    }
  });
  return out;
}

GaussianDensity transported_gaussian(const ClassicalHSpec& h, const GaussianDensity& rho0, double t) {
  const Eigen::MatrixXd m = (flow_generator(h) * t).exp();
  return GaussianDensity{m * rho0.mean, m * rho0.cov * m.transpose()};
}

double log_density(const ClassicalHSpec& h, const InitialDensity& rho0, std::span<const double> z,
                   double t) {
  return std::visit(
      overloaded{
          [&](const GaussianDensity& g) {
            if (!is_quadratic(h))
              throw AnalyticDensityUnavailable("Gaussian ensembles are transported analytically only by quadratic H");
            const GaussianDensity gt = transported_gaussian(h, g, t);
            const Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
            const Eigen::VectorXd d = zv - gt.mean;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(gt.cov);
            // the determinant is conserved by the symplectic flow; keep it
            // explicit so non-unit numerical drift would show up
            return -0.5 * d.dot(ldlt.solve(d)) - 0.5 * ldlt.vectorD().array().log().sum();
          },
          [&](const ThermalDensity& th) { return -th.beta * energy(h, z); },
      },
      rho0);
}

double liouville_constancy(const ClassicalHSpec& h, const InitialDensity& rho0,
                           const PhaseTrajectories& traj) {
  if (traj.snapshots.empty()) return 0.0;
  const PhaseEnsemble& first = traj.snapshots.front();
  // precompute the transported Gaussians once per snapshot
  std::vector<InitialDensity> at_time;
  for (double t : traj.times) {
    if (const auto* g = std::get_if<GaussianDensity>(&rho0)) {
      if (!is_quadratic(h)) throw AnalyticDensityUnavailable("Gaussian ensembles need quadratic H");
      at_time.emplace_back(transported_gaussian(h, *g, t - first.time));
    } else {
      at_time.push_back(rho0);
    }
  }
  double worst = 0.0;
  for (std::size_t s = 0; s < first.count(); ++s) {
    const double l0 = log_density(h, at_time[0], first.at(s), 0.0);
    for (std::size_t k = 1; k < traj.snapshots.size(); ++k) {
      const double lt = log_density(h, at_time[k], traj.snapshots[k].at(s), 0.0);
      worst = std::max(worst, std::abs(std::expm1(lt - l0)));
    }
  }
  return worst;
}

std::array<double, 2> gaussian_conditional_velocity(const ClassicalHSpec& h,
                                                    const GaussianDensity& rho, int particle,
                                                    double x, double p) {
  const int n = particle_count(h);
  const Eigen::MatrixXd k = stiffness(h);
  const Eigen::Index ia = 2 * particle, ip = 2 * particle + 1;
  Eigen::Matrix2d saa;
  saa << rho.cov(ia, ia), rho.cov(ia, ip), rho.cov(ip, ia), rho.cov(ip, ip);
  const Eigen::Vector2d dz(x - rho.mean(ia), p - rho.mean(ip));
  const Eigen::Vector2d sol = saa.ldlt().solve(dz);
  double dpdt = 0.0;
  for (int b = 0; b < n; ++b) {
    const Eigen::Index ib = 2 * b;
    // E[x_b | z_A]
    const double xb = b == particle ? x
                                    : rho.mean(ib) + rho.cov(ib, ia) * sol(0) + rho.cov(ib, ip) * sol(1);
    dpdt -= k(particle, b) * xb;
  }
  return {p / h.masses[static_cast<std::size_t>(particle)], dpdt};
}

namespace {

double scott_width(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  s = std::sqrt(s / static_cast<double>(v.size() - 1));
  return 3.49 * s * std::pow(static_cast<double>(v.size()), -1.0 / 3.0);
}

int single_particle(const SubsystemPartition& part, int particles) {
  if (part.a.size() != 1) throw PartitionMismatch("truncated phase velocity needs exactly one A particle");
  if (part.a[0] < 0 || part.a[0] >= particles) throw PartitionMismatch("A particle out of range");
  if (part.a.size() + part.b.size() != static_cast<std::size_t>(particles))
    throw PartitionMismatch("partition does not cover every particle");
  return part.a[0];
}

}  // namespace

TruncatedPhaseVelocity truncated_phase_velocity(const ClassicalHSpec& h, const PhaseEnsemble& ens,
                                                const SubsystemPartition& part,
                                                const PhaseBinning& binning,
                                                const ReferenceVelocity& reference) {
  const int a = single_particle(part, ens.particles);
  const std::size_t n = ens.count();
  if (n < 2) throw InsufficientSamples("need at least two samples");
  std::vector<double> xs_(n), ps_(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs_[i] = ens.at(i)[2 * static_cast<std::size_t>(a)];
    ps_[i] = ens.at(i)[2 * static_cast<std::size_t>(a) + 1];
  }
  TruncatedPhaseVelocity out;
  out.particle = a;
  const auto [xmin, xmax] = std::minmax_element(xs_.begin(), xs_.end());
  const auto [pmin, pmax] = std::minmax_element(ps_.begin(), ps_.end());
  auto axis = [](double lo, double hi, int bins, double scott, double& start, double& width, int& count) {
    const double span = std::max(hi - lo, 1e-12);
    count = bins > 0 ? bins : std::max(1, static_cast<int>(std::ceil(span / std::max(scott, 1e-12))));
    width = span / count;
    start = lo;
  };
  axis(*xmin, *xmax, binning.bins_x, scott_width(xs_), out.x_lo, out.x_width, out.nx);
  axis(*pmin, *pmax, binning.bins_p, scott_width(ps_), out.p_lo, out.p_width, out.np);

  const std::size_t nb = static_cast<std::size_t>(out.nx) * static_cast<std::size_t>(out.np);
  out.bins.resize(nb);
  std::vector<std::size_t> bin_of(n);
  std::vector<std::array<double, 2>> v(n), ref(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int ix = std::clamp(static_cast<int>((xs_[i] - out.x_lo) / out.x_width), 0, out.nx - 1);
    const int ip = std::clamp(static_cast<int>((ps_[i] - out.p_lo) / out.p_width), 0, out.np - 1);
    bin_of[i] = static_cast<std::size_t>(ix) * static_cast<std::size_t>(out.np) + static_cast<std::size_t>(ip);
    const auto hv = hamilton_velocity(h, ens.at(i));
    v[i] = {hv[2 * static_cast<std::size_t>(a)], hv[2 * static_cast<std::size_t>(a) + 1]};
    ref[i] = reference ? reference(ens.at(i)) : std::array<double, 2>{0.0, 0.0};
  }
  // fixed-order accumulation keeps results independent of threading
  for (std::size_t i = 0; i < n; ++i) {
    auto& b = out.bins[bin_of[i]];
    ++b.count;
    for (int c = 0; c < 2; ++c) {
      b.mean[c] += v[i][static_cast<std::size_t>(c)];
      b.reference[c] += ref[i][static_cast<std::size_t>(c)];
    }
  }
  for (std::size_t k = 0; k < nb; ++k) {
    auto& b = out.bins[k];
    b.ix = static_cast<int>(k / static_cast<std::size_t>(out.np));
    b.ip = static_cast<int>(k % static_cast<std::size_t>(out.np));
    b.x = out.x_lo + (b.ix + 0.5) * out.x_width;
    b.p = out.p_lo + (b.ip + 0.5) * out.p_width;
    b.occupied = b.count >= binning.min_count;
    if (b.count == 0) continue;
    for (int c = 0; c < 2; ++c) {
      b.mean[c] /= static_cast<double>(b.count);
      b.reference[c] /= static_cast<double>(b.count);
    }
    b.min_distance = INFINITY;
  }
  std::vector<std::array<double, 2>> sq(nb, {0.0, 0.0});
  for (std::size_t i = 0; i < n; ++i) {
    auto& b = out.bins[bin_of[i]];
    const double dist = std::hypot(v[i][0] - b.mean[0], v[i][1] - b.mean[1]);
    b.min_distance = std::min(b.min_distance, dist);
    for (int c = 0; c < 2; ++c) {
      const auto cc = static_cast<std::size_t>(c);
      const double d = (v[i][cc] - ref[i][cc]) - (b.mean[c] - b.reference[c]);
      sq[bin_of[i]][cc] += d * d;
    }
  }
  for (std::size_t k = 0; k < nb; ++k) {
    auto& b = out.bins[k];
    if (b.count < 2) continue;
    const double cnt = static_cast<double>(b.count);
    for (int c = 0; c < 2; ++c) b.se[c] = std::sqrt(sq[k][static_cast<std::size_t>(c)] / (cnt - 1.0) / cnt);
  }
  return out;
}

ScalingTable ensemble_average_scaling(const Observable& observable, const SystemSampler& sampler,
                                      const std::vector<std::size_t>& sizes,
                                      std::size_t realizations, std::uint64_t seed) {
  if (realizations < 2) throw InsufficientSamples("the spread needs at least two realizations");
  ScalingTable table;
  std::vector<double> lx, ly;
  for (std::size_t n : sizes) {
    if (n < 1) throw InvalidExtent("system sizes must be positive");
    std::vector<double> values(realizations);
    const std::uint64_t sub = split_seed(seed, n);
    parallel_for(realizations, [&](std::size_t r) { values[r] = observable(sampler(n, sub, r)); });
    double m = 0.0;
    for (double v : values) m += v;
    m /= static_cast<double>(realizations);
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    s = std::sqrt(s / static_cast<double>(realizations - 1));
    ScalingRow row{n, m, s, m != 0.0 ? s / std::abs(m) : INFINITY};
    table.rows.push_back(row);
    if (row.relative > 0.0 && std::isfinite(row.relative)) {
      lx.push_back(std::log(static_cast<double>(n)));
      ly.push_back(std::log(row.relative));
    }
  }
  if (lx.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(lx.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    table.slope = sxy / sxx;
  } else {
    table.slope = std::nan("");
  }
  return table;
}

SystemSampler thermal_oscillator_sampler(double mass, double omega, double beta) {
  return [=](std::size_t n, std::uint64_t seed, std::uint64_t stream) {
    CounterRng rng(seed, stream);
    const double sx = std::sqrt(1.0 / (beta * mass * omega * omega)), sp = std::sqrt(mass / beta);
    std::vector<double> z(2 * n);
    for (std::size_t a = 0; a < n; ++a) {
      z[2 * a] = sx * rng.normal();
      z[2 * a + 1] = sp * rng.normal();
    }
    return z;
  };
}

MarginalContinuity binned_continuity_check(const ClassicalHSpec& h, const PhaseEnsemble& now,
                                           const PhaseEnsemble& later, const SubsystemPartition& part,
                                           int bins) {
  const int a = single_particle(part, now.particles);
  if (now.count() != later.count()) throw AxisMismatch("ensembles differ in size");
  const double dt = later.time - now.time;
  double xlo = INFINITY, xhi = -INFINITY, plo = INFINITY, phi = -INFINITY;
  for (const auto* e : {&now, &later})
    for (std::size_t i = 0; i < e->count(); ++i) {
      const double x = e->at(i)[2 * static_cast<std::size_t>(a)], p = e->at(i)[2 * static_cast<std::size_t>(a) + 1];
      xlo = std::min(xlo, x);
      xhi = std::max(xhi, x);
      plo = std::min(plo, p);
      phi = std::max(phi, p);
    }
  const double wx = (xhi - xlo) / bins * (1 + 1e-12), wp = (phi - plo) / bins * (1 + 1e-12);
  const std::size_t nb = static_cast<std::size_t>(bins) * static_cast<std::size_t>(bins);
  auto bin = [&](std::span<const double> z) {
    const int ix = std::clamp(static_cast<int>((z[2 * static_cast<std::size_t>(a)] - xlo) / wx), 0, bins - 1);
    const int ip = std::clamp(static_cast<int>((z[2 * static_cast<std::size_t>(a) + 1] - plo) / wp), 0, bins - 1);
    return static_cast<std::size_t>(ix) * static_cast<std::size_t>(bins) + static_cast<std::size_t>(ip);
  };
  const double norm = 1.0 / (static_cast<double>(now.count()) * wx * wp);
  std::vector<double> rho0(nb, 0.0), rho1(nb, 0.0), fx(nb, 0.0), fp(nb, 0.0);
  for (std::size_t i = 0; i < now.count(); ++i) {
    const std::size_t b = bin(now.at(i));
    const auto v = hamilton_velocity(h, now.at(i));
    rho0[b] += norm;
    fx[b] += norm * v[2 * static_cast<std::size_t>(a)];  // rho * v_tr summed per bin
    fp[b] += norm * v[2 * static_cast<std::size_t>(a) + 1];
  }
  for (std::size_t i = 0; i < later.count(); ++i) rho1[bin(later.at(i))] += norm;
  MarginalContinuity out;
  for (int ix = 0; ix < bins; ++ix)
    for (int ip = 0; ip < bins; ++ip) {
      auto at = [&](const std::vector<double>& f, int i, int j) {
        if (i < 0 || j < 0 || i >= bins || j >= bins) return 0.0;
        return f[static_cast<std::size_t>(i) * static_cast<std::size_t>(bins) + static_cast<std::size_t>(j)];
      };
      const double div = (at(fx, ix + 1, ip) - at(fx, ix - 1, ip)) / (2 * wx) +
                         (at(fp, ix, ip + 1) - at(fp, ix, ip - 1)) / (2 * wp);
      const double predicted = -dt * div;
      const double actual = at(rho1, ix, ip) - at(rho0, ix, ip);
      out.predicted_change += std::abs(predicted) * wx * wp;
      out.actual_change += std::abs(actual) * wx * wp;
      out.mismatch += std::abs(predicted - actual) * wx * wp;
    }
  return out;
}

void write_ensemble(const std::filesystem::path& path, const PhaseEnsemble& ens) {
  nlohmann::json h{{"format", "ens"},         {"kind", "phase_ensemble"}, {"dtype", "float64"},
                   {"particles", ens.particles}, {"samples", ens.count()},  {"time", ens.time},
                   {"seed", ens.seed},        {"layout", "sample,(x_a,p_a)"}};
  io::write_container(path, h, ens.states);
}

PhaseEnsemble read_ensemble(const std::filesystem::path& path) {
  io::Container c = io::read_container(path);
  if (c.header.value("kind", "") != "phase_ensemble")
    throw FormatError(path.string() + " is not a phase ensemble");
  PhaseEnsemble ens;
  ens.particles = c.header.at("particles").get<int>();
  ens.time = c.header.at("time").get<double>();
  ens.seed = c.header.at("seed").get<std::uint64_t>();
  ens.states = std::move(c.payload);
  if (ens.states.size() != c.header.at("samples").get<std::size_t>() * ens.width())
    throw FormatError(path.string() + ": payload size does not match header");
  return ens;
}

}  // namespace bohm::classical
