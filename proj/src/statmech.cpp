#include "bohm/statmech.hpp"

#include <algorithm>
#include <bit>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <tuple>

#include "bohm/bohmian.hpp"
#include "bohm/currents.hpp"
#include "bohm/error.hpp"
#include "bohm/linalg.hpp"
#include "bohm/parallel.hpp"
#include "bohm/rng.hpp"
#include "bohm/states.hpp"
#include "bohm/subsystem.hpp"

namespace bohm::statmech {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double kTailBound = 1e-12;
constexpr double kDensityTolerance = 1e-10;

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

double entropy_of_eigenvalues(const Eigen::VectorXd& lambda) {
  double s = 0.0;
  for (double l : lambda) {
    if (l < -kDensityTolerance) throw NotADensityMatrix("negative eigenvalue " + std::to_string(l));
    if (l > 0.0) s -= l * std::log(l);
  }
  return s;
}

}  // namespace

const char* to_string(SpectrumSource s) {
  switch (s) {
    case SpectrumSource::box: return "box";
    case SpectrumSource::harmonic: return "harmonic";
    case SpectrumSource::two_level: return "two_level";
    case SpectrumSource::spin_chain: return "spin_chain";
    case SpectrumSource::numeric: return "numeric";
  }
  return "?";
}

Spectrum box_spectrum(double length, double mass, std::size_t count) {
  if (!(length > 0.0) || !(mass > 0.0) || count == 0) throw InvalidExtent("box spectrum needs L, m, count > 0");
  Spectrum s{SpectrumSource::box, {}, length, false};
  s.levels.resize(count);
  for (std::size_t n = 1; n <= count; ++n)
    s.levels[n - 1] = static_cast<double>(n * n) * pi * pi / (2.0 * mass * length * length);
  return s;
}

Spectrum harmonic_spectrum(double omega, std::size_t count) {
  if (!(omega > 0.0) || count == 0) throw InvalidExtent("harmonic spectrum needs omega, count > 0");
  Spectrum s{SpectrumSource::harmonic, {}, 0.0, false};
  s.levels.resize(count);
  for (std::size_t n = 0; n < count; ++n) s.levels[n] = omega * (static_cast<double>(n) + 0.5);
  return s;
}

Spectrum two_level_spectrum(double gap) { return {SpectrumSource::two_level, {0.0, gap}, 0.0, true}; }

Spectrum numeric_spectrum(std::vector<double> levels, bool complete, double volume) {
  if (levels.empty()) throw InvalidExtent("spectrum needs at least one level");
  std::sort(levels.begin(), levels.end());
  return {SpectrumSource::numeric, std::move(levels), volume, complete};
}

Spectrum numeric_spectrum(const std::vector<Eigenstate>& states, double volume) {
  std::vector<double> levels;
  for (const auto& s : states) levels.push_back(s.energy);
  return numeric_spectrum(std::move(levels), false, volume);
}

std::size_t box_level_count(double length, double mass, double max_temperature) {
  // need (n^2 - 1) e1 / T > ln 1e15
  const double e1 = pi * pi / (2.0 * mass * length * length);
  const double need = 15.0 * std::log(10.0) * max_temperature / e1 + 1.0;
  return std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(std::sqrt(need))) + 1);
}

std::size_t harmonic_level_count(double omega, double max_temperature) {
  return std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(15.0 * std::log(10.0) * max_temperature / omega)) + 2);
}

Canonical partition_function(const Spectrum& spectrum, double beta) {
  if (!(beta > 0.0)) throw InvalidExtent("beta must be positive");
  const auto& e = spectrum.levels;
  if (e.empty()) throw InvalidExtent("empty spectrum");
  const double e0 = e.front();
  if (!spectrum.complete && std::exp(-beta * (e.back() - e0)) >= kTailBound)
    throw TruncationInsufficient("spectrum truncated at E = " + std::to_string(e.back()) +
                                 " leaves a Boltzmann tail above 1e-12 at beta = " + std::to_string(beta));
  Canonical c;
  c.beta = beta;
  c.probabilities.resize(e.size());
  double rest = 0.0;
  for (std::size_t n = 0; n < e.size(); ++n) {
    c.probabilities[n] = std::exp(-beta * (e[n] - e0));
    if (n > 0) rest += c.probabilities[n];
  }
  c.log_excess = std::log1p(rest);
  c.log_z = -beta * e0 + c.log_excess;
  const double sum = 1.0 + rest;
  double excess_energy = 0.0;
  for (std::size_t n = 0; n < e.size(); ++n) {
    c.probabilities[n] /= sum;
    excess_energy += c.probabilities[n] * (e[n] - e0);
  }
  // -sum p ln p with ln p_n = -beta (E_n - E_0) - log_excess, exact and free
  // of the cancellation in -p_0 ln p_0 when p_0 is close to 1
  c.energy = e0 + excess_energy;
  c.entropy = beta * excess_energy + c.log_excess;
  return c;
}

double von_neumann_entropy(const Eigen::MatrixXcd& rho) {
  if (rho.rows() != rho.cols() || rho.rows() == 0) throw NotADensityMatrix("density matrix must be square");
  const double asym = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (asym > kDensityTolerance) throw NotADensityMatrix("density matrix is not Hermitian");
  const Complex tr = rho.trace();
  if (std::abs(tr - 1.0) > kDensityTolerance) throw NotADensityMatrix("trace differs from 1");
  const Eigen::MatrixXcd herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
  return entropy_of_eigenvalues(es.eigenvalues());
}

double von_neumann_entropy(std::span<const double> probabilities) {
  if (probabilities.empty()) throw NotADensityMatrix("empty probability vector");
  double sum = 0.0;
  for (double p : probabilities) sum += p;
  if (std::abs(sum - 1.0) > kDensityTolerance) throw NotADensityMatrix("probabilities do not sum to 1");
  return entropy_of_eigenvalues(Eigen::Map<const Eigen::VectorXd>(probabilities.data(),
                                                                  static_cast<Eigen::Index>(probabilities.size())));
}

double quantum_boltzmann_entropy(double dim) {
  if (!(dim >= 1.0)) throw InvalidExtent("Hilbert-space dimension must be at least 1");
  return std::log(dim);
}

std::uint64_t macrostate_dim(std::span<const double> lengths, double p_cutoff) {
  if (!(p_cutoff > 0.0)) throw InvalidExtent("p_cutoff must be positive");
  std::uint64_t dim = 1;
  for (double len : lengths) {
    // 1e-9 absorbs round-off in exact multiples such as 1 * 2pi / 2pi
    const double cells = std::floor(len * 2.0 * p_cutoff / (2.0 * pi) + 1e-9);
    dim *= std::max<std::uint64_t>(1, static_cast<std::uint64_t>(cells));
  }
  return dim;
}

bool Box::contains(std::span<const double> x) const {
  if (x.size() != intervals.size()) throw AxisMismatch("point and box dimensions differ");
  for (std::size_t k = 0; k < x.size(); ++k)
    if (x[k] < intervals[k].first || x[k] > intervals[k].second) return false;
  return true;
}

double Box::volume() const {
  double v = 1.0;
  for (const auto& [lo, hi] : intervals) v *= std::max(0.0, hi - lo);
  return v;
}

double Macrostate::volume() const {
  double v = 0.0;
  for (const auto& b : boxes) v += b.volume();
  return v;
}

std::size_t macrostate_of(std::span<const double> x, const MacrostateDecomposition& decomp) {
  for (std::size_t m = 0; m < decomp.cells.size(); ++m)
    for (const auto& b : decomp.cells[m].boxes)
      if (b.contains(x)) return m;
  throw OutsideAllCells("configuration lies outside every macrostate cell");
}

MacrostateDecomposition half_occupation_decomposition(int particles, double lo, double hi,
                                                      double p_cutoff) {
  if (particles < 1 || particles > 20) throw InvalidExtent("half occupation needs 1..20 particles");
  if (!(hi > lo)) throw InvalidExtent("empty interval");
  const double mid = 0.5 * (lo + hi);
  const double half[] = {mid - lo};
  const double d = static_cast<double>(macrostate_dim(half, p_cutoff));
  MacrostateDecomposition out;
  out.kind = DecompositionKind::hilbert_direct_sum;
  out.cells.resize(static_cast<std::size_t>(particles) + 1);
  for (int k = 0; k <= particles; ++k) {
    auto& cell = out.cells[static_cast<std::size_t>(k)];
    cell.label = "n_left=" + std::to_string(k);
    // C(N, k) d^N
    double binom = 1.0;
    for (int i = 1; i <= k; ++i) binom = binom * (particles - k + i) / i;
    cell.dim = binom * std::pow(d, particles);
  }
  for (std::uint32_t mask = 0; mask < (1u << particles); ++mask) {
    Box b;
    for (int a = 0; a < particles; ++a)
      b.intervals.emplace_back((mask >> a) & 1u ? std::pair{lo, mid} : std::pair{mid, hi});
    out.cells[static_cast<std::size_t>(std::popcount(mask))].boxes.push_back(std::move(b));
  }
  return out;
}

double Histogram::cell_volume() const {
  double v = 1.0;
  for (std::size_t k = 0; k < bins.size(); ++k) v *= (hi[k] - lo[k]) / bins[k];
  return v;
}

Histogram histogram(std::span<const double> points, std::size_t dims, std::vector<double> lo,
                    std::vector<double> hi, std::vector<int> bins) {
  if (dims == 0 || lo.size() != dims || hi.size() != dims || bins.size() != dims)
    throw AxisMismatch("histogram ranges need one entry per dimension");
  std::size_t cells = 1;
  for (std::size_t k = 0; k < dims; ++k) {
    if (bins[k] < 1 || !(hi[k] > lo[k])) throw InvalidExtent("histogram axis needs bins >= 1 and hi > lo");
    cells *= static_cast<std::size_t>(bins[k]);
  }
  Histogram h{std::move(lo), std::move(hi), std::move(bins), std::vector<double>(cells, 0.0), 0};
  const std::size_t n = points.size() / dims;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t idx = 0;
    bool ok = true;
    for (std::size_t k = 0; k < dims && ok; ++k) {
      const double x = points[i * dims + k];
      if (x < h.lo[k] || x > h.hi[k]) {
        ok = false;
        break;
      }
      const int b = std::min(h.bins[k] - 1, static_cast<int>((x - h.lo[k]) / (h.hi[k] - h.lo[k]) * h.bins[k]));
      idx = idx * static_cast<std::size_t>(h.bins[k]) + static_cast<std::size_t>(b);
    }
    if (!ok) {
      ++h.outside;
      continue;
    }
    h.probabilities[idx] += 1.0;
    ++inside;
  }
  if (inside == 0) throw EmptyRegion("no point falls inside the histogram range");
  for (double& p : h.probabilities) p /= static_cast<double>(inside);
  return h;
}

double gibbs_entropy(const Histogram& h, double dz) {
  if (!(dz > 0.0)) throw InvalidExtent("dz must be positive");
  const double vol = h.cell_volume();
  double s = 0.0;
  for (double p : h.probabilities)
    if (p > 0.0) s -= p * (std::log(p / vol) + std::log(dz));
  return s;
}

double coarse_grained_gibbs(std::span<const double> probabilities, std::span<const double> cell_counts) {
  if (probabilities.size() != cell_counts.size()) throw AxisMismatch("one cell count per probability");
  double s = 0.0;
  for (std::size_t m = 0; m < probabilities.size(); ++m) {
    const double p = probabilities[m];
    if (p <= 0.0) continue;
    if (!(cell_counts[m] > 0.0)) throw EmptyRegion("occupied cell with zero volume");
    s -= p * std::log(p / cell_counts[m]);
  }
  return s;
}

double boltzmann_entropy(double volume, double dz) {
  if (!(dz > 0.0)) throw InvalidExtent("dz must be positive");
  if (!(volume > 0.0)) throw EmptyRegion("region has no volume");
  return std::log(volume / dz);
}

double boltzmann_entropy(const Box& region, double dz) { return boltzmann_entropy(region.volume(), dz); }

double one_particle_boltzmann(std::span<const double> states, std::size_t particles,
                              std::size_t per_particle, std::vector<double> lo,
                              std::vector<double> hi, std::vector<int> bins, double dz1) {
  if (particles == 0 || per_particle == 0 || states.size() % (particles * per_particle) != 0)
    throw AxisMismatch("states do not hold whole systems");
  // the blocks of all particles are pooled: identical particles share one marginal
  const Histogram h = histogram(states, per_particle, std::move(lo), std::move(hi), std::move(bins));
  return static_cast<double>(particles) * gibbs_entropy(h, dz1);
}

bool nondecreasing_trend(std::span<const double> series, double tolerance) {
  double best = -std::numeric_limits<double>::infinity();
  for (double s : series) {
    if (s < best - tolerance) return false;
    best = std::max(best, s);
  }
  return true;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidExtent("spearman needs two equal series of length >= 2");
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = 0.5 * static_cast<double>(i + j);
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

ThermoTable thermo_table(const SpectrumFamily& family, std::vector<double> volumes,
                         std::vector<double> temperatures, double relative_step) {
  auto check_axis = [](const std::vector<double>& axis, const char* name) {
    if (axis.size() < 5) throw GridTooCoarse(std::string(name) + " grid needs at least 5 points");
    for (std::size_t i = 0; i < axis.size(); ++i) {
      if (!(axis[i] > 0.0)) throw InvalidExtent(std::string(name) + " values must be positive");
      if (i > 0 && !(axis[i] > axis[i - 1])) throw InvalidExtent(std::string(name) + " grid must ascend");
    }
  };
  check_axis(volumes, "volume");
  check_axis(temperatures, "temperature");
  if (!(relative_step > 0.0 && relative_step < 0.1)) throw InvalidExtent("relative_step must lie in (0, 0.1)");
  ThermoTable table;
  table.relative_step = relative_step;
  table.points.resize(volumes.size() * temperatures.size());
  parallel_for(volumes.size(), [&](std::size_t iv) {
    const double v = volumes[iv];
    const double hv = relative_step * v;
    const Spectrum s = family(v), sp = family(v + hv), sm = family(v - hv);
    const std::size_t common = std::min({s.levels.size(), sp.levels.size(), sm.levels.size()});
    for (std::size_t it = 0; it < temperatures.size(); ++it) {
      const double t = temperatures[it];
      const double ht = relative_step * t;
      // T ln Z = -E_0 + T ln sum e^{-(E_n - E_0)/T}; only the second part
      // depends on T, and differencing it alone keeps the tiny entropies of
      // a cold spectrum above round-off
      const Canonical c = partition_function(s, 1.0 / t);
      const double x_up = partition_function(s, 1.0 / (t + ht)).log_excess;
      const double x_dn = partition_function(s, 1.0 / (t - ht)).log_excess;
      const Canonical cvp = partition_function(sp, 1.0 / t), cvm = partition_function(sm, 1.0 / t);
      ThermoPoint& p = table.points[iv * temperatures.size() + it];
      p.volume = v;
      p.temperature = t;
      p.log_z = c.log_z;
      p.free_energy = -t * c.log_z;
      p.energy = s.levels.front() + t * t * (x_up - x_dn) / (2.0 * ht);
      p.entropy = ((t + ht) * x_up - (t - ht) * x_dn) / (2.0 * ht);
      p.pressure = (-(sp.levels.front() - sm.levels.front()) + t * (cvp.log_excess - cvm.log_excess)) / (2.0 * hv);
      p.energy_direct = c.energy;
      p.entropy_direct = c.entropy;
      double pd = 0.0;
      for (std::size_t n = 0; n < common; ++n)
        pd -= c.probabilities[n] * (sp.levels[n] - sm.levels[n]) / (2.0 * hv);
      p.pressure_direct = pd;
    }
  });
  table.volumes = std::move(volumes);
  table.temperatures = std::move(temperatures);
  return table;
}

FirstLawReport first_law_residual(const ThermoTable& table, ThermoRoute route) {
  constexpr double tiny = 1e-300;
  auto e = [&](const ThermoPoint& p) { return route == ThermoRoute::direct ? p.energy_direct : p.energy; };
  auto s = [&](const ThermoPoint& p) { return route == ThermoRoute::direct ? p.entropy_direct : p.entropy; };
  auto pr = [&](const ThermoPoint& p) { return route == ThermoRoute::direct ? p.pressure_direct : p.pressure; };
  auto edge = [&](const ThermoPoint& a, const ThermoPoint& b) {
    const double de = e(b) - e(a), ds = s(b) - s(a), dv = b.volume - a.volume;
    const double tbar = 0.5 * (a.temperature + b.temperature), pbar = 0.5 * (pr(a) + pr(b));
    return std::abs(de - tbar * ds + pbar * dv) / (std::abs(de) + tiny);
  };
  FirstLawReport out;
  const std::size_t nv = table.volumes.size(), nt = table.temperatures.size();
  for (std::size_t iv = 0; iv < nv; ++iv)
    for (std::size_t it = 0; it < nt; ++it) {
      if (it + 1 < nt) {
        const double r = edge(table.at(iv, it), table.at(iv, it + 1));
        out.residuals.push_back(r);
        out.isochoric.push_back(r);
      }
      if (iv + 1 < nv) out.residuals.push_back(edge(table.at(iv, it), table.at(iv + 1, it)));
    }
  out.max = out.residuals.empty() ? 0.0 : *std::max_element(out.residuals.begin(), out.residuals.end());
  out.median = median(out.residuals);
  out.isochoric_median = median(out.isochoric);
  return out;
}

void write_thermo_csv(const std::filesystem::path& path, const ThermoTable& table) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out.precision(17);
  out << "volume,temperature,log_z,free_energy,energy,entropy,pressure,energy_direct,entropy_direct,"
         "pressure_direct\n";
  for (const auto& p : table.points)
    out << p.volume << ',' << p.temperature << ',' << p.log_z << ',' << p.free_energy << ',' << p.energy << ','
        << p.entropy << ',' << p.pressure << ',' << p.energy_direct << ',' << p.entropy_direct << ','
        << p.pressure_direct << '\n';
}

namespace {

struct ThermalBox {
  std::vector<WaveField> states;
  std::vector<double> weights;
};

ThermalBox thermal_box_states(const Grid& grid, double mass, double temperature) {
  if (grid.axes() != 1 || grid.periodic()) throw AxisMismatch("thermal box needs a 1D dirichlet grid");
  if (!(temperature > 0.0)) throw InvalidExtent("temperature must be positive");
  const double len = grid.extent();
  const std::size_t count = box_level_count(len, mass, temperature);
  if (count > static_cast<std::size_t>(grid.n()) / 2)
    throw GridTooCoarse("thermal box at T = " + std::to_string(temperature) + " needs " + std::to_string(count) +
                        " levels; use at least " + std::to_string(2 * count) + " points");
  const Canonical c = partition_function(box_spectrum(len, mass, count), 1.0 / temperature);
  ThermalBox out;
  for (std::size_t n = 0; n < count; ++n) {
    if (c.probabilities[n] < 1e-300) break;
    out.states.push_back(states::box_eigenstate(grid, static_cast<int>(n + 1)));
    out.weights.push_back(c.probabilities[n]);
  }
  return out;
}

}  // namespace

ScalarField thermal_box_density(const Grid& grid, double mass, double temperature, std::size_t* levels) {
  const ThermalBox box = thermal_box_states(grid, mass, temperature);
  ScalarField rho(grid);
  for (std::size_t k = 0; k < box.states.size(); ++k)
    for (std::size_t p = 0; p < grid.points(); ++p) rho.values[p] += box.weights[k] * std::norm(box.states[k].amplitudes[p]);
  if (levels) *levels = box.states.size();
  return rho;
}

VolumeReport bohmian_volume_check(const Grid& grid, double mass, double temperature,
                                  std::size_t samples, std::uint64_t seed, bool with_current) {
  VolumeReport r;
  const ScalarField rho = thermal_box_density(grid, mass, temperature, &r.levels);
  if (with_current) {
    const ThermalBox box = thermal_box_states(grid, mass, temperature);
    const ReducedDensityMatrix rdm = mixed_density_matrix(box.states, box.weights);
    const VectorField j = truncated_current_from_rdm(rdm, {mass});
    r.max_current = j.max_abs();
    r.max_velocity = velocity(rho, j).velocity.max_abs();
  }
  const Configurations x = sample_initial(rho, samples, seed);
  const double lo = grid.spec().lo, hi = grid.spec().hi;
  r.samples = x.count();
  r.sample_min = std::numeric_limits<double>::infinity();
  r.sample_max = -std::numeric_limits<double>::infinity();
  for (double v : x.values) {
    r.inside += (v >= lo && v <= hi);
    r.sample_min = std::min(r.sample_min, v);
    r.sample_max = std::max(r.sample_max, v);
  }
  r.spread_fraction = (r.sample_max - r.sample_min) / (hi - lo);
  return r;
}

namespace {

void check_chain(const SpinChain& c) {
  if (c.spins < 2 || c.spins > kMaxChainSpins)
    throw DiagonalizationBudget("spin chain needs 2.." + std::to_string(kMaxChainSpins) + " spins, got " +
                                std::to_string(c.spins));
  if (c.subsystem < 1 || c.subsystem >= c.spins) throw PartitionMismatch("subsystem must hold 1..N-1 spins");
}

Eigen::MatrixXd ising(int spins, const std::vector<double>& bonds, double exchange, double field,
                      double longitudinal) {
  const Eigen::Index dim = Eigen::Index{1} << spins;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  auto sz = [&](Eigen::Index idx, int i) { return ((idx >> (spins - 1 - i)) & 1) ? -1.0 : 1.0; };
  for (Eigen::Index idx = 0; idx < dim; ++idx) {
    double diag = 0.0;
    for (int i = 0; i + 1 < spins; ++i) diag -= exchange * bonds[static_cast<std::size_t>(i)] * sz(idx, i) * sz(idx, i + 1);
    for (int i = 0; i < spins; ++i) {
      diag -= longitudinal * sz(idx, i);
      h(idx ^ (Eigen::Index{1} << (spins - 1 - i)), idx) -= field;
    }
    h(idx, idx) = diag;
  }
  return h;
}

}  // namespace

Eigen::MatrixXd chain_hamiltonian(const SpinChain& chain) {
  check_chain(chain);
  std::vector<double> bonds(static_cast<std::size_t>(chain.spins - 1), 1.0);
  bonds[static_cast<std::size_t>(chain.subsystem - 1)] = chain.bond_coupling;
  return ising(chain.spins, bonds, chain.exchange, chain.field, chain.longitudinal);
}

Eigen::MatrixXd subsystem_hamiltonian(const SpinChain& chain) {
  check_chain(chain);
  if (chain.subsystem == 1) {
    Eigen::MatrixXd h(2, 2);
    h << -chain.longitudinal, -chain.field, -chain.field, chain.longitudinal;
    return h;
  }
  return ising(chain.subsystem, std::vector<double>(static_cast<std::size_t>(chain.subsystem - 1), 1.0),
               chain.exchange, chain.field, chain.longitudinal);
}

Eigen::MatrixXcd reduce_to_first_spins(const Eigen::VectorXcd& psi, int spins, int n_a) {
  const Eigen::Index da = Eigen::Index{1} << n_a, db = Eigen::Index{1} << (spins - n_a);
  if (psi.size() != da * db) throw AxisMismatch("state size is not 2^spins");
  const Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(psi.data(), da, db);
  return m * m.adjoint();
}

Eigen::MatrixXcd canonical_state(const Eigen::MatrixXd& h, double beta) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  const Eigen::VectorXd& e = es.eigenvalues();
  const double shift = beta >= 0.0 ? e.minCoeff() : e.maxCoeff();
  Eigen::VectorXd w = (-beta * (e.array() - shift)).exp();
  w /= w.sum();
  const Eigen::MatrixXd rho = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
  return rho.cast<Complex>();
}

double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  const Eigen::MatrixXcd d = a - b;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

std::pair<double, double> fit_beta(const Eigen::MatrixXcd& rho, const Eigen::MatrixXd& h, double beta_bound) {
  auto distance = [&](double beta) { return trace_distance(rho, canonical_state(h, beta)); };
  // coarse scan first, then Brent inside the best bracket
  constexpr int scan = 200;
  const double step = 2.0 * beta_bound / scan;
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= scan; ++i) {
    const double d = distance(-beta_bound + i * step);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  const double lo = -beta_bound + std::max(0, best - 1) * step;
  const double hi = -beta_bound + std::min(scan, best + 1) * step;
  const auto [beta, d] = boost::math::tools::brent_find_minima(distance, lo, hi, 40);
  return d <= best_d ? std::pair{beta, d} : std::pair{-beta_bound + best * step, best_d};
}

TypicalityReport canonical_typicality(const SpinChain& chain, const TypicalityOptions& options) {
  if (options.trials < 1) throw InvalidExtent("typicality needs at least one trial");
  const Eigen::MatrixXd h = chain_hamiltonian(chain);
  const linalg::SymmetricEigen eig = linalg::symmetric_eigen(h);
  const Eigen::VectorXd& e = eig.values;
  const auto dim = static_cast<std::size_t>(e.size());
  if (options.min_levels < 1 || options.min_levels > dim)
    throw WindowEmpty("window needs " + std::to_string(options.min_levels) + " levels but the chain has " +
                      std::to_string(dim));

  TypicalityReport r;
  r.spins = chain.spins;
  std::vector<double> levels(e.data(), e.data() + e.size());
  r.energy_center = partition_function(numeric_spectrum(levels, true), options.reference_beta).energy;
  std::vector<double> dist(dim);
  for (std::size_t n = 0; n < dim; ++n) dist[n] = std::abs(levels[n] - r.energy_center);
  std::vector<double> sorted = dist;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(options.min_levels - 1), sorted.end());
  const double half = sorted[options.min_levels - 1] * (1.0 + 1e-12) + 1e-12;
  r.window_width = 2.0 * half;
  std::vector<Eigen::Index> window;
  for (std::size_t n = 0; n < dim; ++n)
    if (dist[n] <= half) window.push_back(static_cast<Eigen::Index>(n));
  if (window.empty()) throw WindowEmpty("energy window holds no level");
  r.levels_in_window = window.size();

  auto count_in = [&](double centre) {
    double c = 0.0;
    for (double l : levels) c += std::abs(l - centre) <= half;
    return c;
  };
  const double up = count_in(r.energy_center + r.window_width), down = count_in(r.energy_center - r.window_width);
  r.entropy_beta = up > 0.0 && down > 0.0 ? (std::log(up) - std::log(down)) / (2.0 * r.window_width)
                                          : std::nan("");

  const Eigen::MatrixXd h_a = subsystem_hamiltonian(chain);
  const Eigen::MatrixXcd entropy_state =
      std::isfinite(r.entropy_beta) ? canonical_state(h_a, r.entropy_beta) : Eigen::MatrixXcd();
  Eigen::MatrixXd basis(e.size(), static_cast<Eigen::Index>(window.size()));
  for (std::size_t k = 0; k < window.size(); ++k) basis.col(static_cast<Eigen::Index>(k)) = eig.vectors.col(window[k]);

  r.trials.resize(static_cast<std::size_t>(options.trials));
  parallel_for(r.trials.size(), [&](std::size_t t) {
    CounterRng rng(options.seed, t);
    Eigen::VectorXcd c(basis.cols());
    for (Eigen::Index k = 0; k < c.size(); ++k) {
      const double re = rng.normal();
      c(k) = Complex(re, rng.normal());
    }
    Eigen::VectorXcd psi = basis.cast<Complex>() * c;
    psi.normalize();
    const Eigen::MatrixXcd rho_a = reduce_to_first_spins(psi, chain.spins, chain.subsystem);
    auto& trial = r.trials[t];
    std::tie(trial.fitted_beta, trial.fitted_distance) = fit_beta(rho_a, h_a);
    trial.entropy_distance = entropy_state.size() ? trace_distance(rho_a, entropy_state) : std::nan("");
  });
  std::vector<double> d, b, de;
  for (const auto& t : r.trials) {
    d.push_back(t.fitted_distance);
    b.push_back(t.fitted_beta);
    de.push_back(t.entropy_distance);
  }
  r.median_distance = median(d);
  r.median_fitted_beta = median(b);
  r.median_entropy_distance = median(de);
  return r;
}

}  // namespace bohm::statmech
