#include "bohm/schrodinger.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <numbers>

#include "bohm/error.hpp"
#include "bohm/io.hpp"
#include "bohm/linalg.hpp"
#include "bohm/rng.hpp"

namespace bohm {

namespace fs = std::filesystem;

const char* to_string(Stepper s) {
  return s == Stepper::split_step_spectral ? "split_step_spectral" : "crank_nicolson";
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double mass_of(const HamiltonianSpec& h, int particle) {
  return h.masses[static_cast<std::size_t>(particle)];
}

// Spin index of `particle` inside a collective spin index.
int spin_of(const Grid& grid, std::size_t collective, int particle) {
  std::size_t div = 1;
  for (int b = grid.particles() - 1; b > particle; --b) div *= static_cast<std::size_t>(grid.spin_dim(b));
  return static_cast<int>((collective / div) % static_cast<std::size_t>(grid.spin_dim(particle)));
}

}  // namespace

void validate(const HamiltonianSpec& h, const Grid& grid, bool check_stepper) {
  if (h.masses.size() != static_cast<std::size_t>(grid.particles()))
    throw InvalidExtent("hamiltonian.masses needs one entry per particle");
  for (double m : h.masses)
    if (!(m > 0.0)) throw InvalidExtent("hamiltonian.masses must be positive");
  if (!(std::abs(h.time_step) > 0.0)) throw InvalidExtent("hamiltonian.time_step must be nonzero");
  if (check_stepper && h.stepper == Stepper::split_step_spectral && !grid.periodic())
    throw StepperBoundaryMismatch("split_step_spectral requires a periodic grid");
  if (check_stepper && h.stepper == Stepper::crank_nicolson && grid.periodic())
    throw StepperBoundaryMismatch("crank_nicolson requires a dirichlet grid");
  for (const auto& term : h.potential) {
    std::visit(overloaded{
                   [&](const HarmonicPotential& t) {
                     if (t.omega.size() != 1 && t.omega.size() != h.masses.size())
                       throw InvalidExtent("harmonic.omega needs one entry or one per particle");
                   },
                   [&](const GaussianBarrier& t) {
                     if (!(t.width > 0.0)) throw InvalidExtent("gaussian_barrier.width must be positive");
                   },
                   [&](const PairCoupling& t) {
                     if (t.first < 0 || t.second < 0 || t.first >= grid.particles() ||
                         t.second >= grid.particles() || t.first == t.second)
                       throw InvalidExtent("pair_coupling needs two distinct particles");
                   },
                   [&](const SpinCoupling& t) {
                     if (t.particle < 0 || t.particle >= grid.particles() ||
                         grid.spin_dim(t.particle) != 2)
                       throw InvalidExtent("spin_coupling needs a spin-1/2 particle");
                   },
               },
               term);
  }
}

bool exceeds_stability_heuristic(const HamiltonianSpec& h, const Grid& grid) {
  double m_min = std::numeric_limits<double>::infinity();
  for (double m : h.masses) m_min = std::min(m_min, m);
  return std::abs(h.time_step) > grid.spacing() * grid.spacing() * m_min / std::numbers::pi;
}

std::vector<double> potential_values(const HamiltonianSpec& h, const Grid& grid, std::size_t spin) {
  std::vector<double> v(grid.points(), 0.0);
  const int d = grid.dims();
  for (const auto& term : h.potential) {
    std::visit(
        overloaded{
            [&](const HarmonicPotential& t) {
              for (std::size_t p = 0; p < grid.points(); ++p) {
                for (int a = 0; a < grid.particles(); ++a) {
                  const double w = t.omega.size() == 1 ? t.omega[0] : t.omega[static_cast<std::size_t>(a)];
                  double r2 = 0.0;
                  for (int c = 0; c < d; ++c) {
                    const double x = grid.coordinate(p, grid.axis(a, c)) - t.center;
                    r2 += x * x;
                  }
                  v[p] += 0.5 * mass_of(h, a) * w * w * r2;
                }
              }
            },
            [&](const GaussianBarrier& t) {
              for (std::size_t p = 0; p < grid.points(); ++p) {
                for (int a = 0; a < grid.particles(); ++a) {
                  double r2 = 0.0;
                  for (int c = 0; c < d; ++c) {
                    const double x = grid.coordinate(p, grid.axis(a, c)) - t.center;
                    r2 += x * x;
                  }
                  v[p] += t.height * std::exp(-r2 / (2.0 * t.width * t.width));
                }
              }
            },
            [&](const PairCoupling& t) {
              for (std::size_t p = 0; p < grid.points(); ++p) {
                double r2 = 0.0;
                for (int c = 0; c < d; ++c) {
                  const double x = grid.coordinate(p, grid.axis(t.first, c)) -
                                   grid.coordinate(p, grid.axis(t.second, c));
                  r2 += x * x;
                }
                v[p] += t.lambda * r2;
              }
            },
            [&](const SpinCoupling& t) {
              const double sz = spin_of(grid, spin, t.particle) == 0 ? 1.0 : -1.0;
              for (std::size_t p = 0; p < grid.points(); ++p)
                v[p] += t.mu * sz * grid.coordinate(p, grid.axis(t.particle, 0));
            },
        },
        term);
  }
  return v;
}

std::vector<Complex> apply_hamiltonian(const HamiltonianSpec& h, const DerivativeOperator& op,
                                       std::span<const Complex> amplitudes) {
  const Grid& grid = op.grid();
  if (amplitudes.size() != grid.amplitude_count()) throw AxisMismatch("amplitude count mismatch");
  std::vector<Complex> out(amplitudes.size());
  const std::size_t np = grid.points();
  for (std::size_t s = 0; s < grid.spin_components(); ++s) {
    auto in = amplitudes.subspan(s * np, np);
    const auto v = potential_values(h, grid, s);
    for (std::size_t p = 0; p < np; ++p) out[s * np + p] = v[p] * in[p];
    for (int a = 0; a < grid.particles(); ++a) {
      const double c = -0.5 / mass_of(h, a);
      for (int comp = 0; comp < grid.dims(); ++comp) {
        const auto d2 = op.second(in, grid.axis(a, comp));
        for (std::size_t p = 0; p < np; ++p) out[s * np + p] += c * d2[p];
      }
    }
  }
  return out;
}

double energy(const WaveField& psi, const HamiltonianSpec& h) {
  validate(h, psi.grid, false);
  DerivativeOperator op(psi.grid);
  const auto hpsi = apply_hamiltonian(h, op, psi.amplitudes);
  Complex e{};
  for (std::size_t i = 0; i < hpsi.size(); ++i) e += std::conj(psi.amplitudes[i]) * hpsi[i];
  e *= psi.grid.weight();
  if (std::abs(e.imag()) > 1e-10 * std::max(1.0, std::abs(e.real())))
    throw ConvergenceFailure("energy has imaginary residue " + std::to_string(e.imag()));
  return e.real();
}

// ---------------------------------------------------------------- propagator

Propagator::Propagator(const Grid& grid, HamiltonianSpec h, double dt)
    : grid_(grid), h_(std::move(h)), dt_(dt) {
  validate(h_, grid_);
  for (std::size_t s = 0; s < grid_.spin_components(); ++s)
    potential_.push_back(potential_values(h_, grid_, s));
  if (h_.stepper != Stepper::split_step_spectral) return;

  for (const auto& v : potential_) {
    std::vector<Complex> phase(v.size());
    for (std::size_t p = 0; p < v.size(); ++p) phase[p] = std::polar(1.0, -0.5 * dt_ * v[p]);
    half_potential_phase_.push_back(std::move(phase));
  }
  kinetic_phase_.resize(grid_.points());
  auto k = grid_.wavenumbers();
  for (std::size_t p = 0; p < grid_.points(); ++p) {
    double t = 0.0;
    for (int a = 0; a < grid_.particles(); ++a)
      for (int c = 0; c < grid_.dims(); ++c) {
        const double kk = k[grid_.index_along(p, grid_.axis(a, c))];
        t += kk * kk / (2.0 * mass_of(h_, a));
      }
    kinetic_phase_[p] = std::polar(1.0, -dt_ * t);
  }
}

void Propagator::split_step(std::span<Complex> psi, std::size_t spin) const {
  const auto& half = half_potential_phase_[spin];
  for (std::size_t p = 0; p < psi.size(); ++p) psi[p] *= half[p];
  for (int k = 0; k < grid_.axes(); ++k) fft_axis(psi, grid_, k, true);
  for (std::size_t p = 0; p < psi.size(); ++p) psi[p] *= kinetic_phase_[p];
  for (int k = 0; k < grid_.axes(); ++k) fft_axis(psi, grid_, k, false);
  for (std::size_t p = 0; p < psi.size(); ++p) psi[p] *= half[p];
}

// Cayley map (1 + i tau H_k / 2)^-1 (1 - i tau H_k / 2) for the axis-k share
// of the Hamiltonian: 1D kinetic term plus V / axes.
void Propagator::cayley_axis(std::span<Complex> psi, std::size_t spin, int axis, double tau) const {
  const std::size_t n = static_cast<std::size_t>(grid_.n());
  const std::size_t s = grid_.stride(axis);
  const std::size_t lines = grid_.points() / n;
  const double m = mass_of(h_, axis / grid_.dims());
  const double h2 = grid_.spacing() * grid_.spacing();
  const double off = -0.5 / (m * h2);
  const double kin_diag = 1.0 / (m * h2);
  const double share = 1.0 / grid_.axes();
  const auto& v = potential_[spin];
  const Complex half_i(0.0, 0.5 * tau);

  std::vector<Complex> rhs(n), cprime(n), diag(n);
  for (std::size_t l = 0; l < lines; ++l) {
    const std::size_t start = (l / s) * s * n + (l % s);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t p = start + i * s;
      const double hd = kin_diag + share * v[p];
      Complex hpsi = hd * psi[p];
      if (i > 0) hpsi += off * psi[p - s];
      if (i + 1 < n) hpsi += off * psi[p + s];
      rhs[i] = psi[p] - half_i * hpsi;
      diag[i] = 1.0 + half_i * hd;
    }
    const Complex a = half_i * off;  // sub- and super-diagonal
    // Thomas algorithm.
    cprime[0] = a / diag[0];
    rhs[0] /= diag[0];
    for (std::size_t i = 1; i < n; ++i) {
      const Complex denom = diag[i] - a * cprime[i - 1];
      cprime[i] = a / denom;
      rhs[i] = (rhs[i] - a * rhs[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= cprime[i] * rhs[i + 1];
    for (std::size_t i = 0; i < n; ++i) psi[start + i * s] = rhs[i];
  }
}

void Propagator::step(WaveField& psi) const {
  if (!psi.grid.same_shape(grid_)) throw AxisMismatch("wave field grid differs from propagator grid");
  for (std::size_t s = 0; s < grid_.spin_components(); ++s) {
    auto comp = psi.component(s);
    if (h_.stepper == Stepper::split_step_spectral) {
      split_step(comp, s);
    } else {
      const int last = grid_.axes() - 1;
      for (int k = 0; k < last; ++k) cayley_axis(comp, s, k, 0.5 * dt_);
      cayley_axis(comp, s, last, dt_);
      for (int k = last - 1; k >= 0; --k) cayley_axis(comp, s, k, 0.5 * dt_);
    }
  }
}

// ---------------------------------------------------------------- frames

namespace {

fs::path fresh_spill_dir() {
  static std::atomic<unsigned> counter{0};
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  return fs::temp_directory_path() /
         ("bohm-frames-" + std::to_string(stamp) + "-" + std::to_string(counter++));
}

std::string frame_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu.fld", i);
  return buf;
}

}  // namespace

FrameSequence::FrameSequence(FrameStoreOptions options) : options_(std::move(options)) {}

void FrameSequence::push(WaveField frame) {
  times_.push_back(frame.time);
  if (in_memory_.size() < options_.memory_cap && spilled_paths_.empty()) {
    in_memory_.push_back(std::move(frame));
    return;
  }
  if (options_.spill_dir.empty()) options_.spill_dir = fresh_spill_dir();
  const fs::path path = options_.spill_dir / frame_name(times_.size() - 1);
  io::write_field(path, frame);
  spilled_paths_.push_back(path);
}

WaveField FrameSequence::frame(std::size_t i) const {
  if (i >= size()) throw AxisMismatch("frame index out of range");
  if (i < in_memory_.size()) return in_memory_[i];
  return io::read_wave_field(spilled_paths_[i - in_memory_.size()]);
}

void FrameSequence::write(const fs::path& dir) const {
  fs::create_directories(dir);
  nlohmann::json index = nlohmann::json::array();
  for (std::size_t i = 0; i < size(); ++i) {
    const std::string name = frame_name(i);
    io::write_field(dir / name, frame(i));
    index.push_back({{"index", i}, {"time", times_[i]}, {"path", name}});
  }
  std::ofstream(dir / "frames.json") << nlohmann::json{{"frames", index}}.dump(2) << '\n';
}

FrameSequence read_frames(const fs::path& dir, FrameStoreOptions store) {
  std::ifstream in(dir / "frames.json");
  if (!in) throw FormatError("missing frames.json in " + dir.string());
  const auto index = nlohmann::json::parse(in);
  FrameSequence seq(std::move(store));
  for (const auto& entry : index.at("frames"))
    seq.push(io::read_wave_field(dir / entry.at("path").get<std::string>()));
  return seq;
}

FrameSequence evolve(const WaveField& psi, const HamiltonianSpec& h, double t_final,
                     int frame_stride, FrameStoreOptions store) {
  validate(h, psi.grid);
  if (frame_stride < 1) throw InvalidExtent("frame_stride must be >= 1");
  if (exceeds_stability_heuristic(h, psi.grid))
    std::cerr << "warning: time_step " << h.time_step << " exceeds dx^2*m_min/pi\n";

  const double span = t_final - psi.time;
  const double step = std::abs(h.time_step);
  const auto steps = static_cast<long long>(std::llround(std::abs(span) / step));
  const double dt = span >= 0.0 ? step : -step;
  const double t0 = psi.time;

  FrameSequence frames(std::move(store));
  frames.push(psi);
  Propagator prop(psi.grid, h, dt);
  WaveField cur = psi;
  for (long long k = 1; k <= steps; ++k) {
    prop.step(cur);
    cur.time = t0 + static_cast<double>(k) * dt;
    if (k % frame_stride == 0 || k == steps) frames.push(cur);
  }
  return frames;
}

// ---------------------------------------------------------------- eigenstates

double eigen_residual(const HamiltonianSpec& h, const WaveField& psi, double e) {
  DerivativeOperator op(psi.grid);
  const auto hpsi = apply_hamiltonian(h, op, psi.amplitudes);
  double r = 0.0;
  for (std::size_t i = 0; i < hpsi.size(); ++i) r += std::norm(hpsi[i] - e * psi.amplitudes[i]);
  return std::sqrt(r * psi.grid.weight());
}

namespace {

using CVec = std::vector<Complex>;

Complex dot(const CVec& a, const CVec& b) {
  Complex s{};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

// Conjugate gradients for (1 + tau (H - shift)) x = b, which is Hermitian
// positive definite when shift <= min spectrum.
CVec solve_shifted(const HamiltonianSpec& h, const DerivativeOperator& op, double tau, double shift,
                   const CVec& b) {
  auto apply = [&](const CVec& x) {
    CVec hx = apply_hamiltonian(h, op, x);
    for (std::size_t i = 0; i < x.size(); ++i) hx[i] = x[i] + tau * (hx[i] - shift * x[i]);
    return hx;
  };
  CVec x = b;
  CVec r = b;
  const CVec ax = apply(x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= ax[i];
  CVec p = r;
  double rr = dot(r, r).real();
  const double bb = dot(b, b).real();
  for (int it = 0; it < 10000 && rr > 1e-28 * bb; ++it) {
    const CVec ap = apply(p);
    const double alpha = rr / dot(p, ap).real();
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_new = dot(r, r).real();
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
  }
  return x;
}

std::vector<Eigenstate> dense_eigenstates(const HamiltonianSpec& h, const Grid& grid, int count) {
  const std::size_t m = grid.amplitude_count();
  DerivativeOperator op(grid);
  Eigen::MatrixXd mat(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  CVec unit(m, Complex{});
  for (std::size_t j = 0; j < m; ++j) {
    unit[j] = 1.0;
    const auto col = apply_hamiltonian(h, op, unit);
    unit[j] = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i].real();
  }
  mat = 0.5 * (mat + mat.transpose()).eval();
  const auto eig = linalg::symmetric_eigen(std::move(mat));
  std::vector<Eigenstate> out;
  const double scale = 1.0 / std::sqrt(grid.weight());
  for (int k = 0; k < count; ++k) {
    WaveField psi(grid);
    for (std::size_t i = 0; i < m; ++i)
      psi.amplitudes[i] = eig.vectors(static_cast<Eigen::Index>(i), k) * scale;
    out.push_back({eig.values(k), std::move(psi)});
  }
  return out;
}

std::vector<Eigenstate> imaginary_time_eigenstates(const HamiltonianSpec& h, const Grid& grid,
                                                   int count, const EigenOptions& opt) {
  DerivativeOperator op(grid);
  const double w = grid.weight();
  double shift = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < grid.spin_components(); ++s)
    for (double v : potential_values(h, grid, s)) shift = std::min(shift, v);

  std::vector<Eigenstate> found;
  auto project_out = [&](CVec& x) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& e : found) {
        const Complex c = dot(e.state.amplitudes, x) * w;
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= c * e.state.amplitudes[i];
      }
    const double nrm = std::sqrt(dot(x, x).real() * w);
    for (auto& v : x) v /= nrm;
  };

  for (int k = 0; k < count; ++k) {
    CounterRng rng(0x5eed, static_cast<std::uint64_t>(k));
    CVec x(grid.amplitude_count());
    for (auto& v : x) v = rng.uniform() - 0.5;
    project_out(x);
    double e_prev = std::numeric_limits<double>::infinity();
    bool converged = false;
    int stalled = 0;
    for (int it = 0; it < opt.max_iterations; ++it) {
      x = solve_shifted(h, op, opt.imaginary_time_step, shift, x);
      project_out(x);
      const CVec hx = apply_hamiltonian(h, op, x);
      const double e = dot(x, hx).real() * w;
      double r = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) r += std::norm(hx[i] - e * x[i]);
      r = std::sqrt(r * w);
      if (r < opt.residual_tolerance) {
        converged = true;
        WaveField psi(grid);
        psi.amplitudes = x;
        found.push_back({e, std::move(psi)});
        break;
      }
      stalled = std::abs(e - e_prev) < opt.energy_stall * std::max(1.0, std::abs(e)) ? stalled + 1 : 0;
      if (stalled > 200)
        throw ConvergenceFailure("imaginary-time energy stalled at residual " + std::to_string(r));
      e_prev = e;
    }
    if (!converged)
      throw ConvergenceFailure("imaginary-time eigenstate " + std::to_string(k) +
                               " did not converge");
  }
  std::sort(found.begin(), found.end(),
            [](const Eigenstate& a, const Eigenstate& b) { return a.energy < b.energy; });
  return found;
}

}  // namespace

std::vector<Eigenstate> eigenstates(const HamiltonianSpec& h, const Grid& grid, int count,
                                    const EigenOptions& options) {
  validate(h, grid, false);
  if (count < 1 || static_cast<std::size_t>(count) > grid.amplitude_count())
    throw InvalidExtent("eigenstate count out of range");
  if (grid.amplitude_count() <= options.dense_budget) return dense_eigenstates(h, grid, count);
  return imaginary_time_eigenstates(h, grid, count, options);
}

}  // namespace bohm
