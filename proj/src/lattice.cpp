#include "bohm/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unsupported/Eigen/FFT>

#include "bohm/error.hpp"

namespace bohm {

const char* to_string(Boundary b) { return b == Boundary::periodic ? "periodic" : "dirichlet"; }

Boundary boundary_from_string(const std::string& name) {
  if (name == "periodic") return Boundary::periodic;
  if (name == "dirichlet") return Boundary::dirichlet;
  throw InvalidExtent("unknown boundary '" + name + "'");
}

double grid_footprint_bytes(const GridSpec& spec) {
  double spins = 1.0;
  for (int s : spec.spin_dims) spins *= s;
  const double pts = std::pow(static_cast<double>(spec.points_per_axis),
                              spec.particle_count * spec.dims_per_particle);
  return 16.0 * pts * spins * static_cast<double>(kWorkingArrays);
}

Grid::Grid(GridSpec spec) : spec_(std::move(spec)) {
  if (spec_.particle_count < 1 || spec_.particle_count * spec_.dims_per_particle > 6)
    throw InvalidExtent("particle_count must be >= 1 with at most 6 axes");
  if (spec_.dims_per_particle < 1 || spec_.dims_per_particle > 2)
    throw InvalidExtent("dims_per_particle must be 1 or 2");
  if (spec_.points_per_axis < 8) throw InvalidExtent("points_per_axis must be >= 8");
  if (!(spec_.hi > spec_.lo) || !std::isfinite(spec_.lo) || !std::isfinite(spec_.hi))
    throw InvalidExtent("axis extent requires hi > lo");
  spin_dims_ = spec_.spin_dims;
  if (spin_dims_.empty()) spin_dims_.assign(static_cast<std::size_t>(spec_.particle_count), 1);
  if (spin_dims_.size() != static_cast<std::size_t>(spec_.particle_count))
    throw InvalidExtent("spin_dims needs one entry per particle");
  for (int s : spin_dims_)
    if (s != 1 && s != 2) throw InvalidExtent("spin_dims entries must be 1 or 2");
  spec_.spin_dims = spin_dims_;

  if (grid_footprint_bytes(spec_) > static_cast<double>(spec_.memory_budget))
    throw MemoryBudgetExceeded("grid needs " + std::to_string(grid_footprint_bytes(spec_)) +
                               " bytes, budget is " + std::to_string(spec_.memory_budget));

  const int n = spec_.points_per_axis;
  const int d = axes();
  points_ = 1;
  for (int k = 0; k < d; ++k) points_ *= static_cast<std::size_t>(n);
  spin_components_ = 1;
  for (int s : spin_dims_) spin_components_ *= static_cast<std::size_t>(s);

  strides_.assign(static_cast<std::size_t>(d), 1);
  for (int k = d - 2; k >= 0; --k)
    strides_[static_cast<std::size_t>(k)] = strides_[static_cast<std::size_t>(k + 1)] * static_cast<std::size_t>(n);

  const double len = spec_.hi - spec_.lo;
  coordinates_.resize(static_cast<std::size_t>(n));
  if (periodic()) {
    spacing_ = len / n;
    for (int i = 0; i < n; ++i) coordinates_[static_cast<std::size_t>(i)] = spec_.lo + i * spacing_;
    wavenumbers_.resize(static_cast<std::size_t>(n));
    const double dk = 2.0 * std::numbers::pi / len;
    for (int i = 0; i < n; ++i)
      wavenumbers_[static_cast<std::size_t>(i)] = dk * (i < (n + 1) / 2 ? i : i - n);
  } else {
    spacing_ = len / (n + 1);
    for (int i = 0; i < n; ++i)
      coordinates_[static_cast<std::size_t>(i)] = spec_.lo + (i + 1) * spacing_;
  }
  if (!(spacing_ > 0.0)) throw InvalidExtent("grid spacing must be positive");
  weight_ = std::pow(spacing_, d);
}

Grid Grid::restricted(std::span<const int> particles) const {
  GridSpec sub = spec_;
  sub.particle_count = static_cast<int>(particles.size());
  sub.spin_dims.clear();
  for (int a : particles) {
    if (a < 0 || a >= spec_.particle_count) throw AxisMismatch("particle index out of range");
    sub.spin_dims.push_back(spin_dims_[static_cast<std::size_t>(a)]);
  }
  return Grid(sub);
}

bool Grid::same_shape(const Grid& other) const {
  return spec_.particle_count == other.spec_.particle_count &&
         spec_.dims_per_particle == other.spec_.dims_per_particle &&
         spec_.points_per_axis == other.spec_.points_per_axis && spec_.lo == other.spec_.lo &&
         spec_.hi == other.spec_.hi && spec_.boundary == other.spec_.boundary;
}

Grid make_grid(const GridSpec& spec) { return Grid(spec); }

WaveField::WaveField(Grid g, double t) : grid(std::move(g)), time(t) {
  amplitudes.assign(grid.amplitude_count(), Complex{});
}

double WaveField::norm_squared() const {
  double s = 0.0;
  for (const Complex& a : amplitudes) s += std::norm(a);
  return s * grid.weight();
}

void WaveField::normalize() {
  const double nrm = std::sqrt(norm_squared());
  if (!(nrm > 0.0)) throw InvalidExtent("cannot normalize a zero wave field");
  for (Complex& a : amplitudes) a /= nrm;
}

ScalarField::ScalarField(Grid g) : grid(std::move(g)) { values.assign(grid.points(), 0.0); }

ScalarField::ScalarField(Grid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.points()) throw AxisMismatch("scalar field size does not match grid");
}

VectorField::VectorField(Grid g) : grid(std::move(g)) {
  components.assign(static_cast<std::size_t>(grid.axes()), std::vector<double>(grid.points(), 0.0));
}

double VectorField::max_abs() const {
  double m = 0.0;
  for (const auto& c : components)
    for (double v : c) m = std::max(m, std::abs(v));
  return m;
}

double integrate(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * f.grid.weight();
}

ScalarField integrate_axes(const ScalarField& f, std::span<const int> axes) {
  const Grid& g = f.grid;
  std::vector<bool> drop(static_cast<std::size_t>(g.axes()), false);
  for (int k : axes) {
    if (k < 0 || k >= g.axes()) throw AxisMismatch("axis " + std::to_string(k) + " out of range");
    if (drop[static_cast<std::size_t>(k)]) throw AxisMismatch("axis listed twice");
    drop[static_cast<std::size_t>(k)] = true;
  }
  std::vector<int> keep;
  for (int k = 0; k < g.axes(); ++k)
    if (!drop[static_cast<std::size_t>(k)]) keep.push_back(k);
  if (keep.empty()) throw AxisMismatch("integrating over every axis yields a scalar; use integrate()");
  if (keep.size() == static_cast<std::size_t>(g.axes())) throw AxisMismatch("no axes to integrate");

  GridSpec rs = g.spec();
  const int r = static_cast<int>(keep.size());
  if (r % g.dims() == 0) {
    rs.particle_count = r / g.dims();
  } else {
    rs.particle_count = r;
    rs.dims_per_particle = 1;
  }
  rs.spin_dims.assign(static_cast<std::size_t>(rs.particle_count), 1);
  ScalarField out{Grid(rs)};

  const double w = std::pow(g.spacing(), static_cast<int>(axes.size()));
  const std::size_t n = static_cast<std::size_t>(g.n());
  for (std::size_t p = 0; p < g.points(); ++p) {
    std::size_t q = 0;
    for (int k : keep) q = q * n + g.index_along(p, k);
    out.values[q] += f.values[p];
  }
  for (double& v : out.values) v *= w;
  return out;
}

ScalarField integrate_particles(const ScalarField& f, std::span<const int> particles) {
  std::vector<int> axes;
  for (int a : particles) {
    if (a < 0 || a >= f.grid.particles()) throw AxisMismatch("particle index out of range");
    for (int c = 0; c < f.grid.dims(); ++c) axes.push_back(f.grid.axis(a, c));
  }
  return integrate_axes(f, axes);
}

double l2_norm(const Grid& grid, std::span<const double> values) {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s * grid.weight());
}

namespace {

template <typename Fn>
void for_each_line(const Grid& grid, int axis, Fn&& fn) {
  const std::size_t n = static_cast<std::size_t>(grid.n());
  const std::size_t s = grid.stride(axis);
  const std::size_t lines = grid.points() / n;
  for (std::size_t l = 0; l < lines; ++l) {
    const std::size_t outer = l / s;
    const std::size_t inner = l % s;
    fn(outer * s * n + inner, s);
  }
}

void check_axis(const Grid& grid, int axis, std::size_t size) {
  if (axis < 0 || axis >= grid.axes()) throw AxisMismatch("axis " + std::to_string(axis) + " out of range");
  if (size != grid.points()) throw AxisMismatch("field size does not match grid");
}

}  // namespace

void fft_axis(std::span<Complex> data, const Grid& grid, int axis, bool forward) {
  check_axis(grid, axis, data.size());
  const std::size_t n = static_cast<std::size_t>(grid.n());
  Eigen::FFT<double> fft;
  std::vector<Complex> line(n), out(n);
  for_each_line(grid, axis, [&](std::size_t start, std::size_t s) {
    for (std::size_t i = 0; i < n; ++i) line[i] = data[start + i * s];
    if (forward)
      fft.fwd(out, line);
    else
      fft.inv(out, line);
    for (std::size_t i = 0; i < n; ++i) data[start + i * s] = out[i];
  });
}

DerivativeOperator::DerivativeOperator(Grid grid) : grid_(std::move(grid)) {}

std::vector<Complex> DerivativeOperator::first(std::span<const Complex> f, int axis) const {
  check_axis(grid_, axis, f.size());
  const std::size_t n = static_cast<std::size_t>(grid_.n());
  std::vector<Complex> out(f.size());
  if (grid_.periodic()) {
    auto k = grid_.wavenumbers();
    const bool even = n % 2 == 0;
    Eigen::FFT<double> fft;
    std::vector<Complex> line(n), spec(n);
    for_each_line(grid_, axis, [&](std::size_t start, std::size_t s) {
      for (std::size_t i = 0; i < n; ++i) line[i] = f[start + i * s];
      fft.fwd(spec, line);
      for (std::size_t i = 0; i < n; ++i) spec[i] *= Complex(0.0, k[i]);
      if (even) spec[n / 2] = 0.0;
      fft.inv(line, spec);
      for (std::size_t i = 0; i < n; ++i) out[start + i * s] = line[i];
    });
  } else {
    const double inv2h = 0.5 / grid_.spacing();
    for_each_line(grid_, axis, [&](std::size_t start, std::size_t s) {
      for (std::size_t i = 0; i < n; ++i) {
        const Complex left = i > 0 ? f[start + (i - 1) * s] : Complex{};
        const Complex right = i + 1 < n ? f[start + (i + 1) * s] : Complex{};
        out[start + i * s] = (right - left) * inv2h;
      }
    });
  }
  return out;
}

std::vector<double> DerivativeOperator::first(std::span<const double> f, int axis) const {
  std::vector<Complex> c(f.begin(), f.end());
  const auto d = first(std::span<const Complex>(c), axis);
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i].real();
  return out;
}

std::vector<Complex> DerivativeOperator::second(std::span<const Complex> f, int axis) const {
  check_axis(grid_, axis, f.size());
  const std::size_t n = static_cast<std::size_t>(grid_.n());
  std::vector<Complex> out(f.size());
  if (grid_.periodic()) {
    auto k = grid_.wavenumbers();
    Eigen::FFT<double> fft;
    std::vector<Complex> line(n), spec(n);
    for_each_line(grid_, axis, [&](std::size_t start, std::size_t s) {
      for (std::size_t i = 0; i < n; ++i) line[i] = f[start + i * s];
      fft.fwd(spec, line);
      for (std::size_t i = 0; i < n; ++i) spec[i] *= -k[i] * k[i];
      fft.inv(line, spec);
      for (std::size_t i = 0; i < n; ++i) out[start + i * s] = line[i];
    });
  } else {
    const double inv_h2 = 1.0 / (grid_.spacing() * grid_.spacing());
    for_each_line(grid_, axis, [&](std::size_t start, std::size_t s) {
      for (std::size_t i = 0; i < n; ++i) {
        const Complex left = i > 0 ? f[start + (i - 1) * s] : Complex{};
        const Complex right = i + 1 < n ? f[start + (i + 1) * s] : Complex{};
        out[start + i * s] = (right - 2.0 * f[start + i * s] + left) * inv_h2;
      }
    });
  }
  return out;
}

std::vector<Complex> gradient(const DerivativeOperator& op, const WaveField& psi, std::size_t spin,
                              int particle, int component) {
  if (particle < 0 || particle >= psi.grid.particles() || component < 0 ||
      component >= psi.grid.dims())
    throw AxisMismatch("invalid particle/component");
  if (spin >= psi.grid.spin_components()) throw AxisMismatch("spin index out of range");
  return op.first(psi.component(spin), psi.grid.axis(particle, component));
}

std::vector<double> gradient(const DerivativeOperator& op, const ScalarField& f, int particle,
                             int component) {
  if (particle < 0 || particle >= f.grid.particles() || component < 0 || component >= f.grid.dims())
    throw AxisMismatch("invalid particle/component");
  return op.first(std::span<const double>(f.values), f.grid.axis(particle, component));
}

}  // namespace bohm
