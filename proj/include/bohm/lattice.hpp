#pragma once

// Discretized N-particle configuration space: grids, complex wave fields,
// real scalar/vector fields, midpoint quadrature and the shared derivative
// operator used by every physics module.
//
// Layout conventions
//   * axis k = particle * dims_per_particle + component
//   * positions are row-major with axis 0 slowest
//   * wave field amplitudes are spin-major: index = s * points + p, where the
//     collective spin index s is row-major over particles (particle 0 slowest)

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bohm {

using Complex = std::complex<double>;

enum class Boundary { periodic, dirichlet };

const char* to_string(Boundary b);
Boundary boundary_from_string(const std::string& name);

struct GridSpec {
  int particle_count = 1;
  int dims_per_particle = 1;
  int points_per_axis = 64;
  double lo = 0.0;
  double hi = 1.0;
  Boundary boundary = Boundary::periodic;
  std::vector<int> spin_dims;  // empty means spinless for every particle
  std::size_t memory_budget = std::size_t{2} << 30;
};

/// Number of field-sized complex arrays assumed live at once when checking a
/// grid against its memory budget (state, FFT scratch, density, currents...).
inline constexpr std::size_t kWorkingArrays = 8;

/// Bytes a grid is expected to need: 16 * points * spin * kWorkingArrays.
double grid_footprint_bytes(const GridSpec& spec);

class Grid {
 public:
  Grid() = default;
  explicit Grid(GridSpec spec);

  const GridSpec& spec() const { return spec_; }
  int particles() const { return spec_.particle_count; }
  int dims() const { return spec_.dims_per_particle; }
  int axes() const { return spec_.particle_count * spec_.dims_per_particle; }
  int n() const { return spec_.points_per_axis; }
  Boundary boundary() const { return spec_.boundary; }
  bool periodic() const { return spec_.boundary == Boundary::periodic; }

  std::size_t points() const { return points_; }
  std::size_t spin_components() const { return spin_components_; }
  int spin_dim(int particle) const { return spin_dims_[static_cast<std::size_t>(particle)]; }
  std::size_t amplitude_count() const { return points_ * spin_components_; }

  double spacing() const { return spacing_; }
  /// Uniform quadrature weight dx^axes.
  double weight() const { return weight_; }
  double extent() const { return spec_.hi - spec_.lo; }

  /// Coordinates shared by every axis.
  std::span<const double> coordinates() const { return coordinates_; }
  /// Angular wavenumbers in FFT order (periodic grids only; empty otherwise).
  std::span<const double> wavenumbers() const { return wavenumbers_; }

  int axis(int particle, int component) const { return particle * dims() + component; }
  std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }
  std::size_t index_along(std::size_t point, int axis) const {
    return (point / stride(axis)) % static_cast<std::size_t>(n());
  }
  double coordinate(std::size_t point, int axis) const {
    return coordinates_[index_along(point, axis)];
  }

  /// Grid for a subset of the particles, same axis conventions.
  Grid restricted(std::span<const int> particles) const;

  bool same_shape(const Grid& other) const;

 private:
  GridSpec spec_;
  std::vector<int> spin_dims_;
  std::size_t points_ = 0;
  std::size_t spin_components_ = 1;
  double spacing_ = 0.0;
  double weight_ = 0.0;
  std::vector<double> coordinates_;
  std::vector<double> wavenumbers_;
  std::vector<std::size_t> strides_;
};

Grid make_grid(const GridSpec& spec);

struct WaveField {
  Grid grid;
  std::vector<Complex> amplitudes;
  double time = 0.0;

  WaveField() = default;
  explicit WaveField(Grid g, double t = 0.0);

  std::span<Complex> component(std::size_t spin) {
    return {amplitudes.data() + spin * grid.points(), grid.points()};
  }
  std::span<const Complex> component(std::size_t spin) const {
    return {amplitudes.data() + spin * grid.points(), grid.points()};
  }
  /// Sum over spin of the quadrature of |psi_s|^2.
  double norm_squared() const;
  void normalize();
};

struct ScalarField {
  Grid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(Grid g);
  ScalarField(Grid g, std::vector<double> v);
};

/// One real array per axis of the grid.
struct VectorField {
  Grid grid;
  std::vector<std::vector<double>> components;

  VectorField() = default;
  explicit VectorField(Grid g);
  double max_abs() const;
};

/// Midpoint quadrature over every axis.
double integrate(const ScalarField& f);
/// Midpoint quadrature over the listed axes; the result lives on the
/// remaining axes.
ScalarField integrate_axes(const ScalarField& f, std::span<const int> axes);
/// Quadrature over the axes of the listed particles.
ScalarField integrate_particles(const ScalarField& f, std::span<const int> particles);

/// L2 norm with quadrature weight.
double l2_norm(const Grid& grid, std::span<const double> values);

/// First and second derivative along one axis. Periodic grids use the
/// spectral derivative (Nyquist mode dropped for the first derivative),
/// dirichlet grids use second-order central differences with zero boundary
/// values. All modules share one instance per grid so discrete identities
/// between routes hold to round-off.
class DerivativeOperator {
 public:
  explicit DerivativeOperator(Grid grid);

  const Grid& grid() const { return grid_; }

  std::vector<Complex> first(std::span<const Complex> f, int axis) const;
  std::vector<double> first(std::span<const double> f, int axis) const;
  std::vector<Complex> second(std::span<const Complex> f, int axis) const;

 private:
  Grid grid_;
};

/// In-place 1D FFT along one axis of a position array (single spin
/// component). Inverse includes the 1/n factor.
void fft_axis(std::span<Complex> data, const Grid& grid, int axis, bool forward);

/// Gradient of a field along (particle, component).
std::vector<Complex> gradient(const DerivativeOperator& op, const WaveField& psi,
                              std::size_t spin, int particle, int component);
std::vector<double> gradient(const DerivativeOperator& op, const ScalarField& f,
                             int particle, int component);

}  // namespace bohm
