#include "bohm/states.hpp"

#include <cmath>
#include <numbers>

#include "bohm/error.hpp"

namespace bohm::states {

using std::numbers::pi;

WaveField gaussian_packet(const Grid& grid, const std::vector<Packet1D>& axes) {
  if (axes.size() != static_cast<std::size_t>(grid.axes()))
    throw AxisMismatch("gaussian_packet needs one packet per axis");
  WaveField psi(grid);
  for (std::size_t p = 0; p < grid.points(); ++p) {
    Complex v = 1.0;
    for (int k = 0; k < grid.axes(); ++k) {
      const auto& a = axes[static_cast<std::size_t>(k)];
      const double x = grid.coordinate(p, k) - a.center;
      v *= std::pow(2.0 * pi * a.sigma * a.sigma, -0.25) *
           std::exp(Complex(-x * x / (4.0 * a.sigma * a.sigma), a.momentum * grid.coordinate(p, k)));
    }
    psi.amplitudes[p] = v;
  }
  psi.normalize();
  return psi;
}

WaveField plane_wave(const Grid& grid, double k) {
  WaveField psi(grid);
  for (std::size_t p = 0; p < grid.points(); ++p) psi.amplitudes[p] = std::polar(1.0, k * grid.coordinate(p, 0));
  psi.normalize();
  return psi;
}

WaveField box_eigenstate(const Grid& grid, int level) {
  if (grid.axes() != 1 || grid.periodic()) throw AxisMismatch("box_eigenstate needs a 1D dirichlet grid");
  WaveField psi(grid);
  const double len = grid.extent();
  for (std::size_t p = 0; p < grid.points(); ++p)
    psi.amplitudes[p] = std::sqrt(2.0 / len) * std::sin(level * pi * (grid.coordinates()[p] - grid.spec().lo) / len);
  psi.normalize();
  return psi;
}

std::vector<double> hermite_function(const Grid& grid, int level, double mass, double omega,
                                     double center) {
  const double a = std::sqrt(mass * omega);
  std::vector<double> out(grid.n());
  for (int i = 0; i < grid.n(); ++i) {
    const double xi = a * (grid.coordinates()[static_cast<std::size_t>(i)] - center);
    // Normalized Hermite functions by the stable three-term recurrence.
    double h0 = std::pow(pi, -0.25) * std::exp(-0.5 * xi * xi);
    double h1 = std::sqrt(2.0) * xi * h0;
    double h = level == 0 ? h0 : h1;
    for (int n = 2; n <= level; ++n) {
      h = std::sqrt(2.0 / n) * xi * h1 - std::sqrt((n - 1.0) / n) * h0;
      h0 = h1;
      h1 = h;
    }
    out[static_cast<std::size_t>(i)] = std::sqrt(a) * h;
  }
  return out;
}

WaveField coherent_state(const Grid& grid, double mass, double omega, double x0, double p0) {
  if (grid.axes() != 1) throw AxisMismatch("coherent_state needs a 1D grid");
  const double sigma = std::sqrt(1.0 / (2.0 * mass * omega));
  return gaussian_packet(grid, {{x0, sigma, p0}});
}

WaveField entangled_gaussian(const Grid& grid, const EntangledGaussian& e) {
  if (grid.particles() != 2 || grid.dims() != 1)
    throw AxisMismatch("entangled_gaussian needs two particles in 1D");
  WaveField psi(grid);
  for (std::size_t p = 0; p < grid.points(); ++p) {
    const double x0 = grid.coordinate(p, 0) - e.center0;
    const double x1 = grid.coordinate(p, 1) - e.center1;
    const double u = (x0 + x1) / std::sqrt(2.0);
    const double w = (x0 - x1) / std::sqrt(2.0);
    const double amp = std::exp(-u * u / (4 * e.sigma_sum * e.sigma_sum) -
                                w * w / (4 * e.sigma_diff * e.sigma_diff));
    psi.amplitudes[p] = std::polar(amp, e.kappa * x0 * x1 + e.k0 * grid.coordinate(p, 0));
  }
  psi.normalize();
  return psi;
}

}  // namespace bohm::states
