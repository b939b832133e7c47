#pragma once

#include <complex>

#include "bohm/lattice.hpp"
#include "bohm/schrodinger.hpp"

namespace bohm::testing {

inline Grid grid1d(int n, double lo, double hi, Boundary b, std::vector<int> spins = {}) {
  GridSpec s;
  s.points_per_axis = n;
  s.lo = lo;
  s.hi = hi;
  s.boundary = b;
  s.spin_dims = std::move(spins);
  return make_grid(s);
}

inline Grid grid_particles(int particles, int n, double lo, double hi, Boundary b) {
  GridSpec s;
  s.particle_count = particles;
  s.points_per_axis = n;
  s.lo = lo;
  s.hi = hi;
  s.boundary = b;
  return make_grid(s);
}

inline HamiltonianSpec hamiltonian(int particles, Stepper stepper, double dt = 1e-3) {
  HamiltonianSpec h;
  h.masses.assign(static_cast<std::size_t>(particles), 1.0);
  h.time_step = dt;
  h.stepper = stepper;
  return h;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace bohm::testing
