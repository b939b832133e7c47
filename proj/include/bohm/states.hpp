#pragma once

// Analytic initial states used by tests and shipped experiments.

#include <vector>

#include "bohm/lattice.hpp"

namespace bohm::states {

/// One axis of a Gaussian packet: |psi|^2 has mean `center`, standard
/// deviation `sigma`, and the packet carries mean momentum `momentum`.
struct Packet1D {
  double center = 0.0;
  double sigma = 1.0;
  double momentum = 0.0;
};

/// Product of 1D packets, one per axis; spinless component 0 only.
WaveField gaussian_packet(const Grid& grid, const std::vector<Packet1D>& axes);

/// Plane wave exp(i k x) along axis 0, normalized over the box.
WaveField plane_wave(const Grid& grid, double k);

/// Box eigenfunction sqrt(2/L) sin(n pi (x - lo) / L) on a 1D dirichlet grid.
WaveField box_eigenstate(const Grid& grid, int level);

/// Harmonic-oscillator eigenfunction (Hermite function) of level n, mass m,
/// frequency omega, evaluated on a 1D grid.
std::vector<double> hermite_function(const Grid& grid, int level, double mass, double omega,
                                     double center = 0.0);

/// Coherent state: ground state of the oscillator displaced to x0 with
/// momentum p0.
WaveField coherent_state(const Grid& grid, double mass, double omega, double x0, double p0);

/// Two-particle 1D Gaussian with different widths along the centre-of-mass
/// and relative coordinates, times exp(i (kappa x0 x1 + k0 x0)).
struct EntangledGaussian {
  double sigma_sum = 1.0;   // width along (x0 + x1)/sqrt2
  double sigma_diff = 0.5;  // width along (x0 - x1)/sqrt2
  double kappa = 0.0;
  double k0 = 0.0;
  double center0 = 0.0;
  double center1 = 0.0;
};
WaveField entangled_gaussian(const Grid& grid, const EntangledGaussian& p);

}  // namespace bohm::states
