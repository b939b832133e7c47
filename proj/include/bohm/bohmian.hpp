#pragma once

// Bohmian trajectory ensembles: sampling initial configurations from a
// density, RK4 integration through interpolated velocity frames (full or
// truncated), and an equivariance distance between an ensemble and a density.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bohm/currents.hpp"
#include "bohm/schrodinger.hpp"
#include "bohm/subsystem.hpp"

namespace bohm {

enum class Flavor { full, truncated };
const char* to_string(Flavor f);

/// Velocity fields at increasing times on one grid.
struct VelocityFrames {
  Grid grid;
  std::vector<double> times;
  std::vector<VectorField> fields;
  std::vector<std::vector<char>> floored;  // per frame: 1 where rho hit the floor
};

VelocityFrames full_velocity_frames(const FrameSequence& frames, const HamiltonianSpec& h,
                                    double eps_rel = 1e-12);
VelocityFrames truncated_velocity_frames(const FrameSequence& frames, const HamiltonianSpec& h,
                                         const SubsystemPartition& part, double eps_rel = 1e-12);
/// The same field at every listed time (zero field for a negative control).
VelocityFrames constant_velocity_frames(const VectorField& v, std::vector<double> times);

/// Points in configuration space, `coords` values per point.
struct Configurations {
  int coords = 1;
  std::vector<double> values;

  std::size_t count() const { return coords > 0 ? values.size() / static_cast<std::size_t>(coords) : 0; }
  std::span<const double> at(std::size_t i) const {
    return {values.data() + i * static_cast<std::size_t>(coords), static_cast<std::size_t>(coords)};
  }
};

/// Categorical draw over grid cells weighted by rho * weight, then uniform
/// jitter inside the cell. Sample i uses its own random stream.
Configurations sample_initial(const ScalarField& rho, std::size_t count, std::uint64_t seed);

/// Keeps only the listed coordinates of every point.
Configurations project(const Configurations& x, const std::vector<int>& coords);

struct TrajectoryEnsemble {
  Flavor flavor = Flavor::full;
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::size_t samples = 0;
  int coords = 1;
  std::vector<double> paths;  // [sample][time][coord]
  std::size_t reflections = 0;      // dirichlet wall reflections applied
  std::size_t near_node_samples = 0;  // samples that visited a floored point

  double at(std::size_t sample, std::size_t time, int coord) const {
    return paths[(sample * times.size() + time) * static_cast<std::size_t>(coords) +
                 static_cast<std::size_t>(coord)];
  }
  Configurations positions(std::size_t time) const;
};

struct IntegrationOptions {
  int substeps = 4;  // RK4 steps per frame interval
};

/// Fixed-step RK4 through the frames, positions recorded at every frame
/// time. Periodic axes wrap; dirichlet exits shallower than one spacing are
/// reflected, deeper ones raise TrajectoryEscapedDomain.
TrajectoryEnsemble integrate_trajectories(const VelocityFrames& frames, const Configurations& x0,
                                          Flavor flavor, std::uint64_t seed,
                                          const IntegrationOptions& options = {});

/// Multilinear-in-space, linear-in-time velocity at (t, x).
std::vector<double> interpolate_velocity(const VelocityFrames& frames, double t,
                                         std::span<const double> x);

/// Total-variation distance between the binned positions and rho integrated
/// over the same bins (bins per axis over the grid extent).
double equivariance_distance(const Configurations& x, const ScalarField& rho, int bins);
double equivariance_distance(const TrajectoryEnsemble& ens, std::size_t time_index,
                             const ScalarField& rho, int bins);

/// Pairs (i, j) with x_i(0) < x_j(0) but x_i(t) > x_j(t), any t (1D only).
std::size_t order_inversions(const TrajectoryEnsemble& ens);

/// `.trj` container: header {flavor, seed, times, samples, coords} plus paths.
void write_trajectories(const std::filesystem::path& path, const TrajectoryEnsemble& ens);
TrajectoryEnsemble read_trajectories(const std::filesystem::path& path);

/// CSV polylines: sample,t,x0[,x1...] for the first `max_samples` samples.
void write_polylines_csv(const std::filesystem::path& path, const TrajectoryEnsemble& ens,
                         std::size_t max_samples);

}  // namespace bohm
