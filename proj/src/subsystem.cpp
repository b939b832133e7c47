#include "bohm/subsystem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bohm/error.hpp"
#include "bohm/io.hpp"

namespace bohm {

namespace {

std::vector<int> axes_of(const Grid& g, const std::vector<int>& particles) {
  std::vector<int> out;
  for (int a : particles)
    for (int c = 0; c < g.dims(); ++c) out.push_back(g.axis(a, c));
  return out;
}

int spin_index(const Grid& g, std::size_t collective, int particle) {
  std::size_t div = 1;
  for (int b = g.particles() - 1; b > particle; --b) div *= static_cast<std::size_t>(g.spin_dim(b));
  return static_cast<int>((collective / div) % static_cast<std::size_t>(g.spin_dim(particle)));
}

// Row-major multi-index over a subset of axes (or spins) of a full index.
std::size_t sub_point(const Grid& g, std::size_t p, const std::vector<int>& axes) {
  std::size_t q = 0;
  for (int k : axes) q = q * static_cast<std::size_t>(g.n()) + g.index_along(p, k);
  return q;
}

std::size_t sub_spin(const Grid& g, std::size_t s, const std::vector<int>& particles) {
  std::size_t q = 0;
  for (int a : particles) q = q * static_cast<std::size_t>(g.spin_dim(a)) + static_cast<std::size_t>(spin_index(g, s, a));
  return q;
}

std::size_t spin_count(const Grid& g, const std::vector<int>& particles) {
  std::size_t c = 1;
  for (int a : particles) c *= static_cast<std::size_t>(g.spin_dim(a));
  return c;
}

Grid spinless(const Grid& g) {
  GridSpec s = g.spec();
  s.spin_dims.clear();
  return Grid(s);
}

// Dense matrix of the shared first-derivative operator along one axis.
Eigen::MatrixXd derivative_matrix(const DerivativeOperator& op, int axis) {
  const std::size_t np = op.grid().points();
  Eigen::MatrixXd d(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(np));
  std::vector<double> unit(np, 0.0);
  for (std::size_t c = 0; c < np; ++c) {
    unit[c] = 1.0;
    const auto col = op.first(std::span<const double>(unit), axis);
    for (std::size_t r = 0; r < np; ++r) d(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = col[r];
    unit[c] = 0.0;
  }
  return d;
}

}  // namespace

void validate(const SubsystemPartition& part, const Grid& grid) {
  if (part.a.empty() || part.b.empty()) throw PartitionMismatch("both subsystems must be nonempty");
  std::vector<int> seen(static_cast<std::size_t>(grid.particles()), 0);
  for (const auto* set : {&part.a, &part.b})
    for (int p : *set) {
      if (p < 0 || p >= grid.particles()) throw PartitionMismatch("particle index out of range");
      if (seen[static_cast<std::size_t>(p)]++) throw PartitionMismatch("particle listed twice");
    }
  if (part.a.size() + part.b.size() != static_cast<std::size_t>(grid.particles()))
    throw PartitionMismatch("partition does not cover every particle");
  if (!std::is_sorted(part.a.begin(), part.a.end()) || !std::is_sorted(part.b.begin(), part.b.end()))
    throw PartitionMismatch("partition indices must be ascending");
}

SubsystemPartition complement_partition(const Grid& grid, std::vector<int> a) {
  std::sort(a.begin(), a.end());
  SubsystemPartition part{a, {}};
  for (int p = 0; p < grid.particles(); ++p)
    if (!std::binary_search(a.begin(), a.end(), p)) part.b.push_back(p);
  validate(part, grid);
  return part;
}

Grid subsystem_grid(const Grid& grid, const SubsystemPartition& part) {
  validate(part, grid);
  return grid.restricted(part.a);
}

ScalarField marginal_density(const ScalarField& rho, const SubsystemPartition& part) {
  validate(part, rho.grid);
  return integrate_particles(rho, part.b);
}

VectorField truncated_current_integral(const VectorField& j, const SubsystemPartition& part) {
  validate(part, j.grid);
  const auto a_axes = axes_of(j.grid, part.a);
  VectorField out;
  for (std::size_t i = 0; i < a_axes.size(); ++i) {
    const ScalarField comp(j.grid, j.components[static_cast<std::size_t>(a_axes[i])]);
    ScalarField m = integrate_particles(comp, part.b);
    if (i == 0) out = VectorField(m.grid);
    out.components[i] = std::move(m.values);
  }
  return out;
}

FieldFrame truncated_frame(const FieldFrame& full, const SubsystemPartition& part) {
  return FieldFrame{full.time, marginal_density(full.rho, part),
                    truncated_current_integral(full.currents, part)};
}

ScalarField ReducedDensityMatrix::diagonal() const {
  ScalarField out(spinless(grid));
  const std::size_t np = grid.points();
  for (std::size_t s = 0; s < grid.spin_components(); ++s)
    for (std::size_t p = 0; p < np; ++p) {
      const auto i = static_cast<Eigen::Index>(s * np + p);
      out.values[p] += matrix(i, i).real();
    }
  return out;
}

double ReducedDensityMatrix::purity() const {
  const Eigen::MatrixXcd r = operator_matrix();
  return (r * r).trace().real();
}

ReducedDensityMatrix reduced_density_matrix(const WaveField& psi, const SubsystemPartition& part,
                                            std::size_t dense_budget) {
  const Grid& g = psi.grid;
  validate(part, g);
  const Grid ga = g.restricted(part.a);
  const std::size_t rows = ga.amplitude_count();
  if (rows > dense_budget)
    throw DenseBudgetExceeded("reduced density matrix needs " + std::to_string(rows) +
                              " rows, dense budget is " + std::to_string(dense_budget));
  const auto a_axes = axes_of(g, part.a), b_axes = axes_of(g, part.b);
  const std::size_t np_a = ga.points();
  std::size_t np_b = 1;
  for (std::size_t i = 0; i < b_axes.size(); ++i) np_b *= static_cast<std::size_t>(g.n());
  const std::size_t cols = np_b * spin_count(g, part.b);

  Eigen::MatrixXcd psi_ab(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const std::size_t np = g.points();
  for (std::size_t s = 0; s < g.spin_components(); ++s) {
    const std::size_t sa = sub_spin(g, s, part.a), sb = sub_spin(g, s, part.b);
    for (std::size_t p = 0; p < np; ++p) {
      const auto r = static_cast<Eigen::Index>(sa * np_a + sub_point(g, p, a_axes));
      const auto c = static_cast<Eigen::Index>(sb * np_b + sub_point(g, p, b_axes));
      psi_ab(r, c) = psi.amplitudes[s * np + p];
    }
  }
  const double w_b = std::pow(g.spacing(), static_cast<int>(b_axes.size()));
  ReducedDensityMatrix out{ga, Eigen::MatrixXcd(), psi.time};
  out.matrix.noalias() = w_b * psi_ab * psi_ab.adjoint();
  return out;
}

ReducedDensityMatrix mixed_density_matrix(const std::vector<WaveField>& states,
                                          const std::vector<double>& weights) {
  if (states.empty() || states.size() != weights.size())
    throw AxisMismatch("mixed_density_matrix needs one weight per state");
  const Grid& g = states.front().grid;
  const auto n = static_cast<Eigen::Index>(g.amplitude_count());
  ReducedDensityMatrix out{g, Eigen::MatrixXcd::Zero(n, n), states.front().time};
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (!states[k].grid.same_shape(g)) throw AxisMismatch("states live on different grids");
    const Eigen::Map<const Eigen::VectorXcd> v(states[k].amplitudes.data(), n);
    out.matrix.noalias() += weights[k] * v * v.adjoint();
  }
  return out;
}

VectorField truncated_current_from_rdm(const ReducedDensityMatrix& rdm,
                                       const std::vector<double>& masses,
                                       const DerivativeOperator& op) {
  const Grid& g = rdm.grid;
  if (masses.size() != static_cast<std::size_t>(g.particles()))
    throw InvalidExtent("need one mass per A particle");
  if (!op.grid().same_shape(g)) throw AxisMismatch("derivative operator grid differs from rdm grid");
  const Eigen::MatrixXcd rho = rdm.operator_matrix();
  const auto np = static_cast<Eigen::Index>(g.points());
  const auto spins = static_cast<Eigen::Index>(g.spin_components());
  VectorField out(spinless(g));
  for (int a = 0; a < g.particles(); ++a) {
    for (int c = 0; c < g.dims(); ++c) {
      const int k = g.axis(a, c);
      // velocity operator on grid values: -i/m D, block diagonal in spin
      const Eigen::MatrixXcd v = Complex(0.0, -1.0 / masses[static_cast<std::size_t>(a)]) *
                                 derivative_matrix(op, k).cast<Complex>();
      auto& jk = out.components[static_cast<std::size_t>(k)];
      for (Eigen::Index s = 0; s < spins; ++s) {
        const auto block = rho.block(s * np, s * np, np, np);
        for (Eigen::Index x = 0; x < np; ++x) {
          // diagonal of (v rho + rho v) / 2
          const Complex vr = v.row(x).transpose().cwiseProduct(block.col(x)).sum();
          const Complex rv = block.row(x).transpose().cwiseProduct(v.col(x)).sum();
          jk[static_cast<std::size_t>(x)] += 0.5 * (vr + rv).real();
        }
      }
      for (double& val : jk) val /= g.weight();
    }
  }
  return out;
}

VectorField truncated_current_from_rdm(const ReducedDensityMatrix& rdm,
                                       const std::vector<double>& masses) {
  return truncated_current_from_rdm(rdm, masses, DerivativeOperator(rdm.grid));
}

std::vector<double> subsystem_masses(const HamiltonianSpec& h, const SubsystemPartition& part) {
  std::vector<double> out;
  for (int a : part.a) {
    if (a < 0 || static_cast<std::size_t>(a) >= h.masses.size())
      throw PartitionMismatch("partition particle has no mass");
    out.push_back(h.masses[static_cast<std::size_t>(a)]);
  }
  return out;
}

VelocityField truncated_velocity(const ScalarField& rho_a, const VectorField& j_tr, double eps_rel) {
  return velocity(rho_a, j_tr, eps_rel);
}

ContinuityResidual truncated_continuity_residual(const FieldFrame& before, const FieldFrame& middle,
                                                 const FieldFrame& after) {
  return continuity_residual(before, middle, after, DerivativeOperator(middle.rho.grid));
}

VectorField conditional_velocity(const WaveField& psi, const HamiltonianSpec& h,
                                 const SubsystemPartition& part,
                                 const std::vector<int>& b_indices, double eps_rel) {
  const Grid& g = psi.grid;
  validate(part, g);
  const auto a_axes = axes_of(g, part.a), b_axes = axes_of(g, part.b);
  if (b_indices.size() != b_axes.size()) throw AxisMismatch("need one index per B axis");
  const auto v = velocity(density(psi), current(psi, h), eps_rel).velocity;
  VectorField out(spinless(g.restricted(part.a)));
  for (std::size_t p = 0; p < g.points(); ++p) {
    bool match = true;
    for (std::size_t i = 0; i < b_axes.size() && match; ++i)
      match = g.index_along(p, b_axes[i]) == static_cast<std::size_t>(b_indices[i]);
    if (!match) continue;
    const std::size_t q = sub_point(g, p, a_axes);
    for (std::size_t i = 0; i < a_axes.size(); ++i)
      out.components[i][q] = v.components[static_cast<std::size_t>(a_axes[i])][p];
  }
  return out;
}

void write_rdm(const std::filesystem::path& path, const ReducedDensityMatrix& rdm) {
  nlohmann::json h = io::grid_header(rdm.grid);
  h["format"] = "rdm";
  h["kind"] = "rdm";
  h["dtype"] = "complex128";
  h["layout"] = "row-major";
  h["rows"] = rdm.matrix.rows();
  h["time"] = rdm.time;
  const Eigen::Index n = rdm.matrix.rows();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(2 * n * n));
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) {
      data.push_back(rdm.matrix(r, c).real());
      data.push_back(rdm.matrix(r, c).imag());
    }
  io::write_container(path, h, data);
}

ReducedDensityMatrix read_rdm(const std::filesystem::path& path) {
  io::Container c = io::read_container(path);
  if (c.header.value("kind", "") != "rdm") throw FormatError(path.string() + " is not an rdm file");
  const auto n = c.header.at("rows").get<Eigen::Index>();
  if (c.payload.size() != static_cast<std::size_t>(2 * n * n))
    throw FormatError(path.string() + ": payload size does not match header");
  ReducedDensityMatrix out{io::grid_from_header(c.header), Eigen::MatrixXcd(n, n),
                           c.header.at("time").get<double>()};
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index col = 0; col < n; ++col, i += 2)
      out.matrix(r, col) = Complex(c.payload[i], c.payload[i + 1]);
  return out;
}

}  // namespace bohm
