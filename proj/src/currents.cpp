#include "bohm/currents.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bohm/error.hpp"

namespace bohm {

ScalarField density(const WaveField& psi) {
  ScalarField rho(psi.grid);
  const std::size_t np = psi.grid.points();
  for (std::size_t s = 0; s < psi.grid.spin_components(); ++s) {
    auto c = psi.component(s);
    for (std::size_t p = 0; p < np; ++p) rho.values[p] += std::norm(c[p]);
  }
  return rho;
}

VectorField current(const WaveField& psi, const HamiltonianSpec& h, const DerivativeOperator& op) {
  const Grid& g = psi.grid;
  if (h.masses.size() != static_cast<std::size_t>(g.particles()))
    throw InvalidExtent("hamiltonian.masses needs one entry per particle");
  if (!op.grid().same_shape(g)) throw AxisMismatch("derivative operator grid differs from field grid");
  VectorField j(g);
  const std::size_t np = g.points();
  for (std::size_t s = 0; s < g.spin_components(); ++s) {
    auto c = psi.component(s);
    for (int a = 0; a < g.particles(); ++a) {
      const double inv_m = 1.0 / h.masses[static_cast<std::size_t>(a)];
      for (int comp = 0; comp < g.dims(); ++comp) {
        const int k = g.axis(a, comp);
        const auto d = op.first(c, k);
        auto& out = j.components[static_cast<std::size_t>(k)];
        for (std::size_t p = 0; p < np; ++p) out[p] += inv_m * (std::conj(c[p]) * d[p]).imag();
      }
    }
  }
  return j;
}

VectorField current(const WaveField& psi, const HamiltonianSpec& h) {
  return current(psi, h, DerivativeOperator(psi.grid));
}

FieldFrame field_frame(const WaveField& psi, const HamiltonianSpec& h, const DerivativeOperator& op) {
  return FieldFrame{psi.time, density(psi), current(psi, h, op)};
}

VelocityField velocity(const ScalarField& rho, const VectorField& j, double eps_rel) {
  if (!(eps_rel > 0.0 && eps_rel <= 1e-3)) throw InvalidExtent("eps_rel must lie in (0, 1e-3]");
  if (rho.values.size() != j.grid.points() || j.components.size() != static_cast<std::size_t>(j.grid.axes()))
    throw AxisMismatch("density and current live on different grids");
  const double peak = *std::max_element(rho.values.begin(), rho.values.end());
  const double floor = eps_rel * peak;
  VelocityField out{VectorField(j.grid), 0};
  for (std::size_t p = 0; p < rho.values.size(); ++p) {
    double r = rho.values[p];
    if (r < floor) {
      r = floor;
      ++out.floored;
    }
    if (!(r > 0.0)) continue;  // rho identically zero: leave v = 0
    for (std::size_t k = 0; k < j.components.size(); ++k)
      out.velocity.components[k][p] = j.components[k][p] / r;
  }
  return out;
}

VelocityField velocity(const FieldFrame& frame, double eps_rel) {
  return velocity(frame.rho, frame.currents, eps_rel);
}

namespace {

void check_spacing(double t0, double t1, double t2) {
  const double d1 = t1 - t0, d2 = t2 - t1;
  if (!(d1 != 0.0) || std::abs(d1 - d2) > 1e-9 * std::max(std::abs(d1), std::abs(d2)))
    throw NonuniformFrames("frames are not uniformly spaced in time");
}

}  // namespace

ScalarField continuity_residual_field(const FieldFrame& before, const FieldFrame& middle,
                                      const FieldFrame& after, const DerivativeOperator& op) {
  check_spacing(before.time, middle.time, after.time);
  const Grid& g = middle.rho.grid;
  if (!op.grid().same_shape(g)) throw AxisMismatch("derivative operator grid differs from frame grid");
  const double inv2dt = 1.0 / (after.time - before.time);
  ScalarField r(g);
  for (std::size_t p = 0; p < g.points(); ++p)
    r.values[p] = (after.rho.values[p] - before.rho.values[p]) * inv2dt;
  for (int k = 0; k < g.axes(); ++k) {
    const auto div = op.first(std::span<const double>(middle.currents.components[static_cast<std::size_t>(k)]), k);
    for (std::size_t p = 0; p < g.points(); ++p) r.values[p] += div[p];
  }
  return r;
}

ContinuityResidual continuity_residual(const FieldFrame& before, const FieldFrame& middle,
                                       const FieldFrame& after, const DerivativeOperator& op) {
  const ScalarField r = continuity_residual_field(before, middle, after, op);
  const Grid& g = middle.rho.grid;
  std::vector<double> dt_rho(g.points());
  const double inv2dt = 1.0 / (after.time - before.time);
  for (std::size_t p = 0; p < g.points(); ++p)
    dt_rho[p] = (after.rho.values[p] - before.rho.values[p]) * inv2dt;
  ContinuityResidual out;
  out.time = middle.time;
  out.absolute = l2_norm(g, r.values);
  const double scale = l2_norm(g, dt_rho);
  out.relative = scale > 0.0 ? out.absolute / scale : (out.absolute > 0.0 ? INFINITY : 0.0);
  return out;
}

std::vector<ContinuityResidual> continuity_series(const std::vector<FieldFrame>& frames,
                                                  const DerivativeOperator& op) {
  std::vector<ContinuityResidual> out;
  for (std::size_t i = 1; i + 1 < frames.size(); ++i)
    out.push_back(continuity_residual(frames[i - 1], frames[i], frames[i + 1], op));
  return out;
}

std::vector<FieldFrame> field_frames(const FrameSequence& frames, const HamiltonianSpec& h) {
  std::vector<FieldFrame> out;
  if (frames.size() == 0) return out;
  const WaveField first = frames.frame(0);
  const DerivativeOperator op(first.grid);
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) out.push_back(field_frame(frames.frame(i), h, op));
  return out;
}

void write_residual_csv(const std::filesystem::path& path,
                        const std::vector<ContinuityResidual>& series) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string());
  out.precision(17);
  out << "time,abs_residual,rel_residual\n";
  for (const auto& r : series) out << r.time << ',' << r.absolute << ',' << r.relative << '\n';
}

}  // namespace bohm
