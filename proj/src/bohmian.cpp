#include "bohm/bohmian.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bohm/error.hpp"
#include "bohm/io.hpp"
#include "bohm/parallel.hpp"
#include "bohm/rng.hpp"

namespace bohm {

const char* to_string(Flavor f) { return f == Flavor::full ? "full" : "truncated"; }

namespace {

std::vector<char> floor_mask(const ScalarField& rho, double eps_rel) {
  const double peak = *std::max_element(rho.values.begin(), rho.values.end());
  std::vector<char> mask(rho.values.size());
  for (std::size_t p = 0; p < mask.size(); ++p) mask[p] = rho.values[p] < eps_rel * peak;
  return mask;
}

// Per-axis interpolation stencil.
struct Stencil {
  std::size_t lo, hi;
  double frac;
};

Stencil stencil(const Grid& g, double x) {
  const double n = g.n();
  double u = (x - g.spec().lo) / g.spacing();
  if (g.periodic()) {
    u = std::fmod(u, n);
    if (u < 0.0) u += n;
    auto i0 = static_cast<std::size_t>(std::floor(u));
    if (i0 >= static_cast<std::size_t>(g.n())) i0 = 0;
    return {i0, (i0 + 1) % static_cast<std::size_t>(g.n()), u - std::floor(u)};
  }
  u -= 1.0;  // interior node k sits at u = k
  if (u <= 0.0) return {0, 0, 0.0};
  if (u >= n - 1.0) return {static_cast<std::size_t>(g.n() - 1), static_cast<std::size_t>(g.n() - 1), 0.0};
  const auto i0 = static_cast<std::size_t>(std::floor(u));
  return {i0, i0 + 1, u - static_cast<double>(i0)};
}

// Multilinear interpolation of every component of field `f` at x.
void interpolate_into(const VectorField& f, std::span<const double> x, double scale,
                      std::vector<double>& out) {
  const Grid& g = f.grid;
  const int d = g.axes();
  Stencil st[6];
  for (int k = 0; k < d; ++k) st[k] = stencil(g, x[static_cast<std::size_t>(k)]);
  for (unsigned corner = 0; corner < (1u << d); ++corner) {
    double w = scale;
    std::size_t idx = 0;
    for (int k = 0; k < d; ++k) {
      const bool up = (corner >> k) & 1u;
      w *= up ? st[k].frac : 1.0 - st[k].frac;
      idx += (up ? st[k].hi : st[k].lo) * g.stride(k);
    }
    if (w == 0.0) continue;
    for (int k = 0; k < d; ++k) out[static_cast<std::size_t>(k)] += w * f.components[static_cast<std::size_t>(k)][idx];
  }
}

std::size_t interval_of(const VelocityFrames& frames, double t) {
  const auto& ts = frames.times;
  if (ts.size() < 2) throw InvalidExtent("velocity frames need at least two times");
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  std::size_t k = it == ts.begin() ? 0 : static_cast<std::size_t>(it - ts.begin()) - 1;
  return std::min(k, ts.size() - 2);
}

std::vector<double> velocity_in_interval(const VelocityFrames& frames, std::size_t k, double t,
                                         std::span<const double> x) {
  const double t0 = frames.times[k], t1 = frames.times[k + 1];
  const double f = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(frames.grid.axes()), 0.0);
  if (f < 1.0) interpolate_into(frames.fields[k], x, 1.0 - f, v);
  if (f > 0.0) interpolate_into(frames.fields[k + 1], x, f, v);
  return v;
}

std::size_t nearest_point(const Grid& g, std::span<const double> x) {
  std::size_t idx = 0;
  for (int k = 0; k < g.axes(); ++k) {
    const Stencil s = stencil(g, x[static_cast<std::size_t>(k)]);
    idx += (s.frac < 0.5 ? s.lo : s.hi) * g.stride(k);
  }
  return idx;
}

}  // namespace

VelocityFrames full_velocity_frames(const FrameSequence& frames, const HamiltonianSpec& h,
                                    double eps_rel) {
  VelocityFrames out;
  if (frames.size() == 0) return out;
  const WaveField first = frames.frame(0);
  out.grid = first.grid;
  const DerivativeOperator op(first.grid);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const FieldFrame f = field_frame(frames.frame(i), h, op);
    out.times.push_back(f.time);
    out.fields.push_back(velocity(f, eps_rel).velocity);
    out.floored.push_back(floor_mask(f.rho, eps_rel));
  }
  return out;
}

VelocityFrames truncated_velocity_frames(const FrameSequence& frames, const HamiltonianSpec& h,
                                         const SubsystemPartition& part, double eps_rel) {
  VelocityFrames out;
  if (frames.size() == 0) return out;
  const WaveField first = frames.frame(0);
  const DerivativeOperator op(first.grid);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const FieldFrame f = truncated_frame(field_frame(frames.frame(i), h, op), part);
    if (i == 0) out.grid = f.rho.grid;
    out.times.push_back(f.time);
    out.fields.push_back(truncated_velocity(f.rho, f.currents, eps_rel).velocity);
    out.floored.push_back(floor_mask(f.rho, eps_rel));
  }
  return out;
}

VelocityFrames constant_velocity_frames(const VectorField& v, std::vector<double> times) {
  VelocityFrames out;
  out.grid = v.grid;
  out.times = std::move(times);
  out.fields.assign(out.times.size(), v);
  out.floored.assign(out.times.size(), std::vector<char>(v.grid.points(), 0));
  return out;
}

Configurations sample_initial(const ScalarField& rho, std::size_t count, std::uint64_t seed) {
  const Grid& g = rho.grid;
  std::vector<double> cdf(rho.values.size());
  double acc = 0.0;
  for (std::size_t p = 0; p < cdf.size(); ++p) {
    acc += std::max(0.0, rho.values[p]) * g.weight();
    cdf[p] = acc;
  }
  if (!(acc > 0.0)) throw InvalidExtent("cannot sample from a zero density");
  const int d = g.axes();
  Configurations out{d, std::vector<double>(count * static_cast<std::size_t>(d))};
  const double len = g.extent(), lo = g.spec().lo;
  parallel_for(count, [&](std::size_t i) {
    CounterRng rng(seed, i);
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    const auto p = static_cast<std::size_t>(it - cdf.begin());
    for (int k = 0; k < d; ++k) {
      double x = g.coordinate(p, k) + (rng.uniform() - 0.5) * g.spacing();
      if (g.periodic()) {
        x = lo + std::fmod(x - lo, len);
        if (x < lo) x += len;
      }
      out.values[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)] = x;
    }
  });
  return out;
}

Configurations project(const Configurations& x, const std::vector<int>& coords) {
  Configurations out{static_cast<int>(coords.size()), {}};
  out.values.reserve(x.count() * coords.size());
  for (std::size_t i = 0; i < x.count(); ++i)
    for (int c : coords) out.values.push_back(x.at(i)[static_cast<std::size_t>(c)]);
  return out;
}

Configurations TrajectoryEnsemble::positions(std::size_t time) const {
  Configurations out{coords, std::vector<double>(samples * static_cast<std::size_t>(coords))};
  for (std::size_t s = 0; s < samples; ++s)
    for (int c = 0; c < coords; ++c)
      out.values[s * static_cast<std::size_t>(coords) + static_cast<std::size_t>(c)] = at(s, time, c);
  return out;
}

std::vector<double> interpolate_velocity(const VelocityFrames& frames, double t,
                                         std::span<const double> x) {
  return velocity_in_interval(frames, interval_of(frames, t), t, x);
}

TrajectoryEnsemble integrate_trajectories(const VelocityFrames& frames, const Configurations& x0,
                                          Flavor flavor, std::uint64_t seed,
                                          const IntegrationOptions& options) {
  const Grid& g = frames.grid;
  const int d = g.axes();
  if (x0.coords != d) throw AxisMismatch("initial positions do not match the velocity grid");
  if (frames.times.size() < 2) throw InvalidExtent("velocity frames need at least two times");
  for (std::size_t k = 1; k < frames.times.size(); ++k)
    if (!(frames.times[k] > frames.times[k - 1])) throw NonuniformFrames("frame times must increase");
  if (options.substeps < 1) throw InvalidExtent("substeps must be >= 1");

  TrajectoryEnsemble ens;
  ens.flavor = flavor;
  ens.seed = seed;
  ens.times = frames.times;
  ens.samples = x0.count();
  ens.coords = d;
  const std::size_t nt = frames.times.size();
  ens.paths.assign(ens.samples * nt * static_cast<std::size_t>(d), 0.0);
  std::vector<std::size_t> reflections(ens.samples, 0);
  std::vector<char> near_node(ens.samples, 0);
  std::vector<char> escaped(ens.samples, 0);

  const double lo = g.spec().lo, hi = g.spec().hi, len = g.extent(), dx = g.spacing();
  parallel_for(ens.samples, [&](std::size_t s) {
    std::vector<double> x(x0.at(s).begin(), x0.at(s).end()), tmp(static_cast<std::size_t>(d));
    auto record = [&](std::size_t ti) {
      std::copy(x.begin(), x.end(),
                ens.paths.begin() + static_cast<std::ptrdiff_t>((s * nt + ti) * static_cast<std::size_t>(d)));
      if (frames.floored[ti][nearest_point(g, x)]) near_node[s] = 1;
    };
    record(0);
    for (std::size_t k = 0; k + 1 < nt && !escaped[s]; ++k) {
      const double h = (frames.times[k + 1] - frames.times[k]) / options.substeps;
      for (int sub = 0; sub < options.substeps; ++sub) {
        const double t = frames.times[k] + sub * h;
        const auto k1 = velocity_in_interval(frames, k, t, x);
        for (int c = 0; c < d; ++c) tmp[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)] + 0.5 * h * k1[static_cast<std::size_t>(c)];
        const auto k2 = velocity_in_interval(frames, k, t + 0.5 * h, tmp);
        for (int c = 0; c < d; ++c) tmp[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)] + 0.5 * h * k2[static_cast<std::size_t>(c)];
        const auto k3 = velocity_in_interval(frames, k, t + 0.5 * h, tmp);
        for (int c = 0; c < d; ++c) tmp[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(c)] + h * k3[static_cast<std::size_t>(c)];
        const auto k4 = velocity_in_interval(frames, k, t + h, tmp);
        for (int c = 0; c < d; ++c) {
          const auto i = static_cast<std::size_t>(c);
          double& xc = x[i];
          xc += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
          if (g.periodic()) {
            xc = lo + std::fmod(xc - lo, len);
            if (xc < lo) xc += len;
          } else if (xc < lo || xc > hi) {
            const double depth = xc < lo ? lo - xc : xc - hi;
            if (depth >= dx) {
              escaped[s] = 1;
              break;
            }
            xc = xc < lo ? 2.0 * lo - xc : 2.0 * hi - xc;
            ++reflections[s];
          }
        }
        if (escaped[s]) break;
      }
      if (!escaped[s]) record(k + 1);
    }
  });
  for (std::size_t s = 0; s < ens.samples; ++s) {
    if (escaped[s])
      throw TrajectoryEscapedDomain("sample " + std::to_string(s) +
                                    " left the dirichlet domain by more than one grid spacing");
    ens.reflections += reflections[s];
    ens.near_node_samples += near_node[s] ? 1 : 0;
  }
  return ens;
}

namespace {

// For every grid node along one axis, the bins its quadrature cell overlaps
// and the overlapping fraction of the cell.
std::vector<std::vector<std::pair<int, double>>> cell_bin_overlap(const Grid& g, int bins) {
  const double lo = g.spec().lo, len = g.extent(), dx = g.spacing();
  const double bw = len / bins;
  std::vector<std::vector<std::pair<int, double>>> out(static_cast<std::size_t>(g.n()));
  for (int i = 0; i < g.n(); ++i) {
    const double c = g.coordinates()[static_cast<std::size_t>(i)];
    double a = c - 0.5 * dx, b = c + 0.5 * dx;
    // pieces of the cell inside [lo, lo+len), wrapped on periodic grids
    std::vector<std::pair<double, double>> pieces;
    if (g.periodic()) {
      if (a < lo) {
        pieces.push_back({a + len, lo + len});
        a = lo;
      }
      if (b > lo + len) {
        pieces.push_back({lo, b - len});
        b = lo + len;
      }
    }
    pieces.push_back({std::max(a, lo), std::min(b, lo + len)});
    for (auto [pa, pb] : pieces) {
      if (pb <= pa) continue;
      int b0 = std::clamp(static_cast<int>(std::floor((pa - lo) / bw)), 0, bins - 1);
      for (int bin = b0; bin < bins; ++bin) {
        const double ba = lo + bin * bw, bb = ba + bw;
        const double ov = std::min(pb, bb) - std::max(pa, ba);
        if (ov > 0.0) out[static_cast<std::size_t>(i)].push_back({bin, ov / dx});
        if (bb >= pb) break;
      }
    }
  }
  return out;
}

}  // namespace

double equivariance_distance(const Configurations& x, const ScalarField& rho, int bins) {
  const Grid& g = rho.grid;
  const int d = g.axes();
  if (x.coords != d) throw AxisMismatch("positions do not match the density grid");
  if (bins < 1) throw InvalidExtent("bins must be >= 1");
  std::size_t total_bins = 1;
  for (int k = 0; k < d; ++k) total_bins *= static_cast<std::size_t>(bins);

  std::vector<double> emp(total_bins, 0.0), ref(total_bins, 0.0);
  const double lo = g.spec().lo, bw = g.extent() / bins;
  for (std::size_t i = 0; i < x.count(); ++i) {
    std::size_t idx = 0;
    for (int k = 0; k < d; ++k) {
      const int b = std::clamp(static_cast<int>(std::floor((x.at(i)[static_cast<std::size_t>(k)] - lo) / bw)), 0, bins - 1);
      idx = idx * static_cast<std::size_t>(bins) + static_cast<std::size_t>(b);
    }
    emp[idx] += 1.0;
  }
  const auto overlap = cell_bin_overlap(g, bins);
  for (std::size_t p = 0; p < g.points(); ++p) {
    const double mass = std::max(0.0, rho.values[p]);
    if (mass == 0.0) continue;
    // enumerate the product of per-axis overlaps
    std::vector<std::size_t> pos(static_cast<std::size_t>(d), 0);
    while (true) {
      double w = mass;
      std::size_t idx = 0;
      for (int k = 0; k < d; ++k) {
        const auto& ov = overlap[g.index_along(p, k)][pos[static_cast<std::size_t>(k)]];
        w *= ov.second;
        idx = idx * static_cast<std::size_t>(bins) + static_cast<std::size_t>(ov.first);
      }
      ref[idx] += w;
      int k = d - 1;
      for (; k >= 0; --k) {
        auto& c = pos[static_cast<std::size_t>(k)];
        if (++c < overlap[g.index_along(p, k)].size()) break;
        c = 0;
      }
      if (k < 0) break;
    }
  }
  double se = 0.0, sr = 0.0;
  for (std::size_t b = 0; b < total_bins; ++b) {
    se += emp[b];
    sr += ref[b];
  }
  double tv = 0.0;
  for (std::size_t b = 0; b < total_bins; ++b) tv += std::abs(emp[b] / se - ref[b] / sr);
  return 0.5 * tv;
}

double equivariance_distance(const TrajectoryEnsemble& ens, std::size_t time_index,
                             const ScalarField& rho, int bins) {
  return equivariance_distance(ens.positions(time_index), rho, bins);
}

std::size_t order_inversions(const TrajectoryEnsemble& ens) {
  if (ens.coords != 1) throw AxisMismatch("order inversions are defined for 1D ensembles");
  std::vector<std::size_t> order(ens.samples);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ens.at(a, 0, 0) < ens.at(b, 0, 0); });
  std::size_t inversions = 0;
  for (std::size_t t = 1; t < ens.times.size(); ++t)
    for (std::size_t i = 1; i < order.size(); ++i)
      if (ens.at(order[i - 1], t, 0) > ens.at(order[i], t, 0)) ++inversions;
  return inversions;
}

void write_trajectories(const std::filesystem::path& path, const TrajectoryEnsemble& ens) {
  nlohmann::json h{{"format", "trj"},        {"kind", "trajectories"}, {"dtype", "float64"},
                   {"flavor", to_string(ens.flavor)}, {"seed", ens.seed},  {"times", ens.times},
                   {"samples", ens.samples}, {"coords", ens.coords},
                   {"layout", "sample,time,coord"}, {"reflections", ens.reflections},
                   {"near_node_samples", ens.near_node_samples}};
  io::write_container(path, h, ens.paths);
}

TrajectoryEnsemble read_trajectories(const std::filesystem::path& path) {
  io::Container c = io::read_container(path);
  if (c.header.value("kind", "") != "trajectories")
    throw FormatError(path.string() + " is not a trajectory file");
  TrajectoryEnsemble ens;
  ens.flavor = c.header.at("flavor").get<std::string>() == "full" ? Flavor::full : Flavor::truncated;
  ens.seed = c.header.at("seed").get<std::uint64_t>();
  ens.times = c.header.at("times").get<std::vector<double>>();
  ens.samples = c.header.at("samples").get<std::size_t>();
  ens.coords = c.header.at("coords").get<int>();
  ens.reflections = c.header.value("reflections", std::size_t{0});
  ens.near_node_samples = c.header.value("near_node_samples", std::size_t{0});
  ens.paths = std::move(c.payload);
  if (ens.paths.size() != ens.samples * ens.times.size() * static_cast<std::size_t>(ens.coords))
    throw FormatError(path.string() + ": payload size does not match header");
  return ens;
}

void write_polylines_csv(const std::filesystem::path& path, const TrajectoryEnsemble& ens,
                         std::size_t max_samples) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string());
  out.precision(12);
  out << "sample,t";
  for (int c = 0; c < ens.coords; ++c) out << ",x" << c;
  out << '\n';
  for (std::size_t s = 0; s < std::min(max_samples, ens.samples); ++s)
    for (std::size_t t = 0; t < ens.times.size(); ++t) {
      out << s << ',' << ens.times[t];
      for (int c = 0; c < ens.coords; ++c) out << ',' << ens.at(s, t, c);
      out << '\n';
    }
}

}  // namespace bohm
