// Wave-field, current and Bohmian-trajectory experiments.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "bohm/bohmian.hpp"
#include "bohm/currents.hpp"
#include "bohm/io.hpp"
#include "bohm/rng.hpp"
#include "bohm/statmech.hpp"
#include "bohm/subsystem.hpp"
#include "experiment_support.hpp"

namespace bohm::experiments::detail {

namespace {

std::vector<FieldFrame> three_frames_around(const WaveField& psi0, const HamiltonianSpec& base, double dt,
                                            double t_mid) {
  HamiltonianSpec h = base;
  h.time_step = dt;
  WaveField start = psi0;
  if (t_mid - dt > 0.0) start = evolve(psi0, h, t_mid - dt, 1 << 30).frame(1);
  return field_frames(evolve(start, h, start.time + 2 * dt, 1), h);
}

double probe_time(const Section& s, double dt) {
  const double t = s.positive("probe_time");
  if (t < dt) s.fail("probe_time", "must be at least one time step");
  return t;
}

std::string label_of(const Section& s) {
  const std::string label = s.string("label");
  if (label.empty() || !std::all_of(label.begin(), label.end(), [](char c) {
        return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) || c == '_';
      }))
    s.fail("label", "use lowercase letters, digits and underscores");
  return label;
}

double rel_inf(const VectorField& a, const VectorField& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < a.components.size(); ++k)
    for (std::size_t i = 0; i < a.components[k].size(); ++i) {
      diff = std::max(diff, std::abs(a.components[k][i] - b.components[k][i]));
      scale = std::max(scale, std::abs(a.components[k][i]));
    }
  return scale > 0.0 ? diff / scale : diff;
}

std::vector<int> coords_of(const Grid& grid, const std::vector<int>& particles) {
  std::vector<int> c;
  for (int a : particles)
    for (int k = 0; k < grid.dims(); ++k) c.push_back(grid.axis(a, k));
  return c;
}

double gap(double a, double b, const Grid& grid) {
  double d = std::abs(a - b);
  if (grid.periodic()) {
    d = std::fmod(d, grid.extent());
    d = std::min(d, grid.extent() - d);
  }
  return d;
}

void check_dense(const Section& s, const Grid& sub) {
  if (sub.amplitude_count() > kDenseBudget)
    s.fail("points_per_axis", "the subsystem density matrix needs " + std::to_string(sub.amplitude_count()) +
                                  " rows, above the dense budget of " + std::to_string(kDenseBudget));
}

}  // namespace

// ---------------------------------------------------------------- evolve

Runner prepare_evolve(const Section& root) {
  const QuantumSetup q = parse_setup(root);
  const Section es = root.child("evolution");
  const Evolution ev = parse_evolution(es);
  const bool write_frames = es.boolean("write_frames", true);
  return [q, ev, write_frames](const RunContext& ctx) {
    RunResult r;
    const FrameSequence seq = evolve(q.psi, q.h, ev.t_final, ev.frame_stride);
    auto csv = open_csv(ctx, r, "observables.csv");
    csv << "time,norm,energy\n";
    const double e0 = energy(q.psi, q.h);
    double norm_drift = 0.0, energy_drift = 0.0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const WaveField f = seq.frame(i);
      const double n = f.norm_squared(), e = energy(f, q.h);
      norm_drift = std::max(norm_drift, std::abs(n - 1.0));
      energy_drift = std::max(energy_drift, std::abs(e - e0));
      csv << f.time << ',' << n << ',' << e << '\n';
    }
    if (write_frames) {
      seq.write(ctx.output_dir / "frames");
      add_tree(r, ctx, "frames");
    }
    r.metrics = {{"frames", seq.size()}, {"final_time", seq.times().back()}, {"initial_energy", e0},
                 {"max_norm_drift", norm_drift}, {"max_energy_drift", energy_drift}};
    r.checks.push_back(make_check("max_norm_drift", norm_drift, "<", 1e-10));
    return r;
  };
}

// ---------------------------------------------------------------- continuity

Runner prepare_continuity(const Section& root) {
  struct Case {
    std::string label;
    QuantumSetup q;
  };
  std::vector<Case> cases;
  for (const Section& c : root.children("cases")) {
    Case k{label_of(c), parse_setup(c)};
    for (const auto& other : cases)
      if (other.label == k.label) c.fail("label", "duplicate label " + k.label);
    cases.push_back(std::move(k));
  }
  if (cases.empty()) root.fail("cases", "needs at least one case");
  const Section cs = root.child("continuity");
  double t_probe = cs.positive("probe_time");
  for (const auto& c : cases)
    if (t_probe < c.q.h.time_step) cs.fail("probe_time", "must be at least one time step of every case");
  const bool series = cs.boolean("series", true);
  return [cases, t_probe, series](const RunContext& ctx) {
    RunResult r;
    auto conv = open_csv(ctx, r, "convergence.csv");
    conv << "case,time_step,abs_residual,rel_residual\n";
    for (const auto& c : cases) {
      const double dt = c.q.h.time_step;
      const DerivativeOperator op(c.q.grid);
      ContinuityResidual res[2];
      for (int k = 0; k < 2; ++k) {
        const double step = dt / (1 << k);
        const auto ff = three_frames_around(c.q.psi, c.q.h, step, t_probe);
        res[k] = continuity_residual(ff[0], ff[1], ff[2], op);
        conv << c.label << ',' << step << ',' << res[k].absolute << ',' << res[k].relative << '\n';
      }
      const double ratio = res[0].absolute / res[1].absolute;
      if (series) {
        const auto frames = field_frames(evolve(c.q.psi, c.q.h, t_probe, 1), c.q.h);
        write_residual_csv(ctx.output_dir / ("continuity_" + c.label + ".csv"), continuity_series(frames, op));
        add_file(r, ctx, "continuity_" + c.label + ".csv");
      }
      r.metrics[c.label] = {{"time_step", dt},
                            {"probe_time", t_probe},
                            {"relative_residual", res[0].relative},
                            {"absolute_residual", res[0].absolute},
                            {"relative_residual_half_step", res[1].relative},
                            {"halving_ratio", ratio}};
      r.checks.push_back(make_check(c.label + ".relative_residual", res[0].relative, "<", 1e-4));
      r.checks.push_back(make_check(c.label + ".halving_ratio", ratio, ">=", 3.5));
    }
    return r;
  };
}

// ---------------------------------------------------------------- subsystem currents

Runner prepare_subsystem_currents(const Section& root) {
  const QuantumSetup q = parse_setup(root);
  const SubsystemPartition part = parse_partition(root.child("partition"), q.grid);
  check_dense(root.child("grid"), subsystem_grid(q.grid, part));
  const double t_probe = probe_time(root.child("continuity"), q.h.time_step);
  return [q, part, t_probe](const RunContext& ctx) {
    RunResult r;
    auto conv = open_csv(ctx, r, "truncated_continuity.csv");
    conv << "time_step,abs_residual,rel_residual,full_rel_residual\n";
    ContinuityResidual res[2];
    double dual = 0.0;
    for (int k = 0; k < 2; ++k) {
      const double step = q.h.time_step / (1 << k);
      const auto ff = three_frames_around(q.psi, q.h, step, t_probe);
      res[k] = truncated_continuity_residual(truncated_frame(ff[0], part), truncated_frame(ff[1], part),
                                             truncated_frame(ff[2], part));
      const auto full = continuity_residual(ff[0], ff[1], ff[2], DerivativeOperator(q.grid));
      conv << step << ',' << res[k].absolute << ',' << res[k].relative << ',' << full.relative << '\n';
    }
    HamiltonianSpec h = q.h;
    const WaveField psi = evolve(q.psi, h, t_probe, 1 << 30).frame(1);
    const VectorField j_int = truncated_current_integral(current(psi, h), part);
    const ReducedDensityMatrix rdm = reduced_density_matrix(psi, part);
    const VectorField j_rdm = truncated_current_from_rdm(rdm, subsystem_masses(h, part));
    dual = rel_inf(j_int, j_rdm);
    write_rdm(ctx.output_dir / "reduced_density.rdm", rdm);
    io::write_field(ctx.output_dir / "truncated_current.fld", j_int, psi.time);
    io::write_field(ctx.output_dir / "marginal_density.fld", rdm.diagonal(), psi.time);
    for (const char* f : {"reduced_density.rdm", "truncated_current.fld", "marginal_density.fld"}) add_file(r, ctx, f);
    const double ratio = res[0].absolute / res[1].absolute;
    r.metrics = {{"probe_time", psi.time},
                 {"relative_residual", res[0].relative},
                 {"relative_residual_half_step", res[1].relative},
                 {"halving_ratio", ratio},
                 {"dual_route_relative", dual},
                 {"purity", rdm.purity()},
                 {"max_truncated_current", j_int.max_abs()}};
    r.checks.push_back(make_check("truncated.relative_residual", res[0].relative, "<", 1e-3));
    r.checks.push_back(make_check("truncated.halving_ratio", ratio, ">=", 3.5));
    r.checks.push_back(make_check("dual_route_relative", dual, "<", 1e-10));
    return r;
  };
}

// ---------------------------------------------------------------- Bohmian ensembles

namespace {

struct BohmRun {
  FrameSequence seq;
  TrajectoryEnsemble ens;
  std::vector<double> tv;
};

BohmRun run_full(const QuantumSetup& q, const Evolution& ev, const EnsembleParams& e, std::uint64_t seed) {
  BohmRun b{evolve(q.psi, q.h, ev.t_final, ev.frame_stride), {}, {}};
  const VelocityFrames frames = full_velocity_frames(b.seq, q.h, e.eps_rel);
  const Configurations x0 = sample_initial(density(q.psi), e.samples, seed);
  b.ens = integrate_trajectories(frames, x0, Flavor::full, seed, {e.substeps});
  for (std::size_t i = 0; i < b.seq.size(); ++i)
    b.tv.push_back(equivariance_distance(b.ens, i, density(b.seq.frame(i)), e.bins));
  return b;
}

void write_ensemble_outputs(const RunContext& ctx, RunResult& r, const TrajectoryEnsemble& ens,
                            const std::string& stem, std::size_t polylines) {
  write_trajectories(ctx.output_dir / (stem + ".trj"), ens);
  add_file(r, ctx, stem + ".trj");
  if (polylines > 0) {
    write_polylines_csv(ctx.output_dir / (stem + "_polylines.csv"), ens, polylines);
    add_file(r, ctx, stem + "_polylines.csv");
  }
}

struct ThermalCase {
  double temperature = 1.0;
  Grid grid;
  bool current = true;
};

Runner prepare_thermal_box(const Section& s) {
  const double length = s.positive("length", 1.0);
  const double mass = s.positive("mass", 1.0);
  const auto samples = static_cast<std::size_t>(s.at_least("samples", 1, 10000));
  std::vector<ThermalCase> cases;
  for (const Section& c : s.children("cases")) {
    ThermalCase k;
    k.temperature = c.positive("temperature");
    GridSpec g;
    g.points_per_axis = static_cast<int>(c.at_least("points_per_axis", 8));
    g.lo = 0.0;
    g.hi = length;
    g.boundary = Boundary::dirichlet;
    k.grid = at_path(c.path(), [&] { return Grid(g); });
    k.current = c.boolean("current", true);
    if (k.current) check_dense(c, k.grid);
    at_path(c.key_path("points_per_axis"), [&] { return statmech::thermal_box_density(k.grid, mass, k.temperature); });
    cases.push_back(std::move(k));
  }
  if (cases.empty()) s.fail("cases", "needs at least one temperature");
  return [cases, mass, samples, length](const RunContext& ctx) {
    RunResult r;
    auto csv = open_csv(ctx, r, "thermal_box.csv");
    csv << "temperature,points,levels,max_current,max_velocity,samples,inside,sample_min,sample_max,spread_fraction\n";
    std::size_t hottest = 0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const auto& c = cases[i];
      if (c.temperature > cases[hottest].temperature) hottest = i;
      const statmech::VolumeReport v =
          statmech::bohmian_volume_check(c.grid, mass, c.temperature, samples, split_seed(ctx.seed, i), c.current);
      csv << c.temperature << ',' << c.grid.n() << ',' << v.levels << ',' << v.max_current << ',' << v.max_velocity
          << ',' << v.samples << ',' << v.inside << ',' << v.sample_min << ',' << v.sample_max << ','
          << v.spread_fraction << '\n';
      const double inside = static_cast<double>(v.inside) / static_cast<double>(v.samples);
      const std::string tag = "T" + std::to_string(i);
      r.metrics[tag] = {{"temperature", c.temperature}, {"levels", v.levels},   {"max_current", v.max_current},
                        {"inside_fraction", inside},    {"spread", v.spread_fraction}};
      if (c.current) r.checks.push_back(make_check(tag + ".max_current", v.max_current, "<", 1e-12));
      r.checks.push_back(make_check(tag + ".inside_fraction", inside, "==", 1.0));
      if (i + 1 == cases.size()) {
        const auto& hot = r.metrics["T" + std::to_string(hottest)];
        r.checks.push_back(make_check("hottest.spread_fraction", hot["spread"].get<double>(), ">=", 0.99));
      }
    }
    r.metrics["length"] = length;
    return r;
  };
}

}  // namespace

Runner prepare_bohm_full(const Section& root) {
  if (root.has("thermal_box")) return prepare_thermal_box(root.child("thermal_box"));
  const QuantumSetup q = parse_setup(root);
  const Evolution ev = parse_evolution(root.child("evolution"));
  const EnsembleParams e = parse_ensemble(root.child("ensemble"));
  return [q, ev, e](const RunContext& ctx) {
    RunResult r;
    const BohmRun b = run_full(q, ev, e, ctx.seed);
    write_ensemble_outputs(ctx, r, b.ens, "trajectories", e.polylines);
    auto csv = open_csv(ctx, r, "equivariance.csv");
    csv << "time,tv_distance\n";
    for (std::size_t i = 0; i < b.tv.size(); ++i) csv << b.seq.time(i) << ',' << b.tv[i] << '\n';
    r.metrics = {{"samples", b.ens.samples},
                 {"frames", b.seq.size()},
                 {"initial_tv_distance", b.tv.front()},
                 {"final_tv_distance", b.tv.back()},
                 {"reflections", b.ens.reflections},
                 {"near_node_samples", b.ens.near_node_samples}};
    return r;
  };
}

Runner prepare_equivariance(const Section& root) {
  const QuantumSetup q = parse_setup(root);
  const Evolution ev = parse_evolution(root.child("evolution"));
  const EnsembleParams e = parse_ensemble(root.child("ensemble"));
  return [q, ev, e](const RunContext& ctx) {
    RunResult r;
    const BohmRun b = run_full(q, ev, e, ctx.seed);
    VectorField zero(q.grid);
    const auto frozen = integrate_trajectories(constant_velocity_frames(zero, b.seq.times()),
                                               sample_initial(density(q.psi), e.samples, ctx.seed), Flavor::full,
                                               ctx.seed, {e.substeps});
    write_ensemble_outputs(ctx, r, b.ens, "trajectories", e.polylines);
    auto csv = open_csv(ctx, r, "equivariance.csv");
    csv << "time,tv_distance,tv_distance_frozen\n";
    double frozen_final = 0.0;
    for (std::size_t i = 0; i < b.tv.size(); ++i) {
      const double f = equivariance_distance(frozen, i, density(b.seq.frame(i)), e.bins);
      csv << b.seq.time(i) << ',' << b.tv[i] << ',' << f << '\n';
      frozen_final = f;
    }
    r.metrics = {{"samples", b.ens.samples},          {"bins", e.bins},
                 {"initial_tv_distance", b.tv.front()}, {"final_tv_distance", b.tv.back()},
                 {"frozen_tv_distance", frozen_final},  {"final_time", b.seq.times().back()},
                 {"near_node_samples", b.ens.near_node_samples}};
    r.checks.push_back(make_check("final_tv_distance", b.tv.back(), "<", 0.05));
    r.checks.push_back(make_check("frozen_tv_distance", frozen_final, ">", 0.2));
    return r;
  };
}

Runner prepare_bohm_truncated(const Section& root) {
  const QuantumSetup q = parse_setup(root);
  const Evolution ev = parse_evolution(root.child("evolution"));
  const SubsystemPartition part = parse_partition(root.child("partition"), q.grid);
  const EnsembleParams e = parse_ensemble(root.child("ensemble"));
  return [q, ev, part, e](const RunContext& ctx) {
    RunResult r;
    const FrameSequence seq = evolve(q.psi, q.h, ev.t_final, ev.frame_stride);
    const auto x0 = sample_initial(density(q.psi), e.samples, ctx.seed);
    const auto full = integrate_trajectories(full_velocity_frames(seq, q.h, e.eps_rel), x0, Flavor::full, ctx.seed,
                                             {e.substeps});
    const std::vector<int> coords = coords_of(q.grid, part.a);
    const auto tr = integrate_trajectories(truncated_velocity_frames(seq, q.h, part, e.eps_rel), project(x0, coords),
                                           Flavor::truncated, ctx.seed, {e.substeps});
    write_ensemble_outputs(ctx, r, full, "full", e.polylines);
    write_ensemble_outputs(ctx, r, tr, "truncated", e.polylines);
    auto csv = open_csv(ctx, r, "marginal.csv");
    csv << "time,tv_truncated,tv_full_projected\n";
    const auto full_a = [&](std::size_t i) { return project(full.positions(i), coords); };
    double tv_tr = 0.0, tv_full = 0.0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const ScalarField rho_a = marginal_density(density(seq.frame(i)), part);
      tv_tr = equivariance_distance(tr, i, rho_a, e.bins);
      tv_full = equivariance_distance(full_a(i), rho_a, e.bins);
      csv << seq.time(i) << ',' << tv_tr << ',' << tv_full << '\n';
    }
    const std::size_t last = full.times.size() - 1;
    const double threshold = 10.0 * q.grid.spacing();
    std::size_t far = 0;
    double mean_gap = 0.0;
    auto gaps = open_csv(ctx, r, "divergence.csv");
    gaps << "sample,final_gap\n";
    for (std::size_t s = 0; s < full.samples; ++s) {
      double g2 = 0.0;
      for (std::size_t k = 0; k < coords.size(); ++k) {
        const double g = gap(full.at(s, last, coords[k]), tr.at(s, last, static_cast<int>(k)), q.grid);
        g2 += g * g;
      }
      const double g = std::sqrt(g2);
      far += g > threshold;
      mean_gap += g / static_cast<double>(full.samples);
      gaps << s << ',' << g << '\n';
    }
    const double far_fraction = static_cast<double>(far) / static_cast<double>(full.samples);
    r.metrics = {{"samples", full.samples},
                 {"bins", e.bins},
                 {"final_time", seq.times().back()},
                 {"truncated_tv_distance", tv_tr},
                 {"full_projected_tv_distance", tv_full},
                 {"divergence_threshold", threshold},
                 {"divergent_fraction", far_fraction},
                 {"mean_final_gap", mean_gap}};
    r.checks.push_back(make_check("truncated_tv_distance", tv_tr, "<", 0.05));
    r.checks.push_back(make_check("divergent_fraction", far_fraction, ">=", 0.05));
    return r;
  };
}

// ---------------------------------------------------------------- free expansion

Runner prepare_free_expansion(const Section& root) {
  const QuantumSetup q = parse_setup(root);
  if (q.grid.axes() != 1 || q.grid.periodic())
    root.child("grid").fail("boundary", "free_expansion needs one particle in a dirichlet box");
  const Evolution ev = parse_evolution(root.child("evolution"));
  const EnsembleParams e = parse_ensemble(root.child("ensemble"));
  const Section ms = root.child("macrostates");
  const int particles = static_cast<int>(ms.at_least("particles", 1));
  if (particles > 16) ms.fail("particles", "at most 16 (every left/right assignment is enumerated)");
  const double p_cutoff = ms.positive("p_cutoff");
  return [q, ev, e, particles, p_cutoff](const RunContext& ctx) {
    RunResult r;
    const double lo = q.grid.spec().lo, hi = q.grid.spec().hi, mid = 0.5 * (lo + hi);
    const auto decomp = statmech::half_occupation_decomposition(particles, lo, hi, p_cutoff);
    const FrameSequence seq = evolve(q.psi, q.h, ev.t_final, ev.frame_stride);
    const auto frames = full_velocity_frames(seq, q.h, e.eps_rel);
    const std::size_t n = static_cast<std::size_t>(particles);
    const auto ens = integrate_trajectories(frames, sample_initial(density(q.psi), n * e.samples, ctx.seed),
                                            Flavor::full, ctx.seed, {e.substeps});
    const double n_d = static_cast<double>(particles);
    const double phase_factor = n_d * std::log(2.0 * p_cutoff), dz = n_d * std::log(2.0 * std::numbers::pi);
    std::vector<double> s_qb(decomp.cells.size()), s_b(decomp.cells.size()), w(decomp.cells.size());
    for (std::size_t m = 0; m < decomp.cells.size(); ++m) {
      s_qb[m] = statmech::quantum_boltzmann_entropy(decomp.cells[m].dim);
      s_b[m] = std::log(decomp.cells[m].volume()) + phase_factor - dz;
      w[m] = std::exp(s_b[m]);
    }
    const std::size_t times = ens.times.size();
    std::vector<std::size_t> cell(e.samples * times);
    std::vector<double> x(n);
    for (std::size_t s = 0; s < e.samples; ++s)
      for (std::size_t t = 0; t < times; ++t) {
        for (std::size_t a = 0; a < n; ++a) x[a] = ens.at(s * n + a, t, 0);
        cell[s * times + t] = statmech::macrostate_of(x, decomp);
      }
    auto csv = open_csv(ctx, r, "entropy_series.csv");
    csv << "t,S_qB,S_B,S_G_cg,fraction_S_qB_above_initial\n";
    std::vector<double> sg(times);
    double frac_qb = 0.0, frac_b = 0.0;
    for (std::size_t t = 0; t < times; ++t) {
      const ScalarField rho = density(seq.frame(t));
      double p_left = 0.0;
      for (std::size_t i = 0; i < rho.values.size(); ++i) {
        const double xi = q.grid.coordinate(i, 0);
        p_left += rho.values[i] * q.grid.weight() * (xi < mid ? 1.0 : xi == mid ? 0.5 : 0.0);
      }
      p_left = std::clamp(p_left, 0.0, 1.0);
      // cells are indexed by the number of particles on the left
      std::vector<double> prob(decomp.cells.size());
      for (std::size_t m = 0; m <= n; ++m)
        prob[m] = std::exp(std::lgamma(n_d + 1) - std::lgamma(double(m) + 1) - std::lgamma(n_d - double(m) + 1)) *
                  std::pow(p_left, double(m)) * std::pow(1.0 - p_left, n_d - double(m));
      sg[t] = statmech::coarse_grained_gibbs(prob, w);
      double mean_qb = 0.0, mean_b = 0.0;
      std::size_t above_qb = 0, above_b = 0;
      for (std::size_t s = 0; s < e.samples; ++s) {
        const std::size_t c = cell[s * times + t], c0 = cell[s * times];
        mean_qb += s_qb[c] / double(e.samples);
        mean_b += s_b[c] / double(e.samples);
        above_qb += s_qb[c] > s_qb[c0];
        above_b += s_b[c] > s_b[c0];
      }
      frac_qb = double(above_qb) / double(e.samples);
      frac_b = double(above_b) / double(e.samples);
      csv << ens.times[t] << ',' << mean_qb << ',' << mean_b << ',' << sg[t] << ',' << frac_qb << '\n';
    }
    // largest fall below the running maximum, as a fraction of the total rise
    double peak = sg.front(), drop = 0.0;
    for (double v : sg) {
      peak = std::max(peak, v);
      drop = std::max(drop, peak - v);
    }
    const double rise = *std::max_element(sg.begin(), sg.end()) - sg.front();
    const double drop_fraction = rise > 0.0 ? drop / rise : 1.0;
    if (e.polylines > 0) {
      write_polylines_csv(ctx.output_dir / "polylines.csv", ens, e.polylines * n);
      add_file(r, ctx, "polylines.csv");
    }
    r.metrics = {{"systems", e.samples},
                 {"particles", particles},
                 {"final_time", ens.times.back()},
                 {"fraction_S_qB_increased", frac_qb},
                 {"fraction_S_B_increased", frac_b},
                 {"S_G_cg_initial", sg.front()},
                 {"S_G_cg_final", sg.back()},
                 {"S_G_cg_drop_fraction", drop_fraction},
                 {"reflections", ens.reflections}};
    r.checks.push_back(make_check("fraction_S_qB_increased", frac_qb, ">=", 0.9));
    r.checks.push_back(make_check("fraction_S_B_increased", frac_b, ">=", 0.9));
    r.checks.push_back(make_check("S_G_cg_rise", rise, ">", 0.0));
    r.checks.push_back(make_check("S_G_cg_drop_fraction", drop_fraction, "<=", kTrendTolerance));
    return r;
  };
}

}  // namespace bohm::experiments::detail
