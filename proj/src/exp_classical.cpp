// Classical phase-space experiments.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bohm/classical.hpp"
#include "bohm/statmech.hpp"
#include "experiment_support.hpp"

namespace bohm::experiments::detail {

using namespace bohm::classical;

namespace {

SubsystemPartition single_particle_partition(const Section& s, const ClassicalHSpec& h) {
  const auto a = s.integers("a");
  const int n = particle_count(h);
  if (a.size() != 1 || a[0] < 0 || a[0] >= n) s.fail("a", "needs exactly one particle index in [0, " + std::to_string(n) + ")");
  if (n < 2) s.fail("a", "needs at least two particles");
  SubsystemPartition part{{a[0]}, {}};
  for (int i = 0; i < n; ++i)
    if (i != a[0]) part.b.push_back(i);
  return part;
}

void require_quadratic(const Section& root, const ClassicalHSpec& h, const std::string& why) {
  if (!is_quadratic(h)) root.child("classical").fail("terms", why);
  at_path(root.key_path("classical"), [&] { return stiffness(h); });
}

}  // namespace

Runner prepare_classical_liouville(const Section& root) {
  const ClassicalHSpec h = parse_classical(root.child("classical"));
  const ClassicalEnsemble ens = parse_classical_ensemble(root.child("ensemble"), h);
  if (!ens.thermal) require_quadratic(root, h, "a transported Gaussian density needs a quadratic potential");
  const ClassicalEvolution ev = parse_classical_evolution(root.child("evolution"));
  const double gamma = root.child("damping").positive("gamma");
  return [h, ens, ev, gamma](const RunContext& ctx) {
    RunResult r;
    const PhaseEnsemble z0 = ens.sample(h, ctx.seed);
    const PhaseTrajectories traj = evolve_ensemble(h, z0, ev.time_step, ev.steps, ev.record_stride);
    const InitialDensity rho0 = ens.density();
    auto csv = open_csv(ctx, r, "liouville.csv");
    csv << "time,max_relative_deviation\n";
    std::vector<double> l0(z0.count());
    for (std::size_t i = 0; i < z0.count(); ++i) l0[i] = log_density(h, rho0, traj.snapshots.front().at(i), 0.0);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      double dev = 0.0;
      for (std::size_t i = 0; i < z0.count(); ++i)
        dev = std::max(dev, std::abs(std::expm1(log_density(h, rho0, traj.snapshots[k].at(i), traj.times[k]) - l0[i])));
      csv << traj.times[k] << ',' << dev << '\n';
    }
    const double constancy = liouville_constancy(h, rho0, traj);
    std::vector<std::vector<double>> points;
    for (const auto& snap : traj.snapshots)
      for (std::size_t i = 0; i < snap.count(); ++i) points.emplace_back(snap.at(i).begin(), snap.at(i).end());
    const double div = incompressibility_check(PhaseFlow{h, 0.0}, points);
    const double contraction = -divergence(PhaseFlow{h, gamma}, points.front());
    write_ensemble(ctx.output_dir / "final.ens", traj.snapshots.back());
    add_file(r, ctx, "final.ens");
    r.metrics = {{"samples", z0.count()},
                 {"final_time", traj.times.back()},
                 {"max_relative_deviation", constancy},
                 {"max_abs_divergence", div},
                 {"damped_contraction_rate", contraction}};
    r.checks.push_back(make_check("max_relative_deviation", constancy, "<", 1e-5));
    r.checks.push_back(make_check("max_abs_divergence", div, "==", 0.0));
    r.checks.push_back(make_check("damped_contraction_rate", contraction, ">", 0.0));
    return r;
  };
}

Runner prepare_classical_truncated(const Section& root) {
  const ClassicalHSpec h = parse_classical(root.child("classical"));
  const ClassicalEnsemble ens = parse_classical_ensemble(root.child("ensemble"), h);
  if (ens.thermal) root.child("ensemble").fail("beta", "the closed-form conditional mean needs mean and covariance");
  require_quadratic(root, h, "the closed-form conditional mean needs a quadratic potential");
  const ClassicalEvolution ev = parse_classical_evolution(root.child("evolution"));
  const SubsystemPartition part = single_particle_partition(root.child("partition"), h);
  const Section bs = root.child("binning");
  PhaseBinning binning;
  binning.bins_x = static_cast<int>(bs.at_least("bins_x", 0, 0));
  binning.bins_p = static_cast<int>(bs.at_least("bins_p", 0, 0));
  binning.min_count = static_cast<std::size_t>(bs.at_least("min_count", 2, 20));
  return [h, ens, ev, part, binning](const RunContext& ctx) {
    RunResult r;
    const PhaseTrajectories traj =
        evolve_ensemble(h, ens.sample(h, ctx.seed), ev.time_step, ev.steps, ev.steps);
    const GaussianDensity rho = transported_gaussian(h, {ens.mean, ens.cov}, traj.times.back());
    const int a = part.a[0];
    const auto field = truncated_phase_velocity(h, traj.snapshots.back(), part, binning,
                                                [&](std::span<const double> z) {
                                                  return gaussian_conditional_velocity(h, rho, a, z[0], z[1]);
                                                });
    auto csv = open_csv(ctx, r, "truncated_velocity.csv");
    csv << "ix,ip,x,p,count,occupied,v_x,v_p,reference_x,reference_p,se_x,se_p,within_3se\n";
    std::size_t occupied = 0, within = 0;
    for (const auto& b : field.bins) {
      const bool ok = std::abs(b.mean[0] - b.reference[0]) <= 3 * b.se[0] + 1e-12 &&
                      std::abs(b.mean[1] - b.reference[1]) <= 3 * b.se[1] + 1e-12;
      if (b.occupied) {
        ++occupied;
        within += ok;
      }
      csv << b.ix << ',' << b.ip << ',' << b.x << ',' << b.p << ',' << b.count << ',' << b.occupied << ','
          << b.mean[0] << ',' << b.mean[1] << ',' << b.reference[0] << ',' << b.reference[1] << ',' << b.se[0]
          << ',' << b.se[1] << ',' << ok << '\n';
    }
    const double fraction = occupied ? double(within) / double(occupied) : 0.0;
    write_ensemble(ctx.output_dir / "final.ens", traj.snapshots.back());
    add_file(r, ctx, "final.ens");
    r.metrics = {{"samples", traj.snapshots.back().count()},
                 {"final_time", traj.times.back()},
                 {"bins_x", field.nx},
                 {"bins_p", field.np},
                 {"occupied_bins", occupied},
                 {"fraction_within_3se", fraction}};
    r.checks.push_back(make_check("fraction_within_3se", fraction, ">=", 0.95));
    return r;
  };
}

Runner prepare_scaling(const Section& root) {
  const Section s = root.child("scaling");
  const double mass = s.positive("mass", 1.0), omega = s.positive("omega", 1.0), beta = s.positive("beta", 1.0);
  const std::string observable = s.choice("observable", {"total_energy", "kinetic_energy"}, "total_energy");
  const auto sizes_raw = s.integers("sizes");
  std::vector<std::size_t> sizes;
  for (int n : sizes_raw) {
    if (n < 1) s.fail("sizes", "entries must be positive");
    if (!sizes.empty() && static_cast<std::size_t>(n) <= sizes.back()) s.fail("sizes", "must ascend");
    sizes.push_back(static_cast<std::size_t>(n));
  }
  if (sizes.size() < 2) s.fail("sizes", "needs at least two sizes for a slope");
  const auto realizations = static_cast<std::size_t>(s.at_least("realizations", 2));
  return [=](const RunContext& ctx) {
    RunResult r;
    const bool kinetic = observable == "kinetic_energy";
    const Observable obs = [=](std::span<const double> z) {
      double e = 0.0;
      for (std::size_t a = 0; a < z.size() / 2; ++a) {
        e += 0.5 * z[2 * a + 1] * z[2 * a + 1] / mass;
        if (!kinetic) e += 0.5 * mass * omega * omega * z[2 * a] * z[2 * a];
      }
      return e;
    };
    const ScalingTable table =
        ensemble_average_scaling(obs, thermal_oscillator_sampler(mass, omega, beta), sizes, realizations, ctx.seed);
    auto csv = open_csv(ctx, r, "scaling.csv");
    csv << "n,mean,spread,relative\n";
    for (const auto& row : table.rows) csv << row.n << ',' << row.mean << ',' << row.spread << ',' << row.relative << '\n';
    r.metrics = {{"slope", table.slope},
                 {"realizations", realizations},
                 {"first_relative", table.rows.front().relative},
                 {"last_relative", table.rows.back().relative}};
    r.checks.push_back(make_check("slope_error", std::abs(table.slope + 0.5), "<=", 0.05));
    return r;
  };
}

Runner prepare_entropy_series(const Section& root) {
  const ClassicalHSpec h = parse_classical(root.child("classical"));
  const ClassicalEnsemble ens = parse_classical_ensemble(root.child("ensemble"), h);
  const ClassicalEvolution ev = parse_classical_evolution(root.child("evolution"));
  const Section cs = root.child("cells");
  const int bins = static_cast<int>(cs.at_least("bins", 1));
  const auto xr = cs.numbers("x_range"), pr = cs.numbers("p_range");
  if (xr.size() != 2 || !(xr[1] > xr[0])) cs.fail("x_range", "needs [lo, hi] with hi > lo");
  if (pr.size() != 2 || !(pr[1] > pr[0])) cs.fail("p_range", "needs [lo, hi] with hi > lo");
  const double dz1 = cs.positive("dz_per_particle", 2.0 * std::numbers::pi);
  const int n = particle_count(h);
  if (std::pow(double(bins), 2.0 * n) > 2e7) cs.fail("bins", "bins^(2N) phase cells exceed 2e7");
  return [=](const RunContext& ctx) {
    RunResult r;
    const PhaseTrajectories traj = evolve_ensemble(h, ens.sample(h, ctx.seed), ev.time_step, ev.steps, ev.record_stride);
    std::vector<double> lo, hi;
    for (int a = 0; a < n; ++a) {
      lo.insert(lo.end(), {xr[0], pr[0]});
      hi.insert(hi.end(), {xr[1], pr[1]});
    }
    const std::size_t width = 2 * static_cast<std::size_t>(n);
    auto csv = open_csv(ctx, r, "entropy_series.csv");
    csv << "t,S_G_cg,S_B_one_particle,outside_fraction\n";
    std::vector<double> sg;
    double outside_max = 0.0;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
      const auto& snap = traj.snapshots[k];
      const auto hist = statmech::histogram(snap.states, width, lo, hi, std::vector<int>(width, bins));
      const double s_cg = statmech::gibbs_entropy(hist, std::pow(dz1, n));
      const double s_b1 = statmech::one_particle_boltzmann(snap.states, static_cast<std::size_t>(n), 2, {xr[0], pr[0]},
                                                           {xr[1], pr[1]}, {bins, bins}, dz1);
      const double outside = double(hist.outside) / double(snap.count());
      outside_max = std::max(outside_max, outside);
      sg.push_back(s_cg);
      csv << traj.times[k] << ',' << s_cg << ',' << s_b1 << ',' << outside << '\n';
    }
    double peak = sg.front(), drop = 0.0;
    for (double v : sg) {
      peak = std::max(peak, v);
      drop = std::max(drop, peak - v);
    }
    const double rise = peak - sg.front();
    const double drop_fraction = rise > 0.0 ? drop / rise : 1.0;
    r.metrics = {{"snapshots", sg.size()},          {"S_G_cg_initial", sg.front()},
                 {"S_G_cg_final", sg.back()},        {"S_G_cg_rise", rise},
                 {"S_G_cg_drop_fraction", drop_fraction}, {"max_outside_fraction", outside_max}};
    r.checks.push_back(make_check("S_G_cg_rise", rise, ">", 0.0));
    r.checks.push_back(make_check("S_G_cg_drop_fraction", drop_fraction, "<=", kTrendTolerance));
    return r;
  };
}

}  // namespace bohm::experiments::detail
