// Canonical thermodynamics, typicality and entropy-identity experiments.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bohm/rng.hpp"
#include "bohm/states.hpp"
#include "bohm/statmech.hpp"
#include "bohm/subsystem.hpp"
#include "experiment_support.hpp"

namespace bohm::experiments::detail {

using namespace bohm::statmech;

namespace {

// Placeholder volume axis for spectra that do not depend on volume.
const std::vector<double> kFlatVolumes = {1.0, 2.0, 3.0, 4.0, 5.0};

double max_relative(const ThermoTable& t, double ThermoPoint::*a, double ThermoPoint::*b) {
  double worst = 0.0;
  for (const auto& p : t.points) worst = std::max(worst, std::abs(p.*a - p.*b) / std::abs(p.*b));
  return worst;
}

SpectrumFamily box_family(double mass, double max_temperature) {
  return [=](double length) { return box_spectrum(length, mass, box_level_count(length, mass, max_temperature)); };
}

std::vector<double> temperature_axis(const Section& s, long min_points) {
  return parse_axis(s.child("temperatures"), min_points);
}

}  // namespace

Runner prepare_thermo(const Section& root) {
  const Section s = root.child("thermo");
  const double rel = s.positive("relative_step", 1e-4);
  if (rel >= 0.1) s.fail("relative_step", "must lie in (0, 0.1)");
  const bool has_box = s.has("box"), has_harmonic = s.has("harmonic");
  if (!has_box && !has_harmonic) s.fail("box", "give a box and/or a harmonic family");
  double mass = 1.0, omega = 1.0;
  std::vector<double> volumes, box_t, osc_t;
  if (has_box) {
    const Section b = s.child("box");
    mass = b.positive("mass", 1.0);
    volumes = parse_axis(b.child("volumes"), 5);
    box_t = temperature_axis(b, 5);
  }
  if (has_harmonic) {
    const Section hs = s.child("harmonic");
    omega = hs.positive("omega", 1.0);
    osc_t = temperature_axis(hs, 5);
  }
  return [=](const RunContext& ctx) {
    RunResult r;
    if (has_box) {
      const double t_max = box_t.back() * (1.0 + rel);
      const ThermoTable t = thermo_table(box_family(mass, t_max), volumes, box_t, rel);
      write_thermo_csv(ctx.output_dir / "thermo_box.csv", t);
      add_file(r, ctx, "thermo_box.csv");
      const double de = max_relative(t, &ThermoPoint::energy, &ThermoPoint::energy_direct);
      const double ds = max_relative(t, &ThermoPoint::entropy, &ThermoPoint::entropy_direct);
      const double dp = max_relative(t, &ThermoPoint::pressure, &ThermoPoint::pressure_direct);
      r.metrics["box"] = {{"energy_relative", de}, {"entropy_relative", ds}, {"pressure_relative", dp},
                          {"points", t.points.size()}};
      r.checks.push_back(make_check("box.energy_relative", de, "<", 1e-4));
      r.checks.push_back(make_check("box.entropy_relative", ds, "<", 1e-4));
    }
    if (has_harmonic) {
      const double t_max = osc_t.back() * (1.0 + rel);
      const auto family = [=](double) { return harmonic_spectrum(omega, harmonic_level_count(omega, t_max)); };
      const ThermoTable t = thermo_table(family, kFlatVolumes, osc_t, rel);
      write_thermo_csv(ctx.output_dir / "thermo_harmonic.csv", t);
      add_file(r, ctx, "thermo_harmonic.csv");
      double worst = 0.0;
      for (const auto& p : t.points) {
        const double exact = 0.5 * omega / std::tanh(0.5 * omega / p.temperature);
        worst = std::max(worst, std::abs(p.energy - exact) / exact);
      }
      const double ds = max_relative(t, &ThermoPoint::entropy, &ThermoPoint::entropy_direct);
      r.metrics["harmonic"] = {{"energy_vs_closed_form", worst}, {"entropy_relative", ds}};
      r.checks.push_back(make_check("harmonic.energy_vs_closed_form", worst, "<", 1e-4));
    }
    return r;
  };
}

Runner prepare_first_law(const Section& root) {
  const Section s = root.child("first_law");
  const double mass = s.positive("mass", 1.0);
  const double rel = s.positive("relative_step", 1e-4);
  if (rel >= 0.1) s.fail("relative_step", "must lie in (0, 0.1)");
  const Section vs = s.child("volumes"), ts = s.child("temperatures");
  const double v_lo = vs.positive("lo"), v_hi = vs.number("hi");
  const double t_lo = ts.positive("lo"), t_hi = ts.number("hi");
  if (!(v_hi > v_lo)) vs.fail("hi", "must exceed lo");
  if (!(t_hi > t_lo)) ts.fail("hi", "must exceed lo");
  const auto points = s.integers("points");
  if (points.size() != 2 || points[0] < 5 || points[1] - 1 != 2 * (points[0] - 1))
    s.fail("points", "needs [coarse, fine] with coarse >= 5 and fine - 1 = 2 (coarse - 1)");
  const Section tl = s.child("two_level");
  const double gap = tl.positive("gap");
  const std::vector<double> tl_t = temperature_axis(tl, 5);
  return [=](const RunContext& ctx) {
    RunResult r;
    const SpectrumFamily family = box_family(mass, t_hi * (1.0 + rel));
    FirstLawReport rep[2];
    auto csv = open_csv(ctx, r, "first_law.csv");
    csv << "points_per_axis,max,median,isochoric_median\n";
    for (int k = 0; k < 2; ++k) {
      const auto n = static_cast<std::size_t>(points[k]);
      const ThermoTable t = thermo_table(family, linspace(v_lo, v_hi, n), linspace(t_lo, t_hi, n), rel);
      rep[k] = first_law_residual(t);
      const std::string name = "thermo_" + std::to_string(n) + ".csv";
      write_thermo_csv(ctx.output_dir / name, t);
      add_file(r, ctx, name);
      csv << n << ',' << rep[k].max << ',' << rep[k].median << ',' << rep[k].isochoric_median << '\n';
      r.metrics["grid_" + std::to_string(n)] = {
          {"max", rep[k].max}, {"median", rep[k].median}, {"isochoric_median", rep[k].isochoric_median}};
    }
    const double ratio = rep[0].median / rep[1].median;
    const ThermoTable two = thermo_table([=](double) { return two_level_spectrum(gap); }, kFlatVolumes, tl_t, rel);
    const FirstLawReport two_rep = first_law_residual(two, ThermoRoute::direct);
    r.metrics["refinement_ratio"] = ratio;
    r.metrics["two_level"] = {{"max", two_rep.max}, {"median", two_rep.median}, {"points", tl_t.size()}};
    r.checks.push_back(make_check("fine.median", rep[1].median, "<", 1e-3));
    r.checks.push_back(make_check("fine.isochoric_median", rep[1].isochoric_median, "<", 1e-3));
    r.checks.push_back(make_check("refinement_ratio", ratio, ">=", 3.5));
    r.checks.push_back(make_check("two_level.max", two_rep.max, "<", 1e-6));
    return r;
  };
}

Runner prepare_typicality(const Section& root) {
  const Section cs = root.child("chain");
  SpinChain chain;
  chain.exchange = cs.number("exchange", chain.exchange);
  chain.field = cs.number("field", chain.field);
  chain.longitudinal = cs.number("longitudinal", chain.longitudinal);
  chain.bond_coupling = cs.number("bond_coupling", chain.bond_coupling);
  chain.subsystem = static_cast<int>(cs.at_least("subsystem", 1, chain.subsystem));
  const Section ts = root.child("typicality");
  const auto sizes = ts.integers("sizes");
  if (sizes.size() < 3) ts.fail("sizes", "needs at least three chain lengths for a trend");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < chain.subsystem + 2 || sizes[i] > kMaxChainSpins)
      ts.fail("sizes", "entries must lie in [subsystem + 2, " + std::to_string(kMaxChainSpins) + "]");
    if (i > 0 && sizes[i] <= sizes[i - 1]) ts.fail("sizes", "must ascend");
  }
  const int check_spins = static_cast<int>(ts.integer("check_spins", 10));
  if (std::find(sizes.begin(), sizes.end(), check_spins) == sizes.end())
    ts.fail("check_spins", "must be one of the sizes");
  TypicalityOptions opt;
  opt.reference_beta = ts.positive("reference_beta", opt.reference_beta);
  opt.min_levels = static_cast<std::size_t>(ts.at_least("min_levels", 1, static_cast<long>(opt.min_levels)));
  opt.trials = static_cast<int>(ts.at_least("trials", 1, opt.trials));
  for (int n : sizes)
    if (opt.min_levels > (std::size_t{1} << n)) ts.fail("min_levels", "exceeds the Hilbert-space dimension");
  return [=](const RunContext& ctx) {
    RunResult r;
    auto csv = open_csv(ctx, r, "typicality.csv");
    csv << "spins,energy_center,window_width,levels_in_window,entropy_beta,median_fitted_beta,median_distance,"
           "median_entropy_distance\n";
    std::vector<double> n_axis, d_axis;
    double check_distance = 0.0, beta_gap = 0.0;
    for (int n : sizes) {
      SpinChain c = chain;
      c.spins = n;
      TypicalityOptions o = opt;
      o.seed = split_seed(ctx.seed, static_cast<std::uint64_t>(n));
      const TypicalityReport rep = canonical_typicality(c, o);
      csv << n << ',' << rep.energy_center << ',' << rep.window_width << ',' << rep.levels_in_window << ','
          << rep.entropy_beta << ',' << rep.median_fitted_beta << ',' << rep.median_distance << ','
          << rep.median_entropy_distance << '\n';
      n_axis.push_back(n);
      d_axis.push_back(rep.median_distance);
      if (n == check_spins) check_distance = rep.median_distance;
      beta_gap = std::abs(rep.entropy_beta - rep.median_fitted_beta) / std::abs(rep.median_fitted_beta);
      r.metrics["N" + std::to_string(n)] = {{"median_distance", rep.median_distance},
                                            {"median_fitted_beta", rep.median_fitted_beta},
                                            {"entropy_beta", rep.entropy_beta},
                                            {"levels_in_window", rep.levels_in_window}};
    }
    const double rho = spearman(n_axis, d_axis);
    r.metrics["spearman_size_distance"] = rho;
    r.metrics["largest_beta_relative_gap"] = beta_gap;
    const std::string tag = "N" + std::to_string(check_spins);
    r.checks.push_back(make_check(tag + ".median_distance", check_distance, "<", 0.1));
    r.checks.push_back(make_check("spearman_size_distance", rho, "<", 0.0));
    r.checks.push_back(make_check("N" + std::to_string(sizes.back()) + ".beta_relative_gap", beta_gap, "<", 0.25));
    return r;
  };
}

// ---------------------------------------------------------------- entropy identities

namespace {

double oscillator_entropy(double omega, double temperature) {
  const double x = omega / temperature;
  return x / std::expm1(x) - std::log1p(-std::exp(-x));
}

Eigen::MatrixXcd thermal_operator(const std::vector<Eigenstate>& levels, double temperature) {
  std::vector<WaveField> states;
  std::vector<double> w;
  double total = 0.0;
  for (const auto& e : levels) {
    states.push_back(e.state);
    w.push_back(std::exp(-(e.energy - levels.front().energy) / temperature));
    total += w.back();
  }
  for (double& x : w) x /= total;
  return mixed_density_matrix(states, w).operator_matrix();
}

}  // namespace

Runner prepare_cat_mixture(const Section& root) {
  const Section os = root.child("oscillator");
  const double omega = os.positive("omega", 1.0), mass = os.positive("mass", 1.0);
  GridSpec g;
  g.points_per_axis = static_cast<int>(os.at_least("points_per_axis", 8));
  g.lo = os.number("lo");
  g.hi = os.number("hi");
  if (!(g.hi > g.lo)) os.fail("hi", "must exceed lo");
  const Grid grid = at_path(os.path(), [&] { return Grid(g); });
  if (grid.points() > 2048) os.fail("points_per_axis", "at most 2048 (dense thermal operators)");
  const int levels = static_cast<int>(os.at_least("levels", 2));
  if (levels > grid.n()) os.fail("levels", "cannot exceed points_per_axis");
  const Section cs = root.child("cat");
  const double t_cold = cs.positive("cold_temperature"), t_warm = cs.positive("warm_temperature");
  const double last_weight = std::exp(-omega * (levels - 1) / std::max(t_cold, t_warm));
  if (last_weight > 1e-16) os.fail("levels", "too few levels: the top weight at the warm temperature is above 1e-16");
  const double dz_scale = cs.positive("dz_scale", 3.0);
  const auto samples = static_cast<std::size_t>(cs.at_least("samples", 1, 100000));
  const int bins = static_cast<int>(cs.at_least("bins", 1, 40));
  return [=](const RunContext& ctx) {
    RunResult r;
    HamiltonianSpec h;
    h.masses = {mass};
    h.potential = {HarmonicPotential{{omega}}};
    // pure state: rank-one projector on a displaced packet
    const WaveField psi = states::coherent_state(grid, mass, omega, 1.0, 0.5);
    const double s_pure = von_neumann_entropy(mixed_density_matrix({psi}, {1.0}).operator_matrix());
    const Eigen::MatrixXcd qubit = 0.5 * Eigen::MatrixXcd::Identity(2, 2);
    const double qubit_error = std::abs(von_neumann_entropy(qubit) - std::log(2.0));
    // thermal oscillator from numerically diagonalized levels
    const auto eig = eigenstates(h, grid, levels);
    const Eigen::MatrixXcd cold = thermal_operator(eig, t_cold), warm = thermal_operator(eig, t_warm);
    const double s_cold = von_neumann_entropy(cold), s_warm = von_neumann_entropy(warm);
    const double cold_error = std::abs(s_cold - oscillator_entropy(omega, t_cold));
    const double warm_error = std::abs(s_warm - oscillator_entropy(omega, t_warm));
    // dz shift on a Gaussian phase-space sample
    std::vector<double> pts(2 * samples);
    for (std::size_t i = 0; i < samples; ++i) {
      CounterRng rng(ctx.seed, i);
      pts[2 * i] = rng.normal();
      pts[2 * i + 1] = 0.5 * rng.normal();
    }
    const auto hist = histogram(pts, 2, {-5.0, -2.5}, {5.0, 2.5}, {bins, bins});
    const double dz = 2.0 * std::numbers::pi;
    const double shift_error = std::abs(gibbs_entropy(hist, dz_scale * dz) - gibbs_entropy(hist, dz) + std::log(dz_scale));
    // cat: pointer states |alive>, |dead> carry the cold and warm branches
    const Eigen::Index n = cold.rows();
    Eigen::MatrixXcd cat = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    cat.topLeftCorner(n, n) = 0.5 * cold;
    cat.bottomRightCorner(n, n) = 0.5 * warm;
    const double average = 0.5 * (s_cold + s_warm);
    const double s_cat = von_neumann_entropy(cat);
    const double s_same = von_neumann_entropy(Eigen::MatrixXcd(0.5 * (cold + warm)));
    const double cat_gap = s_cat - average, same_gap = s_same - average;
    auto csv = open_csv(ctx, r, "entropies.csv");
    csv << "quantity,value\n";
    const std::vector<std::pair<std::string, double>> rows = {
        {"S_pure", s_pure},       {"S_qubit_error", qubit_error}, {"S_cold", s_cold},
        {"S_warm", s_warm},       {"S_cold_error", cold_error},   {"S_warm_error", warm_error},
        {"dz_shift_error", shift_error}, {"S_cat", s_cat},        {"S_same_space_mixture", s_same},
        {"cat_gap", cat_gap},     {"same_space_gap", same_gap}};
    for (const auto& [k, v] : rows) {
      csv << k << ',' << v << '\n';
      r.metrics[k] = v;
    }
    r.metrics["ln2"] = std::log(2.0);
    r.checks.push_back(make_check("S_pure", std::abs(s_pure), "<", 1e-12));
    r.checks.push_back(make_check("S_qubit_error", qubit_error, "==", 0.0));
    r.checks.push_back(make_check("S_cold_error", cold_error, "<", 1e-8));
    r.checks.push_back(make_check("S_warm_error", warm_error, "<", 1e-8));
    r.checks.push_back(make_check("dz_shift_error", shift_error, "<", 1e-12));
    r.checks.push_back(make_check("cat_bound_excess", std::abs(cat_gap) - std::log(2.0), "<=", 1e-12));
    r.checks.push_back(make_check("same_space_bound_excess", std::abs(same_gap) - std::log(2.0), "<=", 0.0));
    r.checks.push_back(make_check("same_space_gap", same_gap, ">=", 0.0));
    return r;
  };
}

}  // namespace bohm::experiments::detail
