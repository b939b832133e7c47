#include "bohm/experiments.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "bohm/states.hpp"
#include "experiment_support.hpp"

namespace bohm::experiments {

namespace fs = std::filesystem;
using nlohmann::json;
using config::ConfigError;
using config::Section;

const std::vector<ExperimentInfo>& catalog() {
  static const std::vector<ExperimentInfo> list = {
      {"evolve", "propagate a wave field and record frames, norm and energy",
       {"grid", "hamiltonian", "state", "evolution"}},
      {"continuity", "closed-system continuity residual and its step-halving ratio",
       {"cases[].grid", "cases[].hamiltonian", "cases[].state", "continuity"}},
      {"subsystem_currents", "subsystem continuity residual and integral-vs-operator truncated current",
       {"grid", "hamiltonian", "state", "partition", "continuity"}},
      {"bohm_full", "Bohmian ensemble under the full velocity, or the static thermal box ensemble",
       {"grid", "hamiltonian", "state", "evolution", "ensemble", "thermal_box"}},
      {"bohm_truncated", "truncated-velocity ensemble: marginal statistics and path divergence",
       {"grid", "hamiltonian", "state", "evolution", "partition", "ensemble"}},
      {"equivariance", "distance between a full-velocity ensemble and |psi|^2, with a frozen control",
       {"grid", "hamiltonian", "state", "evolution", "ensemble"}},
      {"classical_liouville", "density constancy along Hamiltonian flow and phase-space incompressibility",
       {"classical", "ensemble", "evolution", "damping"}},
      {"classical_truncated", "binned subsystem phase velocity against the Gaussian conditional mean",
       {"classical", "ensemble", "evolution", "partition", "binning"}},
      {"scaling", "relative fluctuation of an extensive observable against system size",
       {"scaling"}},
      {"entropy_series", "coarse-grained Gibbs and one-particle Boltzmann entropy along a classical flow",
       {"classical", "ensemble", "evolution", "cells"}},
      {"free_expansion", "quantum Boltzmann entropy along Bohmian paths of an expanding gas",
       {"grid", "hamiltonian", "state", "evolution", "ensemble", "macrostates"}},
      {"thermo", "canonical thermodynamics by differencing ln Z against direct sums",
       {"thermo"}},
      {"first_law", "dE - T dS + P dV residual on (V, T) grids and its refinement",
       {"first_law"}},
      {"typicality", "reduced states of random microcanonical spin-chain states against canonical states",
       {"chain", "typicality"}},
      {"cat_mixture", "von Neumann and Gibbs entropy identities and the two-branch mixture bound",
       {"oscillator", "cat"}},
  };
  return list;
}

Check make_check(std::string name, double value, std::string relation, double threshold) {
  bool ok = false;
  if (relation == "<") ok = value < threshold;
  else if (relation == "<=") ok = value <= threshold;
  else if (relation == ">") ok = value > threshold;
  else if (relation == ">=") ok = value >= threshold;
  else if (relation == "==") ok = value == threshold;
  else throw InvalidExtent("unknown check relation " + relation);
  return {std::move(name), value, threshold, std::move(relation), ok};
}

bool RunResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

Prepared prepare(const json& cfg) {
  const Section root(cfg);
  Prepared p;
  std::vector<std::string> names;
  for (const auto& e : catalog()) names.push_back(e.name);
  p.experiment = root.choice("experiment", names);
  p.seed = root.unsigned_integer("seed", 1);
  p.output_dir = root.string("output_dir", "");
  p.config = cfg;
  using namespace detail;
  static const std::vector<std::pair<std::string, Runner (*)(const Section&)>> table = {
      {"evolve", prepare_evolve},
      {"continuity", prepare_continuity},
      {"subsystem_currents", prepare_subsystem_currents},
      {"bohm_full", prepare_bohm_full},
      {"bohm_truncated", prepare_bohm_truncated},
      {"equivariance", prepare_equivariance},
      {"classical_liouville", prepare_classical_liouville},
      {"classical_truncated", prepare_classical_truncated},
      {"scaling", prepare_scaling},
      {"entropy_series", prepare_entropy_series},
      {"free_expansion", prepare_free_expansion},
      {"thermo", prepare_thermo},
      {"first_law", prepare_first_law},
      {"typicality", prepare_typicality},
      {"cat_mixture", prepare_cat_mixture},
  };
  for (const auto& [name, fn] : table)
    if (name == p.experiment) p.run = fn(root);
  root.reject_unknown();
  return p;
}

Prepared prepare_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  json cfg;
  try {
    cfg = json::parse(in, nullptr, true, false);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  return prepare(cfg);
}

namespace {

std::string hex(const unsigned char* digest, unsigned len) {
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;
  void update(const char* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }
  std::string finish() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx_, digest, &len);
    return hex(digest, len);
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.finish();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  Sha256 h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.finish();
}

Manifest write_manifest(const Prepared& prepared, const RunContext& ctx, const RunResult& result,
                        double wall_seconds) {
  Manifest m;
  json files = json::array();
  std::vector<fs::path> sorted = result.files;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (const auto& f : sorted)
    files.push_back({{"path", f.generic_string()},
                     {"bytes", fs::file_size(ctx.output_dir / f)},
                     {"sha256", sha256_file(ctx.output_dir / f)}});
  json checks = json::array();
  for (const auto& c : result.checks)
    checks.push_back({{"name", c.name}, {"value", c.value}, {"relation", c.relation},
                      {"threshold", c.threshold}, {"passed", c.passed}});
  m.metrics_hash = sha256_hex(result.metrics.dump());
  m.json = {{"experiment", prepared.experiment},
            {"config", prepared.config},
            {"version", kVersion},
            {"seed", ctx.seed},
            {"wall_seconds", wall_seconds},
            {"files", files},
            {"metrics", result.metrics},
            {"metrics_hash", m.metrics_hash},
            {"checks", checks},
            {"passed", result.passed()}};
  std::ofstream(ctx.output_dir / "manifest.json") << m.json.dump(2) << '\n';
  return m;
}

Outcome execute(const Prepared& prepared, const RunContext& ctx) {
  fs::create_directories(ctx.output_dir);
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  out.result = prepared.run(ctx);
  out.result.experiment = prepared.experiment;
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.manifest = write_manifest(prepared, ctx, out.result, wall);
  return out;
}

// ---------------------------------------------------------------- shared parsers

namespace detail {

Grid parse_grid(const Section& s) {
  GridSpec g;
  g.particle_count = static_cast<int>(s.at_least("particles", 1, 1));
  g.dims_per_particle = static_cast<int>(s.at_least("dims_per_particle", 1, 1));
  if (g.dims_per_particle > 2) s.fail("dims_per_particle", "must be 1 or 2");
  g.points_per_axis = static_cast<int>(s.at_least("points_per_axis", 8));
  g.lo = s.number("lo");
  g.hi = s.number("hi");
  if (!(g.hi > g.lo)) s.fail("hi", "must exceed lo");
  g.boundary = s.choice("boundary", {"periodic", "dirichlet"}, "periodic") == "periodic" ? Boundary::periodic
                                                                                       : Boundary::dirichlet;
  g.spin_dims = s.integers("spin_dims", {});
  if (s.has("memory_budget_bytes"))
    g.memory_budget = static_cast<std::size_t>(s.at_least("memory_budget_bytes", 1));
  return at_path(s.path(), [&] { return Grid(g); });
}

HamiltonianSpec parse_hamiltonian(const Section& s, const Grid& grid) {
  HamiltonianSpec h;
  h.masses = s.numbers("masses", std::vector<double>(static_cast<std::size_t>(grid.particles()), 1.0));
  if (h.masses.size() != static_cast<std::size_t>(grid.particles()))
    s.fail("masses", "needs one entry per particle");
  h.time_step = s.positive("time_step", 1e-3);
  const std::string def = grid.periodic() ? "split_step" : "crank_nicolson";
  h.stepper = s.choice("stepper", {"split_step", "crank_nicolson"}, def) == "split_step"
                  ? Stepper::split_step_spectral
                  : Stepper::crank_nicolson;
  if (s.has("potential")) {
    for (const Section& t : s.children("potential")) {
      const std::string type = t.choice("type", {"harmonic", "barrier", "pair", "spin"});
      if (type == "harmonic") h.potential.push_back(HarmonicPotential{t.numbers("omega"), t.number("center", 0.0)});
      else if (type == "barrier")
        h.potential.push_back(GaussianBarrier{t.number("height"), t.positive("width"), t.number("center", 0.0)});
      else if (type == "pair")
        h.potential.push_back(PairCoupling{t.number("lambda"), static_cast<int>(t.integer("first", 0)),
                                           static_cast<int>(t.integer("second", 1))});
      else
        h.potential.push_back(SpinCoupling{t.number("mu"), static_cast<int>(t.integer("particle", 0))});
    }
  }
  at_path(s.path(), [&] {
    validate(h, grid);
    return 0;
  });
  return h;
}

WaveField parse_state(const Section& s, const Grid& grid, const HamiltonianSpec& h) {
  const std::string type = s.choice("type", {"gaussian", "coherent", "entangled", "box_eigenstate", "plane_wave"});
  if (type == "gaussian") {
    std::vector<states::Packet1D> axes;
    for (const Section& p : s.children("packets"))
      axes.push_back({p.number("center"), p.positive("sigma"), p.number("momentum", 0.0)});
    if (axes.size() != static_cast<std::size_t>(grid.axes()))
      s.fail("packets", "needs one packet per grid axis (" + std::to_string(grid.axes()) + ")");
    return at_path(s.path(), [&] { return states::gaussian_packet(grid, axes); });
  }
  if (grid.axes() == 1 || type == "entangled") {
    if (type == "coherent")
      return at_path(s.path(), [&] {
        return states::coherent_state(grid, h.masses[0], s.positive("omega"), s.number("x0", 0.0),
                                      s.number("p0", 0.0));
      });
    if (type == "box_eigenstate") {
      const int level = static_cast<int>(s.at_least("level", 1));
      if (grid.periodic()) s.fail("type", "box_eigenstate needs a dirichlet grid");
      return at_path(s.path(), [&] { return states::box_eigenstate(grid, level); });
    }
    if (type == "plane_wave") return at_path(s.path(), [&] { return states::plane_wave(grid, s.number("k")); });
    if (grid.particles() != 2 || grid.dims() != 1)
      s.fail("type", "entangled needs two particles in one dimension");
    states::EntangledGaussian e;
    e.sigma_sum = s.positive("sigma_sum", e.sigma_sum);
    e.sigma_diff = s.positive("sigma_diff", e.sigma_diff);
    e.kappa = s.number("kappa", 0.0);
    e.k0 = s.number("k0", 0.0);
    e.center0 = s.number("center0", 0.0);
    e.center1 = s.number("center1", 0.0);
    return at_path(s.path(), [&] { return states::entangled_gaussian(grid, e); });
  }
  s.fail("type", type + " needs a one-axis grid");
}

QuantumSetup parse_setup(const Section& s) {
  QuantumSetup q;
  q.grid = parse_grid(s.child("grid"));
  q.h = parse_hamiltonian(s.child("hamiltonian"), q.grid);
  q.psi = parse_state(s.child("state"), q.grid, q.h);
  return q;
}

Evolution parse_evolution(const Section& s) {
  Evolution e;
  e.t_final = s.positive("t_final");
  e.frame_stride = static_cast<int>(s.at_least("frame_stride", 1, 1));
  return e;
}

EnsembleParams parse_ensemble(const Section& s) {
  EnsembleParams e;
  e.samples = static_cast<std::size_t>(s.at_least("samples", 1, static_cast<long>(e.samples)));
  e.bins = static_cast<int>(s.at_least("bins", 1, e.bins));
  e.substeps = static_cast<int>(s.at_least("substeps", 1, e.substeps));
  e.eps_rel = s.positive("eps_rel", e.eps_rel);
  if (e.eps_rel > 1e-3) s.fail("eps_rel", "must lie in (0, 1e-3]");
  e.polylines = static_cast<std::size_t>(s.at_least("polylines", 0, static_cast<long>(e.polylines)));
  return e;
}

SubsystemPartition parse_partition(const Section& s, const Grid& grid) {
  SubsystemPartition part = at_path(s.key_path("a"), [&] { return complement_partition(grid, s.integers("a")); });
  at_path(s.path(), [&] {
    validate(part, grid);
    return 0;
  });
  return part;
}

classical::ClassicalHSpec parse_classical(const Section& s) {
  classical::ClassicalHSpec h;
  h.masses = s.numbers("masses");
  if (h.masses.empty()) s.fail("masses", "needs at least one particle");
  if (s.has("terms")) {
    for (const Section& t : s.children("terms")) {
      const std::string type = t.choice("type", {"harmonic", "pair", "chain", "quartic"});
      if (type == "harmonic") h.terms.push_back(classical::HarmonicTerm{t.numbers("omega")});
      else if (type == "pair")
        h.terms.push_back(classical::PairTerm{t.number("lambda"), static_cast<int>(t.integer("first", 0)),
                                              static_cast<int>(t.integer("second", 1))});
      else if (type == "chain") h.terms.push_back(classical::ChainTerm{t.number("coupling")});
      else h.terms.push_back(classical::QuarticTerm{t.number("g")});
    }
  }
  at_path(s.path(), [&] {
    classical::validate(h);
    return 0;
  });
  return h;
}

classical::PhaseEnsemble ClassicalEnsemble::sample(const classical::ClassicalHSpec& h, std::uint64_t seed) const {
  return thermal ? classical::sample_thermal(h, beta, samples, seed)
                 : classical::sample_gaussian(mean, cov, samples, seed);
}

classical::InitialDensity ClassicalEnsemble::density() const {
  if (thermal) return classical::ThermalDensity{beta};
  return classical::GaussianDensity{mean, cov};
}

ClassicalEnsemble parse_classical_ensemble(const Section& s, const classical::ClassicalHSpec& h) {
  ClassicalEnsemble e;
  e.samples = static_cast<std::size_t>(s.at_least("samples", 2));
  const std::size_t width = 2 * h.masses.size();
  if (s.has("beta")) {
    e.thermal = true;
    e.beta = s.positive("beta");
    if (s.has("mean")) s.fail("mean", "give either beta or mean and covariance");
    at_path(s.key_path("beta"), [&] { return classical::thermal_covariance(h, e.beta); });
    return e;
  }
  const auto mean = s.numbers("mean");
  const auto cov = s.numbers("covariance");
  if (mean.size() != width) s.fail("mean", "needs " + std::to_string(width) + " entries (x, p per particle)");
  if (cov.size() != width * width)
    s.fail("covariance", "needs " + std::to_string(width * width) + " entries, row-major");
  e.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(width));
  e.cov = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      cov.data(), static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(width));
  if (!e.cov.isApprox(e.cov.transpose(), 1e-12)) s.fail("covariance", "must be symmetric");
  if (Eigen::LLT<Eigen::MatrixXd>(e.cov).info() != Eigen::Success) s.fail("covariance", "must be positive definite");
  return e;
}

ClassicalEvolution parse_classical_evolution(const Section& s) {
  ClassicalEvolution e;
  e.time_step = s.positive("time_step");
  e.steps = s.at_least("steps", 1);
  e.record_stride = s.at_least("record_stride", 1, e.steps);
  return e;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

std::vector<double> parse_axis(const Section& s, long min_points) {
  const double lo = s.positive("lo");
  const double hi = s.number("hi");
  if (!(hi > lo)) s.fail("hi", "must exceed lo");
  const long n = s.at_least("points", min_points);
  return linspace(lo, hi, static_cast<std::size_t>(n));
}

void add_file(RunResult& result, const RunContext&, const fs::path& relative) {
  result.files.push_back(relative);
}

void add_tree(RunResult& result, const RunContext& ctx, const fs::path& relative) {
  for (const auto& e : fs::recursive_directory_iterator(ctx.output_dir / relative))
    if (e.is_regular_file()) result.files.push_back(fs::relative(e.path(), ctx.output_dir));
}

std::ofstream open_csv(const RunContext& ctx, RunResult& result, const std::string& name) {
  std::ofstream out(ctx.output_dir / name);
  if (!out) throw FormatError("cannot open " + (ctx.output_dir / name).string());
  out.precision(17);
  add_file(result, ctx, name);
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

}  // namespace bohm::experiments
