#include "aimlake/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "aimlake/error.hpp"
#include "aimlake/expression.hpp"
#include "aimlake/util.hpp"

namespace aimlake {

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw Error(ErrorKind::ConfigError, key + ": " + why);
}

void only_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
  if (!node.IsMap()) bad(where.empty() ? "<root>" : where, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) bad(where.empty() ? key : where + "." + key, "unknown key");
  }
}

template <typename T>
void read(const YAML::Node& node, const std::string& key, const std::string& path, T& out) {
  const YAML::Node v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    bad(path, "wrong type");
  }
}

void read_source(const YAML::Node& node, const std::string& name, FieldSource& out) {
  if (node[name] && node[name + "_table"]) bad("fields." + name, "give either an expression or a table, not both");
  if (node[name]) {
    read(node, name, "fields." + name, out.expression);
    out.table_path.clear();
    try {
      Expression::parse(out.expression);
    } catch (const Error& e) {
      bad("fields." + name, e.what());
    }
  }
  if (node[name + "_table"]) {
    read(node, name + "_table", "fields." + name + "_table", out.table_path);
    out.expression.clear();
  }
}

double eval_length(const std::string& text, const std::string& key) {
  try {
    const double v = Expression::parse(text)({});
    if (!(v > 0)) bad(key, "must be positive");
    return v;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    bad(key, e.what());
  }
}

}  // namespace

double Scenario::side_length() const { return eval_length(grid.side_length, "grid.side_length"); }

Grid Scenario::make_grid() const { return make_grid(side_length()); }

Grid Scenario::make_grid(double L) const {
  try {
    return Grid::make(L, grid.points, grid.cutoff);
  } catch (const Error& e) {
    bad("grid", e.what());
  }
}

CoefficientFields Scenario::make_fields() const { return make_fields(make_grid()); }

CoefficientFields Scenario::make_fields(const Grid& g) const {
  auto resolve = [&](FieldSource s) {
    if (!s.table_path.empty() && std::filesystem::path(s.table_path).is_relative()) {
      s.table_path = (std::filesystem::path(base_dir) / s.table_path).string();
    }
    return s;
  };
  return aimlake::make_fields(g, sample_source(g, resolve(fields.b), "fields.b_table"),
                     sample_source(g, resolve(fields.nu), "fields.nu_table"),
                     sample_source(g, resolve(fields.eta), "fields.eta_table"));
}

Scenario parse_scenario(const std::string& text, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("scenario: ") + e.what());
  }
  Scenario sc;
  sc.base_dir = base_dir;
  sc.hash = sha256_hex(text);
  only_keys(root, "", {"name", "grid", "fields", "forcing", "integrator", "dynamics", "aim", "decay", "seed", "output"});
  read(root, "name", "name", sc.name);
  if (sc.name.empty()) bad("name", "required");
  read(root, "seed", "seed", sc.seed);
  read(root, "output", "output", sc.output);

  if (const auto g = root["grid"]) {
    only_keys(g, "grid", {"side_length", "points", "cutoff"});
    read(g, "side_length", "grid.side_length", sc.grid.side_length);
    read(g, "points", "grid.points", sc.grid.points);
    read(g, "cutoff", "grid.cutoff", sc.grid.cutoff);
  }
  if (const auto f = root["fields"]) {
    only_keys(f, "fields", {"b", "nu", "eta", "b_table", "nu_table", "eta_table"});
    read_source(f, "b", sc.fields.b);
    read_source(f, "nu", sc.fields.nu);
    read_source(f, "eta", sc.fields.eta);
  }
  if (const auto f = root["forcing"]) {
    only_keys(f, "forcing", {"kind", "amplitude", "decay_kappa", "mode", "g_profile"});
    std::string kind = "Zero";
    read(f, "kind", "forcing.kind", kind);
    sc.forcing.kind = forcing_kind_from(kind);
    read(f, "amplitude", "forcing.amplitude", sc.forcing.amplitude);
    read(f, "decay_kappa", "forcing.decay_kappa", sc.forcing.decay_kappa);
    read(f, "mode", "forcing.mode", sc.forcing.mode);
    read(f, "g_profile", "forcing.g_profile", sc.forcing.g_profile);
    if (sc.forcing.kind == ForcingKind::IntegrableL1 && !(sc.forcing.decay_kappa > 0)) {
      bad("forcing.decay_kappa", "must be positive for IntegrableL1");
    }
    if (sc.forcing.kind == ForcingKind::DerivativeForm && sc.forcing.g_profile.empty()) {
      bad("forcing.g_profile", "required for DerivativeForm");
    }
    if (sc.forcing.mode < 1) bad("forcing.mode", "must be >= 1");
  }
  if (const auto n = root["integrator"]) {
    only_keys(n, "integrator", {"dt", "horizon", "spinup"});
    read(n, "dt", "integrator.dt", sc.integrator.dt);
    read(n, "horizon", "integrator.horizon", sc.integrator.horizon);
    read(n, "spinup", "integrator.spinup", sc.integrator.spinup);
  }
  if (!(sc.integrator.dt > 0)) bad("integrator.dt", "must be positive");
  if (!(sc.integrator.horizon > 0)) bad("integrator.horizon", "must be positive");
  if (const auto d = root["dynamics"]) {
    only_keys(d, "dynamics", {"ensemble", "initial_radius", "margin", "spacing", "samples", "cutoff_samples",
                              "lipschitz_pairs", "energy_dt", "energy_horizon", "sample_dt"});
    read(d, "ensemble", "dynamics.ensemble", sc.dynamics.ensemble);
    read(d, "initial_radius", "dynamics.initial_radius", sc.dynamics.initial_radius);
    read(d, "margin", "dynamics.margin", sc.dynamics.margin);
    read(d, "spacing", "dynamics.spacing", sc.dynamics.spacing);
    read(d, "samples", "dynamics.samples", sc.dynamics.samples);
    read(d, "cutoff_samples", "dynamics.cutoff_samples", sc.dynamics.cutoff_samples);
    read(d, "lipschitz_pairs", "dynamics.lipschitz_pairs", sc.dynamics.lipschitz_pairs);
    read(d, "energy_dt", "dynamics.energy_dt", sc.dynamics.energy_dt);
    read(d, "energy_horizon", "dynamics.energy_horizon", sc.dynamics.energy_horizon);
    read(d, "sample_dt", "dynamics.sample_dt", sc.dynamics.sample_dt);
  }
  if (sc.dynamics.ensemble < 1) bad("dynamics.ensemble", "must be >= 1");
  if (const auto a = root["aim"]) {
    only_keys(a, "aim", {"n", "levels", "tau", "paper_schedule", "chi", "delta0", "memo_resolution", "budget",
                         "include_tail", "n_sweep", "sweep_level", "audit_samples", "bound_cuts", "bound_times",
                         "bound_taus"});
    read(a, "n", "aim.n", sc.aim.n);
    read(a, "levels", "aim.levels", sc.aim.levels);
    if (a["tau"]) {
      if (a["tau"].IsSequence()) {
        read(a, "tau", "aim.tau", sc.aim.tau);
      } else {
        double t = 0;
        read(a, "tau", "aim.tau", t);
        sc.aim.tau = {t};
      }
    }
    read(a, "paper_schedule", "aim.paper_schedule", sc.aim.paper_schedule);
    read(a, "chi", "aim.chi", sc.aim.chi);
    read(a, "delta0", "aim.delta0", sc.aim.delta0);
    read(a, "memo_resolution", "aim.memo_resolution", sc.aim.memo_resolution);
    read(a, "budget", "aim.budget", sc.aim.budget);
    read(a, "include_tail", "aim.include_tail", sc.aim.include_tail);
    read(a, "n_sweep", "aim.n_sweep", sc.aim.n_sweep);
    read(a, "sweep_level", "aim.sweep_level", sc.aim.sweep_level);
    read(a, "audit_samples", "aim.audit_samples", sc.aim.audit_samples);
    read(a, "bound_cuts", "aim.bound_cuts", sc.aim.bound_cuts);
    read(a, "bound_times", "aim.bound_times", sc.aim.bound_times);
    read(a, "bound_taus", "aim.bound_taus", sc.aim.bound_taus);
  }
  if (sc.aim.n < 1) bad("aim.n", "must be >= 1");
  if (sc.aim.levels < 0) bad("aim.levels", "must be >= 0");
  if (sc.aim.tau.empty()) bad("aim.tau", "must not be empty");
  for (double t : sc.aim.tau)
    if (!(t > 0)) bad("aim.tau", "entries must be positive");
  if (const auto d = root["decay"]) {
    only_keys(d, "decay", {"enabled", "alpha", "box_ladder", "horizon", "dt", "record_dt", "initial_radius", "q",
                           "lp_times", "mollifiers", "smallness_C"});
    read(d, "enabled", "decay.enabled", sc.decay.enabled);
    read(d, "alpha", "decay.alpha", sc.decay.alpha);
    read(d, "box_ladder", "decay.box_ladder", sc.decay.box_ladder);
    read(d, "horizon", "decay.horizon", sc.decay.horizon);
    read(d, "dt", "decay.dt", sc.decay.dt);
    read(d, "record_dt", "decay.record_dt", sc.decay.record_dt);
    read(d, "initial_radius", "decay.initial_radius", sc.decay.initial_radius);
    read(d, "q", "decay.q", sc.decay.q);
    read(d, "lp_times", "decay.lp_times", sc.decay.lp_times);
    read(d, "mollifiers", "decay.mollifiers", sc.decay.mollifiers);
    read(d, "smallness_C", "decay.smallness_C", sc.decay.smallness_C);
  }
  if (!(sc.decay.alpha > 0)) bad("decay.alpha", "must be positive");
  if (!(sc.decay.q >= 1.0 && sc.decay.q <= 2.0)) bad("decay.q", "must lie in [1, 2]");
  for (const auto& m : sc.decay.mollifiers) {
    if (m != "Identity" && m != "Gaussian" && m != "HeatEvolved" && m != "DeltaMinusGaussian") {
      bad("decay.mollifiers", "unsupported mollifier '" + m + "'");
    }
  }
  for (const auto& L : sc.decay.box_ladder) eval_length(L, "decay.box_ladder");

  // Existence of tables and grid validity.
  for (const auto* src : {&sc.fields.b, &sc.fields.nu, &sc.fields.eta}) {
    if (src->table_path.empty()) continue;
    std::filesystem::path p(src->table_path);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    if (!std::filesystem::exists(p)) {
      const char* key = src == &sc.fields.b ? "fields.b_table" : src == &sc.fields.nu ? "fields.nu_table" : "fields.eta_table";
      bad(key, "file not found: " + p.string());
    }
  }
  const Grid g = sc.make_grid();
  if (sc.aim.n >= (2 * g.cutoff + 1) * (2 * g.cutoff + 1) - 1) bad("aim.n", "must be below the basis dimension");

  // Explicit-part stability heuristic.
  const Eigen::ArrayXd eta = sc.fields.eta.table_path.empty()
                                 ? sample_expression(g, Expression::parse(sc.fields.eta.expression))
                                 : Eigen::ArrayXd::Zero(1);
  const double scale = std::max({eta.abs().maxCoeff(), std::abs(sc.forcing.amplitude), sc.forcing.decay_kappa});
  if (sc.integrator.dt * scale > 0.5) bad("integrator.dt", "dt * max(sup eta, forcing scale) exceeds 0.5");
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ConfigError, "scenario: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string base = std::filesystem::absolute(path).parent_path().string();
  Scenario sc = parse_scenario(ss.str(), base);
  sc.source_path = path;
  return sc;
}

}  // namespace aimlake
