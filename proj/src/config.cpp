#include "homlab/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "homlab/analysis.hpp"
#include "homlab/errors.hpp"
#include "homlab/expression.hpp"

namespace homlab {

ExperimentKind parse_experiment_kind(const std::string& s) {
  if (s == "cell") return ExperimentKind::cell;
  if (s == "limit") return ExperimentKind::limit;
  if (s == "nse") return ExperimentKind::nse;
  if (s == "rate") return ExperimentKind::rate;
  if (s == "check") return ExperimentKind::check;
  throw ConfigError("unknown experiment kind '" + s + "'");
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::cell: return "cell";
    case ExperimentKind::limit: return "limit";
    case ExperimentKind::nse: return "nse";
    case ExperimentKind::rate: return "rate";
    case ExperimentKind::check: return "check";
  }
  return "?";
}

namespace {

class Reader {
 public:
  std::vector<std::string> errors;

  void keys(const YAML::Node& node, const std::string& path, const std::set<std::string>& allowed) {
    if (!node || node.IsNull()) return;
    if (!node.IsMap()) {
      errors.push_back(path + ": expected a mapping");
      return;
    }
    for (const auto& kv : node) {
      const std::string k = kv.first.as<std::string>();
      if (!allowed.count(k)) errors.push_back((path.empty() ? "" : path + ".") + k + ": unknown key");
    }
  }

  template <class T>
  bool get(const YAML::Node& node, const std::string& key, const std::string& path, T& out) {
    if (!node || !node.IsMap() || !node[key]) return false;
    try {
      out = node[key].as<T>();
      return true;
    } catch (const YAML::Exception&) {
      errors.push_back(path + "." + key + ": invalid value");
      return false;
    }
  }

  void check(bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  }
};

ObstacleShape parse_shape(const std::string& s) {
  if (s == "none") return ObstacleShape::none;
  if (s == "ball") return ObstacleShape::ball;
  if (s == "superellipse") return ObstacleShape::superellipse;
  throw ConfigError("unknown obstacle shape '" + s + "'");
}

bool near_integer(double v) { return std::abs(v - std::round(v)) <= 1e-9 * std::max(1.0, std::abs(v)); }

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.source = text;
  Reader rd;
  if (!root || !root.IsMap()) throw ConfigError("config must be a mapping with a 'kind' key");
  rd.keys(root, "", {"kind", "geometry", "physics", "time", "solver", "io", "seed"});

  std::string kind;
  if (!rd.get(root, "kind", "", kind)) {
    rd.errors.push_back("kind: required (cell, limit, nse, rate or check)");
  } else {
    try {
      cfg.kind = parse_experiment_kind(kind);
    } catch (const ConfigError& e) {
      rd.errors.push_back(std::string("kind: ") + e.what());
    }
  }
  long long seed = 0;
  if (rd.get(root, "seed", "", seed)) {
    rd.check(seed >= 0, "seed: must be a non-negative integer");
    cfg.seed = static_cast<std::uint64_t>(std::max(0LL, seed));
  }

  // geometry
  GeometryConfig& g = cfg.geometry;
  const YAML::Node geo = root["geometry"];
  rd.keys(geo, "geometry", {"domain", "dimension", "obstacle", "length", "epsilon", "n_per_cell", "limit_resolution"});
  std::string domain;
  if (rd.get(geo, "domain", "geometry", domain)) {
    try {
      g.domain = parse_domain_kind(domain);
    } catch (const std::exception& e) {
      rd.errors.push_back(std::string("geometry.domain: ") + e.what());
    }
  }
  rd.get(geo, "dimension", "geometry", g.dimension);
  rd.check(g.dimension == 2 || g.dimension == 3, "geometry.dimension: must be 2 or 3");
  const int d = (g.dimension == 2 || g.dimension == 3) ? g.dimension : 3;
  const YAML::Node obs = geo ? geo["obstacle"] : YAML::Node();
  rd.keys(obs, "geometry.obstacle", {"shape", "radius", "exponent", "semi_axes"});
  std::string shape;
  if (rd.get(obs, "shape", "geometry.obstacle", shape)) {
    try {
      g.obstacle.shape = parse_shape(shape);
    } catch (const ConfigError& e) {
      rd.errors.push_back(std::string("geometry.obstacle.shape: ") + e.what());
    }
  }
  rd.get(obs, "radius", "geometry.obstacle", g.obstacle.radius);
  rd.get(obs, "exponent", "geometry.obstacle", g.obstacle.exponent);
  std::vector<double> axes;
  if (rd.get(obs, "semi_axes", "geometry.obstacle", axes)) {
    rd.check(int(axes.size()) == d, "geometry.obstacle.semi_axes: need one value per dimension");
    for (std::size_t a = 0; a < axes.size() && a < 3; ++a) g.obstacle.semi_axes[a] = axes[a];
  }
  if (g.obstacle.shape == ObstacleShape::ball)
    rd.check(g.obstacle.radius > 0.0 && g.obstacle.radius < 1.0, "geometry.obstacle.radius: must lie in (0, 1)");
  if (g.obstacle.shape == ObstacleShape::superellipse) {
    rd.check(g.obstacle.exponent >= 1.0, "geometry.obstacle.exponent: must be >= 1");
    for (int a = 0; a < d; ++a)
      rd.check(g.obstacle.semi_axes[a] > 0.0 && g.obstacle.semi_axes[a] < 1.0,
               "geometry.obstacle.semi_axes: each must lie in (0, 1)");
  }
  if (geo && geo["length"]) {
    std::vector<double> len;
    double scalar = 0.0;
    if (geo["length"].IsSequence()) {
      rd.get(geo, "length", "geometry", len);
      rd.check(int(len.size()) == d, "geometry.length: need one value per dimension");
    } else if (rd.get(geo, "length", "geometry", scalar)) {
      len.assign(d, scalar);
    }
    for (std::size_t a = 0; a < len.size() && a < 3; ++a) {
      rd.check(len[a] > 0.0, "geometry.length: must be positive");
      g.length[a] = len[a];
    }
  }
  rd.get(geo, "epsilon", "geometry", g.epsilon);
  rd.get(geo, "n_per_cell", "geometry", g.n_per_cell);
  rd.get(geo, "limit_resolution", "geometry", g.limit_resolution);
  rd.check(g.n_per_cell >= 16 && g.n_per_cell % 2 == 0, "geometry.n_per_cell: must be even and >= 16");
  rd.check(g.limit_resolution >= 4, "geometry.limit_resolution: must be >= 4");
  for (std::size_t i = 0; i < g.epsilon.size(); ++i) {
    const double e = g.epsilon[i];
    rd.check(e > 0.0, "geometry.epsilon: values must be positive");
    if (i > 0) rd.check(e < g.epsilon[i - 1], "geometry.epsilon: list must be strictly decreasing");
    if (!(e > 0.0)) continue;
    for (int a = 0; a < d; ++a) {
      const double cells = g.length[a] / (2.0 * e);
      if (g.domain == DomainKind::torus) {
        if (!near_integer(cells)) {
          std::ostringstream os;
          os << "geometry.epsilon: " << e << " is not admissible on the torus (length / (2 eps) = " << cells
             << " must be an integer)";
          rd.errors.push_back(os.str());
          break;
        }
      } else if (!near_integer(cells * g.n_per_cell)) {
        std::ostringstream os;
        os << "geometry.epsilon: " << e << " does not give an integer number of lattice cells across the box";
        rd.errors.push_back(os.str());
        break;
      }
    }
  }
  if (cfg.kind == ExperimentKind::nse) rd.check(!g.epsilon.empty(), "geometry.epsilon: nse runs need at least one value");
  if (cfg.kind == ExperimentKind::rate) rd.check(g.epsilon.size() >= 3, "geometry.epsilon: rate runs need at least three values");

  // physics
  PhysicsConfig& p = cfg.physics;
  const YAML::Node ph = root["physics"];
  rd.keys(ph, "physics", {"gamma", "a", "lambda", "eta_bulk", "force", "initial_density", "initial_data"});
  p.law.gamma = 2.0;
  rd.get(ph, "gamma", "physics", p.law.gamma);
  rd.get(ph, "a", "physics", p.law.a);
  rd.get(ph, "lambda", "physics", p.lambda);
  rd.get(ph, "eta_bulk", "physics", p.eta_bulk);
  rd.check(p.law.gamma > 1.0, "physics.gamma: must be > 1");
  rd.check(p.law.a > 0.0, "physics.a: must be positive");
  rd.check(p.lambda > 0.0, "physics.lambda: must be positive");
  rd.check(p.eta_bulk >= 0.0, "physics.eta_bulk: must be non-negative");
  if (ph && ph["force"]) {
    if (ph["force"].IsSequence()) rd.get(ph, "force", "physics", p.force);
    else {
      std::string one;
      if (rd.get(ph, "force", "physics", one)) p.force = {one};
    }
    rd.check(int(p.force.size()) <= d, "physics.force: more components than dimensions");
    for (const std::string& f : p.force) {
      try {
        Expression e(f);
      } catch (const ConfigError& e) {
        rd.errors.push_back(std::string("physics.force: ") + e.what());
      }
    }
  }
  if (rd.get(ph, "initial_density", "physics", p.initial_density)) {
    try {
      Expression e(p.initial_density);
    } catch (const ConfigError& e) {
      rd.errors.push_back(std::string("physics.initial_density: ") + e.what());
    }
  }
  std::string init;
  if (rd.get(ph, "initial_data", "physics", init)) {
    if (init == "corrector") p.initial_data = InitialData::corrector;
    else if (init == "limit") p.initial_data = InitialData::limit;
    else rd.errors.push_back("physics.initial_data: must be 'corrector' or 'limit'");
  }

  // time
  TimeConfig& tc = cfg.time;
  const YAML::Node tm = root["time"];
  rd.keys(tm, "time", {"T", "cfl", "dt", "output_interval", "limit_cfl"});
  rd.get(tm, "T", "time", tc.T);
  rd.get(tm, "cfl", "time", tc.cfl);
  double dt = 0.0;
  if (rd.get(tm, "dt", "time", dt)) {
    rd.check(dt > 0.0, "time.dt: must be positive");
    tc.dt = dt;
  }
  rd.get(tm, "output_interval", "time", tc.output_interval);
  rd.get(tm, "limit_cfl", "time", tc.limit_cfl);
  rd.check(tc.T > 0.0, "time.T: must be positive");
  rd.check(tc.cfl > 0.0 && tc.cfl <= 1.0, "time.cfl: must lie in (0, 1]");
  rd.check(tc.limit_cfl > 0.0 && tc.limit_cfl <= 1.0, "time.limit_cfl: must lie in (0, 1]");
  rd.check(tc.output_interval >= 0.0, "time.output_interval: must be non-negative");

  // solver
  SolverConfig& sc = cfg.solver;
  const YAML::Node so = root["solver"];
  rd.keys(so, "solver", {"div_tol", "momentum_tol", "max_iter", "nse_tol", "relen_tolerance_constant"});
  rd.get(so, "div_tol", "solver", sc.div_tol);
  rd.get(so, "momentum_tol", "solver", sc.momentum_tol);
  rd.get(so, "max_iter", "solver", sc.max_iter);
  rd.get(so, "nse_tol", "solver", sc.nse_tol);
  rd.get(so, "relen_tolerance_constant", "solver", sc.relen_tolerance_constant);
  rd.check(sc.div_tol > 0.0 && sc.momentum_tol > 0.0 && sc.nse_tol > 0.0, "solver: tolerances must be positive");
  rd.check(sc.max_iter > 0, "solver.max_iter: must be positive");
  rd.check(sc.relen_tolerance_constant > 0.0, "solver.relen_tolerance_constant: must be positive");

  // io
  const YAML::Node io = root["io"];
  rd.keys(io, "io", {"output_dir", "dump_fields", "energy_csv"});
  rd.get(io, "output_dir", "io", cfg.io.output_dir);
  rd.get(io, "dump_fields", "io", cfg.io.dump_fields);
  rd.get(io, "energy_csv", "io", cfg.io.energy_csv);

  if (!rd.errors.empty()) {
    std::string msg = "invalid config (" + std::to_string(rd.errors.size()) + " problem" +
                      (rd.errors.size() > 1 ? "s" : "") + "):";
    for (const std::string& e : rd.errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }

  if (p.law.gamma < 2.0) {
    cfg.outside_theorem = true;
    cfg.warnings.push_back("outside the convergence theorem's hypotheses: gamma < 2 (results hold for gamma >= 2)");
  }
  const TheoreticalRate tr = theoretical_rate(p.law.gamma, p.lambda, g.domain);
  if (!(p.lambda > tr.lambda0) || tr.boundary) {
    cfg.outside_theorem = true;
    std::ostringstream os;
    os << "outside the convergence theorem's hypotheses: lambda = " << p.lambda << " <= lambda0 = " << tr.lambda0;
    cfg.warnings.push_back(os.str());
  }
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace homlab
