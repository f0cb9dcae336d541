// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

// Run configurations: a YAML document describing one solver run. parse()
// checks the document completely before anything is built, so that every
// error carries the line it came from; serialise() writes the normalised
// form with all defaults filled in.

#pragma once

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppsq/schedule.hpp"
#include "ppsq/trace.hpp"

namespace ppsq::experiment {

/// Invalid configuration. line() is 1-based; 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, int line = 0, int column = 0)
      : std::runtime_error(format(message, line, column)),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  static std::string format(const std::string& m, int line, int column) {
    if (line <= 0) return m;
    return "line " + std::to_string(line) + ", column " +
           std::to_string(column) + ": " + m;
  }
  int line_, column_;
};

enum class SolverKind { primal, primal_dual, decentralized };

inline std::string to_string(SolverKind k) {
  switch (k) {
    case SolverKind::primal: return "primal";
    case SolverKind::primal_dual: return "primal_dual";
    case SolverKind::decentralized: return "decentralized";
  }
  return "?";
}

struct ProblemConfig {
  std::string kind = "quadratic";  // quadratic | log_sum_exp | wasserstein
  std::uint64_t seed = 1;          // instance generator
  double noise = 0.0;              // per-component oracle noise (quadratic, lse)

  // quadratic
  int dim = 10;
  int constraints = 3;       // primal_dual only
  std::string centers_file;  // CSV, one center per row

  // log_sum_exp
  int terms = 20;
  std::string matrix_file;  // CSV, terms x dim, rows on the simplex

  // wasserstein
  std::string mode = "gaussian";  // gaussian | image
  int support = 50;
  int side = 16;
  int blobs = 3;
  double blob_width = 0.08;
  std::optional<double> gamma;
  std::int64_t eval_samples = 2000;
  double b_star = 1.0;  // bound on |grad f_i(x*)|, sets R

  friend bool operator==(const ProblemConfig&, const ProblemConfig&) = default;
};

struct TopologyConfig {
  std::string kind;  // ring | star | complete | grid | erdos_renyi
  int nodes = 0;
  int rows = 0, cols = 0;  // grid
  double p = 0.5;          // erdos_renyi
  std::uint64_t seed = 1;  // erdos_renyi

  bool present() const { return !kind.empty(); }
  friend bool operator==(const TopologyConfig&, const TopologyConfig&) = default;
};

struct ScheduleConfig {
  SamplePolicy::Kind policy = SamplePolicy::Kind::constant;
  std::optional<std::int64_t> r;
  std::optional<std::int64_t> M;
  std::optional<double> eps;  // variable policies
  std::optional<double> beta_factor;  // constant beta = factor * L
  std::optional<double> sigma, l1_bound, radius, lipschitz;  // overrides
  double J = 1.0;

  friend bool operator==(const ScheduleConfig&, const ScheduleConfig&) = default;
};

struct StoppingConfig {
  std::optional<int> iterations;
  std::optional<double> target_epsilon;
  int max_iterations = 100000;

  friend bool operator==(const StoppingConfig&, const StoppingConfig&) = default;
};

struct OutputConfig {
  std::string dir = "out";
  std::string trace;     // default: <config stem>.csv
  std::string edge_log;  // decentralized only; empty: none

  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct RunConfig {
  std::string name = "run";
  std::uint64_t seed = 1;
  SolverKind solver = SolverKind::primal_dual;
  Compression::Kind compression = Compression::Kind::pps;
  int float_bits = 64;
  int eval_every = 1;
  double delta = 0.1;
  std::uint64_t order_seed = 0;
  ProblemConfig problem;
  TopologyConfig topology;
  ScheduleConfig schedule;
  StoppingConfig stopping;
  OutputConfig output;
  // Directory relative file names are resolved against; not serialised.
  std::filesystem::path base_dir = ".";

  friend bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.name == b.name && a.seed == b.seed && a.solver == b.solver &&
           a.compression == b.compression && a.float_bits == b.float_bits &&
           a.eval_every == b.eval_every && a.delta == b.delta &&
           a.order_seed == b.order_seed && a.problem == b.problem &&
           a.topology == b.topology && a.schedule == b.schedule &&
           a.stopping == b.stopping && a.output == b.output;
  }
};

inline std::filesystem::path resolve(const RunConfig& c,
                                     const std::string& file) {
  std::filesystem::path p(file);
  return p.is_absolute() ? p : c.base_dir / p;
}

namespace detail {

inline ConfigError error_at(const YAML::Node& n, const std::string& msg) {
  const YAML::Mark m = n.Mark();
  if (m.is_null()) return ConfigError(msg);
  return ConfigError(msg, m.line + 1, m.column + 1);
}

/// Reads one mapping, remembering which keys were consumed.
class MapReader {
 public:
  MapReader(const YAML::Node& node, std::string where)
      : node_(node), where_(std::move(where)) {
    if (!node_.IsMap()) throw error_at(node_, where_ + ": expected a mapping");
  }

  bool has(const std::string& key) const { return bool(node_[key]); }

  YAML::Node node(const std::string& key) {
    used_.insert(key);
    return node_[key];
  }

  template <class T>
  std::optional<T> optional(const std::string& key) {
    YAML::Node n = node(key);
    if (!n) return std::nullopt;
    if (!n.IsScalar()) throw error_at(n, qualified(key) + ": expected a scalar");
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      throw error_at(n, qualified(key) + ": cannot read '" + n.Scalar() + "'");
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    return optional<T>(key).value_or(std::move(fallback));
  }

  template <class T>
  T required(const std::string& key) {
    auto v = optional<T>(key);
    if (!v) throw error_at(node_, qualified(key) + ": missing");
    return *v;
  }

  YAML::Node mark() const { return node_; }

  std::string qualified(const std::string& key) const {
    return where_.empty() ? key : where_ + "." + key;
  }

  /// Rejects keys nobody asked for.
  void finish() const {
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!used_.count(key))
        throw error_at(kv.first, "unknown key '" + qualified(key) + "'");
    }
  }

 private:
  YAML::Node node_;
  std::string where_;
  std::set<std::string> used_;
};

inline void check(bool ok, const YAML::Node& at, const std::string& msg) {
  if (!ok) throw error_at(at, msg);
}

template <class E>
E parse_enum(MapReader& r, const std::string& key, E fallback,
             const std::vector<std::pair<std::string, E>>& names) {
  YAML::Node n = r.node(key);
  if (!n) return fallback;
  const std::string s = n.IsScalar() ? n.Scalar() : "";
  for (const auto& [name, value] : names)
    if (name == s) return value;
  std::string allowed;
  for (const auto& [name, value] : names)
    allowed += (allowed.empty() ? "" : ", ") + name;
  throw error_at(n, r.qualified(key) + ": '" + s + "' is not one of " + allowed);
}

inline const std::vector<std::pair<std::string, SolverKind>>& solver_names() {
  static const std::vector<std::pair<std::string, SolverKind>> v = {
      {"primal", SolverKind::primal},
      {"primal_dual", SolverKind::primal_dual},
      {"decentralized", SolverKind::decentralized}};
  return v;
}

inline const std::vector<std::pair<std::string, Compression::Kind>>&
compression_names() {
  static const std::vector<std::pair<std::string, Compression::Kind>> v = {
      {"pps", Compression::Kind::pps},
      {"pps_simplified", Compression::Kind::pps_simplified},
      {"identity", Compression::Kind::identity}};
  return v;
}

inline const std::vector<std::pair<std::string, SamplePolicy::Kind>>&
policy_names() {
  using K = SamplePolicy::Kind;
  static const std::vector<std::pair<std::string, K>> v = {
      {"constant", K::constant},     {"m_from_r", K::m_from_r},
      {"r_from_m", K::r_from_m},     {"variable_r", K::variable_r},
      {"variable_m", K::variable_m}};
  return v;
}

template <class E>
std::string enum_name(E value,
                      const std::vector<std::pair<std::string, E>>& names) {
  for (const auto& [name, v] : names)
    if (v == value) return name;
  return "?";
}

inline void check_file(const RunConfig& c, const std::string& file,
                       const YAML::Node& at, const std::string& key) {
  if (file.empty()) return;
  check(std::filesystem::is_regular_file(resolve(c, file)), at,
        key + ": file '" + file + "' does not exist");
}

inline void parse_problem(RunConfig& c, const YAML::Node& node) {
  MapReader r(node, "problem");
  ProblemConfig& p = c.problem;
  YAML::Node kind = r.node("kind");
  check(bool(kind), node, "problem.kind: missing");
  p.kind = kind.Scalar();
  p.seed = r.get<std::uint64_t>("seed", p.seed);

  if (p.kind == "quadratic") {
    check(!r.has("dim") || !r.has("centers_file"), node,
          "problem: give either dim or centers_file, not both");
    p.dim = r.get<int>("dim", p.dim);
    p.noise = r.get<double>("noise", p.noise);
    p.centers_file = r.get<std::string>("centers_file", "");
    check_file(c, p.centers_file, r.node("centers_file"),
               "problem.centers_file");
    if (c.solver == SolverKind::primal_dual)
      p.constraints = r.get<int>("constraints", p.constraints);
    check(p.dim >= 1 && p.constraints >= 1, node,
          "problem: dim and constraints must be >= 1");
  } else if (p.kind == "log_sum_exp") {
    check(c.solver == SolverKind::primal, kind,
          "problem.kind: log_sum_exp runs with solver primal only");
    check(!(r.has("dim") || r.has("terms")) || !r.has("matrix_file"), node,
          "problem: give either dim/terms or matrix_file, not both");
    p.dim = r.get<int>("dim", p.dim);
    p.terms = r.get<int>("terms", p.terms);
    p.noise = r.get<double>("noise", p.noise);
    p.matrix_file = r.get<std::string>("matrix_file", "");
    check_file(c, p.matrix_file, r.node("matrix_file"), "problem.matrix_file");
    check(p.dim >= 1 && p.terms >= 1, node,
          "problem: dim and terms must be >= 1");
  } else if (p.kind == "wasserstein") {
    check(c.solver == SolverKind::decentralized, kind,
          "problem.kind: wasserstein runs with solver decentralized only");
    YAML::Node mode = r.node("mode");
    if (mode) p.mode = mode.Scalar();
    check(p.mode == "gaussian" || p.mode == "image", mode ? mode : node,
          "problem.mode: must be gaussian or image");
    if (p.mode == "gaussian") {
      p.support = r.get<int>("support", p.support);
      check(p.support >= 1, node, "problem.support: must be >= 1");
    } else {
      p.side = r.get<int>("side", p.side);
      p.blobs = r.get<int>("blobs", p.blobs);
      p.blob_width = r.get<double>("blob_width", p.blob_width);
      check(p.side >= 2 && p.blobs >= 1 && p.blob_width > 0.0, node,
            "problem: need side >= 2, blobs >= 1, blob_width > 0");
    }
    p.gamma = r.optional<double>("gamma");
    check(!p.gamma || *p.gamma > 0.0, node, "problem.gamma: must be positive");
    p.eval_samples = r.get<std::int64_t>("eval_samples", p.eval_samples);
    p.b_star = r.get<double>("b_star", p.b_star);
    check(p.eval_samples >= 1 && p.b_star > 0.0, node,
          "problem: need eval_samples >= 1 and b_star > 0");
  } else {
    throw error_at(kind, "problem.kind: '" + p.kind +
                             "' is not one of quadratic, log_sum_exp, wasserstein");
  }
  check(p.noise >= 0.0, node, "problem.noise: must be >= 0");
  r.finish();
}

inline void parse_topology(RunConfig& c, const YAML::Node& node) {
  MapReader r(node, "topology");
  TopologyConfig& t = c.topology;
  YAML::Node kind = r.node("kind");
  check(bool(kind), node, "topology.kind: missing");
  t.kind = kind.Scalar();
  if (t.kind == "grid") {
    t.rows = r.required<int>("rows");
    t.cols = r.required<int>("cols");
    check(t.rows >= 1 && t.cols >= 1, node, "topology: rows, cols must be >= 1");
    t.nodes = t.rows * t.cols;
  } else if (t.kind == "ring" || t.kind == "star" || t.kind == "complete" ||
             t.kind == "erdos_renyi") {
    t.nodes = r.required<int>("nodes");
    check(t.nodes >= 1, node, "topology.nodes: must be >= 1");
    if (t.kind == "erdos_renyi") {
      t.p = r.get<double>("p", t.p);
      t.seed = r.get<std::uint64_t>("seed", t.seed);
      check(t.p > 0.0 && t.p <= 1.0, node, "topology.p: must be in (0, 1]");
    }
  } else {
    throw error_at(kind, "topology.kind: '" + t.kind +
                             "' is not one of ring, star, complete, grid, "
                             "erdos_renyi");
  }
  r.finish();
}

inline void parse_schedule(RunConfig& c, const YAML::Node& node) {
  using K = SamplePolicy::Kind;
  MapReader r(node, "schedule");
  ScheduleConfig& s = c.schedule;
  s.policy = parse_enum(r, "policy", K::constant, policy_names());
  const std::string name = enum_name(s.policy, policy_names());
  auto need = [&](bool ok, const std::string& what) {
    check(ok, node, "schedule: policy " + name + " needs " + what);
  };
  auto forbid = [&](const std::string& key) {
    if (r.has(key))
      throw error_at(r.node(key),
                     "schedule." + key + ": not used by policy " + name);
  };
  switch (s.policy) {
    case K::constant:
      s.r = r.optional<std::int64_t>("r");
      s.M = r.optional<std::int64_t>("M");
      need(s.r && s.M, "r and M");
      forbid("eps");
      break;
    case K::m_from_r:
      s.r = r.optional<std::int64_t>("r");
      need(bool(s.r), "r");
      forbid("M");
      forbid("eps");
      break;
    case K::r_from_m:
      s.M = r.optional<std::int64_t>("M");
      need(bool(s.M), "M");
      forbid("r");
      forbid("eps");
      break;
    case K::variable_r:
    case K::variable_m:
      s.eps = r.optional<double>("eps");
      need(bool(s.eps), "eps");
      check(*s.eps > 0.0, node, "schedule.eps: must be positive");
      forbid("r");
      forbid("M");
      break;
  }
  check((!s.r || *s.r >= 1) && (!s.M || *s.M >= 1), node,
        "schedule: r and M must be >= 1");

  YAML::Node beta = r.node("beta");
  if (beta) {
    if (beta.IsScalar() && beta.Scalar() == "default") {
    } else {
      MapReader b(beta, "schedule.beta");
      s.beta_factor = b.required<double>("factor");
      check(*s.beta_factor > 0.0, beta, "schedule.beta.factor: must be positive");
      b.finish();
    }
  }
  s.sigma = r.optional<double>("sigma");
  s.l1_bound = r.optional<double>("l1_bound");
  s.radius = r.optional<double>("radius");
  s.lipschitz = r.optional<double>("lipschitz");
  s.J = r.get<double>("J", s.J);
  check(!s.sigma || *s.sigma >= 0.0, node, "schedule.sigma: must be >= 0");
  check(!s.l1_bound || *s.l1_bound > 0.0, node,
        "schedule.l1_bound: must be positive");
  check(!s.radius || *s.radius > 0.0, node, "schedule.radius: must be positive");
  check(!s.lipschitz || *s.lipschitz > 0.0, node,
        "schedule.lipschitz: must be positive");
  r.finish();
}

inline void parse_stopping(RunConfig& c, const YAML::Node& node) {
  MapReader r(node, "stopping");
  StoppingConfig& s = c.stopping;
  s.iterations = r.optional<int>("iterations");
  s.target_epsilon = r.optional<double>("target_epsilon");
  s.max_iterations = r.get<int>("max_iterations", s.max_iterations);
  check(s.iterations.has_value() != s.target_epsilon.has_value(), node,
        "stopping: give exactly one of iterations, target_epsilon");
  check(!s.iterations || *s.iterations >= 0, node,
        "stopping.iterations: must be >= 0");
  check(!s.target_epsilon || *s.target_epsilon > 0.0, node,
        "stopping.target_epsilon: must be positive");
  check(s.max_iterations >= 0, node, "stopping.max_iterations: must be >= 0");
  r.finish();
}

inline void parse_output(RunConfig& c, const YAML::Node& node) {
  MapReader r(node, "output");
  OutputConfig& o = c.output;
  o.dir = r.get<std::string>("dir", o.dir);
  o.trace = r.get<std::string>("trace", o.trace);
  o.edge_log = r.get<std::string>("edge_log", "");
  check(o.edge_log.empty() || c.solver == SolverKind::decentralized, node,
        "output.edge_log: decentralized runs only");
  r.finish();
}

}  // namespace detail

/// Parses a run configuration. `base_dir` resolves relative file names;
/// `name` is used when the document has none.
inline RunConfig parse(const std::string& text,
                       const std::filesystem::path& base_dir = ".",
                       const std::string& name = "run") {
  using namespace detail;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  if (!root || root.IsNull()) throw ConfigError("empty configuration");
  MapReader r(root, "");
  RunConfig c;
  c.base_dir = base_dir;
  c.name = r.get<std::string>("name", name);
  c.seed = r.get<std::uint64_t>("seed", c.seed);
  c.solver = parse_enum(r, "solver", c.solver, solver_names());
  c.compression = parse_enum(r, "compression", c.compression, compression_names());
  c.float_bits = r.get<int>("float_bits", c.float_bits);
  check(c.float_bits == 32 || c.float_bits == 64, root,
        "float_bits: must be 32 or 64");
  c.eval_every = r.get<int>("eval_every", c.eval_every);
  check(c.eval_every >= 1, root, "eval_every: must be >= 1");
  c.delta = r.get<double>("delta", c.delta);
  check(c.delta > 0.0 && c.delta < 1.0, root, "delta: must be in (0, 1)");
  if (c.solver == SolverKind::decentralized)
    c.order_seed = r.get<std::uint64_t>("order_seed", c.order_seed);

  YAML::Node problem = r.node("problem");
  check(bool(problem), root, "problem: missing");
  parse_problem(c, problem);

  YAML::Node topology = r.node("topology");
  if (c.solver == SolverKind::decentralized) {
    check(bool(topology), root, "topology: missing (required by solver decentralized)");
    parse_topology(c, topology);
  } else {
    check(!topology, topology ? topology : root,
          "topology: only used by solver decentralized");
  }

  YAML::Node schedule = r.node("schedule");
  check(bool(schedule), root, "schedule: missing");
  parse_schedule(c, schedule);

  YAML::Node stopping = r.node("stopping");
  check(bool(stopping), root, "stopping: missing");
  parse_stopping(c, stopping);

  if (YAML::Node output = r.node("output")) parse_output(c, output);
  if (c.output.trace.empty()) c.output.trace = c.name + ".csv";
  r.finish();
  return c;
}

inline RunConfig load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open '" + file.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), file.parent_path().empty() ? "." : file.parent_path(),
               file.stem().string());
}

namespace detail {

inline void emit_double(YAML::Emitter& e, const std::string& key, double v) {
  e << YAML::Key << key << YAML::Value << ppsq::detail::format_double(v);
}

}  // namespace detail

/// Normalised document: every field the run depends on, defaults included.
inline std::string serialise(const RunConfig& c) {
  using detail::emit_double;
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "name" << YAML::Value << c.name;
  e << YAML::Key << "seed" << YAML::Value << c.seed;
  e << YAML::Key << "solver" << YAML::Value << to_string(c.solver);
  e << YAML::Key << "compression" << YAML::Value << to_string(c.compression);
  e << YAML::Key << "float_bits" << YAML::Value << c.float_bits;
  e << YAML::Key << "eval_every" << YAML::Value << c.eval_every;
  emit_double(e, "delta", c.delta);
  if (c.solver == SolverKind::decentralized)
    e << YAML::Key << "order_seed" << YAML::Value << c.order_seed;

  const ProblemConfig& p = c.problem;
  e << YAML::Key << "problem" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << p.kind;
  e << YAML::Key << "seed" << YAML::Value << p.seed;
  if (p.kind == "quadratic") {
    if (!p.centers_file.empty())
      e << YAML::Key << "centers_file" << YAML::Value << p.centers_file;
    else
      e << YAML::Key << "dim" << YAML::Value << p.dim;
    if (c.solver == SolverKind::primal_dual)
      e << YAML::Key << "constraints" << YAML::Value << p.constraints;
    emit_double(e, "noise", p.noise);
  } else if (p.kind == "log_sum_exp") {
    if (!p.matrix_file.empty()) {
      e << YAML::Key << "matrix_file" << YAML::Value << p.matrix_file;
    } else {
      e << YAML::Key << "dim" << YAML::Value << p.dim;
      e << YAML::Key << "terms" << YAML::Value << p.terms;
    }
    emit_double(e, "noise", p.noise);
  } else {
    e << YAML::Key << "mode" << YAML::Value << p.mode;
    if (p.mode == "gaussian") {
      e << YAML::Key << "support" << YAML::Value << p.support;
    } else {
      e << YAML::Key << "side" << YAML::Value << p.side;
      e << YAML::Key << "blobs" << YAML::Value << p.blobs;
      emit_double(e, "blob_width", p.blob_width);
    }
    if (p.gamma) emit_double(e, "gamma", *p.gamma);
    e << YAML::Key << "eval_samples" << YAML::Value << p.eval_samples;
    emit_double(e, "b_star", p.b_star);
  }
  e << YAML::EndMap;

  if (c.topology.present()) {
    const TopologyConfig& t = c.topology;
    e << YAML::Key << "topology" << YAML::Value << YAML::BeginMap;
    e << YAML::Key << "kind" << YAML::Value << t.kind;
    if (t.kind == "grid") {
      e << YAML::Key << "rows" << YAML::Value << t.rows;
      e << YAML::Key << "cols" << YAML::Value << t.cols;
    } else {
      e << YAML::Key << "nodes" << YAML::Value << t.nodes;
    }
    if (t.kind == "erdos_renyi") {
      emit_double(e, "p", t.p);
      e << YAML::Key << "seed" << YAML::Value << t.seed;
    }
    e << YAML::EndMap;
  }

  const ScheduleConfig& s = c.schedule;
  e << YAML::Key << "schedule" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "policy" << YAML::Value
    << detail::enum_name(s.policy, detail::policy_names());
  if (s.r) e << YAML::Key << "r" << YAML::Value << *s.r;
  if (s.M) e << YAML::Key << "M" << YAML::Value << *s.M;
  if (s.eps) emit_double(e, "eps", *s.eps);
  if (s.beta_factor) {
    e << YAML::Key << "beta" << YAML::Value << YAML::BeginMap;
    emit_double(e, "factor", *s.beta_factor);
    e << YAML::EndMap;
  } else {
    e << YAML::Key << "beta" << YAML::Value << "default";
  }
  if (s.sigma) emit_double(e, "sigma", *s.sigma);
  if (s.l1_bound) emit_double(e, "l1_bound", *s.l1_bound);
  if (s.radius) emit_double(e, "radius", *s.radius);
  if (s.lipschitz) emit_double(e, "lipschitz", *s.lipschitz);
  emit_double(e, "J", s.J);
  e << YAML::EndMap;

  const StoppingConfig& st = c.stopping;
  e << YAML::Key << "stopping" << YAML::Value << YAML::BeginMap;
  if (st.iterations) e << YAML::Key << "iterations" << YAML::Value << *st.iterations;
  if (st.target_epsilon) emit_double(e, "target_epsilon", *st.target_epsilon);
  e << YAML::Key << "max_iterations" << YAML::Value << st.max_iterations;
  e << YAML::EndMap;

  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "dir" << YAML::Value << c.output.dir;
  e << YAML::Key << "trace" << YAML::Value << c.output.trace;
  if (!c.output.edge_log.empty())
    e << YAML::Key << "edge_log" << YAML::Value << c.output.edge_log;
  e << YAML::EndMap;

  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

/// The part of a configuration that defines the problem instance, in
/// normalised form. Two traces are comparable iff these agree.
inline std::string problem_identity(const RunConfig& c) {
  RunConfig k;
  k.solver = c.solver;
  k.problem = c.problem;
  k.topology = c.topology;
  YAML::Emitter e;
  const std::string full = serialise(k);
  // Keep only the solver, problem and topology sections.
  YAML::Node n = YAML::Load(full);
  e << YAML::BeginMap;
  e << YAML::Key << "solver" << YAML::Value << n["solver"];
  e << YAML::Key << "problem" << YAML::Value << n["problem"];
  if (n["topology"]) e << YAML::Key << "topology" << YAML::Value << n["topology"];
  e << YAML::EndMap;
  return e.c_str();
}

/// Short tag written into trace files, e.g. "quadratic/primal_dual".
inline std::string problem_tag(const RunConfig& c) {
  std::string tag = c.problem.kind;
  if (c.problem.kind == "wasserstein") tag += "-" + c.problem.mode;
  tag += "/" + to_string(c.solver);
  if (c.topology.present()) tag += "/" + c.topology.kind + std::to_string(c.topology.nodes);
  return tag;
}

inline std::uint64_t problem_fingerprint(const RunConfig& c) {
  return fnv1a64(problem_identity(c));
}

}  // namespace ppsq::experiment
