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

// Builds the problem, topology and schedule a RunConfig describes, runs the
// solver, and compares traces.

#pragma once

#include <glob.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ppsq/affine.hpp"
#include "ppsq/experiment/config.hpp"
#include "ppsq/network/decentralized.hpp"
#include "ppsq/network/laplacian.hpp"
#include "ppsq/network/topology.hpp"
#include "ppsq/problems/log_sum_exp.hpp"
#include "ppsq/problems/quadratic.hpp"
#include "ppsq/problems/wasserstein.hpp"
#include "ppsq/schedule.hpp"
#include "ppsq/solvers.hpp"
#include "ppsq/trace.hpp"

namespace ppsq::experiment {

/// Environment variable that replaces output.dir.
inline constexpr const char* kOutputDirEnv = "PPSQ_OUTPUT_DIR";

/// Rows of a headerless numeric CSV file.
inline Matrix read_matrix_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open '" + file.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    for (const auto& f : ppsq::detail::split_commas(line)) {
      const double v = ppsq::detail::parse_double(f);
      if (!std::isfinite(v))
        throw ConfigError(file.string() + ":" + std::to_string(lineno) +
                          ": not a finite number");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ConfigError(file.string() + ":" + std::to_string(lineno) +
                        ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError(file.string() + ": no data");
  Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      M(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return M;
}

/// A configuration turned into solver inputs. Exactly one of `affine`,
/// `primal`, `nodes` is populated, according to the solver.
struct Instance {
  RunConfig config;
  std::string tag;
  std::uint64_t fingerprint = 0;

  double lipschitz = 0.0;
  double radius = 0.0;
  double sigma = 0.0;
  double l1_bound = 0.0;
  double a_norm = 1.0;  // |A|_2, used by the primal-dual bound
  Index message_dim = 0;
  Compression compression;
  bool simplex_messages = false;

  std::optional<AffineProblem> affine;
  std::optional<PrimalProblem> primal;
  std::vector<LocalConjugate> nodes;
  std::optional<Topology> topology;
  std::optional<LaplacianSpectrum> spectrum;
  std::optional<double> node_f_star;
};

namespace detail {

inline Topology make_topology(const TopologyConfig& t) {
  if (t.kind == "ring") return ring(t.nodes);
  if (t.kind == "star") return star(t.nodes);
  if (t.kind == "complete") return complete(t.nodes);
  if (t.kind == "grid") return grid(t.rows, t.cols);
  return erdos_renyi(t.nodes, t.p, t.seed);
}

/// Quadratic centers as columns: from the file's rows, or generated.
inline Matrix quadratic_centers(const RunConfig& c, Index count) {
  const ProblemConfig& p = c.problem;
  if (p.centers_file.empty()) return random_centers(count, p.dim, p.seed);
  Matrix rows = read_matrix_csv(resolve(c, p.centers_file));
  return rows.transpose();
}

inline std::vector<QuadraticLocal> locals_of(const Matrix& C) {
  std::vector<QuadraticLocal> out;
  for (Index i = 0; i < C.cols(); ++i) out.emplace_back(Vector(C.col(i)));
  return out;
}

inline void build_primal_dual(Instance& in) {
  const RunConfig& c = in.config;
  const ProblemConfig& p = c.problem;
  ConstrainedQuadratic q;
  if (p.centers_file.empty()) {
    q = random_constrained_quadratic(p.dim, p.constraints, p.seed);
  } else {
    const Matrix C = quadratic_centers(c, 0);
    q = random_constrained_quadratic(C.rows(), p.constraints, p.seed);
    q.locals = locals_of(C);
  }
  AffineProblem a = make_quadratic_affine(q.locals, q.A, q.b, p.noise);
  if (c.schedule.lipschitz) a.lipschitz = *c.schedule.lipschitz;
  if (c.schedule.radius) a.radius = *c.schedule.radius;
  require(a.radius > 0.0, "lambda* = 0: set schedule.radius");
  in.lipschitz = a.lipschitz;
  in.radius = a.radius;
  in.sigma = c.schedule.sigma.value_or(a.sigma);
  in.l1_bound =
      c.schedule.l1_bound.value_or(dual_gradient_l1_bound(a, a.radius));
  in.a_norm = operator_norm(a.A);
  in.message_dim = a.dual_dim();
  in.affine = std::move(a);
}

inline void build_primal(Instance& in) {
  const RunConfig& c = in.config;
  const ProblemConfig& p = c.problem;
  PrimalProblem pp;
  if (p.kind == "quadratic") {
    const Matrix C = quadratic_centers(c, 1);
    const auto agg = aggregate(locals_of(C));
    const QuadraticLocal f = agg.quadratic;
    const double offset = agg.offset;
    pp.oracle.dim = f.dim();
    pp.oracle.gradient = [f](const Vector& x) { return f.gradient(x); };
    pp.value = [f, offset](const Vector& x) { return f.value(x) + offset; };
    pp.lipschitz = f.smoothness();
    pp.x_star = f.center();
    pp.f_star = offset;
    pp.radius = std::max(f.center().norm(), 1e-12);
    // |grad f|_1 <= sqrt(n) L R on the ball, doubled to leave room for noise.
    in.l1_bound = 2.0 * std::sqrt(static_cast<double>(f.dim())) *
                  pp.lipschitz * pp.radius;
  } else {
    Matrix A;
    if (p.matrix_file.empty()) {
      Rng g = make_rng(p.seed, 1);
      A = random_row_stochastic(p.terms, p.dim, g);
    } else {
      A = read_matrix_csv(resolve(c, p.matrix_file));
    }
    auto f = std::make_shared<const LogSumExp>(A, Vector::Ones(A.rows()));
    pp.oracle.dim = f->dim();
    pp.oracle.gradient = [f](const Vector& x) { return f->gradient(x); };
    pp.value = [f](const Vector& x) { return f->value(x); };
    pp.lipschitz = f->lipschitz();
    pp.radius = 1.0;
    in.l1_bound = f->row_stochastic() && p.noise == 0.0
                      ? 1.0
                      : 2.0 * A.cwiseAbs().colwise().sum().maxCoeff();
  }
  if (c.schedule.lipschitz) pp.lipschitz = *c.schedule.lipschitz;
  if (c.schedule.radius) pp.radius = *c.schedule.radius;
  if (c.schedule.l1_bound) in.l1_bound = *c.schedule.l1_bound;
  const double n = static_cast<double>(pp.oracle.dim);
  pp.oracle.noise = NoiseModel::gaussian(p.noise);
  pp.oracle.l1_bound = in.l1_bound;
  pp.oracle.sigma = c.schedule.sigma.value_or(p.noise * std::sqrt(n));
  in.lipschitz = pp.lipschitz;
  in.radius = pp.radius;
  in.sigma = pp.oracle.sigma;
  in.message_dim = pp.oracle.dim;
  in.primal = std::move(pp);
}

inline void build_decentralized(Instance& in) {
  const RunConfig& c = in.config;
  const ProblemConfig& p = c.problem;
  in.topology = make_topology(c.topology);
  const int m = in.topology->size();
  require(m >= 2, "decentralized runs need at least 2 nodes");
  in.spectrum = laplacian(*in.topology);
  const LaplacianSpectrum& sp = *in.spectrum;
  in.a_norm = std::sqrt(sp.norm);

  double gamma = 1.0, b_star = 1.0;
  if (p.kind == "quadratic") {
    const Matrix C = quadratic_centers(c, m);
    require(C.cols() == m, "centers_file: need one row per node");
    const auto locals = locals_of(C);
    for (const auto& f : locals) in.nodes.push_back(quadratic_conjugate(f, p.noise));
    const Vector x_star = C.rowwise().mean();
    double f_star = 0.0, max_center = 0.0;
    b_star = 0.0;
    for (const auto& f : locals) {
      f_star += f.value(x_star) / m;
      b_star = std::max(b_star, f.gradient(x_star).norm());
      max_center = std::max(max_center, f.center().norm());
    }
    in.node_f_star = f_star;
    if (b_star == 0.0) b_star = 1.0;
    in.message_dim = C.rows();
    in.sigma = p.noise * std::sqrt(static_cast<double>(C.rows()));
    in.radius = b_star / std::sqrt(m * sp.lambda2);
    // x^i = lambda^i + c_i with |lambda^i| <= sqrt(|W|) R.
    in.l1_bound = std::sqrt(static_cast<double>(C.rows())) *
                  (max_center + in.a_norm * in.radius);
  } else {
    WassersteinBarycentre wb;
    if (p.mode == "gaussian") {
      GaussianWbConfig g;
      g.nodes = m;
      g.support = p.support;
      g.gamma = p.gamma;
      g.seed = p.seed;
      wb = make_gaussian_wb(g);
    } else {
      ImageWbConfig g;
      g.nodes = m;
      g.side = p.side;
      g.blobs = p.blobs;
      g.blob_width = p.blob_width;
      g.gamma = p.gamma;
      g.seed = p.seed;
      wb = make_image_wb(g);
    }
    gamma = wb.gamma;
    b_star = p.b_star;
    in.nodes = wb_local_conjugates(wb, p.eval_samples, derive_seed(p.seed, 1));
    in.message_dim = wb.support_size();
    // A softmax sample and its mean both lie on the simplex.
    in.sigma = std::sqrt(2.0);
    in.radius = b_star / std::sqrt(m * sp.lambda2);
    in.l1_bound = 1.0;
    in.simplex_messages = true;
  }
  in.lipschitz = decentralized_lipschitz(sp, gamma);
  if (c.schedule.lipschitz) in.lipschitz = *c.schedule.lipschitz;
  if (c.schedule.radius) in.radius = *c.schedule.radius;
  if (c.schedule.sigma) in.sigma = *c.schedule.sigma;
  if (c.schedule.l1_bound) in.l1_bound = *c.schedule.l1_bound;
}

}  // namespace detail

/// Builds the instance. Library argument errors become ConfigError.
inline Instance build(const RunConfig& c) {
  Instance in;
  in.config = c;
  in.tag = problem_tag(c);
  in.fingerprint = problem_fingerprint(c);
  in.compression = {c.compression, c.float_bits};
  try {
    switch (c.solver) {
      case SolverKind::primal_dual: detail::build_primal_dual(in); break;
      case SolverKind::primal: detail::build_primal(in); break;
      case SolverKind::decentralized: detail::build_decentralized(in); break;
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  }
  return in;
}

inline ScheduleInputs schedule_inputs(const Instance& in) {
  const RunConfig& c = in.config;
  ScheduleInputs s;
  s.lipschitz = in.lipschitz;
  s.radius = in.radius;
  s.variance.dim = static_cast<double>(in.message_dim);
  s.variance.l1_bound = in.l1_bound;
  s.variance.sigma = in.sigma;
  s.variance.compression = in.compression.kind;
  if (in.compression.kind == Compression::Kind::pps_simplified &&
      !in.simplex_messages)
    s.variance.compression = Compression::Kind::pps;
  s.policy.kind = c.schedule.policy;
  s.policy.r = c.schedule.r.value_or(1);
  s.policy.M = c.schedule.M.value_or(1);
  s.policy.eps = c.schedule.eps.value_or(0.0);
  s.policy.a_norm = in.a_norm;
  s.constants = theory_constants(c.delta, c.schedule.J);
  if (c.schedule.beta_factor)
    s.beta_override = *c.schedule.beta_factor * in.lipschitz;
  return s;
}

inline BoundVariant bound_variant(const Instance& in) {
  return in.config.solver == SolverKind::primal ? BoundVariant::primal
                                                : BoundVariant::primal_dual;
}

struct Plan {
  Schedule schedule;
  int iterations = 0;
  double epsilon = kNaN;        // bound at `iterations`
  bool target_reached = true;   // false: target-eps mode hit max_iterations
};

/// Fixes T and the schedule. In target-eps mode T is the first t with
/// epsilon(t) <= target, or max_iterations.
inline Plan plan(const Instance& in) {
  const RunConfig& c = in.config;
  const ScheduleInputs si = schedule_inputs(in);
  Plan p;
  try {
    const int horizon = c.stopping.iterations ? *c.stopping.iterations
                                              : c.stopping.max_iterations;
    p.schedule = make_schedule(si, horizon);
    p.iterations = horizon;
    auto violations = validate(p.schedule, in.lipschitz, horizon);
    if (!violations.empty()) throw ScheduleError(std::move(violations));
    const auto eps = epsilon_profile(si.constants, p.schedule, in.radius,
                                     in.lipschitz, in.a_norm,
                                     bound_variant(in));
    if (c.stopping.target_epsilon) {
      auto it = std::find_if(eps.begin(), eps.end(), [&](double e) {
        return e <= *c.stopping.target_epsilon;
      });
      p.target_reached = it != eps.end();
      if (p.target_reached) p.iterations = static_cast<int>(it - eps.begin());
    }
    p.epsilon = eps[p.iterations];
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
  return p;
}

struct RunResult {
  RunTrace trace;
  std::vector<EdgeRecord> edge_log;
  Plan plan;
  std::vector<std::string> warnings;
};

inline RunResult execute(const Instance& in, Plan p) {
  const RunConfig& c = in.config;
  RunResult out;
  const int T = p.iterations;
  if (!p.target_reached)
    out.warnings.push_back("target epsilon not reached by max_iterations=" +
                           std::to_string(T) + " (bound " +
                           ppsq::detail::format_double(p.epsilon) + ")");
  Rng rng = make_rng(c.seed);
  Diagnostics diag;
  if (in.affine) {
    SolveOptions o;
    o.compression = in.compression;
    o.eval_every = c.eval_every;
    o.delta = c.delta;
    auto r = primal_dual_solve(*in.affine, p.schedule, T, rng, o);
    out.trace = std::move(r.trace);
    diag = std::move(r.diagnostics);
  } else if (in.primal) {
    SolveOptions o;
    o.compression = in.compression;
    o.delta = c.delta;
    auto r = primal_solve(*in.primal, p.schedule, T, rng, o);
    out.trace = std::move(r.trace);
    for (auto& row : out.trace.rows)
      if (row.t % c.eval_every == 0 || row.t == T)
        row.dual_value = r.values[static_cast<std::size_t>(row.t)];
    diag = std::move(r.diagnostics);
  } else {
    DecentralizedOptions o;
    o.compression = in.compression;
    o.seed = c.seed;
    o.eval_every = c.eval_every;
    o.order_seed = c.order_seed;
    o.log_edges = !c.output.edge_log.empty();
    o.f_star = in.node_f_star;
    auto r = decentralized_solve(in.nodes, *in.topology, *in.spectrum,
                                 p.schedule, in.lipschitz, T, o);
    out.trace = std::move(r.trace);
    out.edge_log = std::move(r.edge_log);
  }
  for (const auto& m : diag.messages) out.warnings.push_back(m);
  out.trace.problem = in.tag;
  out.trace.fingerprint = in.fingerprint;
  out.plan = std::move(p);
  return out;
}

inline RunResult run(const RunConfig& c) {
  const Instance in = build(c);
  return execute(in, plan(in));
}

inline std::filesystem::path output_dir(const RunConfig& c) {
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return c.output.dir;
}

/// Writes the trace (and edge log) and returns the trace path.
inline std::filesystem::path write_outputs(const RunConfig& c,
                                           const RunResult& r) {
  const auto dir = output_dir(c);
  std::filesystem::create_directories(dir);
  const auto path = dir / c.output.trace;
  {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
    write_csv(os, r.trace);
  }
  if (!c.output.edge_log.empty()) {
    std::ofstream os(dir / c.output.edge_log, std::ios::binary);
    write_edge_log_csv(os, r.edge_log);
  }
  return path;
}

inline std::string summary(const RunResult& r) {
  using ppsq::detail::format_double;
  const TraceRow& last = r.trace.back();
  auto show = [](double v) {
    return std::isnan(v) ? std::string("nan") : format_double(v);
  };
  return "T=" + std::to_string(last.t) + " final_dual=" + show(last.dual_value) +
         " final_gap=" + show(last.gap) + " total_bits=" +
         std::to_string(last.bits) + " total_oracle_calls=" +
         std::to_string(last.oracle_calls);
}

// ---------------------------------------------------------------------------
// Comparison.

struct CompareRow {
  std::uint64_t bits = 0;
  double dual_a = kNaN;
  double dual_b = kNaN;
  double ratio = kNaN;
};

struct CompareReport {
  std::vector<CompareRow> rows;
  double min_ratio = kNaN;
  double max_ratio = kNaN;
};

/// For every evaluated row of `a`, the dual value of `b` at the same
/// cumulative bits: b's last evaluated row with bits not above a's (the row
/// with the same t when several share those bits). Traces of different
/// problems are rejected.
inline CompareReport compare(const RunTrace& a, const RunTrace& b) {
  require(a.problem == b.problem && a.fingerprint == b.fingerprint,
          "compare: traces are of different problems ('" + a.problem +
              "' vs '" + b.problem + "')");
  std::vector<const TraceRow*> eb;
  for (const auto& row : b.rows)
    if (!std::isnan(row.dual_value)) eb.push_back(&row);
  CompareReport rep;
  for (const auto& row : a.rows) {
    if (std::isnan(row.dual_value)) continue;
    auto it = std::upper_bound(eb.begin(), eb.end(), row.bits,
                               [](std::uint64_t v, const TraceRow* r) {
                                 return v < r->bits;
                               });
    if (it == eb.begin()) continue;
    const TraceRow* match = *std::prev(it);
    for (auto j = std::prev(it);; --j) {
      if ((*j)->bits != match->bits) break;
      if ((*j)->t == row.t) {
        match = *j;
        break;
      }
      if (j == eb.begin()) break;
    }
    CompareRow cr;
    cr.bits = row.bits;
    cr.dual_a = row.dual_value;
    cr.dual_b = match->dual_value;
    cr.ratio = cr.dual_a / cr.dual_b;
    rep.rows.push_back(cr);
    if (std::isfinite(cr.ratio)) {
      rep.min_ratio = std::isnan(rep.min_ratio) ? cr.ratio
                                                : std::min(rep.min_ratio, cr.ratio);
      rep.max_ratio = std::isnan(rep.max_ratio) ? cr.ratio
                                                : std::max(rep.max_ratio, cr.ratio);
    }
  }
  return rep;
}

/// Files matching a shell pattern, sorted.
inline std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> out;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  ::globfree(&g);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ppsq::experiment
