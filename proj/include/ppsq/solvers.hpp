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

// Accelerated stochastic methods driven by quantized gradients: the primal
// method for unconstrained problems and the primal-dual method for
// affine-constrained ones. Both share one core parameterised by the
// gradient sampler.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ppsq/affine.hpp"
#include "ppsq/common.hpp"
#include "ppsq/oracle.hpp"
#include "ppsq/schedule.hpp"
#include "ppsq/trace.hpp"

namespace ppsq {

/// The schedule fails one of the coefficient conditions.
class ScheduleError : public std::runtime_error {
 public:
  explicit ScheduleError(std::vector<Violation> v)
      : std::runtime_error(describe(v)), violations_(std::move(v)) {}
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  static std::string describe(const std::vector<Violation>& v) {
    std::string s = "invalid schedule: " + std::to_string(v.size()) + " violation(s)";
    if (!v.empty())
      s += "; first: condition " + std::to_string(v.front().condition) +
           " at t=" + std::to_string(v.front().t) + ": " + v.front().message;
    return s;
  }
  std::vector<Violation> violations_;
};

/// Iterates stopped being finite.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_valid(const Schedule& s, double lipschitz, int T) {
  require(T >= 0 && T <= s.horizon(), "solver: T outside schedule horizon");
  auto v = validate(s, lipschitz, T);
  if (!v.empty()) throw ScheduleError(std::move(v));
}

/// One sampled gradient message: the decoded gradient the method steps
/// with, the primal restoration computed from the same samples (empty when
/// there is none), and its cost.
struct DualDraw {
  Vector gradient;
  Vector primal;
  std::uint64_t bits = 0;
  std::uint64_t calls = 0;
};

/// State after iteration t. In the primal method lambda plays x_t and mu
/// plays y_t.
struct SolverState {
  int t = 0;
  Vector lambda;
  Vector mu;
  Vector z;  // -S / beta_t
  Vector x;  // primal average; empty without restoration
  Vector S;  // sum_{i<=t} alpha_i G_i
  double A = 0.0;
  double tau = 1.0;
  std::uint64_t bits = 0;
  std::uint64_t calls = 0;
};

/// Runs T iterations. `sample(point, round, r, M)` returns a DualDraw;
/// the message of round k > 0 is drawn with the counts of step k - 1.
/// `observe(state, draw)` is called for t = 0..T.
template <class Sampler, class Observer>
SolverState accelerated_run(const Schedule& s, double lipschitz, int T,
                            Index dim, Sampler&& sample, Observer&& observe) {
  require_valid(s, lipschitz, T);
  SolverState st;
  st.mu = Vector::Zero(dim);
  DualDraw d = sample(st.mu, 0, s.batch(0), s.samples(0));
  require(d.gradient.size() == dim, "accelerated_run: gradient size mismatch");
  st.A = s.alpha(0);
  st.S = s.alpha(0) * d.gradient;
  st.lambda = -(s.alpha(0) / s.beta(0)) * d.gradient;
  st.z = -st.S / s.beta(0);
  st.x = d.primal;
  st.bits = d.bits;
  st.calls = d.calls;
  observe(static_cast<const SolverState&>(st), static_cast<const DualDraw&>(d));

  for (int t = 0; t < T; ++t) {
    const double a_next = s.alpha(t + 1);
    const double A_next = st.A + a_next;
    const double tau = a_next / A_next;
    st.mu = tau * st.z + (1.0 - tau) * st.lambda;
    d = sample(static_cast<const Vector&>(st.mu), t + 1, s.batch(t),
               s.samples(t));
    const Vector mu_hat = st.z - (a_next / s.beta(t)) * d.gradient;
    st.lambda = tau * mu_hat + (1.0 - tau) * st.lambda;
    if (st.x.size() > 0) st.x = tau * d.primal + (1.0 - tau) * st.x;
    st.S += a_next * d.gradient;
    st.t = t + 1;
    st.A = A_next;
    st.tau = tau;
    st.z = -st.S / s.beta(t + 1);
    st.bits += d.bits;
    st.calls += d.calls;
    if (!st.lambda.allFinite())
      throw NumericError("non-finite iterate at t=" + std::to_string(st.t));
    observe(static_cast<const SolverState&>(st),
            static_cast<const DualDraw&>(d));
  }
  return st;
}

/// Schedule and cost columns of a trace row.
inline TraceRow schedule_row(const Schedule& s, const SolverState& st) {
  TraceRow row;
  row.t = st.t;
  row.oracle_calls = st.calls;
  row.bits = st.bits;
  row.r = s.batch(st.t);
  row.M = s.samples(st.t);
  row.alpha = s.alpha(st.t);
  row.beta = s.beta(st.t);
  return row;
}

struct SolveOptions {
  Compression compression = Compression::pps();
  int eval_every = 1;  // dual value cadence; the last iterate is always evaluated
  double delta = 0.1;  // confidence level of the reported bound
  std::function<void(const SolverState&, const DualDraw&)> observer;
};

/// Consistency of a run with the assumptions of its accuracy bound.
struct Diagnostics {
  double max_iterate_norm = 0.0;  // max_t |lambda_t|, or max_t |y_t - x*|
  int radius_exceeded_at = -1;    // first t with the norm above R
  bool radius_below_solution = false;  // a known solution lies outside R
  double epsilon = kNaN;          // bound at T
  bool bound_violated = false;    // observed error above the bound
  std::vector<std::string> messages;

  bool consistent() const {
    return radius_exceeded_at < 0 && !radius_below_solution && !bound_violated;
  }
};

// ---------------------------------------------------------------------------
// Primal-dual method.

/// Mini-batch dual gradient, PPS-encoded. The restoration shares the batch:
/// g = b - A xbar with xbar the batch mean of grad F*(-A^T mu, xi).
inline auto affine_sampler(const AffineProblem& p, const Compression& c,
                           Rng& rng) {
  return [&p, c, &rng](const Vector& mu, int, std::int64_t r,
                       std::int64_t M) {
    DualDraw d;
    d.primal = restore_primal(p, -p.A.transpose() * mu, r, rng);
    EncodedGradient enc = compress(p.b - p.A * d.primal, M, c, rng);
    d.gradient = std::move(enc.decoded);
    d.bits = enc.bits;
    d.calls = static_cast<std::uint64_t>(r);
    return d;
  };
}

struct PrimalDualResult {
  Vector lambda;
  Vector x;
  RunTrace trace;
  Diagnostics diagnostics;
};

inline PrimalDualResult primal_dual_solve(const AffineProblem& p,
                                          const Schedule& s, int T, Rng& rng,
                                          const SolveOptions& opt = {}) {
  require(opt.eval_every >= 1, "primal_dual_solve: eval_every must be >= 1");
  PrimalDualResult out;
  Diagnostics& diag = out.diagnostics;
  auto observe = [&](const SolverState& st, const DualDraw& d) {
    TraceRow row = schedule_row(s, st);
    if (st.t % opt.eval_every == 0 || st.t == T)
      row.dual_value = dual_value(p, st.lambda);
    if (p.primal_value && p.f_star)
      row.primal_gap = p.primal_value(st.x) - *p.f_star;
    row.gap = feasibility_gap(p, st.x);
    out.trace.rows.push_back(row);

    const double norm = st.lambda.norm();
    diag.max_iterate_norm = std::max(diag.max_iterate_norm, norm);
    if (norm > p.radius && diag.radius_exceeded_at < 0)
      diag.radius_exceeded_at = st.t;
    if (opt.observer) opt.observer(st, d);
  };
  SolverState st = accelerated_run(s, p.lipschitz, T, p.dual_dim(),
                                   affine_sampler(p, opt.compression, rng),
                                   observe);
  out.lambda = std::move(st.lambda);
  out.x = std::move(st.x);

  if (p.lambda_star && p.lambda_star->norm() > p.radius * (1.0 + 1e-12)) {
    diag.radius_below_solution = true;
    diag.messages.push_back("|lambda*| exceeds R: the bound does not apply");
  }
  if (diag.radius_exceeded_at >= 0)
    diag.messages.push_back("|lambda_t| exceeded R first at t=" +
                            std::to_string(diag.radius_exceeded_at));
  const double a_norm = operator_norm(p.A);
  if (p.radius > 0.0 && a_norm > 0.0) {
    diag.epsilon = epsilon_bound(T, theory_constants(opt.delta), s, p.radius,
                                 p.lipschitz, a_norm,
                                 BoundVariant::primal_dual);
    const TraceRow& last = out.trace.back();
    if ((!std::isnan(last.primal_gap) && last.primal_gap > diag.epsilon) ||
        last.gap > diag.epsilon / p.radius) {
      diag.bound_violated = true;
      diag.messages.push_back("observed error above the bound at T");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Primal method.

struct PrimalProblem {
  OracleSpec oracle;
  std::function<double(const Vector& x)> value;
  double lipschitz = 0.0;
  double radius = 0.0;  // |y_t - x*| <= R
  std::optional<Vector> x_star;
  std::optional<double> f_star;
};

struct PrimalResult {
  Vector x;
  std::vector<double> values;  // f(x_t), t = 0..T
  RunTrace trace;
  Diagnostics diagnostics;
};

inline PrimalResult primal_solve(const PrimalProblem& p, const Schedule& s,
                                 int T, Rng& rng,
                                 const SolveOptions& opt = {}) {
  PrimalResult out;
  Diagnostics& diag = out.diagnostics;
  auto sample = [&](const Vector& y, int, std::int64_t r, std::int64_t M) {
    EncodedGradient enc =
        quantized_call(p.oracle, y, r, M, opt.compression, rng);
    DualDraw d;
    d.gradient = std::move(enc.decoded);
    d.bits = enc.bits;
    d.calls = static_cast<std::uint64_t>(r);
    return d;
  };
  auto observe = [&](const SolverState& st, const DualDraw& d) {
    TraceRow row = schedule_row(s, st);
    const double f = p.value ? p.value(st.lambda) : kNaN;
    out.values.push_back(f);
    if (p.f_star) row.primal_gap = f - *p.f_star;
    out.trace.rows.push_back(row);
    if (p.x_star) {
      const double dist = (st.mu - *p.x_star).norm();
      diag.max_iterate_norm = std::max(diag.max_iterate_norm, dist);
      if (dist > p.radius && diag.radius_exceeded_at < 0)
        diag.radius_exceeded_at = st.t;
    }
    if (opt.observer) opt.observer(st, d);
  };
  SolverState st = accelerated_run(s, p.lipschitz, T, p.oracle.dim, sample,
                                   observe);
  out.x = std::move(st.lambda);
  if (diag.radius_exceeded_at >= 0)
    diag.messages.push_back("|y_t - x*| exceeded R first at t=" +
                            std::to_string(diag.radius_exceeded_at));
  if (p.radius > 0.0) {
    diag.epsilon = epsilon_bound(T, theory_constants(opt.delta), s, p.radius,
                                 p.lipschitz, 1.0, BoundVariant::primal);
    const double gap = out.trace.back().primal_gap;
    if (!std::isnan(gap) && gap > diag.epsilon) {
      diag.bound_violated = true;
      diag.messages.push_back("observed error above the bound at T");
    }
  }
  return out;
}

}  // namespace ppsq
