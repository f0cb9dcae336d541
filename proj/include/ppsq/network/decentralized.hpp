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

// Synchronous-round simulator of the decentralised primal-dual method with
// per-node PPS messages and exact bit metering.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "ppsq/common.hpp"
#include "ppsq/network/laplacian.hpp"
#include "ppsq/network/topology.hpp"
#include "ppsq/oracle.hpp"
#include "ppsq/problems/quadratic.hpp"
#include "ppsq/schedule.hpp"
#include "ppsq/solvers.hpp"
#include "ppsq/trace.hpp"

namespace ppsq {

/// Node i's conjugate f_i*: a stochastic gradient oracle x^i(lambda, xi) and,
/// when available, deterministic values.
struct LocalConjugate {
  Index dim = 0;
  // Mean of r draws of grad F_i*(lambda, xi).
  std::function<Vector(const Vector& lambda, std::int64_t r, Rng& rng)>
      gradient;
  std::function<double(const Vector& lambda)> value;    // optional f_i*
  std::function<double(const Vector& x)> primal_value;  // optional f_i
};

/// Quadratic local with optional Gaussian noise on each gradient draw.
inline LocalConjugate quadratic_conjugate(const QuadraticLocal& f,
                                          double noise = 0.0) {
  require(noise >= 0.0, "quadratic_conjugate: noise must be >= 0");
  LocalConjugate c;
  c.dim = f.dim();
  c.gradient = [f, noise](const Vector& lambda, std::int64_t r, Rng& rng) {
    Vector g = f.conjugate_gradient(lambda);
    if (noise > 0.0) {
      const double s = noise / std::sqrt(static_cast<double>(r));
      for (Index i = 0; i < g.size(); ++i) g[i] += s * standard_normal(rng);
    }
    return g;
  };
  c.value = [f](const Vector& lambda) { return f.conjugate_value(lambda); };
  c.primal_value = [f](const Vector& x) { return f.value(x); };
  return c;
}

/// L = m |W|_2 / gamma for locals that are gamma-strongly convex.
inline double decentralized_lipschitz(const LaplacianSpectrum& s,
                                      double gamma) {
  require(gamma > 0.0, "decentralized_lipschitz: gamma must be positive");
  return s.size() * s.norm / gamma;
}

/// What node i sends in `round`: the batch mean of grad F_i*(mu) and its
/// encoding, both drawn from the stream (seed, i, round).
struct NodeMessage {
  Vector decoded;
  Vector primal;
  std::uint64_t bits = 0;
  std::uint64_t calls = 0;
};

inline NodeMessage node_message(const LocalConjugate& f, const Vector& mu,
                                int node, int round, std::int64_t r,
                                std::int64_t M, const Compression& c,
                                std::uint64_t seed) {
  Rng rng = make_rng(seed, static_cast<std::uint64_t>(node),
                     static_cast<std::uint64_t>(round));
  NodeMessage out;
  out.primal = f.gradient(mu, r, rng);
  EncodedGradient enc = compress(out.primal, M, c, rng);
  out.decoded = std::move(enc.decoded);
  out.bits = enc.bits;
  out.calls = static_cast<std::uint64_t>(r);
  return out;
}

struct NodeState {
  Vector lambda;
  Vector mu;
  Vector z;
  Vector x;
  Vector S;  // sum_k alpha_k sum_j W_ij G_k^j
};

struct EdgeRecord {
  int round = 0;
  int src = 0;
  int dst = 0;
  std::uint64_t bits = 0;
};

struct DecentralizedOptions {
  Compression compression = Compression::pps();
  std::uint64_t seed = 0;
  int eval_every = 1;  // dual value cadence; the last round is always evaluated
  // Nonzero: nodes are processed in a fresh random order in every phase.
  std::uint64_t order_seed = 0;
  bool log_edges = false;
  // (1/m) sum_i f_i(x*), enabling the primal gap column.
  std::optional<double> f_star;
  std::function<void(int t, const std::vector<NodeState>&)> observer;
};

struct DecentralizedResult {
  Matrix x;       // n x m, column i is node i
  Matrix lambda;  // n x m
  RunTrace trace;
  std::vector<std::uint64_t> bits_sent;      // per node
  std::vector<std::uint64_t> bits_received;  // per node
  std::vector<std::uint64_t> edge_bits;      // per topology edge, both ways
  std::vector<EdgeRecord> edge_log;
};

namespace detail {

inline Matrix node_columns(const std::vector<NodeState>& st,
                           Vector NodeState::*field) {
  Matrix X((st.front().*field).size(), static_cast<Index>(st.size()));
  for (std::size_t i = 0; i < st.size(); ++i) X.col(static_cast<Index>(i)) = st[i].*field;
  return X;
}

}  // namespace detail

inline DecentralizedResult decentralized_solve(
    const std::vector<LocalConjugate>& nodes, const Topology& g,
    const LaplacianSpectrum& spec, const Schedule& s, double lipschitz, int T,
    const DecentralizedOptions& opt = {}) {
  const int m = g.size();
  require(static_cast<int>(nodes.size()) == m && spec.size() == m,
          "decentralized_solve: one local per node");
  require(opt.eval_every >= 1, "decentralized_solve: eval_every must be >= 1");
  const Index n = nodes.front().dim;
  for (const auto& f : nodes)
    require(f.dim == n && f.gradient, "decentralized_solve: bad local oracle");
  require_valid(s, lipschitz, T);

  // Closed neighbourhoods in ascending order, so every node combines its
  // inbox in the same order regardless of scheduling.
  std::vector<std::vector<int>> closed(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    closed[i] = g.neighbors(i);
    closed[i].insert(std::lower_bound(closed[i].begin(), closed[i].end(), i), i);
  }
  std::vector<std::vector<std::size_t>> edge_index(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) edge_index[i].assign(g.neighbors(i).size(), 0);
  for (std::size_t e = 0; e < g.edges().size(); ++e) {
    auto [a, b] = g.edges()[e];
    const auto& na = g.neighbors(a);
    const auto& nb = g.neighbors(b);
    edge_index[a][std::lower_bound(na.begin(), na.end(), b) - na.begin()] = e;
    edge_index[b][std::lower_bound(nb.begin(), nb.end(), a) - nb.begin()] = e;
  }

  DecentralizedResult out;
  out.bits_sent.assign(static_cast<std::size_t>(m), 0);
  out.bits_received.assign(static_cast<std::size_t>(m), 0);
  out.edge_bits.assign(g.edges().size(), 0);

  std::vector<NodeState> st(static_cast<std::size_t>(m));
  std::vector<NodeMessage> inbox(static_cast<std::size_t>(m));
  std::vector<NodeMessage> outbox(static_cast<std::size_t>(m));
  std::uint64_t total_bits = 0, total_calls = 0;

  auto order = [&](int round, int phase) {
    std::vector<int> ord(static_cast<std::size_t>(m));
    std::iota(ord.begin(), ord.end(), 0);
    if (opt.order_seed != 0) {
      Rng rng = make_rng(opt.order_seed, static_cast<std::uint64_t>(round),
                         static_cast<std::uint64_t>(phase));
      std::shuffle(ord.begin(), ord.end(), rng);
    }
    return ord;
  };
  // Messages of a round become visible only here.
  auto deliver = [&](int round) {
    std::swap(inbox, outbox);
    for (int i = 0; i < m; ++i) {
      const std::uint64_t b = inbox[i].bits;
      total_calls += inbox[i].calls;
      const auto& nb = g.neighbors(i);
      for (std::size_t k = 0; k < nb.size(); ++k) {
        out.bits_sent[i] += b;
        out.bits_received[nb[k]] += b;
        out.edge_bits[edge_index[i][k]] += b;
        total_bits += b;
        if (opt.log_edges) out.edge_log.push_back({round, i, nb[k], b});
      }
    }
  };
  auto combine = [&](int i) {
    Vector acc = Vector::Zero(n);
    for (int j : closed[i]) acc += spec.W(i, j) * inbox[j].decoded;
    return acc;
  };
  auto record = [&](int t) {
    TraceRow row;
    row.t = t;
    row.oracle_calls = total_calls;
    row.bits = total_bits;
    row.r = s.batch(t);
    row.M = s.samples(t);
    row.alpha = s.alpha(t);
    row.beta = s.beta(t);
    const bool have_values = std::all_of(
        nodes.begin(), nodes.end(), [](const auto& f) { return bool(f.value); });
    if (have_values && (t % opt.eval_every == 0 || t == T)) {
      double v = 0.0;
      for (int i = 0; i < m; ++i) v += nodes[i].value(st[i].lambda);
      row.dual_value = v / m;
    }
    const bool have_primal = std::all_of(
        nodes.begin(), nodes.end(),
        [](const auto& f) { return bool(f.primal_value); });
    if (opt.f_star && have_primal) {
      double v = 0.0;
      for (int i = 0; i < m; ++i) v += nodes[i].primal_value(st[i].x);
      row.primal_gap = v / m - *opt.f_star;
    }
    row.gap = consensus_gap(detail::node_columns(st, &NodeState::x), spec);
    out.trace.rows.push_back(row);
    if (opt.observer) opt.observer(t, st);
  };

  // Round 0.
  for (int i : order(0, 0)) {
    st[i].mu = Vector::Zero(n);
    outbox[i] = node_message(nodes[i], st[i].mu, i, 0, s.batch(0),
                             s.samples(0), opt.compression, opt.seed);
  }
  deliver(0);
  for (int i : order(0, 1)) {
    const Vector wg = combine(i);
    st[i].lambda = -(s.alpha(0) / s.beta(0)) * wg;
    st[i].S = s.alpha(0) * wg;
    st[i].z = -st[i].S / s.beta(0);
    st[i].x = inbox[i].primal;
  }
  record(0);

  double A = s.alpha(0);
  for (int t = 0; t < T; ++t) {
    const double a_next = s.alpha(t + 1);
    const double A_next = A + a_next;
    const double tau = a_next / A_next;
    for (int i : order(t + 1, 0)) {
      st[i].mu = tau * st[i].z + (1.0 - tau) * st[i].lambda;
      outbox[i] = node_message(nodes[i], st[i].mu, i, t + 1, s.batch(t),
                               s.samples(t), opt.compression, opt.seed);
    }
    deliver(t + 1);
    for (int i : order(t + 1, 1)) {
      NodeState& ni = st[i];
      const Vector wg = combine(i);
      const Vector mu_hat = ni.z - (a_next / s.beta(t)) * wg;
      ni.lambda = tau * mu_hat + (1.0 - tau) * ni.lambda;
      ni.x = tau * inbox[i].primal + (1.0 - tau) * ni.x;
      ni.S += a_next * wg;
      ni.z = -ni.S / s.beta(t + 1);
      if (!ni.lambda.allFinite())
        throw NumericError("non-finite iterate at node " + std::to_string(i) +
                           ", t=" + std::to_string(t + 1));
    }
    A = A_next;
    record(t + 1);
  }

  out.x = detail::node_columns(st, &NodeState::x);
  out.lambda = detail::node_columns(st, &NodeState::lambda);
  return out;
}

/// Residual of sqrt(W)(lambda - grad psi(lambda)) = sqrt(W) lambda -
/// W x(sqrt(W) lambda), where psi(lambda) = sum_i f_i*((sqrt(W) lambda)^i).
/// Node vectors are columns; gradients are taken with a single draw, so
/// the locals should be deterministic.
inline double dual_gradient_identity_check(
    const std::vector<LocalConjugate>& nodes, const LaplacianSpectrum& spec,
    const Matrix& lambda) {
  const int m = spec.size();
  require(lambda.cols() == m && static_cast<int>(nodes.size()) == m,
          "dual_gradient_identity_check: one column per node");
  auto restore = [&](const Matrix& L) {
    Matrix X(L.rows(), L.cols());
    for (int i = 0; i < m; ++i) {
      Rng unused(0);
      X.col(i) = nodes[i].gradient(L.col(i), 1, unused);
    }
    return X;
  };
  const Matrix plain = lambda * spec.sqrt_W;
  const Matrix X = restore(plain);
  const Matrix grad_psi = X * spec.sqrt_W;
  const Matrix lhs = (lambda - grad_psi) * spec.sqrt_W;
  const Matrix rhs = plain - X * spec.W;
  return (lhs - rhs).norm();
}

// ---------------------------------------------------------------------------
// Bit accounting.

struct ComplexityInputs {
  double l1_bound = 1.0;  // B
  double sigma = 1.0;     // per-node oracle sigma_i
  double b_star = 1.0;    // bound on |grad f_i(x*)|
  double gamma = 1.0;
  double eps = 1.0;
};

struct BitsReport {
  std::vector<std::uint64_t> node_sent;
  std::vector<std::uint64_t> node_received;
  std::vector<std::uint64_t> edge_total;
  std::uint64_t total = 0;
  std::uint64_t max_node_sent = 0;
  // The three terms inside the max of the per-node bound, each multiplied
  // by B^2 d log2(n); orders of magnitude only.
  double term_iterations = 0.0;
  double term_consensus = 0.0;
  double term_smoothness = 0.0;
  double predicted_order = 0.0;  // the max of the three
};

inline BitsReport bits_report(const DecentralizedResult& r, const Topology& g,
                              Index n, const ComplexityInputs& in) {
  BitsReport rep;
  rep.node_sent = r.bits_sent;
  rep.node_received = r.bits_received;
  rep.edge_total = r.edge_bits;
  for (auto b : r.bits_sent) {
    rep.total += b;
    rep.max_node_sent = std::max(rep.max_node_sent, b);
  }
  const double m = g.size(), d = g.max_degree(), D = g.diameter();
  const double front = in.l1_bound * in.l1_bound * d *
                       std::log2(std::max<double>(2.0, static_cast<double>(n)));
  const double b2 = in.b_star * in.b_star, e2 = in.eps * in.eps;
  rep.term_iterations = front / (in.sigma * in.sigma) *
                        std::sqrt(D * b2 / (in.gamma * in.eps * m * std::max(d, 1.0)));
  rep.term_consensus = front * D * b2 / e2;
  rep.term_smoothness = front * m * m / (in.gamma * in.gamma * e2);
  rep.predicted_order = std::max({rep.term_iterations, rep.term_consensus,
                                  rep.term_smoothness});
  return rep;
}

inline void write_edge_log_csv(std::ostream& os,
                               const std::vector<EdgeRecord>& log) {
  os << "round,src,dst,bits\n";
  for (const auto& e : log)
    os << e.round << ',' << e.src << ',' << e.dst << ',' << e.bits << '\n';
}

}  // namespace ppsq
