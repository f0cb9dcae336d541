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

// Shared generators and oracles for the test suites.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ppsq/ppsq.hpp"

namespace ppsq::testing {

inline Vector random_normal(Index n, Rng& rng) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = standard_normal(rng);
  return v;
}

/// Uniform point of the simplex (normalised exponentials).
inline Vector random_simplex(Index n, Rng& rng) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = -std::log(1.0 - uniform01(rng));
  return v / v.sum();
}

/// Mixed-sign vector with some exact zeros.
inline Vector random_mixed(Index n, Rng& rng) {
  Vector v = random_normal(n, rng);
  for (Index i = 0; i < n; ++i)
    if (uniform01(rng) < 0.1) v[i] = 0.0;
  return v;
}

/// E|v - e_K|^2 for K ~ Categorical(v), by summing over every outcome.
inline double one_hot_second_moment_exact(const Vector& v) {
  double acc = 0.0;
  for (Index k = 0; k < v.size(); ++k) {
    Vector e = Vector::Zero(v.size());
    e[k] = 1.0;
    acc += v[k] * (v - e).squaredNorm();
  }
  return acc;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x,
                           const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

/// Central difference of a scalar function along every coordinate.
template <class F>
Vector finite_difference_gradient(F&& f, const Vector& x, double h) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// Square root of a symmetric positive semidefinite matrix.
inline Matrix psd_sqrt(const Matrix& W) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(W);
  return eig.eigenvectors() *
         eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

/// Sampler for the centralised form of the decentralised problem: dual
/// variable lambda_bold (n*m, node-major), A = -sqrt(W kron I), b = 0.
/// Node i quantizes its own restoration with stream (seed, i, round), so
/// the draws coincide with the simulator's.
struct StackedSampler {
  const std::vector<LocalConjugate>& nodes;
  Matrix sqrt_W;
  Compression compression;
  std::uint64_t seed;

  DualDraw operator()(const Vector& mu_bold, int round, std::int64_t r,
                      std::int64_t M) const {
    const int m = static_cast<int>(nodes.size());
    const Index n = nodes.front().dim;
    const Matrix Mu = Eigen::Map<const Matrix>(mu_bold.data(), n, m);
    const Matrix plain = Mu * sqrt_W;
    Matrix dec(n, m), prim(n, m);
    DualDraw d;
    for (int i = 0; i < m; ++i) {
      NodeMessage msg = node_message(nodes[i], plain.col(i), i, round, r, M,
                                     compression, seed);
      dec.col(i) = msg.decoded;
      prim.col(i) = msg.primal;
      d.calls += msg.calls;
    }
    // grad of sum_i f_i*((sqrt(W) lambda)^i) is sqrt(W) applied to x.
    const Matrix G = dec * sqrt_W;
    d.gradient = Eigen::Map<const Vector>(G.data(), n * m);
    d.primal = Eigen::Map<const Vector>(prim.data(), n * m);
    return d;
  }
};

}  // namespace ppsq::testing
