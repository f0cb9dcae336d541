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

// Affine-constrained problems min f(x) s.t. Ax = b, seen through their
// dual phi(lambda) = lambda^T b + f*(-A^T lambda).

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/SVD>

#include "ppsq/common.hpp"
#include "ppsq/problems/quadratic.hpp"

namespace ppsq {

struct AffineProblem {
  Matrix A;  // m x n
  Vector b;  // m
  // Mean of r draws of grad F*(mu, xi); r = 1 for a single draw.
  std::function<Vector(const Vector& mu, std::int64_t r, Rng& rng)>
      conjugate_gradient;
  // Deterministic f*(mu); optional.
  std::function<double(const Vector& mu)> conjugate_value;
  // f(x); optional.
  std::function<double(const Vector& x)> primal_value;

  double lipschitz = 0.0;  // of grad phi
  double radius = 0.0;     // |lambda*| <= R
  double sigma = 0.0;      // sub-Gaussian parameter of the dual oracle

  std::optional<Vector> x_star;
  std::optional<Vector> lambda_star;
  std::optional<double> f_star;

  Index primal_dim() const { return A.cols(); }
  Index dual_dim() const { return A.rows(); }
};

inline double operator_norm(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(A);
  return svd.singularValues()(0);
}

/// x(mu, xi) = grad F*(mu, xi), averaged over r draws.
inline Vector restore_primal(const AffineProblem& p, const Vector& mu,
                             std::int64_t r, Rng& rng) {
  return p.conjugate_gradient(mu, r, rng);
}

/// g(lambda, xi) = b - A grad F*(-A^T lambda, xi).
inline Vector dual_oracle(const AffineProblem& p, const Vector& lambda,
                          std::int64_t r, Rng& rng) {
  return p.b - p.A * restore_primal(p, -p.A.transpose() * lambda, r, rng);
}

inline double feasibility_gap(const AffineProblem& p, const Vector& x) {
  return (p.A * x - p.b).norm();
}

/// phi(lambda); NaN when the conjugate value is not available.
inline double dual_value(const AffineProblem& p, const Vector& lambda) {
  if (!p.conjugate_value) return std::numeric_limits<double>::quiet_NaN();
  return lambda.dot(p.b) + p.conjugate_value(-p.A.transpose() * lambda);
}

/// Bound on |grad phi(lambda)|_1 over |lambda| <= R:
///   sqrt(m) (|grad phi(0)| + L R).
inline double dual_gradient_l1_bound(const AffineProblem& p, double radius) {
  Rng unused(0);
  const Vector g0 = p.b - p.A * p.conjugate_gradient(
                                    Vector::Zero(p.primal_dim()), 1, unused);
  return std::sqrt(static_cast<double>(p.dual_dim())) *
         (g0.norm() + p.lipschitz * radius);
}

/// f = sum of quadratic locals subject to Ax = b. `noise` is the per
/// component standard deviation of Gaussian noise added to each draw of
/// grad F*; a mean of r draws is sampled directly as N(0, noise^2 / r).
/// L = |A Q^{-1} A^T|_2 and R = |lambda*| come from the KKT solution.
inline AffineProblem make_quadratic_affine(
    const std::vector<QuadraticLocal>& locals, const Matrix& A,
    const Vector& b, double noise = 0.0) {
  require(noise >= 0.0, "make_quadratic_affine: noise must be >= 0");
  const auto agg = aggregate(locals);
  const QuadraticLocal f = agg.quadratic;
  const double offset = agg.offset;
  const auto kkt = quadratic_kkt_solution(locals, A, b);

  AffineProblem p;
  p.A = A;
  p.b = b;
  p.conjugate_gradient = [f, noise](const Vector& mu, std::int64_t r,
                                    Rng& rng) {
    require(r >= 1, "conjugate_gradient: r must be >= 1");
    Vector g = f.conjugate_gradient(mu);
    if (noise > 0.0) {
      const double s = noise / std::sqrt(static_cast<double>(r));
      for (Index i = 0; i < g.size(); ++i) g[i] += s * standard_normal(rng);
    }
    return g;
  };
  p.conjugate_value = [f, offset](const Vector& mu) {
    return f.conjugate_value(mu) - offset;
  };
  p.primal_value = [f, offset](const Vector& x) { return f.value(x) + offset; };

  const Matrix AQA = A * f.solve(A.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(AQA, Eigen::EigenvaluesOnly);
  p.lipschitz = eig.eigenvalues().maxCoeff();
  p.radius = kkt.lambda.norm();
  p.sigma = noise * operator_norm(A) *
            std::sqrt(static_cast<double>(A.cols()));
  p.x_star = kkt.x;
  p.lambda_star = kkt.lambda;
  p.f_star = kkt.value;
  return p;
}

/// A random instance: one unit-Hessian local with center c ~ N(0, I),
/// A with N(0, 1/n) entries and b ~ N(0, I), all from stream (seed, 99).
struct ConstrainedQuadratic {
  std::vector<QuadraticLocal> locals;
  Matrix A;
  Vector b;
};

inline ConstrainedQuadratic random_constrained_quadratic(Index dim,
                                                         Index constraints,
                                                         std::uint64_t seed) {
  require(dim >= 1 && constraints >= 1,
          "random_constrained_quadratic: sizes must be >= 1");
  Rng g = make_rng(seed, 99);
  ConstrainedQuadratic q;
  q.A.resize(constraints, dim);
  Vector c(dim);
  q.b.resize(constraints);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (Index i = 0; i < q.A.size(); ++i) q.A.data()[i] = scale * standard_normal(g);
  for (Index i = 0; i < dim; ++i) c[i] = standard_normal(g);
  for (Index i = 0; i < constraints; ++i) q.b[i] = standard_normal(g);
  q.locals.emplace_back(std::move(c));
  return q;
}

}  // namespace ppsq
