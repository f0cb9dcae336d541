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

// Strongly convex quadratic locals and the KKT reference solution of an
// affine-constrained sum of them.

#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "ppsq/common.hpp"

namespace ppsq {

/// f(x) = 1/2 (x - c)^T Q (x - c) with Q symmetric positive definite.
/// Conjugate: f*(mu) = 1/2 mu^T Q^{-1} mu + mu^T c, grad f*(mu) = Q^{-1} mu + c.
class QuadraticLocal {
 public:
  QuadraticLocal() = default;

  explicit QuadraticLocal(Vector center)
      : QuadraticLocal(center, Matrix::Identity(center.size(), center.size())) {}

  QuadraticLocal(Vector center, Matrix Q) : c_(std::move(center)), Q_(std::move(Q)) {
    require(Q_.rows() == c_.size() && Q_.cols() == c_.size(),
            "QuadraticLocal: Q must be n x n");
    require(Q_.isApprox(Q_.transpose(), 1e-12), "QuadraticLocal: Q must be symmetric");
    auto llt = std::make_shared<Eigen::LLT<Matrix>>(Q_);
    require(llt->info() == Eigen::Success, "QuadraticLocal: Q must be positive definite");
    llt_ = std::move(llt);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Q_, Eigen::EigenvaluesOnly);
    min_eig_ = eig.eigenvalues().minCoeff();
    max_eig_ = eig.eigenvalues().maxCoeff();
  }

  Index dim() const { return c_.size(); }
  const Vector& center() const { return c_; }
  const Matrix& hessian() const { return Q_; }

  /// Strong convexity modulus, the smallest eigenvalue of Q.
  double strong_convexity() const { return min_eig_; }
  double smoothness() const { return max_eig_; }

  double value(const Vector& x) const {
    const Vector d = x - c_;
    return 0.5 * d.dot(Q_ * d);
  }
  Vector gradient(const Vector& x) const { return Q_ * (x - c_); }

  double conjugate_value(const Vector& mu) const {
    return 0.5 * mu.dot(llt_->solve(mu)) + mu.dot(c_);
  }
  Vector conjugate_gradient(const Vector& mu) const {
    return llt_->solve(mu) + c_;
  }
  /// Q^{-1} M, used to form A Q^{-1} A^T.
  Matrix solve(const Matrix& M) const { return llt_->solve(M); }

 private:
  Vector c_;
  Matrix Q_;
  std::shared_ptr<const Eigen::LLT<Matrix>> llt_;
  double min_eig_ = 0.0;
  double max_eig_ = 0.0;
};

/// Sum of locals collapsed into one quadratic plus a constant:
///   sum_i f_i(x) = 1/2 (x - c)^T Q (x - c) + offset.
struct AggregateQuadratic {
  QuadraticLocal quadratic;
  double offset = 0.0;
};

inline AggregateQuadratic aggregate(const std::vector<QuadraticLocal>& locals) {
  require(!locals.empty(), "aggregate: no locals");
  const Index n = locals.front().dim();
  Matrix Q = Matrix::Zero(n, n);
  Vector q = Vector::Zero(n);
  for (const auto& f : locals) {
    require(f.dim() == n, "aggregate: dimension mismatch");
    Q += f.hessian();
    q += f.hessian() * f.center();
  }
  Vector c = Q.llt().solve(q);
  AggregateQuadratic out{QuadraticLocal(c, Q), 0.0};
  for (const auto& f : locals) out.offset += f.value(c);
  return out;
}

struct KktSolution {
  Vector x;
  Vector lambda;  // multiplier of A x = b in f(x) + lambda^T (A x - b)
  double value = 0.0;
  double residual = 0.0;  // |A x - b|
};

/// Solves [Q A^T; A 0] [x; lambda] = [Q c; b] for the aggregated objective.
/// A complete orthogonal decomposition gives the minimum-norm multiplier
/// when A is rank deficient.
inline KktSolution quadratic_kkt_solution(
    const std::vector<QuadraticLocal>& locals, const Matrix& A, const Vector& b) {
  const auto agg = aggregate(locals);
  const Matrix& Q = agg.quadratic.hessian();
  const Index n = Q.rows(), m = A.rows();
  require(A.cols() == n && b.size() == m, "quadratic_kkt_solution: shape mismatch");
  Matrix K = Matrix::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = Q;
  K.topRightCorner(n, m) = A.transpose();
  K.bottomLeftCorner(m, n) = A;
  Vector rhs(n + m);
  rhs << Q * agg.quadratic.center(), b;
  const Vector sol = K.completeOrthogonalDecomposition().solve(rhs);
  KktSolution out;
  out.x = sol.head(n);
  out.lambda = sol.tail(m);
  double value = 0.0;
  for (const auto& f : locals) value += f.value(out.x);
  out.value = value;
  out.residual = (A * out.x - b).norm();
  return out;
}

/// `count` centers with N(0, I) entries from stream (seed, 1), as columns.
inline Matrix random_centers(Index count, Index dim, std::uint64_t seed) {
  require(count >= 1 && dim >= 1, "random_centers: sizes must be >= 1");
  Rng g = make_rng(seed, 1);
  Matrix C(dim, count);
  for (Index i = 0; i < count; ++i)
    for (Index k = 0; k < dim; ++k) C(k, i) = standard_normal(g);
  return C;
}

}  // namespace ppsq
