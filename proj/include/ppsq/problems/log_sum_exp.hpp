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

// f(x) = ln(sum_j b_j exp(A_j^T x)), the smooth maximum.

#pragma once

#include <cmath>
#include <limits>

#include "ppsq/common.hpp"
#include "ppsq/oracle.hpp"

namespace ppsq {

/// A is terms x dim (row j is A_j); b is a non-negative weight per term
/// with a positive sum.
class LogSumExp {
 public:
  LogSumExp(Matrix A, Vector b) : A_(std::move(A)), b_(std::move(b)) {
    require(A_.rows() == b_.size() && A_.rows() > 0,
            "LogSumExp: one weight per row of A");
    require((b_.array() >= 0.0).all() && b_.sum() > 0.0,
            "LogSumExp: weights must be non-negative with a positive sum");
    log_b_ = b_.array().log();
  }

  Index dim() const { return A_.cols(); }
  Index terms() const { return A_.rows(); }
  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }

  /// Max-subtracted evaluation; zero weights drop out.
  double value(const Vector& x) const {
    const Vector s = exponents(x);
    const double top = s.maxCoeff();
    return top + std::log((s.array() - top).exp().sum());
  }

  /// Softmax over the terms, p_j = b_j e^{A_j^T x} / sum_k b_k e^{A_k^T x}.
  Vector weights(const Vector& x) const {
    const Vector s = exponents(x);
    Vector p = (s.array() - s.maxCoeff()).exp();
    return p / p.sum();
  }

  /// [grad f(x)]_i = sum_j A_ji p_j.
  Vector gradient(const Vector& x) const {
    return A_.transpose() * weights(x);
  }

  /// max_i sum_j A_ji^2.
  double lipschitz() const { return A_.array().square().colwise().sum().maxCoeff(); }

  bool row_stochastic(double tol = 1e-12) const {
    return (A_.array() >= 0.0).all() &&
           ((A_.rowwise().sum().array() - 1.0).abs() <= tol).all();
  }

  /// Gradient oracle for the primal method; B = 1 when A is row-stochastic.
  OracleSpec oracle(NoiseModel noise = NoiseModel::exact(),
                    double sigma = 0.0) const {
    OracleSpec o;
    o.dim = dim();
    o.sigma = sigma;
    o.l1_bound = row_stochastic() ? 1.0 : std::numeric_limits<double>::infinity();
    o.noise = noise;
    LogSumExp self = *this;
    o.gradient = [self](const Vector& x) { return self.gradient(x); };
    return o;
  }

 private:
  Vector exponents(const Vector& x) const {
    require(x.size() == dim(), "LogSumExp: dimension mismatch");
    // Zero weights give -inf exponents, which vanish after exp.
    return A_ * x + log_b_;
  }

  Matrix A_;
  Vector b_;
  Vector log_b_;
};

/// terms x dim matrix with non-negative rows summing to one.
inline Matrix random_row_stochastic(Index terms, Index dim, Rng& rng) {
  Matrix A(terms, dim);
  for (Index j = 0; j < terms; ++j) {
    for (Index i = 0; i < dim; ++i) A(j, i) = -std::log(1.0 - uniform01(rng));
    A.row(j) /= A.row(j).sum();
  }
  return A;
}

}  // namespace ppsq
