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

// Graph Laplacian and the spectral quantities used by the decentralised
// method.

#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "ppsq/common.hpp"
#include "ppsq/network/topology.hpp"

namespace ppsq {

struct LaplacianSpectrum {
  Matrix W;              // degree on the diagonal, -1 on edges
  Vector eigenvalues;    // ascending
  Matrix eigenvectors;   // columns, orthonormal
  double lambda2 = 0.0;  // second smallest eigenvalue; 0 when m = 1
  double norm = 0.0;     // |W|_2, the largest eigenvalue
  double chi = std::numeric_limits<double>::quiet_NaN();  // |W|_2 / lambda2

  Matrix sqrt_W;         // from the eigendecomposition

  int size() const { return static_cast<int>(W.rows()); }
};

inline Matrix laplacian_matrix(const Topology& g) {
  const int m = g.size();
  Matrix W = Matrix::Zero(m, m);
  for (auto [i, j] : g.edges()) {
    W(i, j) = W(j, i) = -1.0;
    W(i, i) += 1.0;
    W(j, j) += 1.0;
  }
  return W;
}

inline LaplacianSpectrum laplacian(const Topology& g) {
  require(g.connected(), "laplacian: graph is disconnected");
  LaplacianSpectrum s;
  s.W = laplacian_matrix(g);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s.W);
  require(eig.info() == Eigen::Success, "laplacian: eigensolver failed");
  s.eigenvalues = eig.eigenvalues();
  s.eigenvectors = eig.eigenvectors();
  s.norm = s.eigenvalues(s.eigenvalues.size() - 1);
  // Round-off negatives clamp to 0.
  const Vector root = s.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  s.sqrt_W = s.eigenvectors * root.asDiagonal() * s.eigenvectors.transpose();
  if (g.size() >= 2) {
    s.lambda2 = s.eigenvalues(1);
    s.chi = s.norm / s.lambda2;
  }
  return s;
}

/// |sqrt(W kron I) x| for node vectors stored as the columns of X (n x m);
/// equals sqrt(sum over edges |x_i - x_j|^2).
inline double consensus_gap(const Matrix& X, const LaplacianSpectrum& s) {
  require(X.cols() == s.size(), "consensus_gap: one column per node");
  return (X * s.sqrt_W).norm();
}

}  // namespace ppsq
