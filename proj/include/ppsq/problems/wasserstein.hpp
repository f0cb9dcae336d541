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

// Entropy-regularised semi-discrete Wasserstein barycentre: continuous
// measures with known densities against a fixed discrete support.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <vector>

#include "ppsq/common.hpp"
#include "ppsq/network/decentralized.hpp"
#include "ppsq/quantize.hpp"

namespace ppsq {

/// Mixture of isotropic Gaussians in R^d.
class GaussianMixture {
 public:
  GaussianMixture() = default;

  /// means: d x K, one column per component.
  GaussianMixture(Matrix means, Vector stds, Vector weights)
      : means_(std::move(means)), stds_(std::move(stds)), weights_(std::move(weights)) {
    require(means_.cols() == stds_.size() && stds_.size() == weights_.size() &&
                stds_.size() > 0,
            "GaussianMixture: one mean, std and weight per component");
    require((stds_.array() > 0.0).all(), "GaussianMixture: stds must be positive");
    require((weights_.array() >= 0.0).all() && weights_.sum() > 0.0,
            "GaussianMixture: weights must be non-negative with a positive sum");
    weights_ /= weights_.sum();
    log_weights_ = weights_.array().log();
  }

  static GaussianMixture gaussian(const Vector& mean, double std) {
    return GaussianMixture(mean, Vector::Constant(1, std), Vector::Ones(1));
  }

  Index dim() const { return means_.rows(); }
  Index components() const { return means_.cols(); }
  const Matrix& means() const { return means_; }
  const Vector& stds() const { return stds_; }
  const Vector& weights() const { return weights_; }

  Vector sample(Rng& rng) const {
    const Index k = components() == 1
                        ? 0
                        : static_cast<Index>(categorical_sample(weights_, 1, rng)[0]);
    Vector x(dim());
    for (Index i = 0; i < dim(); ++i)
      x[i] = means_(i, k) + stds_[k] * standard_normal(rng);
    return x;
  }

  double log_density(const Vector& x) const {
    const double d = static_cast<double>(dim());
    Vector terms(components());
    for (Index k = 0; k < components(); ++k) {
      const double s = stds_[k];
      terms[k] = log_weights_[k] - (x - means_.col(k)).squaredNorm() / (2.0 * s * s) -
                 d * std::log(s * std::sqrt(2.0 * std::numbers::pi));
    }
    const double top = terms.maxCoeff();
    if (!std::isfinite(top)) return -std::numeric_limits<double>::infinity();
    return top + std::log((terms.array() - top).exp().sum());
  }

  Vector mean() const { return means_ * weights_; }

 private:
  Matrix means_;
  Vector stds_;
  Vector weights_;
  Vector log_weights_;
};

struct WassersteinBarycentre {
  Matrix support;  // d x n, columns z_1..z_n
  double gamma = 0.0;
  std::vector<GaussianMixture> measures;  // one per node

  Index support_size() const { return support.cols(); }
  int nodes() const { return static_cast<int>(measures.size()); }

  /// c(z_j, x) = |z_j - x|^2 for every support point.
  Vector costs(const Vector& x) const {
    return (support.colwise() - x).colwise().squaredNorm().transpose();
  }
};

/// Mean of |z_i - z_j|^2 over ordered pairs i != j.
inline double mean_pairwise_cost(const Matrix& support) {
  const Index n = support.cols();
  require(n >= 2, "mean_pairwise_cost: needs at least two support points");
  double acc = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j) acc += (support.col(i) - support.col(j)).squaredNorm();
  return acc / static_cast<double>(n * (n - 1));
}

inline double default_gamma(const Matrix& support) {
  return 0.1 * mean_pairwise_cost(support);
}

/// A draw x ~ mu^i reduced to what the conjugate needs.
struct WbSample {
  Vector cost;  // c(z_j, x)
  double log_q = 0.0;
};

inline std::vector<WbSample> wb_draw(const WassersteinBarycentre& p, int node,
                                     std::int64_t r, Rng& rng) {
  require(r >= 1, "wb_draw: r must be >= 1");
  require(node >= 0 && node < p.nodes(), "wb_draw: node out of range");
  const auto& mu = p.measures[node];
  std::vector<WbSample> out(static_cast<std::size_t>(r));
  for (auto& s : out) {
    const Vector x = mu.sample(rng);
    s.cost = p.costs(x);
    s.log_q = mu.log_density(x);
    require(std::isfinite(s.log_q), "wb_draw: density vanishes at a sample");
  }
  return out;
}

/// softmax((lambda - c) / gamma), max-subtracted.
inline Vector wb_softmax(const Vector& lambda, const Vector& cost, double gamma) {
  Vector s = (lambda - cost) / gamma;
  s = (s.array() - s.maxCoeff()).exp();
  return s / s.sum();
}

/// Mean over the samples of gamma log(sum_j exp((lambda_j - c_j) / gamma) / q(x)).
inline double wb_conjugate_value(const WassersteinBarycentre& p,
                                 const Vector& lambda,
                                 const std::vector<WbSample>& samples) {
  require(!samples.empty(), "wb_conjugate_value: no samples");
  const double g = p.gamma;
  double acc = 0.0;
  for (const auto& s : samples) {
    const Vector e = (lambda - s.cost) / g;
    const double top = e.maxCoeff();
    acc += g * (top + std::log((e.array() - top).exp().sum())) - g * s.log_q;
  }
  return acc / static_cast<double>(samples.size());
}

inline double wb_conjugate_value(const WassersteinBarycentre& p, int node,
                                 const Vector& lambda, std::int64_t r, Rng& rng) {
  return wb_conjugate_value(p, lambda, wb_draw(p, node, r, rng));
}

/// Mean over the samples of softmax((lambda - c) / gamma); lies in the simplex.
inline Vector wb_conjugate_gradient(const WassersteinBarycentre& p,
                                    const Vector& lambda,
                                    const std::vector<WbSample>& samples) {
  require(!samples.empty(), "wb_conjugate_gradient: no samples");
  Vector acc = Vector::Zero(p.support_size());
  for (const auto& s : samples) acc += wb_softmax(lambda, s.cost, p.gamma);
  return acc / static_cast<double>(samples.size());
}

inline Vector wb_conjugate_gradient(const WassersteinBarycentre& p, int node,
                                    const Vector& lambda, std::int64_t r,
                                    Rng& rng) {
  return wb_conjugate_gradient(p, lambda, wb_draw(p, node, r, rng));
}

/// Node average of the restored simplex vectors (columns), renormalised.
inline Vector wb_restore_barycentre(const Matrix& x_nodes) {
  require(x_nodes.cols() >= 1, "wb_restore_barycentre: no nodes");
  Vector nu = x_nodes.rowwise().mean().cwiseMax(0.0);
  const double total = nu.sum();
  require(total > 0.0, "wb_restore_barycentre: zero mass");
  return nu / total;
}

inline constexpr std::uint64_t kWbEvalStream = 0x65766c;

/// Per-node conjugate oracles. Values use a fixed evaluation set of
/// `eval_samples` draws per node from the stream (seed, node), so dual
/// values are comparable across iterations and runs.
inline std::vector<LocalConjugate> wb_local_conjugates(
    const WassersteinBarycentre& p, std::int64_t eval_samples,
    std::uint64_t seed) {
  require(eval_samples >= 1, "wb_local_conjugates: eval_samples must be >= 1");
  auto shared = std::make_shared<const WassersteinBarycentre>(p);
  std::vector<LocalConjugate> out;
  for (int i = 0; i < p.nodes(); ++i) {
    Rng rng = make_rng(seed, kWbEvalStream, static_cast<std::uint64_t>(i));
    auto eval = std::make_shared<const std::vector<WbSample>>(
        wb_draw(p, i, eval_samples, rng));
    LocalConjugate c;
    c.dim = p.support_size();
    c.gradient = [shared, i](const Vector& lambda, std::int64_t r, Rng& g) {
      return wb_conjugate_gradient(*shared, i, lambda, r, g);
    };
    c.value = [shared, eval](const Vector& lambda) {
      return wb_conjugate_value(*shared, lambda, *eval);
    };
    out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Instances.

/// n evenly spaced points on [lo, hi].
inline Matrix uniform_grid_1d(Index n, double lo, double hi) {
  require(n >= 2 && hi > lo, "uniform_grid_1d: needs n >= 2 and hi > lo");
  Matrix z(1, n);
  for (Index j = 0; j < n; ++j)
    z(0, j) = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n - 1);
  return z;
}

/// Pixel centres of a side x side image on [0, 1]^2, row-major.
inline Matrix pixel_grid(int side) {
  require(side >= 2, "pixel_grid: side must be >= 2");
  Matrix z(2, side * side);
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) {
      z(0, r * side + c) = (c + 0.5) / side;
      z(1, r * side + c) = (r + 0.5) / side;
    }
  return z;
}

struct GaussianWbConfig {
  int nodes = 5;
  Index support = 50;
  double lo = -1.0;
  double hi = 1.0;
  double mean_lo = -0.5, mean_hi = 0.5;
  double std_lo = 0.1, std_hi = 0.3;
  std::optional<double> gamma;  // default: 0.1 of the mean pairwise cost
  std::uint64_t seed = 0;
};

/// One-dimensional Gaussians with random means and standard deviations.
inline WassersteinBarycentre make_gaussian_wb(const GaussianWbConfig& c) {
  require(c.nodes >= 1, "make_gaussian_wb: needs at least one node");
  require(c.std_lo > 0.0 && c.std_hi >= c.std_lo && c.mean_hi >= c.mean_lo,
          "make_gaussian_wb: bad parameter ranges");
  WassersteinBarycentre p;
  p.support = uniform_grid_1d(c.support, c.lo, c.hi);
  p.gamma = c.gamma ? *c.gamma : default_gamma(p.support);
  require(p.gamma > 0.0, "make_gaussian_wb: gamma must be positive");
  Rng rng = make_rng(c.seed, 0x676175);
  for (int i = 0; i < c.nodes; ++i) {
    const double mean = c.mean_lo + (c.mean_hi - c.mean_lo) * uniform01(rng);
    const double std = c.std_lo + (c.std_hi - c.std_lo) * uniform01(rng);
    p.measures.push_back(GaussianMixture::gaussian(Vector::Constant(1, mean), std));
  }
  return p;
}

struct ImageWbConfig {
  int nodes = 4;
  int side = 16;
  int blobs = 3;
  double blob_width = 0.08;
  std::optional<double> gamma;
  std::uint64_t seed = 0;
};

/// side x side intensity image made of a few Gaussian blobs, normalised.
inline Vector synthetic_image(int side, int blobs, double width, Rng& rng) {
  const Matrix px = pixel_grid(side);
  Vector img = Vector::Zero(px.cols());
  for (int b = 0; b < blobs; ++b) {
    Vector centre(2);
    centre << 0.2 + 0.6 * uniform01(rng), 0.2 + 0.6 * uniform01(rng);
    for (Index k = 0; k < px.cols(); ++k)
      img[k] += std::exp(-(px.col(k) - centre).squaredNorm() / (2.0 * width * width));
  }
  return img / img.sum();
}

/// Images on a pixel grid, each smoothed into a mixture with one component
/// per pixel above 1e-3 of the peak and bandwidth one pixel.
inline WassersteinBarycentre make_image_wb(const ImageWbConfig& c) {
  require(c.nodes >= 1 && c.blobs >= 1 && c.blob_width > 0.0,
          "make_image_wb: bad configuration");
  WassersteinBarycentre p;
  p.support = pixel_grid(c.side);
  p.gamma = c.gamma ? *c.gamma : default_gamma(p.support);
  require(p.gamma > 0.0, "make_image_wb: gamma must be positive");
  Rng rng = make_rng(c.seed, 0x696d67);
  for (int i = 0; i < c.nodes; ++i) {
    const Vector img = synthetic_image(c.side, c.blobs, c.blob_width, rng);
    const double cut = 1e-3 * img.maxCoeff();
    std::vector<Index> keep;
    for (Index k = 0; k < img.size(); ++k)
      if (img[k] >= cut) keep.push_back(k);
    Matrix means(2, static_cast<Index>(keep.size()));
    Vector w(static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      means.col(static_cast<Index>(k)) = p.support.col(keep[k]);
      w[static_cast<Index>(k)] = img[keep[k]];
    }
    p.measures.emplace_back(
        means, Vector::Constant(static_cast<Index>(keep.size()), 1.0 / c.side), w);
  }
  return p;
}

}  // namespace ppsq
