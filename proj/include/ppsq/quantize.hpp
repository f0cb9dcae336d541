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

// Probability-proportional-to-size (PPS) quantization of gradient vectors,
// the top-M / random-M sparsifying baselines, and exact bit accounting.
//
// A vector g is split as g = [g]+ - [-g]+. Each part with positive l1 mass
// defines a categorical distribution over coordinates; M indices are drawn
// from it and the message
//
//     Q(g) = |[g]+|_1 / M * sum_i e_{k_i}  -  |[-g]+|_1 / M * sum_i e_{l_i}
//
// is an unbiased estimate of g carried by two floats and 2M indices.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <utility>
#include <vector>

#include "ppsq/common.hpp"

namespace ppsq {

using SampleIndex = std::uint32_t;

/// Wire-level PPS message.
///
/// Zero-mass parts carry no indices. A simplified message has no negative
/// part at all; if its mass is exactly one the mass is implied and not sent.
struct QuantizedGradient {
  Index dim = 0;
  double pos_mass = 0.0;
  double neg_mass = 0.0;
  std::vector<SampleIndex> pos_indices;
  std::vector<SampleIndex> neg_indices;
  bool simplified = false;

  bool unit_mass() const { return simplified && pos_mass == 1.0; }

  /// Number of floats that go on the wire.
  int transmitted_masses() const {
    if (!simplified) return 2;
    return unit_mass() ? 0 : 1;
  }

  std::size_t index_count() const {
    return pos_indices.size() + neg_indices.size();
  }

  friend bool operator==(const QuantizedGradient&,
                         const QuantizedGradient&) = default;
};

/// Relative threshold below which a component is dropped from the sampling
/// distribution: |g_i| < kSupportCutoff * |g|_1.
inline constexpr double kSupportCutoff = 1e-15;

/// Tolerance on |g|_1 - 1 for a simplified message to count as unit mass.
inline constexpr double kUnitMassTolerance = 1e-12;

inline std::pair<Vector, Vector> split_signs(const Vector& g) {
  return {g.cwiseMax(0.0), (-g).cwiseMax(0.0)};
}

/// Draws `count` i.i.d. indices, index k with probability w_k / sum(w), by
/// inverse-CDF binary search over the prefix sums.
inline std::vector<SampleIndex> categorical_sample(const Vector& weights,
                                                   std::int64_t count, Rng& rng) {
  require(count >= 1, "categorical_sample: count must be >= 1");
  require((weights.array() >= 0.0).all(),
          "categorical_sample: weights must be non-negative");
  const Index n = weights.size();
  std::vector<double> prefix(static_cast<std::size_t>(n));
  std::partial_sum(weights.data(), weights.data() + n, prefix.begin());
  const double total = n > 0 ? prefix.back() : 0.0;
  require(total > 0.0 && std::isfinite(total),
          "categorical_sample: weights must have positive finite sum");

  // Rounding can put u*total on the last prefix value; never return an
  // index whose weight is zero.
  Index last_positive = n - 1;
  while (weights[last_positive] <= 0.0) --last_positive;

  std::vector<SampleIndex> out(static_cast<std::size_t>(count));
  for (auto& k : out) {
    const double u = uniform01(rng) * total;
    auto it = std::upper_bound(prefix.begin(), prefix.end(), u);
    Index idx = it - prefix.begin();
    if (idx > last_positive) idx = last_positive;
    k = static_cast<SampleIndex>(idx);
  }
  return out;
}

namespace detail {

inline Vector sampling_weights(const Vector& part, double l1_total) {
  const double cutoff = kSupportCutoff * l1_total;
  return (part.array() < cutoff).select(0.0, part);
}

}  // namespace detail

inline QuantizedGradient pps_encode(const Vector& g, std::int64_t samples, Rng& rng) {
  require(samples >= 1, "pps_encode: M must be >= 1");
  require(g.size() <= static_cast<Index>(UINT32_MAX),
          "pps_encode: dimension too large for 32-bit indices");
  auto [pos, neg] = split_signs(g);
  QuantizedGradient q;
  q.dim = g.size();
  q.pos_mass = pos.sum();
  q.neg_mass = neg.sum();
  const double l1 = q.pos_mass + q.neg_mass;
  if (q.pos_mass > 0.0)
    q.pos_indices =
        categorical_sample(detail::sampling_weights(pos, l1), samples, rng);
  if (q.neg_mass > 0.0)
    q.neg_indices =
        categorical_sample(detail::sampling_weights(neg, l1), samples, rng);
  return q;
}

/// Encoder for non-negative vectors (typically on the simplex): only the
/// positive part exists and a unit mass is implied.
inline QuantizedGradient pps_simplified_encode(const Vector& g, std::int64_t samples,
                                               Rng& rng) {
  require(samples >= 1, "pps_simplified_encode: M must be >= 1");
  require((g.array() >= 0.0).all(),
          "pps_simplified_encode: vector has a negative component");
  QuantizedGradient q;
  q.dim = g.size();
  q.simplified = true;
  q.pos_mass = g.sum();
  if (std::abs(q.pos_mass - 1.0) <= kUnitMassTolerance) q.pos_mass = 1.0;
  if (q.pos_mass > 0.0)
    q.pos_indices = categorical_sample(
        detail::sampling_weights(g, q.pos_mass), samples, rng);
  return q;
}

inline Vector pps_decode(const QuantizedGradient& q) {
  Vector out = Vector::Zero(q.dim);
  if (!q.pos_indices.empty()) {
    const double w = q.pos_mass / static_cast<double>(q.pos_indices.size());
    for (SampleIndex k : q.pos_indices) out[k] += w;
  }
  if (!q.neg_indices.empty()) {
    const double w = q.neg_mass / static_cast<double>(q.neg_indices.size());
    for (SampleIndex k : q.neg_indices) out[k] -= w;
  }
  return out;
}

/// ceil(log2(dim)); zero for dim <= 1.
constexpr int index_width(std::uint64_t dim) {
  return dim <= 1 ? 0 : static_cast<int>(std::bit_width(dim - 1));
}

/// Payload size: masses plus packed indices. Framing is not counted.
inline std::uint64_t message_bits(const QuantizedGradient& q,
                                  int float_bits = 64) {
  require(float_bits == 32 || float_bits == 64,
          "message_bits: float_bits must be 32 or 64");
  return static_cast<std::uint64_t>(q.transmitted_masses()) * float_bits +
         static_cast<std::uint64_t>(q.index_count()) *
             index_width(static_cast<std::uint64_t>(q.dim));
}

/// Bits of an uncompressed dense vector.
inline std::uint64_t dense_bits(Index dim, int float_bits = 64) {
  require(float_bits == 32 || float_bits == 64,
          "dense_bits: float_bits must be 32 or 64");
  return static_cast<std::uint64_t>(dim) * float_bits;
}

/// Sub-Gaussian variance proxy of a PPS message built from an r-batch:
///   50 (2 (1 - 1/n) B^2 / (e M) + sigma^2 / r).
/// With `simplified`, the unit-mass variant 50 ((n - 1)/(e n M) + sigma^2/r).
inline double pps_sigma2(double r, double samples, double n, double l1_bound,
                         double sigma, bool simplified = false) {
  require(r >= 1.0 && samples >= 1.0 && n >= 1.0,
          "pps_sigma2: r, M, n must be >= 1");
  require(l1_bound >= 0.0 && sigma >= 0.0,
          "pps_sigma2: B and sigma must be non-negative");
  constexpr double e = std::numbers::e;
  const double quant =
      simplified ? (n - 1.0) / (e * n * samples)
                 : 2.0 * (1.0 - 1.0 / n) * l1_bound * l1_bound / (e * samples);
  return 50.0 * (quant + sigma * sigma / r);
}

// ---------------------------------------------------------------------------
// Baselines.

/// Keeps the M largest-magnitude entries (ties go to the lower index).
inline Vector top_m_encode(const Vector& g, std::int64_t samples) {
  require(samples >= 1 && samples <= g.size(), "top_m_encode: need 1 <= M <= n");
  std::vector<Index> order(static_cast<std::size_t>(g.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(g[a]) > std::abs(g[b]);
  });
  Vector out = Vector::Zero(g.size());
  for (std::int64_t i = 0; i < samples; ++i) out[order[i]] = g[order[i]];
  return out;
}

/// Keeps M uniformly chosen entries scaled by n/M (unbiased).
inline Vector random_m_encode(const Vector& g, std::int64_t samples, Rng& rng) {
  const Index n = g.size();
  require(samples >= 1 && samples <= n, "random_m_encode: need 1 <= M <= n");
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  // Partial Fisher-Yates.
  for (std::int64_t i = 0; i < samples; ++i) {
    const auto span = static_cast<std::uint64_t>(n - i);
    const auto j = i + static_cast<Index>(uniform01(rng) * span);
    std::swap(idx[i], idx[std::min(j, n - 1)]);
  }
  const double scale = static_cast<double>(n) / samples;
  Vector out = Vector::Zero(n);
  for (std::int64_t i = 0; i < samples; ++i) out[idx[i]] = scale * g[idx[i]];
  return out;
}

struct CompressorStats {
  double empirical_second_moment = 0.0;
  double relative_second_moment = 0.0;
  int sample_count = 0;
};

/// Monte-Carlo estimate of E|Q(x) - x|^2. `compressor` is any callable
/// (const Vector&, Rng&) -> Vector.
template <class Compressor>
CompressorStats estimate_second_moment(Compressor&& compressor,
                                       const Vector& x, int trials, Rng& rng) {
  require(trials >= 1, "estimate_second_moment: trials must be >= 1");
  double acc = 0.0;
  for (int i = 0; i < trials; ++i) {
    const Vector qx = compressor(x, rng);
    acc += (qx - x).squaredNorm();
  }
  CompressorStats s;
  s.sample_count = trials;
  s.empirical_second_moment = acc / trials;
  const double norm2 = x.squaredNorm();
  s.relative_second_moment = norm2 > 0.0 ? s.empirical_second_moment / norm2
                                         : 0.0;
  return s;
}

}  // namespace ppsq
