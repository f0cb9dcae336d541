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

// Stochastic first-order oracles with mini-batching and the quantized call
// that feeds every solver.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>

#include "ppsq/quantize.hpp"

namespace ppsq {

/// Additive noise injected on top of a deterministic gradient.
struct NoiseModel {
  enum class Kind { exact, truncated_gaussian };
  Kind kind = Kind::exact;
  double scale = 0.0;  // per-component std of the untruncated Gaussian

  static NoiseModel exact() { return {}; }
  static NoiseModel gaussian(double scale) {
    return {Kind::truncated_gaussian, scale};
  }
};

/// g(x, xi) = grad f(x) + noise, with noise components drawn from a
/// symmetric Gaussian truncated to [-c, c], c = (B - |grad f(x)|_1) / n, so
/// that |g|_1 <= B whenever |grad f(x)|_1 <= B. B = inf disables truncation.
/// Symmetric truncation keeps the draw unbiased.
struct OracleSpec {
  Index dim = 0;
  double sigma = 0.0;  // sub-Gaussian parameter reported to schedules
  double l1_bound = std::numeric_limits<double>::infinity();
  std::function<Vector(const Vector&)> gradient;
  NoiseModel noise;

  Vector draw(const Vector& x, Rng& rng) const {
    Vector g = gradient(x);
    if (noise.kind == NoiseModel::Kind::exact || noise.scale <= 0.0) return g;
    const double n = static_cast<double>(g.size());
    const double c = std::isfinite(l1_bound)
                         ? std::max(0.0, (l1_bound - g.lpNorm<1>()) / n)
                         : std::numeric_limits<double>::infinity();
    if (c == 0.0) return g;
    for (Index i = 0; i < g.size(); ++i) g[i] += truncated_normal(c, rng);
    return g;
  }

 private:
  double truncated_normal(double c, Rng& rng) const {
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double z = noise.scale * standard_normal(rng);
      if (std::abs(z) <= c) return z;
    }
    // Truncation far inside the bulk: the conditional law is close to
    // uniform on [-c, c].
    return c * (2.0 * uniform01(rng) - 1.0);
  }
};

/// Mean of `batch` independent draws at x.
inline Vector minibatch(const OracleSpec& oracle, const Vector& x, std::int64_t batch,
                        Rng& rng) {
  require(batch >= 1, "minibatch: r must be >= 1");
  Vector acc = oracle.draw(x, rng);
  for (std::int64_t i = 1; i < batch; ++i) acc += oracle.draw(x, rng);
  return acc / static_cast<double>(batch);
}

/// sqrt(mean |g(x, xi) - grad f(x)|^2) over `draws` samples; the empirical
/// proxy reported for the truncated model.
inline double empirical_sigma(const OracleSpec& oracle, const Vector& x,
                              int draws, Rng& rng) {
  require(draws >= 1, "empirical_sigma: draws must be >= 1");
  const Vector mean = oracle.gradient(x);
  double acc = 0.0;
  for (int i = 0; i < draws; ++i) acc += (oracle.draw(x, rng) - mean).squaredNorm();
  return std::sqrt(acc / draws);
}

/// How gradients are put on the wire.
struct Compression {
  enum class Kind {
    pps,             // general two-part PPS
    pps_simplified,  // one-part PPS for non-negative vectors
    identity,        // dense floats, the unquantized baseline
  };
  Kind kind = Kind::pps;
  int float_bits = 64;

  static Compression pps(int float_bits = 64) { return {Kind::pps, float_bits}; }
  static Compression simplified(int float_bits = 64) {
    return {Kind::pps_simplified, float_bits};
  }
  static Compression identity(int float_bits = 64) {
    return {Kind::identity, float_bits};
  }
};

inline std::string to_string(Compression::Kind k) {
  switch (k) {
    case Compression::Kind::pps: return "pps";
    case Compression::Kind::pps_simplified: return "pps_simplified";
    case Compression::Kind::identity: return "identity";
  }
  return "?";
}

struct EncodedGradient {
  Vector decoded;
  std::uint64_t bits = 0;
  std::optional<QuantizedGradient> message;  // empty for identity
};

/// Encodes g with M samples per part. The simplified encoder is used only
/// when g is non-negative; otherwise the general encoder is the fallback.
inline EncodedGradient compress(const Vector& g, std::int64_t samples,
                                const Compression& c, Rng& rng) {
  EncodedGradient out;
  if (c.kind == Compression::Kind::identity) {
    out.decoded = g;
    out.bits = dense_bits(g.size(), c.float_bits);
    return out;
  }
  const bool one_signed = (g.array() >= 0.0).all();
  QuantizedGradient q = (c.kind == Compression::Kind::pps_simplified && one_signed)
                            ? pps_simplified_encode(g, samples, rng)
                            : pps_encode(g, samples, rng);
  out.decoded = pps_decode(q);
  out.bits = message_bits(q, c.float_bits);
  out.message = std::move(q);
  return out;
}

/// PPS-encoded mini-batch gradient at x and its bit cost.
inline EncodedGradient quantized_call(const OracleSpec& oracle,
                                      const Vector& x, std::int64_t batch, std::int64_t samples,
                                      const Compression& c, Rng& rng) {
  require(samples >= 1, "quantized_call: M must be >= 1");
  return compress(minibatch(oracle, x, batch, rng), samples, c, rng);
}

}  // namespace ppsq
