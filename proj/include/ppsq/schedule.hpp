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

// Step-size and sample-size schedules for the accelerated methods, their
// validity conditions, and the high-probability accuracy bound.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppsq/oracle.hpp"
#include "ppsq/quantize.hpp"

namespace ppsq {

inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kDefaultAlphaDenominator = 2.0 * std::numbers::sqrt2;

/// alpha_t = (t + 1) / (2 sqrt 2).
inline double default_alpha(int t) {
  return (t + 1.0) / kDefaultAlphaDenominator;
}

/// beta_t = L + sigma_{r_t,M_t} (t + 2)^{3/2} / (2^{1/4} sqrt(3) R).
inline double default_beta(int t, double lipschitz, double radius,
                           double sigma_rm) {
  require(radius > 0.0, "default_beta: R must be positive");
  return lipschitz + sigma_rm * std::pow(t + 2.0, 1.5) /
                         (std::pow(2.0, 0.25) * std::sqrt(3.0) * radius);
}

struct TheoryConstants {
  double delta = 0.1;
  double J = 1.0;
  double C1 = 0, C2 = 0, C3 = 0, C4 = 0;  // primal-dual method
  double C1p = 0, C2p = 0;                 // primal method
};

/// Confidence constants for failure probability delta; J is the
/// poly-logarithmic radius factor J(T), taken as an input.
inline TheoryConstants theory_constants(double delta, double J = 1.0) {
  require(delta > 0.0 && delta < 1.0, "theory_constants: delta in (0,1)");
  require(J >= 0.0, "theory_constants: J must be non-negative");
  TheoryConstants c;
  c.delta = delta;
  c.J = J;
  const double s5 = std::sqrt(3.0 * std::log(5.0 / delta));
  const double s4 = std::sqrt(3.0 * std::log(4.0 / delta));
  c.C1 = (2.0 * J + kSqrt2 - 1.0) * (kSqrt2 + (kSqrt2 + 1.0) * s5) + kSqrt2 - 2.0;
  c.C2 = 1.0 + std::log(5.0 / delta);
  c.C3 = c.C1 + 2.0 * kSqrt2 * J * (1.0 + s5);
  c.C4 = kSqrt2 * (1.0 + s5);
  c.C1p = (2.0 * J + kSqrt2 - 1.0) * (kSqrt2 + (kSqrt2 + 1.0) * s4) + kSqrt2 - 2.0;
  c.C2p = 1.0 + std::log(4.0 / delta);
  return c;
}

// ---------------------------------------------------------------------------
// Sample-size policies. Every count is ceil'd and floored at one.

namespace detail {
inline std::int64_t to_count(double x, const char* who) {
  const double c = std::max(1.0, std::ceil(x));
  require(c < 0x1.0p62, std::string(who) + ": sample count overflows");
  return static_cast<std::int64_t>(c);
}
}  // namespace detail

namespace detail {

inline double matched_m(double r, double n, double l1_bound, double sigma) {
  require(sigma > 0.0, "m_from_r: sigma must be positive (use r_from_m)");
  return 2.0 * (1.0 - 1.0 / n) * l1_bound * l1_bound * r /
         (std::numbers::e * sigma * sigma);
}

inline double matched_r(double samples, double n, double l1_bound,
                        double sigma) {
  const double denom = 2.0 * (1.0 - 1.0 / n) * l1_bound * l1_bound;
  require(denom > 0.0, "r_from_m: needs n > 1 and B > 0");
  return std::numbers::e * sigma * sigma * samples / denom;
}

inline double variable_factor(double eps, double lipschitz,
                              const TheoryConstants& c, double radius,
                              double a_norm) {
  require(eps > 0.0 && lipschitz > 0.0 && radius > 0.0 && a_norm > 0.0,
          "variable sample policy: eps, L, R, |A| must be positive");
  const double mixed = c.C3 + c.C4 * lipschitz / (a_norm * radius);
  return std::max(18.0 * c.C2 * c.C2, mixed * mixed) / (eps * lipschitz);
}

inline double growing_r(double alpha_t, double eps, double lipschitz,
                        double sigma, const TheoryConstants& c, double radius,
                        double a_norm) {
  return 34.0 * sigma * sigma * alpha_t *
         variable_factor(eps, lipschitz, c, radius, a_norm);
}

inline double growing_m(double alpha_t, double eps, double lipschitz, double n,
                        double l1_bound, const TheoryConstants& c,
                        double radius, double a_norm) {
  return 68.0 * (1.0 - 1.0 / n) * l1_bound * l1_bound * alpha_t /
         std::numbers::e * variable_factor(eps, lipschitz, c, radius, a_norm);
}

}  // namespace detail

/// M = 2 (1 - 1/n) B^2 r / (e sigma^2): quantization noise matched to the
/// batch noise.
inline std::int64_t m_from_r(std::int64_t r, double n, double l1_bound,
                             double sigma) {
  return detail::to_count(
      detail::matched_m(static_cast<double>(r), n, l1_bound, sigma),
      "m_from_r");
}

/// r = e sigma^2 M / (2 (1 - 1/n) B^2), the inverse relation.
inline std::int64_t r_from_m(std::int64_t samples, double n, double l1_bound,
                             double sigma) {
  return detail::to_count(
      detail::matched_r(static_cast<double>(samples), n, l1_bound, sigma),
      "r_from_m");
}

/// Growing batch: r_t = max{1, 34 sigma^2 alpha_t / (eps L) *
///   max{18 C2^2, (C3 + C4 L / (|A| R))^2}}.
inline std::int64_t variable_r(double alpha_t, double eps, double lipschitz,
                               double sigma, const TheoryConstants& c,
                               double radius, double a_norm) {
  return detail::to_count(
      detail::growing_r(alpha_t, eps, lipschitz, sigma, c, radius, a_norm),
      "variable_r");
}

/// Growing quantization: M_t = max{1, 68 (1 - 1/n) B^2 alpha_t / (eps e L) *
///   max{18 C2^2, (C3 + C4 L / (|A| R))^2}}.
inline std::int64_t variable_M(double alpha_t, double eps, double lipschitz,
                               double n, double l1_bound,
                               const TheoryConstants& c, double radius,
                               double a_norm) {
  return detail::to_count(detail::growing_m(alpha_t, eps, lipschitz, n,
                                            l1_bound, c, radius, a_norm),
                          "variable_M");
}

// ---------------------------------------------------------------------------

/// Variance proxy of one quantized oracle call, as a function of (r, M).
struct VarianceModel {
  double dim = 1.0;       // length of the quantized vector
  double l1_bound = 0.0;  // B
  double sigma = 0.0;     // oracle noise
  Compression::Kind compression = Compression::Kind::pps;

  double sigma2(std::int64_t r, std::int64_t samples) const {
    return sigma2_at(static_cast<double>(r), static_cast<double>(samples));
  }

  double sigma2_at(double r, double samples) const {
    switch (compression) {
      case Compression::Kind::identity:
        return 50.0 * sigma * sigma / r;
      case Compression::Kind::pps_simplified:
        return pps_sigma2(r, samples, dim, l1_bound, sigma, true);
      case Compression::Kind::pps:
        break;
    }
    return pps_sigma2(r, samples, dim, l1_bound, sigma, false);
  }
};

struct SamplePolicy {
  enum class Kind {
    constant,    // fixed r and M
    m_from_r,    // fixed r, M matched to it
    r_from_m,    // fixed M, r matched to it
    variable_r,  // growing r, M matched to it
    variable_m,  // growing M, r matched to it
  };
  Kind kind = Kind::constant;
  std::int64_t r = 1;
  std::int64_t M = 1;
  double eps = 0.0;     // target accuracy, variable policies only
  double a_norm = 1.0;  // |A|_2, variable policies only
};

inline std::string to_string(SamplePolicy::Kind k) {
  switch (k) {
    case SamplePolicy::Kind::constant: return "constant";
    case SamplePolicy::Kind::m_from_r: return "m_from_r";
    case SamplePolicy::Kind::r_from_m: return "r_from_m";
    case SamplePolicy::Kind::variable_r: return "variable_r";
    case SamplePolicy::Kind::variable_m: return "variable_m";
  }
  return "?";
}

struct ScheduleInputs {
  double lipschitz = 1.0;
  double radius = 1.0;
  VarianceModel variance;
  SamplePolicy policy;
  TheoryConstants constants = theory_constants(0.1);
  double alpha_denominator = kDefaultAlphaDenominator;  // alpha_t = (t+1)/a
  std::optional<double> beta_override;                  // constant beta
};

/// Materialised coefficient sequences for t = 0..horizon. Immutable once
/// built.
class Schedule {
 public:
  Schedule() = default;

  Schedule(std::vector<double> alpha, std::vector<double> beta,
           std::vector<std::int64_t> batch, std::vector<std::int64_t> samples,
           std::vector<double> sigma2)
      : alpha_(std::move(alpha)),
        beta_(std::move(beta)),
        batch_(std::move(batch)),
        samples_(std::move(samples)),
        sigma2_(std::move(sigma2)) {
    require(!alpha_.empty() && alpha_.size() == beta_.size() &&
                alpha_.size() == batch_.size() &&
                alpha_.size() == samples_.size() &&
                alpha_.size() == sigma2_.size(),
            "Schedule: sequences must be non-empty and of equal length");
    cumulative_.resize(alpha_.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < alpha_.size(); ++t)
      cumulative_[t] = acc += alpha_[t];
  }

  int horizon() const { return static_cast<int>(alpha_.size()) - 1; }

  double alpha(int t) const { return alpha_.at(t); }
  double beta(int t) const { return beta_.at(t); }
  std::int64_t batch(int t) const { return batch_.at(t); }
  std::int64_t samples(int t) const { return samples_.at(t); }
  double sigma2(int t) const { return sigma2_.at(t); }
  /// A_t = sum_{i <= t} alpha_i.
  double A(int t) const { return cumulative_.at(t); }
  /// tau_t = alpha_{t+1} / A_{t+1}.
  double tau(int t) const { return alpha(t + 1) / A(t + 1); }

  std::span<const double> alphas() const { return alpha_; }
  std::span<const double> betas() const { return beta_; }
  std::span<const double> sigma2s() const { return sigma2_; }

 private:
  std::vector<double> alpha_, beta_;
  std::vector<std::int64_t> batch_, samples_;
  std::vector<double> sigma2_;
  std::vector<double> cumulative_;
};

inline Schedule make_schedule(const ScheduleInputs& in, int horizon) {
  require(horizon >= 0, "make_schedule: horizon must be >= 0");
  require(in.alpha_denominator > 0.0, "make_schedule: alpha denominator > 0");
  const auto& p = in.policy;
  const auto& v = in.variance;
  const auto size = static_cast<std::size_t>(horizon) + 1;
  std::vector<double> alpha(size), beta(size), sigma2(size);
  std::vector<std::int64_t> batch(size), samples(size);
  for (int t = 0; t <= horizon; ++t) {
    alpha[t] = (t + 1.0) / in.alpha_denominator;
    // Sample sizes before rounding. beta_t is driven by the variance at
    // these values: an upper bound on the variance at the rounded counts,
    // and nonincreasing in t, which keeps beta_t monotone.
    double r_design = static_cast<double>(p.r);
    double m_design = static_cast<double>(p.M);
    switch (p.kind) {
      case SamplePolicy::Kind::constant:
        break;
      case SamplePolicy::Kind::m_from_r:
        m_design = detail::matched_m(r_design, v.dim, v.l1_bound, v.sigma);
        break;
      case SamplePolicy::Kind::r_from_m:
        r_design = detail::matched_r(m_design, v.dim, v.l1_bound, v.sigma);
        break;
      case SamplePolicy::Kind::variable_r:
        r_design = std::max(1.0, detail::growing_r(alpha[t], p.eps,
                                                   in.lipschitz, v.sigma,
                                                   in.constants, in.radius,
                                                   p.a_norm));
        m_design = detail::matched_m(r_design, v.dim, v.l1_bound, v.sigma);
        break;
      case SamplePolicy::Kind::variable_m:
        m_design = std::max(
            1.0, detail::growing_m(alpha[t], p.eps, in.lipschitz, v.dim,
                                   v.l1_bound, in.constants, in.radius,
                                   p.a_norm));
        r_design = detail::matched_r(m_design, v.dim, v.l1_bound, v.sigma);
        break;
    }
    r_design = std::max(1.0, r_design);
    m_design = std::max(1.0, m_design);
    std::int64_t r = detail::to_count(r_design, "make_schedule");
    std::int64_t M = detail::to_count(m_design, "make_schedule");
    // The matched count is derived from the rounded partner count.
    if (p.kind == SamplePolicy::Kind::m_from_r ||
        p.kind == SamplePolicy::Kind::variable_r)
      M = m_from_r(r, v.dim, v.l1_bound, v.sigma);
    if (p.kind == SamplePolicy::Kind::r_from_m ||
        p.kind == SamplePolicy::Kind::variable_m)
      r = r_from_m(M, v.dim, v.l1_bound, v.sigma);
    require(r >= 1 && M >= 1, "make_schedule: r and M must be >= 1");
    batch[t] = r;
    samples[t] = M;
    sigma2[t] = v.sigma2(r, M);
    beta[t] = in.beta_override
                  ? *in.beta_override
                  : default_beta(t, in.lipschitz, in.radius,
                                 std::sqrt(v.sigma2_at(r_design, m_design)));
  }
  return Schedule(std::move(alpha), std::move(beta), std::move(batch),
                  std::move(samples), std::move(sigma2));
}

struct Violation {
  int condition = 0;  // 1: alpha_0 in (0,1]; 2: L < beta_t <= beta_{t+1};
                      // 3: alpha_t^2 beta_t <= beta_{t-1} A_t
  int t = 0;
  std::string message;
};

/// Checks the three coefficient conditions for t = 0..T; empty result means
/// valid. Comparisons of the form a <= b allow a relative slack of 1e-12.
inline std::vector<Violation> validate(const Schedule& s, double lipschitz,
                                       int T) {
  require(T >= 0 && T <= s.horizon(), "validate: T outside schedule horizon");
  std::vector<Violation> out;
  auto leq = [](double a, double b) {
    return a <= b + 1e-12 * std::max(std::abs(a), std::abs(b));
  };
  const double a0 = s.alpha(0);
  if (!(a0 > 0.0 && a0 <= 1.0))
    out.push_back({1, 0, "alpha_0 = " + std::to_string(a0) + " not in (0, 1]"});
  for (int t = 0; t <= T; ++t) {
    // With zero variance the strict margin has nothing to absorb.
    const bool noiseless = s.sigma2(t) == 0.0;
    if (noiseless ? !(s.beta(t) >= lipschitz) : !(s.beta(t) > lipschitz))
      out.push_back({2, t, noiseless ? "beta_t < L" : "beta_t <= L"});
    if (t < T && !leq(s.beta(t), s.beta(t + 1)))
      out.push_back({2, t, "beta_t > beta_{t+1}"});
    if (t >= 1 &&
        !leq(s.alpha(t) * s.alpha(t) * s.beta(t), s.beta(t - 1) * s.A(t)))
      out.push_back({3, t, "alpha_t^2 beta_t > beta_{t-1} A_t"});
  }
  return out;
}

enum class BoundVariant { primal_dual, primal };

/// High-probability accuracy after T iterations:
///   beta_T R^2 / (2 A_T) + K / A_T sqrt(sum alpha_t^2 s_t)
///     + C / A_T sum A_t s_t / (beta_t - L),
/// with s_t = sigma^2_{r_t,M_t}, K = C3 R + C4 L / |A| and C = C2 for the
/// primal-dual method, K = C1' R and C = C2' for the primal method.
inline double epsilon_bound(int T, const TheoryConstants& c, const Schedule& s,
                            std::span<const double> sigma2, double radius,
                            double lipschitz, double a_norm,
                            BoundVariant variant = BoundVariant::primal_dual) {
  require(T >= 0 && T <= s.horizon(), "epsilon_bound: T outside horizon");
  require(sigma2.size() > static_cast<std::size_t>(T),
          "epsilon_bound: sigma sequence too short");
  double sum_sq = 0.0, sum_frac = 0.0;
  for (int t = 0; t <= T; ++t) {
    sum_sq += s.alpha(t) * s.alpha(t) * sigma2[t];
    if (sigma2[t] == 0.0) continue;
    const double gap = s.beta(t) - lipschitz;
    require(gap > 0.0, "epsilon_bound: needs beta_t > L");
    sum_frac += s.A(t) * sigma2[t] / gap;
  }
  const double AT = s.A(T);
  double k = 0.0, cc = 0.0;
  if (variant == BoundVariant::primal_dual) {
    require(a_norm > 0.0, "epsilon_bound: |A| must be positive");
    k = c.C3 * radius + c.C4 * lipschitz / a_norm;
    cc = c.C2;
  } else {
    k = c.C1p * radius;
    cc = c.C2p;
  }
  return s.beta(T) * radius * radius / (2.0 * AT) +
         k / AT * std::sqrt(sum_sq) + cc / AT * sum_frac;
}

inline double epsilon_bound(int T, const TheoryConstants& c, const Schedule& s,
                            double radius, double lipschitz, double a_norm,
                            BoundVariant variant = BoundVariant::primal_dual) {
  return epsilon_bound(T, c, s, s.sigma2s(), radius, lipschitz, a_norm,
                       variant);
}

/// epsilon_bound for every T = 0..horizon in one pass.
inline std::vector<double> epsilon_profile(
    const TheoryConstants& c, const Schedule& s, double radius,
    double lipschitz, double a_norm,
    BoundVariant variant = BoundVariant::primal_dual) {
  double k = 0.0, cc = 0.0;
  if (variant == BoundVariant::primal_dual) {
    require(a_norm > 0.0, "epsilon_profile: |A| must be positive");
    k = c.C3 * radius + c.C4 * lipschitz / a_norm;
    cc = c.C2;
  } else {
    k = c.C1p * radius;
    cc = c.C2p;
  }
  std::vector<double> out(static_cast<std::size_t>(s.horizon()) + 1);
  double sum_sq = 0.0, sum_frac = 0.0;
  for (int t = 0; t <= s.horizon(); ++t) {
    const double v = s.sigma2(t);
    sum_sq += s.alpha(t) * s.alpha(t) * v;
    if (v != 0.0) {
      const double gap = s.beta(t) - lipschitz;
      require(gap > 0.0, "epsilon_profile: needs beta_t > L");
      sum_frac += s.A(t) * v / gap;
    }
    const double AT = s.A(t);
    out[t] = s.beta(t) * radius * radius / (2.0 * AT) +
             k / AT * std::sqrt(sum_sq) + cc / AT * sum_frac;
  }
  return out;
}

struct CoefficientIdentities {
  double lhs1 = 0;  // (1/A_T) sqrt(sum alpha_t^2), by direct summation
  double rhs1 = 0;  // sqrt(2 (2T + 3) / (3 (T + 1)(T + 2)))
  double lhs2 = 0;  // (1/A_T) sum A_t / (t + 2)^{3/2}
  double bound1 = 0;  // (2 / sqrt 3) / sqrt T
  double bound2 = 0;  // (2 / 3) / sqrt T

  bool inequalities_hold() const { return lhs1 <= bound1 && lhs2 <= bound2; }
};

/// Sums for alpha_t = (t + 1)/a against their closed forms and bounds.
inline CoefficientIdentities coeff_identities(double a, int T) {
  require(a > 0.0 && T >= 1, "coeff_identities: needs a > 0 and T >= 1");
  double sum_sq = 0.0, A = 0.0, sum_ratio = 0.0;
  for (int t = 0; t <= T; ++t) {
    const double alpha = (t + 1.0) / a;
    sum_sq += alpha * alpha;
    A += alpha;
    sum_ratio += A / std::pow(t + 2.0, 1.5);
  }
  CoefficientIdentities r;
  r.lhs1 = std::sqrt(sum_sq) / A;
  r.rhs1 = std::sqrt(2.0 * (2.0 * T + 3.0) / (3.0 * (T + 1.0) * (T + 2.0)));
  r.lhs2 = sum_ratio / A;
  r.bound1 = 2.0 / std::sqrt(3.0) / std::sqrt(static_cast<double>(T));
  r.bound2 = 2.0 / 3.0 / std::sqrt(static_cast<double>(T));
  return r;
}

}  // namespace ppsq
