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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "ppsq/quantize.hpp"
#include "support.hpp"

namespace ppsq {
namespace {

using testing::random_mixed;
using testing::random_simplex;

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

TEST(SplitSigns, Examples) {
  auto [p1, n1] = split_signs(vec({0.5, -0.5}));
  EXPECT_EQ(p1, vec({0.5, 0.0}));
  EXPECT_EQ(n1, vec({0.0, 0.5}));
  auto [p2, n2] = split_signs(Vector::Zero(3));
  EXPECT_EQ(p2, Vector::Zero(3));
  EXPECT_EQ(n2, Vector::Zero(3));
  auto [p3, n3] = split_signs(vec({1, 2, 3}));
  EXPECT_EQ(p3, vec({1, 2, 3}));
  EXPECT_EQ(n3, Vector::Zero(3));
}

TEST(SplitSigns, RoundTripIsExact) {
  Rng rng = make_rng(1);
  const double denorm = std::numeric_limits<double>::denorm_min();
  for (int trial = 0; trial < 200; ++trial) {
    Vector g = random_mixed(1 + trial % 17, rng);
    g[0] = trial % 3 == 0 ? -0.0 : (trial % 3 == 1 ? denorm : -denorm);
    auto [pos, neg] = split_signs(g);
    EXPECT_TRUE((pos.array() >= 0.0).all());
    EXPECT_TRUE((neg.array() >= 0.0).all());
    EXPECT_EQ(pos - neg, g);
  }
}

TEST(CategoricalSample, DegenerateDistribution) {
  Rng rng = make_rng(2);
  auto idx = categorical_sample(vec({1, 0, 0}), 5, rng);
  EXPECT_EQ(idx, std::vector<SampleIndex>(5, 0));
}

TEST(CategoricalSample, Frequencies) {
  Rng rng = make_rng(3);
  const int N = 100000;
  for (auto w : {vec({1, 1}), vec({0.2, 0.8})}) {
    auto idx = categorical_sample(w, N, rng);
    const double f0 = std::count(idx.begin(), idx.end(), 0u) / double(N);
    EXPECT_NEAR(f0, w[0] / w.sum(), 0.01);
  }
}

TEST(CategoricalSample, RejectsZeroWeights) {
  Rng rng = make_rng(4);
  EXPECT_THROW(categorical_sample(Vector::Zero(3), 1, rng), InvalidArgument);
  EXPECT_THROW(categorical_sample(vec({1, -1}), 1, rng), InvalidArgument);
}

TEST(CategoricalSample, NeverPicksZeroWeight) {
  Rng rng = make_rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    Vector w = random_simplex(8, rng);
    w[trial % 8] = 0.0;
    w[7] = trial % 2 ? 0.0 : w[7];
    if (w.sum() == 0.0) continue;
    for (SampleIndex k : categorical_sample(w, 200, rng)) EXPECT_GT(w[k], 0.0);
  }
}

TEST(PpsEncode, BasisVector) {
  Rng rng = make_rng(6);
  Vector e = Vector::Zero(5);
  e[1] = 1.0;
  for (std::int64_t M : {1, 3, 10}) {
    QuantizedGradient q = pps_encode(e, M, rng);
    EXPECT_EQ(q.pos_mass, 1.0);
    EXPECT_EQ(q.pos_indices, std::vector<SampleIndex>(M, 1));
    EXPECT_TRUE(q.neg_indices.empty());
    EXPECT_TRUE(pps_decode(q).isApprox(e, 1e-15));
  }
}

TEST(PpsEncode, TwoSinglePointParts) {
  Rng rng = make_rng(7);
  QuantizedGradient q = pps_encode(vec({0.5, -0.5}), 1, rng);
  EXPECT_EQ(q.pos_mass, 0.5);
  EXPECT_EQ(q.neg_mass, 0.5);
  EXPECT_EQ(q.pos_indices, std::vector<SampleIndex>{0});
  EXPECT_EQ(q.neg_indices, std::vector<SampleIndex>{1});
  EXPECT_EQ(pps_decode(q), vec({0.5, -0.5}));
}

TEST(PpsEncode, ZeroVectorIsEmpty) {
  Rng rng = make_rng(8);
  QuantizedGradient q = pps_encode(Vector::Zero(4), 3, rng);
  EXPECT_TRUE(q.pos_indices.empty());
  EXPECT_TRUE(q.neg_indices.empty());
  EXPECT_EQ(pps_decode(q), Vector::Zero(4));
}

TEST(PpsEncode, MeanOfDecodes) {
  Rng rng = make_rng(9);
  const Vector g = vec({0.3, 0.7});
  Vector acc = Vector::Zero(2);
  const int N = 100000;
  for (int i = 0; i < N; ++i) acc += pps_decode(pps_encode(g, 1, rng));
  EXPECT_NEAR(acc[0] / N, 0.3, 0.01);
  EXPECT_NEAR(acc[1] / N, 0.7, 0.01);
}

TEST(PpsEncode, MessageInvariants) {
  Rng rng = make_rng(10);
  for (int trial = 0; trial < 300; ++trial) {
    const Index n = 1 + trial % 40;
    const Vector g = random_mixed(n, rng);
    const std::int64_t M = 1 + trial % 7;
    QuantizedGradient q = pps_encode(g, M, rng);
    EXPECT_DOUBLE_EQ(q.pos_mass, g.cwiseMax(0.0).sum());
    EXPECT_DOUBLE_EQ(q.neg_mass, (-g).cwiseMax(0.0).sum());
    EXPECT_EQ(q.pos_mass == 0.0, q.pos_indices.empty());
    EXPECT_EQ(q.neg_mass == 0.0, q.neg_indices.empty());
    for (auto k : q.pos_indices) EXPECT_GT(g[k], 0.0);
    for (auto k : q.neg_indices) EXPECT_LT(g[k], 0.0);
    const Vector d = pps_decode(q);
    EXPECT_LE(static_cast<std::size_t>((d.array() != 0.0).count()),
              q.index_count());
    EXPECT_LE(d.lpNorm<1>(), (q.pos_mass + q.neg_mass) * (1 + 1e-12));
  }
}

TEST(PpsEncode, CutoffDropsTinyComponents) {
  Rng rng = make_rng(11);
  Vector g = vec({1.0, 1e-17, 1.0});
  for (int i = 0; i < 50; ++i)
    for (auto k : pps_encode(g, 20, rng).pos_indices) EXPECT_NE(k, 1u);
}

TEST(PpsDecode, Examples) {
  QuantizedGradient q;
  q.dim = 3;
  q.pos_mass = 1.0;
  q.pos_indices = {0, 0};
  EXPECT_EQ(pps_decode(q), vec({1, 0, 0}));
  q.pos_indices = {0, 1};
  EXPECT_EQ(pps_decode(q), vec({0.5, 0.5, 0}));
  QuantizedGradient empty;
  empty.dim = 3;
  EXPECT_EQ(pps_decode(empty), Vector::Zero(3));
}

TEST(PpsSimplified, HalfHalfOutcomeDistribution) {
  // Enumerate the four equally likely index pairs.
  std::map<std::pair<double, double>, double> expected;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      Vector d = Vector::Zero(2);
      d[a] += 0.5;
      d[b] += 0.5;
      expected[{d[0], d[1]}] += 0.25;
    }
  ASSERT_EQ(expected.size(), 3u);
  EXPECT_EQ((expected[{0.5, 0.5}]), 0.5);

  Rng rng = make_rng(12);
  const int N = 100000;
  std::map<std::pair<double, double>, int> seen;
  for (int i = 0; i < N; ++i) {
    const Vector d = pps_decode(pps_simplified_encode(vec({0.5, 0.5}), 2, rng));
    ++seen[{d[0], d[1]}];
  }
  ASSERT_EQ(seen.size(), 3u);
  for (const auto& [k, p] : expected) {
    const double sd = std::sqrt(p * (1 - p) / N);
    EXPECT_NEAR(seen[k] / double(N), p, 6 * sd);
  }
}

TEST(PpsSimplified, BasisAndErrors) {
  Rng rng = make_rng(13);
  Vector e = Vector::Zero(3);
  e[0] = 1.0;
  QuantizedGradient q = pps_simplified_encode(e, 4, rng);
  EXPECT_TRUE(q.unit_mass());
  EXPECT_EQ(pps_decode(q), e);
  EXPECT_THROW(pps_simplified_encode(vec({0.5, -0.1}), 1, rng), InvalidArgument);
}

TEST(MessageBits, WorkedExample) {
  QuantizedGradient q;
  q.dim = 10000;
  q.pos_mass = 1.0;
  q.neg_mass = 2.0;
  q.pos_indices.assign(100, 3);
  q.neg_indices.assign(100, 9999);
  EXPECT_EQ(index_width(10000), 14);
  EXPECT_EQ(message_bits(q, 32), 2864u);
}

TEST(MessageBits, SimplifiedUnitMassAndEmpty) {
  Rng rng = make_rng(14);
  QuantizedGradient q = pps_simplified_encode(vec({0.25, 0.75}), 1, rng);
  EXPECT_EQ(message_bits(q, 64), 1u);
  QuantizedGradient empty;
  empty.dim = 7;
  EXPECT_EQ(message_bits(empty, 32), 64u);
  EXPECT_EQ(message_bits(empty, 64), 128u);
  EXPECT_THROW(message_bits(empty, 16), InvalidArgument);
}

TEST(MessageBits, IndexWidth) {
  EXPECT_EQ(index_width(1), 0);
  EXPECT_EQ(index_width(2), 1);
  EXPECT_EQ(index_width(3), 2);
  EXPECT_EQ(index_width(1024), 10);
  EXPECT_EQ(index_width(1025), 11);
  EXPECT_EQ(index_width(1000000), 20);
}

TEST(PpsSigma2, Examples) {
  EXPECT_EQ(pps_sigma2(1, 1, 1, 5.0, 0.0), 0.0);
  EXPECT_NEAR(pps_sigma2(1, 1, 1e15, 1.0, 0.0), 100.0 / std::numbers::e, 1e-9);
  EXPECT_NEAR(pps_sigma2(1, 1, 1e15, 1.0, 0.0), 36.79, 0.005);
  const double n = 10, r = 3, M = 4, s = 0.5;
  EXPECT_DOUBLE_EQ(pps_sigma2(r, M, n, 1.0, s, true),
                   50.0 * ((n - 1) / (std::numbers::e * n * M) + s * s / r));
}

TEST(PpsSigma2, MonotoneInBatchAndSamples) {
  for (double n : {2.0, 10.0, 1000.0})
    for (double r = 1; r <= 64; r *= 2)
      for (double M = 1; M <= 64; M *= 2) {
        const double v = pps_sigma2(r, M, n, 1.5, 0.7);
        EXPECT_LE(pps_sigma2(2 * r, M, n, 1.5, 0.7), v);
        EXPECT_LE(pps_sigma2(r, 2 * M, n, 1.5, 0.7), v);
      }
}

TEST(TopM, Examples) {
  EXPECT_EQ(top_m_encode(vec({3, -1, 2}), 2), vec({3, 0, 2}));
  EXPECT_EQ(top_m_encode(vec({1, -1, 1}), 1), vec({1, 0, 0}));
  EXPECT_THROW(top_m_encode(vec({1, 2}), 3), InvalidArgument);
}

TEST(RandomM, FullSamplingIsIdentity) {
  Rng rng = make_rng(15);
  const Vector g = vec({1, -2, 3, 0.5});
  EXPECT_EQ(random_m_encode(g, 4, rng), g);
  EXPECT_THROW(random_m_encode(g, 5, rng), InvalidArgument);
}

TEST(RandomM, TwoOutcomes) {
  Rng rng = make_rng(16);
  const Vector e = vec({1, 0});
  Vector acc = Vector::Zero(2);
  const int N = 100000;
  int kept = 0;
  for (int i = 0; i < N; ++i) {
    const Vector d = random_m_encode(e, 1, rng);
    ASSERT_TRUE(d == vec({2, 0}) || d == vec({0, 0}));
    kept += d[0] != 0.0;
    acc += d;
  }
  EXPECT_NEAR(kept / double(N), 0.5, 6 * 0.5 / std::sqrt(N));
  EXPECT_NEAR(acc[0] / N, 1.0, 6 * 1.0 / std::sqrt(N));
}

TEST(SecondMoment, RandomMMatchesNOverMMinusOne) {
  Rng rng = make_rng(17);
  const Vector x = testing::random_normal(10, rng);
  auto s = estimate_second_moment(
      [](const Vector& v, Rng& r) { return random_m_encode(v, 5, r); }, x,
      100000, rng);
  EXPECT_NEAR(s.relative_second_moment, 1.0, 0.05);
  EXPECT_EQ(s.sample_count, 100000);
}

TEST(SecondMoment, IdentityIsZero) {
  Rng rng = make_rng(18);
  auto s = estimate_second_moment([](const Vector& v, Rng&) { return v; },
                                  Vector::Ones(4), 10, rng);
  EXPECT_EQ(s.empirical_second_moment, 0.0);
  EXPECT_EQ(s.relative_second_moment, 0.0);
}

TEST(SecondMoment, OneHotUniformSimplex) {
  Rng rng = make_rng(19);
  const Vector v = Vector::Constant(10, 0.1);
  auto s = estimate_second_moment(
      [](const Vector& x, Rng& r) { return pps_decode(pps_simplified_encode(x, 1, r)); },
      v, 100000, rng);
  EXPECT_NEAR(s.empirical_second_moment, 0.9, 0.009);
}

TEST(SecondMoment, OneHotIdentityByEnumeration) {
  Rng rng = make_rng(20);
  for (int n = 2; n <= 6; ++n)
    for (int trial = 0; trial < 20; ++trial) {
      const Vector v = random_simplex(n, rng);
      EXPECT_NEAR(testing::one_hot_second_moment_exact(v), 1.0 - v.squaredNorm(),
                  1e-14);
    }
}

// Componentwise |mean - g| <= 6 sqrt(var / N) for unbiased compressors.
template <class Compressor>
void expect_unbiased(const Vector& g, Compressor&& c, int N, Rng& rng) {
  Vector sum = Vector::Zero(g.size()), sq = Vector::Zero(g.size());
  for (int i = 0; i < N; ++i) {
    const Vector d = c(g, rng);
    sum += d;
    sq += d.cwiseProduct(d);
  }
  const Vector mean = sum / N;
  const Vector var = (sq / N - mean.cwiseProduct(mean)).cwiseMax(0.0);
  for (Index k = 0; k < g.size(); ++k)
    EXPECT_LE(std::abs(mean[k] - g[k]), 6 * std::sqrt(var[k] / N) + 1e-12)
        << "component " << k;
}

TEST(Unbiasedness, Pps) {
  Rng rng = make_rng(21);
  for (std::int64_t M : {1, 4, 16}) {
    const Vector g = random_mixed(20, rng);
    expect_unbiased(
        g, [M](const Vector& x, Rng& r) { return pps_decode(pps_encode(x, M, r)); },
        20000, rng);
  }
}

TEST(Unbiasedness, SimplifiedAndRandomM) {
  Rng rng = make_rng(22);
  const Vector v = random_simplex(15, rng);
  expect_unbiased(
      v, [](const Vector& x, Rng& r) { return pps_decode(pps_simplified_encode(x, 3, r)); },
      20000, rng);
  const Vector g = random_mixed(15, rng);
  expect_unbiased(
      g, [](const Vector& x, Rng& r) { return random_m_encode(x, 4, r); }, 20000, rng);
}

}  // namespace
}  // namespace ppsq
