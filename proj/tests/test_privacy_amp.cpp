#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "nkd/privacy_amp.hpp"

using nkd::BitBlock;
using nkd::Generator;
using nkd::Seed;

namespace {

// Reference matrix product, one bit at a time: M[i][j] = seed[i - j + n - 1].
BitBlock naive_toeplitz(const BitBlock& x, const BitBlock& seed, std::size_t m) {
  const std::size_t n = x.size();
  BitBlock out(m);
  for (std::size_t i = 0; i < m; ++i) {
    bool acc = false;
    for (std::size_t j = 0; j < n; ++j) acc ^= seed.get(i + n - 1 - j) && x.get(j);
    out.set(i, acc);
  }
  return out;
}

}  // namespace

TEST(PrivacyAmp, OutputLength) {
  EXPECT_EQ(nkd::output_length(14450, 0.48, 64), 7450U);
  EXPECT_EQ(nkd::output_length(100, 0.9, 64), 0U);
  EXPECT_EQ(nkd::output_length(100, 1.0, 0), 0U);
  EXPECT_THROW(nkd::output_length(100, 1.1, 0), std::invalid_argument);
  EXPECT_THROW(nkd::output_length(100, -0.1, 0), std::invalid_argument);
}

TEST(PrivacyAmp, SeedLength) {
  EXPECT_EQ(nkd::hash_seed_length(100, 20), 119U);
  EXPECT_EQ(nkd::hash_seed_length(0, 20), 0U);
  EXPECT_EQ(nkd::hash_seed_length(100, 0), 0U);
}

TEST(PrivacyAmp, MatchesNaiveProduct) {
  Generator g(Seed{11}, 4);
  for (std::size_t n : {1U, 7U, 64U, 65U, 130U, 1000U}) {
    for (std::size_t m : {1U, 5U, 63U, 64U, 129U}) {
      const auto x = g.uniform_bits(n);
      const auto seed = nkd::draw_hash_seed(n, m, g);
      ASSERT_EQ(nkd::toeplitz_hash(x, seed, m), naive_toeplitz(x, seed, m)) << n << "x" << m;
    }
  }
}

TEST(PrivacyAmp, SingleCentralSeedBitIsIdentity) {
  const std::size_t n = 77;
  BitBlock seed(2 * n - 1);
  seed.set(n - 1, true);
  const auto x = nkd::gen_uniform_bits(n, Seed{3}, 0);
  EXPECT_EQ(nkd::toeplitz_hash(x, seed, n), x);
}

TEST(PrivacyAmp, Linearity) {
  Generator g(Seed{12}, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 300 + trial;
    const std::size_t m = 40 + trial;
    const auto seed = nkd::draw_hash_seed(n, m, g);
    const auto a = g.uniform_bits(n);
    const auto b = g.uniform_bits(n);
    EXPECT_EQ(nkd::toeplitz_hash(a ^ b, seed, m),
              nkd::toeplitz_hash(a, seed, m) ^ nkd::toeplitz_hash(b, seed, m));
    EXPECT_EQ(nkd::toeplitz_hash(BitBlock(n), seed, m).popcount(), 0U);
  }
}

TEST(PrivacyAmp, UniversalCollisionRate) {
  // For a fixed pair x != x', Pr_seed[h(x) = h(x')] = 2^-m.
  Generator g(Seed{13}, 4);
  const std::size_t n = 64;
  const std::size_t trials = 20000;
  for (std::size_t m : {1U, 4U, 8U, 12U, 16U}) {
    const auto x = g.uniform_bits(n);
    auto y = x;
    y.set(17, !y.get(17));
    std::size_t collisions = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      const auto seed = nkd::draw_hash_seed(n, m, g);
      collisions += nkd::toeplitz_hash(x, seed, m) == nkd::toeplitz_hash(y, seed, m);
    }
    const double p = std::ldexp(1.0, -static_cast<int>(m));
    const double bound = p + 3 * std::sqrt(p * (1 - p) / trials);
    EXPECT_LE(static_cast<double>(collisions) / trials, bound) << "m=" << m;
  }
}

TEST(PrivacyAmp, SameSeedSameInputSameKey) {
  Generator a(Seed{21}, 4);
  Generator b(Seed{21}, 4);
  const auto x = nkd::gen_uniform_bits(5000, Seed{1}, 0);
  const nkd::PaParams pa{5000, 2000, nkd::draw_hash_seed(5000, 2000, a)};
  EXPECT_EQ(nkd::apply_hash(x, pa), nkd::toeplitz_hash(x, nkd::draw_hash_seed(5000, 2000, b), 2000));
  EXPECT_THROW(nkd::apply_hash(BitBlock(4999), pa), std::invalid_argument);
}

TEST(PrivacyAmp, RejectsWrongSeedLength) {
  EXPECT_THROW(nkd::toeplitz_hash(BitBlock(10), BitBlock(10), 5), std::invalid_argument);
}

TEST(PrivacyAmp, EmptyOutput) {
  EXPECT_EQ(nkd::toeplitz_hash(BitBlock(10), BitBlock(0), 0).size(), 0U);
}
