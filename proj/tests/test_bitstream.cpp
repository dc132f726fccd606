#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "nkd/bitstream.hpp"

using nkd::BitBlock;
using nkd::Generator;
using nkd::Seed;

TEST(BitBlock, StringRoundTrip) {
  const auto b = BitBlock::from_string("1011001110");
  EXPECT_EQ(b.size(), 10U);
  EXPECT_EQ(b.to_string(), "1011001110");
  EXPECT_EQ(b.popcount(), 6U);
  EXPECT_TRUE(b.get(0));
  EXPECT_FALSE(b.get(1));
}

TEST(BitBlock, HexIsMsbFirstWithLength) {
  const auto b = BitBlock::from_string("1010");
  EXPECT_EQ(b.to_hex(), "4:a0");
  EXPECT_EQ(BitBlock::from_hex("4:a0"), b);
  EXPECT_EQ(BitBlock::from_hex(BitBlock(0).to_hex()), BitBlock(0));
}

TEST(BitBlock, HexRejectsNonzeroPadding) {
  EXPECT_THROW(BitBlock::from_hex("4:a1"), std::invalid_argument);
  EXPECT_THROW(BitBlock::from_hex("9:ff"), std::invalid_argument);
  EXPECT_THROW(BitBlock::from_hex("zz"), std::invalid_argument);
}

TEST(BitBlock, XorComplementSlice) {
  const auto a = BitBlock::from_string("110010101");
  const auto b = BitBlock::from_string("011011001");
  EXPECT_EQ((a ^ b).to_string(), "101001100");
  EXPECT_EQ(a.complement().to_string(), "001101010");
  EXPECT_EQ(a.complement().popcount() + a.popcount(), a.size());
  EXPECT_EQ(a.slice(2, 5).to_string(), "00101");
  EXPECT_EQ(nkd::hamming_distance(a, b), 4U);
  EXPECT_DOUBLE_EQ(nkd::agreement_fraction(a, b), 5.0 / 9.0);
}

TEST(BitBlock, AgreementRejectsBadInput) {
  EXPECT_THROW(nkd::agreement_fraction(BitBlock(0), BitBlock(0)), std::invalid_argument);
  EXPECT_THROW(nkd::agreement_fraction(BitBlock(3), BitBlock(4)), std::invalid_argument);
}

TEST(BitBlock, PushBackMatchesSet) {
  BitBlock a(0);
  BitBlock b(13);
  for (std::size_t i = 0; i < 13; ++i) {
    a.push_back(i % 3 == 0);
    b.set(i, i % 3 == 0);
  }
  EXPECT_EQ(a, b);
}

// Known-answer vectors of the Philox4x32-10 block function.
TEST(Philox, KnownAnswers) {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  EXPECT_EQ(Generator::philox(A4{0, 0, 0, 0}, A2{0, 0}),
            (A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Generator::philox(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                              A2{0xffffffff, 0xffffffff}),
            (A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Generator::philox(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                              A2{0xa4093822, 0x299f31d0}),
            (A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Generator, DeterministicPerSeedAndStream) {
  EXPECT_EQ(nkd::gen_uniform_bits(4096, Seed{7}, 0), nkd::gen_uniform_bits(4096, Seed{7}, 0));
  EXPECT_NE(nkd::gen_uniform_bits(4096, Seed{7}, 0), nkd::gen_uniform_bits(4096, Seed{7}, 1));
  EXPECT_NE(nkd::gen_uniform_bits(4096, Seed{7}, 0), nkd::gen_uniform_bits(4096, Seed{8}, 0));
}

TEST(Generator, BiasedBitsWithinFourSigma) {
  const std::size_t n = 1000000;
  for (double p : {0.01, 0.16, 0.5, 0.9}) {
    const auto bits = nkd::gen_biased_bits(n, p, Seed{42}, 3);
    const double sigma = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(static_cast<double>(bits.popcount()) / n, p, 4 * sigma) << "p=" << p;
  }
}

TEST(Generator, BiasedBitsEdgeCases) {
  EXPECT_EQ(nkd::gen_biased_bits(1000, 0.0, Seed{1}, 0).popcount(), 0U);
  EXPECT_EQ(nkd::gen_biased_bits(1000, 1.0, Seed{1}, 0).popcount(), 1000U);
  EXPECT_THROW(nkd::gen_biased_bits(10, -0.1, Seed{1}, 0), std::invalid_argument);
  EXPECT_THROW(nkd::gen_biased_bits(10, 1.5, Seed{1}, 0), std::invalid_argument);
}

TEST(Generator, Uniform01InRange) {
  Generator g(Seed{3}, 0);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = g.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 4 * std::sqrt(1.0 / 12 / 100000));
}

TEST(Generator, DeriveSeedSeparatesPoints) {
  EXPECT_EQ(nkd::derive_seed(Seed{1}, 2, 3).value, nkd::derive_seed(Seed{1}, 2, 3).value);
  EXPECT_NE(nkd::derive_seed(Seed{1}, 2, 3).value, nkd::derive_seed(Seed{1}, 3, 2).value);
  EXPECT_NE(nkd::derive_seed(Seed{1}, 0, 0).value, nkd::derive_seed(Seed{2}, 0, 0).value);
}

TEST(UniversalTest, UniformBitsPassAtL8) {
  const auto bits = nkd::gen_uniform_bits(10000000, Seed{2024}, nkd::stream::kRandomBlock);
  const auto r = nkd::rng_health_test(bits, 8);
  EXPECT_EQ(r.init_blocks, 2560U);
  EXPECT_NEAR(r.expected, 7.1836656, 1e-7);
  EXPECT_NEAR(r.statistic, 7.1836656, 4 * r.sigma);
  EXPECT_TRUE(r.passes(4.0));
}

TEST(UniversalTest, ConstantInputFails) {
  const BitBlock zeros(10000000);
  const auto r = nkd::rng_health_test(zeros, 8);
  EXPECT_NEAR(r.statistic, 0.0, 1e-3);
  EXPECT_FALSE(r.passes(4.0));
}

TEST(UniversalTest, InsufficientDataIsDistinctFromFailure) {
  const auto bits = nkd::gen_uniform_bits(100000, Seed{1}, 0);
  EXPECT_THROW(nkd::rng_health_test(bits, 8), nkd::InsufficientDataError);
  EXPECT_THROW(nkd::rng_health_test(bits, 5), std::invalid_argument);
  EXPECT_THROW(nkd::rng_health_test(bits, 17), std::invalid_argument);
}
