#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "nkd/distillation.hpp"

using nkd::BitBlock;
using nkd::Generator;
using nkd::Seed;

TEST(Distillation, EncodeMasksEachGroup) {
  const auto x = BitBlock::from_string("0011011");  // last bit is ignored
  const auto c = BitBlock::from_string("101");
  const auto m = nkd::encode_round(x, c, 2);
  EXPECT_EQ(m.n_rep, 2U);
  EXPECT_EQ(m.payload.to_string(), "111110");
  EXPECT_EQ(m.groups(), 3U);
}

TEST(Distillation, BobAcceptsOnlyUnanimousGroups) {
  const auto x = BitBlock::from_string("00110110");
  const auto c = BitBlock::from_string("1010");
  const auto y = BitBlock::from_string("01111101");  // groups: split, equal, split, all flipped
  const auto d = nkd::bob_decode(nkd::encode_round(x, c, 2), y);
  EXPECT_EQ(d.accept_mask.to_string(), "0101");
  EXPECT_EQ(d.decoded.to_string(), "01");  // last group reads as all ones
}

TEST(Distillation, BobRejectsMisalignedInput) {
  const auto m = nkd::encode_round(BitBlock(8), BitBlock(4), 2);
  EXPECT_THROW(nkd::bob_decode(m, BitBlock(6)), std::invalid_argument);
}

TEST(Distillation, NoiselessRoundIsPerfect) {
  Generator msg(Seed{1}, 3);
  Generator tie(Seed{1}, 7);
  const auto x = nkd::gen_uniform_bits(2000, Seed{5}, 0);
  const auto t = nkd::run_round(x, x, x, 2, msg, tie);
  EXPECT_EQ(t.accepted, 1000U);
  EXPECT_EQ(t.offered, 1000U);
  EXPECT_EQ(t.alice_next, t.bob_next);
  EXPECT_EQ(t.alice_next, t.eve_next);
  EXPECT_EQ(t.eve_tie_mask.popcount(), 0U);
}

TEST(Distillation, AliceNextIsCMaskedByAcceptance) {
  Generator msg(Seed{9}, 3);
  Generator msg_copy(Seed{9}, 3);
  Generator tie(Seed{9}, 7);
  const auto x = nkd::gen_uniform_bits(3000, Seed{1}, 0);
  const auto y = x ^ nkd::gen_biased_bits(3000, 0.27, Seed{1}, 1);
  const auto t = nkd::run_round(x, y, x, 3, msg, tie);
  const auto c = msg_copy.uniform_bits(1000);
  EXPECT_EQ(t.alice_next, nkd::select_accepted(c, t.accept_mask));
  EXPECT_EQ(t.accepted, t.accept_mask.popcount());
}

TEST(Distillation, ScoreEvePolicies) {
  const auto ref = BitBlock::from_string("0000");
  const auto eve = BitBlock::from_string("1100");
  const auto ties = BitBlock::from_string("0110");
  EXPECT_DOUBLE_EQ(nkd::score_eve(eve, ties, ref, nkd::TiePolicy::kRandomGuess), 0.5);
  EXPECT_DOUBLE_EQ(nkd::score_eve(eve, ties, ref, nkd::TiePolicy::kCountAsError), 0.75);
  EXPECT_DOUBLE_EQ(nkd::score_eve(eve, ties, ref, nkd::TiePolicy::kHalfCredit), 0.5);
}

TEST(Distillation, MonteCarloBandsAtDefaults) {
  // 250000 groups at alpha = beta = 0.16: acceptance 0.60691, residual error 0.11905.
  const Seed s{77};
  const auto r = nkd::gen_uniform_bits(500000, s, 6);
  const auto x = r ^ nkd::gen_biased_bits(500000, 0.16, s, 0);
  const auto y = r ^ nkd::gen_biased_bits(500000, 0.16, s, 1);
  Generator msg(s, 3);
  Generator tie(s, 7);
  const auto t = nkd::run_round(x, y, r, 2, msg, tie);
  EXPECT_EQ(t.offered, 250000U);
  EXPECT_NEAR(static_cast<double>(t.accepted) / t.offered, 0.6069, 0.004);
  const double err = static_cast<double>(nkd::hamming_distance(t.alice_next, t.bob_next)) / t.accepted;
  EXPECT_NEAR(err, 0.1191, 0.004);
  const double sigma = std::sqrt(0.0904 * (1 - 0.0904) / t.accepted);
  EXPECT_NEAR(nkd::score_eve(t.eve_next, t.eve_tie_mask, t.alice_next, nkd::TiePolicy::kRandomGuess),
              0.054846 / 0.60691, 4 * sigma);
}
