#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "nkd/adversary.hpp"
#include "nkd/privacy_amp.hpp"

using nkd::BitBlock;
using nkd::Eavesdropper;
using nkd::EveStrategy;
using nkd::Generator;
using nkd::Seed;

TEST(Adversary, WiretapFlipRate) {
  Generator g(Seed{1}, 2);
  const auto r = nkd::gen_uniform_bits(400000, Seed{1}, 6);
  EXPECT_EQ(nkd::wiretap(r, 0.0, g), r);
  const auto z = nkd::wiretap(r, 0.1, g);
  EXPECT_NEAR(static_cast<double>(nkd::hamming_distance(r, z)) / r.size(), 0.1,
              4 * std::sqrt(0.09 / r.size()));
}

TEST(Adversary, TamperVectorIsTheDifference) {
  Generator g(Seed{2}, 5);
  const auto r = nkd::gen_uniform_bits(200000, Seed{2}, 6);
  const auto t = nkd::apply_tamper(r, 0.03, g);
  EXPECT_EQ(r ^ t.t, t.r_tampered);
  EXPECT_NEAR(static_cast<double>(t.t.popcount()) / r.size(), 0.03, 4 * std::sqrt(0.03 * 0.97 / r.size()));
}

TEST(Adversary, StrategyValidation) {
  EXPECT_THROW(EveStrategy::passive(1.5).validate(), std::invalid_argument);
  EXPECT_THROW(EveStrategy::tamper(-0.1).validate(), std::invalid_argument);
  EXPECT_NO_THROW(EveStrategy::tamper(0.05, true, 0.1).validate());
}

TEST(Adversary, PassiveInterceptIsIdentity) {
  Eavesdropper eve(EveStrategy::passive(), Seed{3});
  const auto frame = nkd::to_frame(nkd::RandomBlock{nkd::gen_uniform_bits(1000, Seed{3}, 6)});
  EXPECT_EQ(eve.intercept(frame), frame);
  EXPECT_EQ(eve.tamper_vector().popcount(), 0U);
}

TEST(Adversary, TamperInterceptRewritesR) {
  const auto r = nkd::gen_uniform_bits(100000, Seed{4}, 6);
  Eavesdropper eve(EveStrategy::tamper(0.05), Seed{4});
  const auto out = std::get<nkd::RandomBlock>(nkd::from_frame(eve.intercept(nkd::to_frame(nkd::RandomBlock{r}))));
  EXPECT_EQ(out.r, r ^ eve.tamper_vector());
  EXPECT_GT(eve.tamper_vector().popcount(), 4000U);
  // Without incorporation Eve keeps the untouched R as her own copy.
  EXPECT_EQ(eve.current(), r);

  Eavesdropper folding(EveStrategy::tamper(0.05, true), Seed{4});
  const auto out2 = std::get<nkd::RandomBlock>(nkd::from_frame(folding.intercept(nkd::to_frame(nkd::RandomBlock{r}))));
  EXPECT_EQ(folding.current(), out2.r);
}

TEST(Adversary, FollowsRoundsFromMessages) {
  const Seed s{5};
  const auto r = nkd::gen_uniform_bits(4000, s, 6);
  const auto x = r ^ nkd::gen_biased_bits(4000, 0.16, s, 0);
  const auto y = r ^ nkd::gen_biased_bits(4000, 0.16, s, 1);
  Generator msg(s, 3);
  const auto c = msg.uniform_bits(2000);
  const auto masked = nkd::encode_round(x, c, 2);
  const auto bob = nkd::bob_decode(masked, y);

  Eavesdropper eve(EveStrategy::passive(), s);
  eve.observe(nkd::Message{nkd::RandomBlock{r}});
  eve.observe(nkd::Message{nkd::MaskedPairs{1, masked}});
  eve.observe(nkd::Message{nkd::AcceptMask{1, bob.accept_mask}});
  ASSERT_EQ(eve.rounds().size(), 1U);
  EXPECT_TRUE(eve.in_sync());
  EXPECT_EQ(eve.rounds()[0].accepted, bob.accept_mask.popcount());
  EXPECT_EQ(eve.current().size(), bob.decoded.size());

  const std::size_t n = eve.current().size();
  Generator pub(s, 4);
  const nkd::PaParams pa{n, 100, nkd::draw_hash_seed(n, 100, pub)};
  eve.observe(nkd::Message{nkd::PaParamsMsg{n, 100, pa.hash_seed}});
  ASSERT_TRUE(eve.key_guess().has_value());
  const BitBlock last = eve.current();
  EXPECT_EQ(*eve.key_guess(), nkd::eve_best_guess_key(std::span(&last, 1), pa));
}
