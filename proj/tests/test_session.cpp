#include <gtest/gtest.h>

#include <thread>

#include "nkd/session.hpp"

using nkd::SessionConfig;
using nkd::SessionStatus;

namespace {

SessionConfig small_config(std::uint64_t seed = 1) {
  SessionConfig c;
  c.initial_bits = 100000;
  c.seed = nkd::Seed{seed};
  return c;
}

void expect_same_result(const nkd::KeyResult& a, const nkd::KeyResult& b) {
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.final_key, b.final_key);
  EXPECT_EQ(a.csv_row(), b.csv_row());
  EXPECT_EQ(a.report(), b.report());
}

}  // namespace

TEST(SessionConfig, Validation) {
  SessionConfig c;
  EXPECT_NO_THROW(c.validate());
  c.initial_bits = 15;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SessionConfig{};
  c.alpha = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = SessionConfig{};
  c.initial_bits = std::size_t{1} << 28;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(SessionConfig, DigestCoversProtocolParameters) {
  SessionConfig a;
  SessionConfig b;
  EXPECT_EQ(a.digest(), b.digest());
  b.seed = nkd::Seed{99};  // private to each party
  EXPECT_EQ(a.digest(), b.digest());
  b.rounds = 3;
  EXPECT_NE(a.digest(), b.digest());
}

TEST(Monitor, ZScore) {
  EXPECT_NEAR(nkd::monitor_p_total(0.5, 5100, 10000), 2.0, 1e-12);
  EXPECT_TRUE(nkd::p_total_alarm(-3.1, 3.0));
  EXPECT_FALSE(nkd::p_total_alarm(3.1, 3.0));
  EXPECT_THROW(nkd::monitor_p_total(0.5, 0, 0), std::invalid_argument);
}

TEST(Session, DefaultRunAgrees) {
  const auto out = nkd::simulate_session(SessionConfig{});
  const auto& r = out.result;
  EXPECT_EQ(r.status, SessionStatus::kOk);
  EXPECT_EQ(out.bob_status, SessionStatus::kOk);
  EXPECT_EQ(out.alice_prepa, out.bob_prepa);
  EXPECT_EQ(r.final_key, out.bob_key);
  EXPECT_NEAR(static_cast<double>(r.pre_pa_len), 14450, 0.03 * 14450);
  EXPECT_GE(r.final_key.size(), 2500U);
  EXPECT_EQ(r.p_total_series.size(), 4U);
  EXPECT_FALSE(r.tamper_alarm);
  EXPECT_TRUE(r.kappa_met);
  EXPECT_NEAR(r.eve_key_agreement, 0.5, 0.05);
}

TEST(Session, Deterministic) {
  expect_same_result(nkd::run_local_simulation(small_config(4)), nkd::run_local_simulation(small_config(4)));
  EXPECT_NE(nkd::run_local_simulation(small_config(4)).final_key,
            nkd::run_local_simulation(small_config(5)).final_key);
}

TEST(Session, NonceChangesOnlyTheHash) {
  auto a = small_config(7);
  auto b = a;
  b.nonce = 1;
  const auto ra = nkd::simulate_session(a);
  const auto rb = nkd::simulate_session(b);
  EXPECT_EQ(ra.alice_prepa, rb.alice_prepa);
  EXPECT_NE(ra.result.final_key, rb.result.final_key);
}

TEST(Session, TamperAlarmAborts) {
  auto c = SessionConfig{};
  c.eve = nkd::EveStrategy::tamper(0.05);
  const auto out = nkd::simulate_session(c);
  EXPECT_EQ(out.result.status, SessionStatus::kTamperAlarm);
  EXPECT_EQ(out.bob_status, SessionStatus::kTamperAlarm);
  EXPECT_TRUE(out.result.tamper_alarm);
  EXPECT_TRUE(out.result.final_key.empty());
  EXPECT_LT(out.result.p_total_series.at(0).z, -10);
}

TEST(Session, UnawarePartiesFinishDespiteAlarm) {
  auto c = SessionConfig{};
  c.eve = nkd::EveStrategy::tamper(0.05);
  c.abort_on_alarm = false;
  const auto out = nkd::simulate_session(c);
  EXPECT_TRUE(out.result.tamper_alarm);
  EXPECT_EQ(out.result.p_total_series.size(), 4U);
}

TEST(Session, EmptyKeyAborts) {
  SessionConfig c;
  c.initial_bits = 2000;  // ~58 reconciled bits, below the safety margin
  const auto out = nkd::simulate_session(c);
  EXPECT_EQ(out.result.status, SessionStatus::kEmptyKey);
  EXPECT_EQ(out.bob_status, SessionStatus::kEmptyKey);
}

TEST(Session, HelloMismatchAborts) {
  nkd::MemoryDuplex d;
  SessionConfig ca;
  SessionConfig cb;
  cb.rounds = 3;
  nkd::AliceParty alice(ca);
  nkd::BobParty bob(cb);
  auto hello = alice.start();
  auto reply = bob.on_message(hello.at(0));
  ASSERT_EQ(reply.size(), 1U);
  EXPECT_EQ(std::get<nkd::Abort>(reply[0]).reason, nkd::AbortReason::kConfigMismatch);
  EXPECT_EQ(bob.status(), SessionStatus::kConfigMismatch);
  alice.on_message(reply[0]);
  EXPECT_TRUE(alice.done());
  EXPECT_EQ(alice.result().status, SessionStatus::kConfigMismatch);
}

TEST(Session, OutOfOrderMessageIsAViolation) {
  nkd::BobParty bob(small_config());
  const auto out = bob.on_message(nkd::RoundDone{1});
  ASSERT_EQ(out.size(), 1U);
  EXPECT_EQ(std::get<nkd::Abort>(out[0]).reason, nkd::AbortReason::kProtocolViolation);
  EXPECT_EQ(bob.status(), SessionStatus::kProtocolViolation);
  EXPECT_TRUE(bob.on_message(nkd::KeyOk{}).empty());
}

TEST(Session, MalformedFrameIsAViolation) {
  nkd::AliceParty alice(small_config());
  alice.start();
  const auto out = alice.on_frame(nkd::Frame{nkd::MsgType::kHello, {1, 2, 3}});
  ASSERT_EQ(out.size(), 1U);
  EXPECT_EQ(alice.phase(), nkd::Phase::kAborted);
}

TEST(Session, HashSeedOnlyAfterReconciliation) {
  nkd::AliceParty alice(small_config());
  EXPECT_THROW(alice.draw_hash_seed(100, 10), nkd::StateError);
}

TEST(Session, ConfirmKeys) {
  const auto key = nkd::gen_uniform_bits(3000, nkd::Seed{1}, 0);
  const auto seed = nkd::gen_uniform_bits(nkd::hash_seed_length(3000, 64), nkd::Seed{1}, 4);
  const nkd::KeyCheck check{seed, nkd::key_check_digest(key, seed, 64)};
  EXPECT_TRUE(nkd::confirm_keys(key, check));
  auto other = key;
  other.set(5, !other.get(5));
  EXPECT_FALSE(nkd::confirm_keys(other, check));
  EXPECT_FALSE(nkd::confirm_keys(nkd::BitBlock(0), check));
}

TEST(Session, TapsSeeEveryFrame) {
  std::size_t frames = 0;
  std::vector<nkd::Wire::Observer> taps;
  taps.emplace_back([&](const nkd::Frame&, nkd::Direction) { ++frames; });
  nkd::simulate_session(small_config(), std::move(taps));
  // HELLO x2, RANDOM_BLOCK, 4 x (MASKED_PAIRS, ACCEPT_MASK, ROUND_DONE), PA_PARAMS, KEY_CHECK, KEY_OK
  EXPECT_EQ(frames, 3U + 12U + 3U);
}

TEST(Session, SocketRunMatchesInProcess) {
  const SessionConfig c = small_config(11);
  nkd::TcpListener listener(0, true);
  nkd::BobOutcome bob;
  std::thread bob_thread([&] {
    auto ep = nkd::TcpEndpoint::connect("127.0.0.1", listener.port());
    bob = nkd::run_bob(*ep, c);
  });
  auto ep = listener.accept();
  const auto remote = nkd::run_alice(*ep, c);
  bob_thread.join();
  expect_same_result(remote, nkd::run_local_simulation(c));
  EXPECT_EQ(bob.status, SessionStatus::kOk);
  EXPECT_EQ(bob.key, remote.final_key);
}
