#include "nkd/session.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <type_traits>

namespace nkd {

namespace {

std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

SessionStatus status_for(AbortReason reason) noexcept {
  switch (reason) {
    case AbortReason::kConfigMismatch:
      return SessionStatus::kConfigMismatch;
    case AbortReason::kTamperAlarm:
      return SessionStatus::kTamperAlarm;
    case AbortReason::kConfirmationFailed:
      return SessionStatus::kConfirmationFailed;
    case AbortReason::kEmptyKey:
      return SessionStatus::kEmptyKey;
    case AbortReason::kProtocolViolation:
      break;
  }
  return SessionStatus::kProtocolViolation;
}

std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void send_all(Endpoint& ep, const std::vector<Message>& msgs) {
  for (const auto& m : msgs) ep.send(to_frame(m));
}

}  // namespace

// ---------------------------------------------------------------------------

void SessionConfig::validate() const {
  NoiseParams{alpha, beta, 0.0, 0.0}.validate();
  if (n_rep == 0 || n_rep > 0xFFFF) throw std::invalid_argument("n_rep must be in [1, 65535]");
  if (rounds == 0 || rounds > 0xFFFF) throw std::invalid_argument("rounds must be in [1, 65535]");
  double needed = 1.0;
  for (unsigned r = 0; r < rounds; ++r) needed *= n_rep;
  if (static_cast<double>(initial_bits) < needed) {
    throw std::invalid_argument("initial_bits < n_rep^rounds: the key would always be empty");
  }
  if ((initial_bits + 7) / 8 + 8 > kMaxPayload) {
    throw std::invalid_argument("initial_bits exceeds the largest random block a frame can carry");
  }
  if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("kappa must lie in (0, 1)");
  if (!(ptotal_alarm_sigma > 0.0)) throw std::invalid_argument("alarm threshold must be positive");
  eve.validate();
}

std::uint64_t SessionConfig::digest() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "nkd1|%zu|%.17g|%.17g|%u|%u|%.17g|%.17g|%zu", initial_bits, alpha,
                beta, n_rep, rounds, kappa, ptotal_alarm_sigma, safety_bits);
  return fnv1a(buf);
}

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::kInit:
      return "init";
    case Phase::kExchanged:
      return "exchanged";
    case Phase::kRound:
      return "round";
    case Phase::kReconciled:
      return "reconciled";
    case Phase::kAmplified:
      return "amplified";
    case Phase::kConfirmed:
      return "confirmed";
    case Phase::kAborted:
      return "aborted";
  }
  return "unknown";
}

std::string_view to_string(SessionStatus status) noexcept {
  switch (status) {
    case SessionStatus::kOk:
      return "ok";
    case SessionStatus::kTamperAlarm:
      return "tamper-alarm";
    case SessionStatus::kEmptyKey:
      return "empty-key";
    case SessionStatus::kConfirmationFailed:
      return "confirmation-failed";
    case SessionStatus::kConfigMismatch:
      return "config-mismatch";
    case SessionStatus::kProtocolViolation:
      return "protocol-violation";
  }
  return "unknown";
}

std::string KeyResult::csv_header() {
  return "status,pre_pa_len,k_estimate,final_key_bits,key_rate,tamper_alarm,kappa_met,"
         "eve_agreement_prepa,eve_key_agreement,round1_expected_ptotal,round1_measured_ptotal,"
         "round1_z";
}

std::string KeyResult::csv_row() const {
  const PTotalSample first = p_total_series.empty() ? PTotalSample{} : p_total_series.front();
  std::ostringstream os;
  os << to_string(status) << ',' << pre_pa_len << ',' << fmt_real(k_estimate) << ','
     << final_key.size() << ',' << fmt_real(key_rate) << ',' << (tamper_alarm ? 1 : 0) << ','
     << (kappa_met ? 1 : 0) << ',' << fmt_real(eve_agreement_prepa) << ','
     << fmt_real(eve_key_agreement) << ',' << fmt_real(first.expected) << ','
     << fmt_real(first.measured) << ',' << fmt_real(first.z);
  return os.str();
}

std::string KeyResult::report() const {
  std::ostringstream os;
  os << "status:              " << to_string(status) << '\n'
     << "pre-PA length:       " << pre_pa_len << " bits\n"
     << "Eve info estimate k: " << fmt_real(k_estimate) << " bits/bit\n"
     << "final key:           " << final_key.size() << " bits\n"
     << "key rate:            " << fmt_real(key_rate) << '\n'
     << "residual below kappa:" << (kappa_met ? " yes" : " no") << '\n'
     << "tamper alarm:        " << (tamper_alarm ? "RAISED" : "quiet") << '\n';
  for (std::size_t i = 0; i < p_total_series.size(); ++i) {
    const auto& s = p_total_series[i];
    os << "  round " << i + 1 << ": P_Total expected " << fmt_real(s.expected) << ", measured "
       << fmt_real(s.measured) << " (" << s.accepted << '/' << s.offered << "), z "
       << fmt_real(s.z) << '\n';
  }
  os << "Eve agreement pre-PA: " << fmt_real(eve_agreement_prepa) << '\n'
     << "Eve key agreement:    " << fmt_real(eve_key_agreement) << '\n';
  return os.str();
}

double monitor_p_total(double expected, std::size_t accepted, std::size_t offered) {
  if (offered == 0) throw std::invalid_argument("monitor_p_total: no groups offered");
  if (!(expected > 0.0 && expected < 1.0)) {
    throw std::invalid_argument("monitor_p_total: expected rate must lie in (0, 1)");
  }
  const double n = static_cast<double>(offered);
  const double measured = static_cast<double>(accepted) / n;
  return (measured - expected) / std::sqrt(expected * (1.0 - expected) / n);
}

double estimate_eve_information(const BitBlock& eve_final, const BitBlock& reference) {
  const double err = 1.0 - agreement_fraction(eve_final, reference);
  return bsc_mutual_info(std::min(err, 1.0 - err));
}

double estimate_eve_information(const BitBlock& eve_final, const BitBlock& tie_mask,
                                const BitBlock& reference, TiePolicy policy) {
  const double err = score_eve(eve_final, tie_mask, reference, policy);
  return bsc_mutual_info(std::min(err, 1.0 - err));
}

BitBlock key_check_digest(const BitBlock& key, const BitBlock& check_seed, std::size_t bits) {
  return toeplitz_hash(key, check_seed, bits);
}

bool confirm_keys(const BitBlock& local_key, const KeyCheck& peer_check) {
  if (local_key.empty() || peer_check.digest.empty()) return false;
  if (peer_check.check_seed.size() != hash_seed_length(local_key.size(), peer_check.digest.size())) {
    return false;
  }
  return key_check_digest(local_key, peer_check.check_seed, peer_check.digest.size()) ==
         peer_check.digest;
}

// ---------------------------------------------------------------------------

void Party::advance(Phase next) {
  if (next != Phase::kAborted && next < phase_) {
    throw StateError(std::string("illegal phase transition ") + std::string(to_string(phase_)) +
                     " -> " + std::string(to_string(next)));
  }
  if (phase_ == Phase::kAborted || phase_ == Phase::kConfirmed) {
    throw StateError("session already finished");
  }
  phase_ = next;
}

std::vector<Message> Party::on_frame(const Frame& frame) {
  Message msg;
  try {
    msg = from_frame(frame);
  } catch (const ProtocolError&) {
    return protocol_violation();
  }
  return on_message(msg);
}

// ---------------------------------------------------------------------------

AliceParty::AliceParty(SessionConfig config)
    : config_((config.validate(), std::move(config))),
      noise_rng_(config_.seed, stream::kAliceNoise),
      message_rng_(config_.seed, stream::kMessage),
      block_rng_(config_.seed, stream::kRandomBlock),
      hash_rng_(config_.seed, stream::kHashSeed + (config_.nonce << 8)),
      shadow_(EveStrategy::passive(0.0), config_.seed, stream::kShadowTieBreak),
      forecast_(round_recursion(convolve_flip(config_.alpha, config_.beta), config_.n_rep,
                                config_.rounds, config_.initial_bits)) {}

std::vector<Message> AliceParty::abort(AbortReason reason, SessionStatus status) {
  if (done_) return {};
  advance(Phase::kAborted);
  done_ = true;
  result_.status = status;
  result_.final_key = BitBlock();
  return {Abort{reason}};
}

std::vector<Message> AliceParty::protocol_violation() {
  return abort(AbortReason::kProtocolViolation, SessionStatus::kProtocolViolation);
}

std::vector<Message> AliceParty::start() {
  if (phase_ != Phase::kInit || hello_seen_) throw StateError("AliceParty::start called twice");
  return {Hello{config_.digest()}};
}

Message AliceParty::begin_round() {
  ++round_;
  pending_c_ = message_rng_.uniform_bits(current_.size() / config_.n_rep);
  MaskedPairs msg{static_cast<std::uint16_t>(round_),
                  encode_round(current_, pending_c_, config_.n_rep)};
  shadow_.observe(Message{msg});
  return msg;
}

BitBlock AliceParty::draw_hash_seed(std::size_t n, std::size_t m) {
  if (phase_ != Phase::kReconciled) {
    throw StateError("hash seed may only be drawn after reconciliation completes");
  }
  return nkd::draw_hash_seed(n, m, hash_rng_);
}

std::vector<Message> AliceParty::finish_rounds() {
  advance(Phase::kReconciled);
  prepa_ = current_;
  const std::size_t n = prepa_.size();
  result_.pre_pa_len = n;
  result_.kappa_met = forecast_.back().epsilon < config_.kappa;

  double k = 1.0;
  if (n > 0 && !shadow_.rounds().empty() && shadow_.current().size() == n) {
    const BitBlock& ties = shadow_.rounds().back().tie_mask;
    k = std::max(estimate_eve_information(shadow_.current(), ties, prepa_, TiePolicy::kRandomGuess),
                 estimate_eve_information(shadow_.current(), ties, prepa_, TiePolicy::kHalfCredit));
  }
  result_.k_estimate = k;
  result_.key_rate = (1.0 - k) * static_cast<double>(n) / static_cast<double>(config_.initial_bits);

  const std::size_t m = output_length(n, k, config_.safety_bits);
  if (m == 0) return abort(AbortReason::kEmptyKey, SessionStatus::kEmptyKey);

  PaParams pa{n, m, draw_hash_seed(n, m)};
  result_.final_key = apply_hash(prepa_, pa);
  advance(Phase::kAmplified);
  BitBlock check_seed = hash_rng_.uniform_bits(hash_seed_length(m, kKeyCheckBits));
  BitBlock digest = key_check_digest(result_.final_key, check_seed, kKeyCheckBits);
  return {PaParamsMsg{n, m, std::move(pa.hash_seed)}, KeyCheck{std::move(check_seed), std::move(digest)}};
}

std::vector<Message> AliceParty::on_message(const Message& msg) {
  if (done_) return {};
  if (const auto* abort_msg = std::get_if<Abort>(&msg)) {
    advance(Phase::kAborted);
    done_ = true;
    result_.status = status_for(abort_msg->reason);
    result_.final_key = BitBlock();
    return {};
  }

  if (const auto* hello = std::get_if<Hello>(&msg)) {
    if (phase_ != Phase::kInit || hello_seen_) return protocol_violation();
    hello_seen_ = true;
    if (hello->config_digest != config_.digest()) {
      return abort(AbortReason::kConfigMismatch, SessionStatus::kConfigMismatch);
    }
    const BitBlock r = block_rng_.uniform_bits(config_.initial_bits);
    shadow_.capture(r);
    current_ = r ^ noise_rng_.biased_bits(r.size(), config_.alpha);
    advance(Phase::kExchanged);
    std::vector<Message> out{RandomBlock{r}};
    advance(Phase::kRound);
    out.push_back(begin_round());
    return out;
  }

  if (const auto* mask = std::get_if<AcceptMask>(&msg)) {
    if (phase_ != Phase::kRound || mask->round != round_ ||
        mask->mask.size() != pending_c_.size()) {
      return protocol_violation();
    }
    shadow_.observe(msg);
    current_ = select_accepted(pending_c_, mask->mask);
    round_strings_.push_back(current_);

    PTotalSample sample;
    sample.offered = mask->mask.size();
    sample.accepted = current_.size();
    sample.expected = forecast_[round_ - 1].p_total;
    if (sample.offered > 0) {
      sample.measured = static_cast<double>(sample.accepted) / static_cast<double>(sample.offered);
      if (sample.expected > 0.0 && sample.expected < 1.0) {
        sample.z = monitor_p_total(sample.expected, sample.accepted, sample.offered);
      }
    }
    result_.p_total_series.push_back(sample);

    // Only the first exchange has an exactly known acceptance rate; later
    // rounds depend on the realised residual error and are logged only.
    if (round_ == 1 && p_total_alarm(sample.z, config_.ptotal_alarm_sigma)) {
      result_.tamper_alarm = true;
      if (config_.abort_on_alarm) return abort(AbortReason::kTamperAlarm, SessionStatus::kTamperAlarm);
    }

    std::vector<Message> out{RoundDone{static_cast<std::uint16_t>(round_)}};
    if (round_ < config_.rounds) {
      out.push_back(begin_round());
      return out;
    }
    auto tail = finish_rounds();
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
  }

  if (std::holds_alternative<KeyOk>(msg)) {
    if (phase_ != Phase::kAmplified) return protocol_violation();
    advance(Phase::kConfirmed);
    done_ = true;
    result_.status = SessionStatus::kOk;
    return {};
  }

  return protocol_violation();
}

// ---------------------------------------------------------------------------

BobParty::BobParty(SessionConfig config)
    : config_((config.validate(), std::move(config))), noise_rng_(config_.seed, stream::kBobNoise) {}

std::vector<Message> BobParty::abort(AbortReason reason, SessionStatus status) {
  if (done_) return {};
  advance(Phase::kAborted);
  done_ = true;
  status_ = status;
  key_ = BitBlock();
  return {Abort{reason}};
}

std::vector<Message> BobParty::protocol_violation() {
  return abort(AbortReason::kProtocolViolation, SessionStatus::kProtocolViolation);
}

std::vector<Message> BobParty::on_message(const Message& msg) {
  if (done_) return {};
  return std::visit(
      [this](const auto& m) -> std::vector<Message> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Abort>) {
          advance(Phase::kAborted);
          done_ = true;
          status_ = status_for(m.reason);
          key_ = BitBlock();
          return {};
        } else if constexpr (std::is_same_v<T, Hello>) {
          if (phase_ != Phase::kInit || hello_seen_) return protocol_violation();
          hello_seen_ = true;
          if (m.config_digest != config_.digest()) {
            return abort(AbortReason::kConfigMismatch, SessionStatus::kConfigMismatch);
          }
          return {Hello{config_.digest()}};
        } else if constexpr (std::is_same_v<T, RandomBlock>) {
          if (phase_ != Phase::kInit || !hello_seen_ || m.r.size() != config_.initial_bits) {
            return protocol_violation();
          }
          current_ = m.r ^ noise_rng_.biased_bits(m.r.size(), config_.beta);
          advance(Phase::kExchanged);
          return {};
        } else if constexpr (std::is_same_v<T, MaskedPairs>) {
          const bool ready = phase_ == Phase::kExchanged ||
                             (phase_ == Phase::kRound && decoded_round_ + 1 == next_round_);
          if (!ready || m.round != next_round_ || m.block.n_rep != config_.n_rep ||
              current_.size() / config_.n_rep != m.block.groups()) {
            return protocol_violation();
          }
          BobDecode d = bob_decode(m.block, current_);
          current_ = std::move(d.decoded);
          decoded_round_ = m.round;
          advance(Phase::kRound);
          return {AcceptMask{m.round, std::move(d.accept_mask)}};
        } else if constexpr (std::is_same_v<T, RoundDone>) {
          if (phase_ != Phase::kRound || m.round != decoded_round_ || m.round != next_round_) {
            return protocol_violation();
          }
          ++next_round_;
          if (m.round == config_.rounds) advance(Phase::kReconciled);
          return {};
        } else if constexpr (std::is_same_v<T, PaParamsMsg>) {
          if (phase_ != Phase::kReconciled || m.n != current_.size() || m.m == 0 ||
              m.seed.size() != hash_seed_length(m.n, m.m)) {
            return protocol_violation();
          }
          key_ = toeplitz_hash(current_, m.seed, static_cast<std::size_t>(m.m));
          advance(Phase::kAmplified);
          return {};
        } else if constexpr (std::is_same_v<T, KeyCheck>) {
          if (phase_ != Phase::kAmplified) return protocol_violation();
          if (!confirm_keys(key_, m)) {
            return abort(AbortReason::kConfirmationFailed, SessionStatus::kConfirmationFailed);
          }
          advance(Phase::kConfirmed);
          done_ = true;
          status_ = SessionStatus::kOk;
          return {KeyOk{}};
        } else {
          return protocol_violation();
        }
      },
      msg);
}

// ---------------------------------------------------------------------------

void attach_eve_statistics(KeyResult& result, const BitBlock& alice_prepa, const Eavesdropper& eve) {
  result.eve_agreement_prepa = 0.0;
  result.eve_key_agreement = 0.0;
  if (!alice_prepa.empty() && eve.current().size() == alice_prepa.size()) {
    result.eve_agreement_prepa = agreement_fraction(eve.current(), alice_prepa);
  }
  if (!result.final_key.empty() && eve.key_guess() &&
      eve.key_guess()->size() == result.final_key.size()) {
    result.eve_key_agreement = agreement_fraction(*eve.key_guess(), result.final_key);
  }
}

namespace {

void attach_adversary(Wire& wire, Eavesdropper& eve, std::vector<Wire::Observer>& extra_taps) {
  wire.set_interceptor([&eve](const Frame& f) { return eve.intercept(f); });
  wire.tap([&eve](const Frame& f, Direction) { eve.observe(f); });
  for (auto& t : extra_taps) wire.tap(std::move(t));
}

}  // namespace

namespace {

SessionOutcome run_lock_step(const SessionConfig& config, std::vector<Wire::Observer>& extra_taps,
                             bool first_exchange_only) {
  config.validate();
  MemoryDuplex duplex;
  Wire wire(duplex.a());
  Eavesdropper eve(config.eve, config.seed);
  attach_adversary(wire, eve, extra_taps);

  AliceParty alice(config);
  BobParty bob(config);
  Endpoint& bob_end = duplex.b();

  send_all(wire, alice.start());
  send_all(bob_end, bob.start());
  while (!alice.done() || !bob.done()) {
    if (first_exchange_only && !alice.result().p_total_series.empty()) break;
    bool progress = false;
    while (auto f = bob_end.receive()) {
      progress = true;
      send_all(bob_end, bob.on_frame(*f));
    }
    while (auto f = wire.receive()) {
      progress = true;
      send_all(wire, alice.on_frame(*f));
    }
    if (!progress) throw ProtocolError("session stalled with no messages in flight");
  }

  SessionOutcome out;
  out.result = alice.result();
  out.alice_prepa = alice.pre_pa_string();
  attach_eve_statistics(out.result, out.alice_prepa, eve);
  out.bob_prepa = bob.phase() >= Phase::kReconciled || bob.status() == SessionStatus::kOk
                      ? bob.current()
                      : BitBlock();
  out.bob_key = bob.final_key();
  out.bob_status = bob.status();
  out.alice_rounds = alice.round_strings();
  out.eve_rounds = eve.rounds();
  out.wire_bytes = wire.bytes_seen();
  return out;
}

}  // namespace

SessionOutcome simulate_session(const SessionConfig& config, std::vector<Wire::Observer> extra_taps) {
  return run_lock_step(config, extra_taps, false);
}

PTotalSample simulate_first_exchange(const SessionConfig& config) {
  // Round 1 does not depend on the round count; with a single round Alice
  // would amplify in the same step that reports the sample.
  SessionConfig c = config;
  c.rounds = std::max(c.rounds, 2U);
  std::vector<Wire::Observer> none;
  const SessionOutcome out = run_lock_step(c, none, true);
  if (out.result.p_total_series.empty()) throw ProtocolError("session ended before the first accept mask");
  return out.result.p_total_series.front();
}

KeyResult run_local_simulation(const SessionConfig& config) {
  return simulate_session(config).result;
}

KeyResult run_alice(Endpoint& endpoint, const SessionConfig& config,
                    std::vector<Wire::Observer> extra_taps) {
  config.validate();
  Wire wire(endpoint);
  Eavesdropper eve(config.eve, config.seed);
  attach_adversary(wire, eve, extra_taps);

  AliceParty alice(config);
  send_all(wire, alice.start());
  while (!alice.done()) {
    auto f = wire.receive();
    if (!f) throw ProtocolError("peer closed the connection mid-session");
    send_all(wire, alice.on_frame(*f));
  }
  KeyResult result = alice.result();
  attach_eve_statistics(result, alice.pre_pa_string(), eve);
  return result;
}

BobOutcome run_bob(Endpoint& endpoint, const SessionConfig& config) {
  BobParty bob(config);
  send_all(endpoint, bob.start());
  while (!bob.done()) {
    auto f = endpoint.receive();
    if (!f) throw ProtocolError("peer closed the connection mid-session");
    send_all(endpoint, bob.on_frame(*f));
  }
  return {bob.status(), bob.final_key()};
}

}  // namespace nkd
