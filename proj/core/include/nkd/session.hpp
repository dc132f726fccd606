#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nkd/adversary.hpp"
#include "nkd/bitstream.hpp"
#include "nkd/channel_math.hpp"
#include "nkd/distillation.hpp"
#include "nkd/privacy_amp.hpp"
#include "nkd/transport.hpp"

namespace nkd {

struct SessionConfig {
  std::size_t initial_bits = 500000;
  double alpha = 0.16;
  double beta = 0.16;
  unsigned n_rep = 2;
  unsigned rounds = 4;
  double kappa = 1e-6;
  double ptotal_alarm_sigma = 3.0;
  std::size_t safety_bits = 64;
  Seed seed{1};
  /// Mixed into the public hash stream so reruns under one seed get fresh PA seeds.
  std::uint64_t nonce = 0;
  EveStrategy eve;
  /// When false the alarm is recorded but the parties carry on, as unaware
  /// parties would.
  bool abort_on_alarm = true;

  /// Throws std::invalid_argument on an unusable configuration.
  void validate() const;
  /// FNV-1a over the protocol parameters both parties must agree on.
  std::uint64_t digest() const;
};

enum class Phase { kInit, kExchanged, kRound, kReconciled, kAmplified, kConfirmed, kAborted };
std::string_view to_string(Phase phase) noexcept;

enum class SessionStatus {
  kOk,
  kTamperAlarm,
  kEmptyKey,
  kConfirmationFailed,
  kConfigMismatch,
  kProtocolViolation,
};
std::string_view to_string(SessionStatus status) noexcept;

struct PTotalSample {
  double expected = 0.0;
  double measured = 0.0;
  double z = 0.0;
  std::size_t accepted = 0;
  std::size_t offered = 0;
};

struct KeyResult {
  SessionStatus status = SessionStatus::kProtocolViolation;
  BitBlock final_key;
  std::size_t pre_pa_len = 0;
  double k_estimate = 0.0;
  std::vector<PTotalSample> p_total_series;
  bool tamper_alarm = false;
  /// Analytic residual mismatch after the last round is below kappa.
  bool kappa_met = false;
  double eve_agreement_prepa = 0.0;
  double eve_key_agreement = 0.0;
  /// (1 - k) * P_Final with P_Final = pre_pa_len / initial_bits.
  double key_rate = 0.0;

  static std::string csv_header();
  std::string csv_row() const;
  std::string report() const;
};

/// z = (accepted/offered - expected) / sqrt(expected (1 - expected) / offered).
double monitor_p_total(double expected, std::size_t accepted, std::size_t offered);

/// One-sided: tampering can only lower the acceptance rate.
inline bool p_total_alarm(double z, double threshold_sigma) noexcept { return z < -threshold_sigma; }

/// 1 - h(min(err, 1 - err)) with err = 1 - agreement_fraction.
double estimate_eve_information(const BitBlock& eve_final, const BitBlock& reference);

/// Same, scoring Eve's ties under `policy`.
double estimate_eve_information(const BitBlock& eve_final, const BitBlock& tie_mask,
                                const BitBlock& reference, TiePolicy policy);

/// `bits`-long Toeplitz digest of `key` under `check_seed`.
BitBlock key_check_digest(const BitBlock& key, const BitBlock& check_seed, std::size_t bits);

/// True when the peer's digest matches the one computed over `local_key`.
bool confirm_keys(const BitBlock& local_key, const KeyCheck& peer_check);

inline constexpr std::size_t kKeyCheckBits = 64;

/// Message-driven protocol party. The message stream is its only input.
class Party {
 public:
  virtual ~Party() = default;
  virtual std::vector<Message> start() = 0;
  virtual std::vector<Message> on_message(const Message& msg) = 0;
  virtual bool done() const noexcept = 0;
  Phase phase() const noexcept { return phase_; }

  /// Parses the frame and dispatches it; a malformed payload aborts the
  /// session with a protocol violation.
  std::vector<Message> on_frame(const Frame& frame);

 protected:
  virtual std::vector<Message> protocol_violation() = 0;
  /// Throws StateError on a backwards transition.
  void advance(Phase next);
  Phase phase_ = Phase::kInit;
};

/// Encoder side. Draws R and every round's C, monitors the acceptance
/// rate and runs a shadow copy of the strongest passive Eve to bound her
/// information before amplification.
class AliceParty : public Party {
 public:
  explicit AliceParty(SessionConfig config);

  std::vector<Message> start() override;
  std::vector<Message> on_message(const Message& msg) override;
  bool done() const noexcept override { return done_; }

  /// Only legal once reconciliation finished. Throws StateError otherwise.
  BitBlock draw_hash_seed(std::size_t n, std::size_t m);

  const KeyResult& result() const noexcept { return result_; }
  const BitBlock& current() const noexcept { return current_; }
  /// Alice's string after each completed round.
  const std::vector<BitBlock>& round_strings() const noexcept { return round_strings_; }
  const Eavesdropper& shadow_eve() const noexcept { return shadow_; }
  /// Reconciled string handed to privacy amplification (empty before that).
  const BitBlock& pre_pa_string() const noexcept { return prepa_; }

 protected:
  std::vector<Message> protocol_violation() override;

 private:
  std::vector<Message> abort(AbortReason reason, SessionStatus status);
  Message begin_round();
  std::vector<Message> finish_rounds();

  SessionConfig config_;
  Generator noise_rng_;
  Generator message_rng_;
  Generator block_rng_;
  Generator hash_rng_;
  Eavesdropper shadow_;
  std::vector<RoundForecast> forecast_;
  unsigned round_ = 0;
  bool hello_seen_ = false;
  bool done_ = false;
  BitBlock current_;
  BitBlock pending_c_;
  BitBlock prepa_;
  std::vector<BitBlock> round_strings_;
  KeyResult result_;
};

/// Decoder side. Publishes one accept mask per round and verifies the key.
class BobParty : public Party {
 public:
  explicit BobParty(SessionConfig config);

  std::vector<Message> start() override { return {}; }
  std::vector<Message> on_message(const Message& msg) override;
  bool done() const noexcept override { return done_; }

  SessionStatus status() const noexcept { return status_; }
  const BitBlock& current() const noexcept { return current_; }
  const BitBlock& final_key() const noexcept { return key_; }

 protected:
  std::vector<Message> protocol_violation() override;

 private:
  std::vector<Message> abort(AbortReason reason, SessionStatus status);

  SessionConfig config_;
  Generator noise_rng_;
  unsigned next_round_ = 1;
  unsigned decoded_round_ = 0;
  bool hello_seen_ = false;
  bool done_ = false;
  BitBlock current_;
  BitBlock key_;
  SessionStatus status_ = SessionStatus::kProtocolViolation;
};

/// Everything a local simulation can see, beyond what Alice reports.
struct SessionOutcome {
  KeyResult result;
  BitBlock alice_prepa;
  BitBlock bob_prepa;
  BitBlock bob_key;
  SessionStatus bob_status = SessionStatus::kProtocolViolation;
  std::vector<BitBlock> alice_rounds;
  std::vector<EveRound> eve_rounds;
  std::size_t wire_bytes = 0;
};

/// Lock-step run over an in-memory duplex with the configured Eve on the wire.
SessionOutcome simulate_session(const SessionConfig& config,
                                std::vector<Wire::Observer> extra_taps = {});

/// Runs the same session only until Alice has monitored the first accept
/// mask, and returns that round's acceptance sample.
PTotalSample simulate_first_exchange(const SessionConfig& config);

/// simulate_session(...).result
KeyResult run_local_simulation(const SessionConfig& config);

/// Runs Alice over a blocking endpoint. The configured Eve and any extra
/// taps sit on Alice's side of the wire, exactly as in simulate_session.
KeyResult run_alice(Endpoint& endpoint, const SessionConfig& config,
                    std::vector<Wire::Observer> extra_taps = {});

struct BobOutcome {
  SessionStatus status = SessionStatus::kProtocolViolation;
  BitBlock key;
};

BobOutcome run_bob(Endpoint& endpoint, const SessionConfig& config);

/// Attaches the referee's view of Eve to Alice's report.
void attach_eve_statistics(KeyResult& result, const BitBlock& alice_prepa, const Eavesdropper& eve);

}  // namespace nkd
