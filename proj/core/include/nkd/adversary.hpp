#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nkd/bitstream.hpp"
#include "nkd/distillation.hpp"
#include "nkd/privacy_amp.hpp"
#include "nkd/transport.hpp"

namespace nkd {

enum class EveKind { kPassive, kTamper };

struct EveStrategy {
  EveKind kind = EveKind::kPassive;
  double gamma = 0.0;
  double tau = 0.0;
  /// Tamperer stores R ^ T instead of R as her own copy.
  bool incorporate_tamper = false;

  static EveStrategy passive(double gamma = 0.0) { return {EveKind::kPassive, gamma, 0.0, false}; }
  static EveStrategy tamper(double tau, bool incorporate = false, double gamma = 0.0) {
    return {EveKind::kTamper, gamma, tau, incorporate};
  }

  /// Tamper requires tau > 0, passive requires tau == 0.
  void validate() const;
};

/// Z = R ^ N^E with N^E biased at gamma.
BitBlock wiretap(const BitBlock& r, double gamma, Generator& rng);

struct TamperResult {
  BitBlock r_tampered;
  BitBlock t;
};

/// R' = R ^ T with T biased at tau; T is returned alongside.
TamperResult apply_tamper(const BitBlock& r, double tau, Generator& rng);

/// Eve hashes her last-round string with the public seed.
BitBlock eve_best_guess_key(std::span<const BitBlock> eve_round_strings, const PaParams& params);

/// Eve's per-round decode, aligned with Alice's string for that round.
struct EveRound {
  BitBlock bits;
  BitBlock tie_mask;
  std::size_t accepted = 0;
  std::size_t offered = 0;
};

/// The eavesdropper as a protocol participant.
///
/// Attach intercept() as the wire's RANDOM_BLOCK interceptor (active or
/// passive capture of R) and observe() as a tap. Eve then follows every
/// round with majority decoding and applies the public hash at the end.
/// She never sends anything.
class Eavesdropper {
 public:
  Eavesdropper(EveStrategy strategy, Seed seed,
               std::uint64_t tie_stream = stream::kEveTieBreak);

  /// Wiretaps R and, for a tamper strategy, returns the rewritten frame.
  Frame intercept(const Frame& frame);
  /// Stores Z derived from R directly (used when Eve sits off-path).
  void capture(const BitBlock& r);

  void observe(const Frame& frame);
  void observe(const Message& msg);

  const EveStrategy& strategy() const noexcept { return strategy_; }
  /// False once the observed traffic stopped lining up with her state.
  bool in_sync() const noexcept { return in_sync_; }
  const BitBlock& current() const noexcept { return current_; }
  const std::vector<EveRound>& rounds() const noexcept { return rounds_; }
  const std::optional<BitBlock>& key_guess() const noexcept { return key_guess_; }
  /// Tamper vector applied to R (empty for passive Eve).
  const BitBlock& tamper_vector() const noexcept { return tamper_; }

 private:
  EveStrategy strategy_;
  Generator noise_rng_;
  Generator tamper_rng_;
  Generator tie_rng_;
  bool captured_ = false;
  bool in_sync_ = true;
  BitBlock current_;
  BitBlock tamper_;
  std::optional<MaskedPairs> pending_;
  std::vector<EveRound> rounds_;
  std::optional<BitBlock> key_guess_;
};

}  // namespace nkd
