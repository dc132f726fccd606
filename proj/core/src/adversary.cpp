#include "nkd/adversary.hpp"

#include <stdexcept>
#include <type_traits>

namespace nkd {

void EveStrategy::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma outside [0, 1]");
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau outside [0, 1]");
  if (kind == EveKind::kTamper && tau <= 0.0) {
    throw std::invalid_argument("tamper strategy requires tau > 0");
  }
  if (kind == EveKind::kPassive && tau != 0.0) {
    throw std::invalid_argument("passive strategy requires tau == 0");
  }
}

BitBlock wiretap(const BitBlock& r, double gamma, Generator& rng) {
  return r ^ rng.biased_bits(r.size(), gamma);
}

TamperResult apply_tamper(const BitBlock& r, double tau, Generator& rng) {
  BitBlock t = rng.biased_bits(r.size(), tau);
  return {r ^ t, std::move(t)};
}

BitBlock eve_best_guess_key(std::span<const BitBlock> eve_round_strings, const PaParams& params) {
  if (eve_round_strings.empty()) throw std::invalid_argument("eve_best_guess_key: no rounds");
  return apply_hash(eve_round_strings.back(), params);
}

Eavesdropper::Eavesdropper(EveStrategy strategy, Seed seed, std::uint64_t tie_stream)
    : strategy_(strategy),
      noise_rng_(seed, stream::kEveNoise),
      tamper_rng_(seed, stream::kTamper),
      tie_rng_(seed, tie_stream) {
  strategy_.validate();
}

void Eavesdropper::capture(const BitBlock& r) {
  current_ = wiretap(r, strategy_.gamma, noise_rng_);
  captured_ = true;
}

Frame Eavesdropper::intercept(const Frame& frame) {
  if (frame.type != MsgType::kRandomBlock || captured_) return frame;
  const auto block = std::get<RandomBlock>(from_frame(frame));
  capture(block.r);
  if (strategy_.kind != EveKind::kTamper) return frame;
  auto tampered = apply_tamper(block.r, strategy_.tau, tamper_rng_);
  if (strategy_.incorporate_tamper) current_ ^= tampered.t;
  tamper_ = std::move(tampered.t);
  return to_frame(RandomBlock{std::move(tampered.r_tampered)});
}

void Eavesdropper::observe(const Frame& frame) {
  try {
    observe(from_frame(frame));
  } catch (const ProtocolError&) {
    in_sync_ = false;
  }
}

void Eavesdropper::observe(const Message& msg) {
  if (!in_sync_) return;
  std::visit(
      [this](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RandomBlock>) {
          if (!captured_) capture(m.r);
        } else if constexpr (std::is_same_v<T, MaskedPairs>) {
          pending_ = m;
        } else if constexpr (std::is_same_v<T, AcceptMask>) {
          if (!captured_ || !pending_ || pending_->round != m.round) {
            in_sync_ = false;
            return;
          }
          try {
            EveDecode d = eve_decode(pending_->block, current_, m.mask, tie_rng_);
            EveRound round;
            round.offered = pending_->block.groups();
            round.accepted = d.bits.size();
            round.bits = d.bits;
            round.tie_mask = std::move(d.tie_mask);
            current_ = std::move(d.bits);
            rounds_.push_back(std::move(round));
          } catch (const std::invalid_argument&) {
            in_sync_ = false;
          }
          pending_.reset();
        } else if constexpr (std::is_same_v<T, PaParamsMsg>) {
          if (m.n != current_.size() || m.seed.size() != hash_seed_length(m.n, m.m)) {
            in_sync_ = false;
            return;
          }
          key_guess_ = toeplitz_hash(current_, m.seed, static_cast<std::size_t>(m.m));
        }
      },
      msg);
}

}  // namespace nkd
