#include "nkd/distillation.hpp"

#include <stdexcept>

namespace nkd {

namespace {

void require_aligned(const MaskedBlock& masked, const BitBlock& local, const char* who) {
  if (masked.n_rep == 0 || masked.payload.size() % masked.n_rep != 0) {
    throw std::invalid_argument("masked block length is not a multiple of n_rep");
  }
  if (local.size() / masked.n_rep != masked.groups()) {
    throw std::invalid_argument(std::string(who) + ": local string does not align with masked block");
  }
}

}  // namespace

MaskedBlock encode_round(const BitBlock& x, const BitBlock& c, unsigned n_rep) {
  if (n_rep == 0) throw std::invalid_argument("encode_round: n_rep must be at least 1");
  if (x.size() < c.size() * n_rep) {
    throw std::invalid_argument("encode_round: not enough bits to mask the message");
  }
  MaskedBlock out{n_rep, BitBlock(c.size() * n_rep)};
  for (std::size_t j = 0; j < c.size(); ++j) {
    const bool cj = c.get(j);
    for (unsigned k = 0; k < n_rep; ++k) {
      const std::size_t i = j * n_rep + k;
      out.payload.set(i, x.get(i) != cj);
    }
  }
  return out;
}

BobDecode bob_decode(const MaskedBlock& masked, const BitBlock& y) {
  require_aligned(masked, y, "bob_decode");
  const std::size_t groups = masked.groups();
  BobDecode out{BitBlock(groups), BitBlock()};
  out.decoded.reserve(groups);
  for (std::size_t j = 0; j < groups; ++j) {
    const std::size_t base = j * masked.n_rep;
    const bool first = masked.payload.get(base) != y.get(base);
    bool unanimous = true;
    for (unsigned k = 1; k < masked.n_rep && unanimous; ++k) {
      unanimous = (masked.payload.get(base + k) != y.get(base + k)) == first;
    }
    if (unanimous) {
      out.accept_mask.set(j, true);
      out.decoded.push_back(first);
    }
  }
  return out;
}

EveDecode eve_decode(const MaskedBlock& masked, const BitBlock& z, const BitBlock& accept_mask,
                     Generator& rng) {
  require_aligned(masked, z, "eve_decode");
  if (accept_mask.size() != masked.groups()) {
    throw std::invalid_argument("eve_decode: accept mask does not cover every group");
  }
  EveDecode out;
  const std::size_t accepted = accept_mask.popcount();
  out.bits.reserve(accepted);
  out.tie_mask.reserve(accepted);
  for (std::size_t j = 0; j < masked.groups(); ++j) {
    if (!accept_mask.get(j)) continue;
    const std::size_t base = j * masked.n_rep;
    unsigned ones = 0;
    for (unsigned k = 0; k < masked.n_rep; ++k) {
      ones += masked.payload.get(base + k) != z.get(base + k) ? 1U : 0U;
    }
    const bool tie = 2 * ones == masked.n_rep;
    out.tie_mask.push_back(tie);
    out.bits.push_back(tie ? rng.coin() : 2 * ones > masked.n_rep);
  }
  return out;
}

double score_eve(const BitBlock& eve_bits, const BitBlock& tie_mask, const BitBlock& reference,
                 TiePolicy policy) {
  if (eve_bits.size() != reference.size() || tie_mask.size() != reference.size()) {
    throw std::invalid_argument("score_eve: length mismatch");
  }
  if (reference.empty()) throw std::invalid_argument("score_eve: empty strings");
  double errors = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (tie_mask.get(i)) {
      switch (policy) {
        case TiePolicy::kCountAsError:
          errors += 1.0;
          break;
        case TiePolicy::kHalfCredit:
          errors += 0.5;
          break;
        case TiePolicy::kRandomGuess:
          errors += eve_bits.get(i) != reference.get(i) ? 1.0 : 0.0;
          break;
      }
    } else if (eve_bits.get(i) != reference.get(i)) {
      errors += 1.0;
    }
  }
  return errors / static_cast<double>(reference.size());
}

BitBlock select_accepted(const BitBlock& bits, const BitBlock& accept_mask) {
  if (bits.size() != accept_mask.size()) {
    throw std::invalid_argument("select_accepted: length mismatch");
  }
  BitBlock out;
  out.reserve(accept_mask.popcount());
  for (std::size_t j = 0; j < bits.size(); ++j) {
    if (accept_mask.get(j)) out.push_back(bits.get(j));
  }
  return out;
}

RoundTranscript run_round(const BitBlock& alice, const BitBlock& bob, const BitBlock& eve,
                          unsigned n_rep, Generator& message_rng, Generator& eve_rng) {
  if (alice.size() != bob.size() || alice.size() != eve.size()) {
    throw std::invalid_argument("run_round: party strings differ in length");
  }
  if (n_rep == 0) throw std::invalid_argument("run_round: n_rep must be at least 1");
  const std::size_t groups = alice.size() / n_rep;
  const BitBlock c = message_rng.uniform_bits(groups);
  const MaskedBlock masked = encode_round(alice, c, n_rep);
  BobDecode bob_side = bob_decode(masked, bob);
  EveDecode eve_side = eve_decode(masked, eve, bob_side.accept_mask, eve_rng);

  RoundTranscript t;
  t.offered = groups;
  t.accepted = bob_side.decoded.size();
  t.alice_next = select_accepted(c, bob_side.accept_mask);
  t.bob_next = std::move(bob_side.decoded);
  t.accept_mask = std::move(bob_side.accept_mask);
  t.eve_next = std::move(eve_side.bits);
  t.eve_tie_mask = std::move(eve_side.tie_mask);
  return t;
}

}  // namespace nkd
