#pragma once

#include <cstddef>

#include "nkd/bitstream.hpp"
#include "nkd/channel_math.hpp"

namespace nkd {

/// Alice's masked repetition codewords: group j is [X_{jN} ^ C_j, ..., X_{jN+N-1} ^ C_j].
struct MaskedBlock {
  unsigned n_rep = 2;
  BitBlock payload;

  std::size_t groups() const noexcept { return n_rep == 0 ? 0 : payload.size() / n_rep; }
  friend bool operator==(const MaskedBlock&, const MaskedBlock&) = default;
};

/// Masks consecutive non-overlapping N-groups of `x` with one bit of `c` each.
/// Bits of `x` past c.size() * n_rep are ignored.
MaskedBlock encode_round(const BitBlock& x, const BitBlock& c, unsigned n_rep);

struct BobDecode {
  BitBlock accept_mask;  // one bit per group
  BitBlock decoded;      // one bit per accepted group
};

/// Accepts a group only when masked ^ y is all zeros or all ones.
BobDecode bob_decode(const MaskedBlock& masked, const BitBlock& y);

struct EveDecode {
  BitBlock bits;      // one bit per accepted group
  BitBlock tie_mask;  // 1 where the vote split evenly
};

/// Majority vote of masked ^ z over every group Bob accepted. Even splits
/// are resolved with a fair coin from `rng` and recorded in tie_mask; the
/// tie policy only matters when the result is scored (see score_eve).
EveDecode eve_decode(const MaskedBlock& masked, const BitBlock& z, const BitBlock& accept_mask,
                     Generator& rng);

/// Error rate of Eve's bits against `reference` under `policy`: ties count
/// fully, by half, or as whatever the coin produced.
double score_eve(const BitBlock& eve_bits, const BitBlock& tie_mask, const BitBlock& reference,
                 TiePolicy policy);

struct RoundTranscript {
  BitBlock accept_mask;
  BitBlock alice_next;
  BitBlock bob_next;
  BitBlock eve_next;
  BitBlock eve_tie_mask;
  std::size_t accepted = 0;
  std::size_t offered = 0;
};

/// Keeps the entries of `bits` (one per group) whose accept bit is set.
BitBlock select_accepted(const BitBlock& bits, const BitBlock& accept_mask);

/// One virtual-channel round over aligned strings. C is drawn from
/// `message_rng`; Eve's tie coins come from `eve_rng`.
RoundTranscript run_round(const BitBlock& alice, const BitBlock& bob, const BitBlock& eve,
                          unsigned n_rep, Generator& message_rng, Generator& eve_rng);

}  // namespace nkd
