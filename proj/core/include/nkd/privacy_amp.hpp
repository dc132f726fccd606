#pragma once

#include <cstddef>

#include "nkd/bitstream.hpp"

namespace nkd {

/// Public parameters of one privacy-amplification step.
struct PaParams {
  std::size_t input_len = 0;
  std::size_t output_len = 0;
  BitBlock hash_seed;  // input_len + output_len - 1 bits (empty when output_len == 0)
};

/// floor(n (1 - k)) - s, clamped at zero. k is Eve's information per bit.
std::size_t output_length(std::size_t n, double k, std::size_t safety_bits);

/// n + m - 1, or 0 when there is nothing to hash.
std::size_t hash_seed_length(std::size_t n, std::size_t m) noexcept;

/// Fresh public seed of hash_seed_length(n, m) bits.
BitBlock draw_hash_seed(std::size_t n, std::size_t m, Generator& public_rng);

/// Toeplitz hash over GF(2): out_i = XOR_j seed[i - j + n - 1] & in_j.
/// The matrix has constant diagonals, so a seed whose only set bit is at
/// offset n - 1 yields the identity.
BitBlock toeplitz_hash(const BitBlock& input, const BitBlock& seed, std::size_t m);

/// toeplitz_hash with lengths checked against `params`.
BitBlock apply_hash(const BitBlock& input, const PaParams& params);

}  // namespace nkd
