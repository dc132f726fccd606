#include "nkd/privacy_amp.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace nkd {

namespace {

// MSB-first 64-bit words with `extra` zero words appended.
std::vector<std::uint64_t> pack_words(const BitBlock& bits, bool reversed, std::size_t extra) {
  const std::size_t n = bits.size();
  std::vector<std::uint64_t> words((n + 63) / 64 + extra, 0);
  if (!reversed) {
    const auto bytes = bits.bytes();
    for (std::size_t b = 0; b < bytes.size(); ++b) {
      words[b / 8] |= std::uint64_t{bytes[b]} << (56 - 8 * (b % 8));
    }
    return words;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (bits.get(n - 1 - i)) words[i / 64] |= std::uint64_t{1} << (63 - i % 64);
  }
  return words;
}

}  // namespace

std::size_t output_length(std::size_t n, double k, std::size_t safety_bits) {
  if (!(k >= 0.0 && k <= 1.0)) throw std::invalid_argument("output_length: k outside [0, 1]");
  const auto kept = static_cast<std::size_t>(std::floor(static_cast<double>(n) * (1.0 - k)));
  return kept > safety_bits ? kept - safety_bits : 0;
}

std::size_t hash_seed_length(std::size_t n, std::size_t m) noexcept {
  return (n == 0 || m == 0) ? 0 : n + m - 1;
}

BitBlock draw_hash_seed(std::size_t n, std::size_t m, Generator& public_rng) {
  return public_rng.uniform_bits(hash_seed_length(n, m));
}

BitBlock toeplitz_hash(const BitBlock& input, const BitBlock& seed, std::size_t m) {
  const std::size_t n = input.size();
  if (seed.size() != hash_seed_length(n, m)) {
    throw std::invalid_argument("toeplitz_hash: seed length must be n + m - 1");
  }
  BitBlock out(m);
  if (m == 0 || n == 0) return out;

  const auto rev = pack_words(input, /*reversed=*/true, 0);
  const auto key = pack_words(seed, /*reversed=*/false, 3);
  const std::size_t words = rev.size();
  const std::size_t row_words = (m + 63) / 64;
  // Row i = 64q + r reads the seed window starting at bit i; keep one copy
  // of the seed pre-shifted by r so every inner loop is word aligned.
  std::vector<std::uint64_t> shifted(row_words + words);
  for (unsigned r = 0; r < 64; ++r) {
    for (std::size_t w = 0; w < shifted.size(); ++w) {
      shifted[w] = r == 0 ? key[w] : (key[w] << r) | (key[w + 1] >> (64 - r));
    }
    for (std::size_t q = 0; q < row_words; ++q) {
      const std::size_t i = q * 64 + r;
      if (i >= m) break;
      const std::uint64_t* s = shifted.data() + q;
      std::uint64_t acc = 0;
      for (std::size_t k = 0; k < words; ++k) acc ^= s[k] & rev[k];
      if (std::popcount(acc) & 1) out.set(i, true);
    }
  }
  return out;
}

BitBlock apply_hash(const BitBlock& input, const PaParams& params) {
  if (input.size() != params.input_len) {
    throw std::invalid_argument("apply_hash: input length differs from the agreed n");
  }
  return toeplitz_hash(input, params.hash_seed, params.output_len);
}

}  // namespace nkd
