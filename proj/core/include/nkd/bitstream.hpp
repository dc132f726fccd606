#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nkd {

/// Packed bit sequence with an explicit length.
///
/// Bits are stored most-significant-bit first within each byte and the
/// payload always holds exactly ceil(size()/8) bytes. Pad bits past the
/// logical end are kept at zero so that byte-wise comparison, hashing and
/// serialization never see garbage.
class BitBlock {
 public:
  BitBlock() = default;

  /// All-zero block of `len` bits.
  explicit BitBlock(std::size_t len);

  /// Adopts a packed payload. Throws std::invalid_argument when the byte
  /// count does not match `len` or a pad bit is set.
  static BitBlock from_bytes(std::size_t len, std::vector<std::uint8_t> bytes);

  /// Parses a string of '0'/'1' characters (test and debugging helper).
  static BitBlock from_string(std::string_view bits);

  /// Parses "<len>:<hex of ceil(len/8) bytes>".
  static BitBlock from_hex(std::string_view text);

  std::size_t size() const noexcept { return len_; }
  bool empty() const noexcept { return len_ == 0; }

  bool get(std::size_t i) const noexcept {
    return (bytes_[i >> 3] >> (7 - (i & 7))) & 1U;
  }
  void set(std::size_t i, bool value) noexcept {
    const auto mask = static_cast<std::uint8_t>(0x80U >> (i & 7));
    if (value) {
      bytes_[i >> 3] |= mask;
    } else {
      bytes_[i >> 3] &= static_cast<std::uint8_t>(~mask);
    }
  }
  void push_back(bool value);
  void reserve(std::size_t bits) { bytes_.reserve((bits + 7) / 8); }

  std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }

  std::size_t popcount() const noexcept;
  BitBlock complement() const;
  /// Bits [first, first + count).
  BitBlock slice(std::size_t first, std::size_t count) const;

  /// "<len>:<lowercase hex>"
  std::string to_hex() const;
  /// '0'/'1' rendering.
  std::string to_string() const;

  /// Throws std::invalid_argument on length mismatch.
  BitBlock& operator^=(const BitBlock& other);

  friend bool operator==(const BitBlock&, const BitBlock&) = default;

 private:
  void clear_padding() noexcept;

  std::size_t len_ = 0;
  std::vector<std::uint8_t> bytes_;
};

BitBlock operator^(BitBlock lhs, const BitBlock& rhs);

/// Fraction of positions where `a` and `b` hold the same bit.
/// Requires equal, non-zero lengths.
double agreement_fraction(const BitBlock& a, const BitBlock& b);

/// Number of positions where `a` and `b` differ. Requires equal lengths.
std::size_t hamming_distance(const BitBlock& a, const BitBlock& b);

struct Seed {
  std::uint64_t value = 0;
  friend bool operator==(Seed, Seed) = default;
};

/// Fixed stream identifiers carved out of one experiment seed.
namespace stream {
inline constexpr std::uint64_t kAliceNoise = 0;
inline constexpr std::uint64_t kBobNoise = 1;
inline constexpr std::uint64_t kEveNoise = 2;
inline constexpr std::uint64_t kMessage = 3;
inline constexpr std::uint64_t kHashSeed = 4;
inline constexpr std::uint64_t kTamper = 5;
inline constexpr std::uint64_t kRandomBlock = 6;
inline constexpr std::uint64_t kEveTieBreak = 7;
inline constexpr std::uint64_t kShadowTieBreak = 8;
}  // namespace stream

/// Counter-based generator (Philox4x32-10).
///
/// The 64-bit seed is the cipher key and the stream id occupies the upper
/// half of the 128-bit counter, so every (seed, stream) pair addresses its
/// own sequence of 2^64 blocks. Satisfies std::uniform_random_bit_generator.
class Generator {
 public:
  using result_type = std::uint64_t;

  Generator(Seed seed, std::uint64_t stream_id) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept;
  /// True with probability p; p <= 0 never fires and p >= 1 always fires.
  bool bernoulli(double p) noexcept;
  bool coin() noexcept { return ((*this)() >> 63) != 0; }

  BitBlock uniform_bits(std::size_t n);
  /// Throws std::invalid_argument unless 0 <= p <= 1.
  BitBlock biased_bits(std::size_t n, double p);

  /// Raw Philox4x32-10 block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                             std::array<std::uint32_t, 2> key) noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  unsigned buffered_ = 0;
};

BitBlock gen_uniform_bits(std::size_t n, Seed seed, std::uint64_t stream_id);
BitBlock gen_biased_bits(std::size_t n, double p, Seed seed, std::uint64_t stream_id);

/// Deterministically derives a child seed, e.g. per sweep point and repetition.
Seed derive_seed(Seed master, std::uint64_t a, std::uint64_t b = 0) noexcept;

/// Raised when a health test is given too little data to run at all.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Outcome of Maurer's universal statistical test.
struct UniversalTestResult {
  unsigned block_len = 0;
  std::size_t init_blocks = 0;
  std::size_t test_blocks = 0;
  double statistic = 0.0;  // f_TU
  double expected = 0.0;
  double variance = 0.0;   // per-block variance from the reference table
  double sigma = 0.0;      // standard deviation of f_TU for this K

  double z_score() const noexcept { return (statistic - expected) / sigma; }
  bool passes(double threshold_sigma) const noexcept;
};

/// Maurer's universal statistical test with L = block_len_bits in [6, 16],
/// Q = 10 * 2^L initialization blocks and K >= 1000 * 2^L test blocks.
/// Throws InsufficientDataError when K would be too small and
/// std::invalid_argument for L outside the tabulated range.
UniversalTestResult rng_health_test(const BitBlock& bits, unsigned block_len_bits);

}  // namespace nkd
