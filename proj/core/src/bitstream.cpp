#include "nkd/bitstream.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace nkd {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

BitBlock::BitBlock(std::size_t len) : len_(len), bytes_((len + 7) / 8, 0) {}

BitBlock BitBlock::from_bytes(std::size_t len, std::vector<std::uint8_t> bytes) {
  if (bytes.size() != (len + 7) / 8) {
    throw std::invalid_argument("BitBlock: byte count does not match bit length");
  }
  BitBlock block;
  block.len_ = len;
  block.bytes_ = std::move(bytes);
  if (len % 8 != 0) {
    const auto pad_mask = static_cast<std::uint8_t>(0xFFU >> (len % 8));
    if ((block.bytes_.back() & pad_mask) != 0) {
      throw std::invalid_argument("BitBlock: non-zero pad bits");
    }
  }
  return block;
}

BitBlock BitBlock::from_string(std::string_view bits) {
  BitBlock block(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') {
      throw std::invalid_argument("BitBlock: expected only '0' and '1'");
    }
    block.set(i, bits[i] == '1');
  }
  return block;
}

BitBlock BitBlock::from_hex(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw std::invalid_argument("BitBlock: expected <len>:<hex>");
  }
  std::size_t len = 0;
  for (char c : text.substr(0, colon)) {
    if (c < '0' || c > '9') throw std::invalid_argument("BitBlock: bad length");
    if (len > (std::numeric_limits<std::size_t>::max() - 9) / 10) {
      throw std::invalid_argument("BitBlock: length overflow");
    }
    len = len * 10 + static_cast<std::size_t>(c - '0');
  }
  const auto hex = text.substr(colon + 1);
  if (hex.size() != 2 * ((len + 7) / 8)) {
    throw std::invalid_argument("BitBlock: hex must cover exactly ceil(len/8) bytes");
  }
  std::vector<std::uint8_t> bytes(hex.size() / 2);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw std::invalid_argument("BitBlock: bad hex digit");
    bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return from_bytes(len, std::move(bytes));
}

void BitBlock::push_back(bool value) {
  if (len_ % 8 == 0) bytes_.push_back(0);
  ++len_;
  set(len_ - 1, value);
}

std::size_t BitBlock::popcount() const noexcept {
  std::size_t count = 0;
  for (auto b : bytes_) count += static_cast<std::size_t>(std::popcount(b));
  return count;
}

BitBlock BitBlock::complement() const {
  BitBlock out = *this;
  for (auto& b : out.bytes_) b = static_cast<std::uint8_t>(~b);
  out.clear_padding();
  return out;
}

BitBlock BitBlock::slice(std::size_t first, std::size_t count) const {
  if (first > len_ || count > len_ - first) {
    throw std::out_of_range("BitBlock: slice out of range");
  }
  BitBlock out(count);
  if (first % 8 == 0) {
    std::copy_n(bytes_.begin() + static_cast<std::ptrdiff_t>(first / 8), out.bytes_.size(),
                out.bytes_.begin());
    out.clear_padding();
    return out;
  }
  for (std::size_t i = 0; i < count; ++i) out.set(i, get(first + i));
  return out;
}

std::string BitBlock::to_hex() const {
  std::string out = std::to_string(len_);
  out.push_back(':');
  out.reserve(out.size() + 2 * bytes_.size());
  for (auto b : bytes_) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0xF]);
  }
  return out;
}

std::string BitBlock::to_string() const {
  std::string out(len_, '0');
  for (std::size_t i = 0; i < len_; ++i) {
    if (get(i)) out[i] = '1';
  }
  return out;
}

BitBlock& BitBlock::operator^=(const BitBlock& other) {
  if (other.len_ != len_) {
    throw std::invalid_argument("BitBlock: xor of blocks with different lengths");
  }
  for (std::size_t i = 0; i < bytes_.size(); ++i) bytes_[i] ^= other.bytes_[i];
  return *this;
}

void BitBlock::clear_padding() noexcept {
  if (len_ % 8 != 0) {
    bytes_.back() &= static_cast<std::uint8_t>(0xFFU << (8 - len_ % 8));
  }
}

BitBlock operator^(BitBlock lhs, const BitBlock& rhs) {
  lhs ^= rhs;
  return lhs;
}

std::size_t hamming_distance(const BitBlock& a, const BitBlock& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("hamming_distance: length mismatch");
  }
  std::size_t diff = 0;
  const auto x = a.bytes();
  const auto y = b.bytes();
  for (std::size_t i = 0; i < x.size(); ++i) {
    diff += static_cast<std::size_t>(std::popcount(static_cast<std::uint8_t>(x[i] ^ y[i])));
  }
  return diff;
}

double agreement_fraction(const BitBlock& a, const BitBlock& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("agreement_fraction: length mismatch");
  }
  if (a.empty()) throw std::invalid_argument("agreement_fraction: empty blocks");
  return 1.0 - static_cast<double>(hamming_distance(a, b)) / static_cast<double>(a.size());
}

// ---------------------------------------------------------------------------
// Philox4x32-10

std::array<std::uint32_t, 4> Generator::philox(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) noexcept {
  constexpr std::uint64_t kM0 = 0xD2511F53U;
  constexpr std::uint64_t kM1 = 0xCD9E8D57U;
  constexpr std::uint32_t kW0 = 0x9E3779B9U;
  constexpr std::uint32_t kW1 = 0xBB67AE85U;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = kM0 * ctr[0];
    const std::uint64_t p1 = kM1 * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
           static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
           static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

Generator::Generator(Seed seed, std::uint64_t stream_id) noexcept
    : key_{static_cast<std::uint32_t>(seed.value), static_cast<std::uint32_t>(seed.value >> 32)},
      stream_(stream_id) {}

void Generator::refill() noexcept {
  const auto out = philox({static_cast<std::uint32_t>(counter_),
                           static_cast<std::uint32_t>(counter_ >> 32),
                           static_cast<std::uint32_t>(stream_),
                           static_cast<std::uint32_t>(stream_ >> 32)},
                          key_);
  ++counter_;
  buffer_[0] = (std::uint64_t{out[1]} << 32) | out[0];
  buffer_[1] = (std::uint64_t{out[3]} << 32) | out[2];
  buffered_ = 2;
}

Generator::result_type Generator::operator()() noexcept {
  if (buffered_ == 0) refill();
  return buffer_[2 - buffered_--];
}

double Generator::uniform01() noexcept {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

bool Generator::bernoulli(double p) noexcept { return uniform01() < p; }

BitBlock Generator::uniform_bits(std::size_t n) {
  std::vector<std::uint8_t> bytes((n + 7) / 8);
  std::size_t i = 0;
  while (i < bytes.size()) {
    std::uint64_t word = (*this)();
    for (int k = 0; k < 8 && i < bytes.size(); ++k, ++i) {
      bytes[i] = static_cast<std::uint8_t>(word >> 56);
      word <<= 8;
    }
  }
  if (n % 8 != 0) {
    bytes.back() &= static_cast<std::uint8_t>(0xFFU << (8 - n % 8));
  }
  return BitBlock::from_bytes(n, std::move(bytes));
}

BitBlock Generator::biased_bits(std::size_t n, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("biased_bits: probability outside [0, 1]");
  }
  BitBlock out(n);
  if (p == 0.0) return out;
  for (std::size_t i = 0; i < n; ++i) {
    if (bernoulli(p)) out.set(i, true);
  }
  return out;
}

BitBlock gen_uniform_bits(std::size_t n, Seed seed, std::uint64_t stream_id) {
  Generator gen(seed, stream_id);
  return gen.uniform_bits(n);
}

BitBlock gen_biased_bits(std::size_t n, double p, Seed seed, std::uint64_t stream_id) {
  Generator gen(seed, stream_id);
  return gen.biased_bits(n, p);
}

Seed derive_seed(Seed master, std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t h = splitmix64(master.value);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b + 0x632BE59BD9B4E019ULL));
  return Seed{h};
}

// ---------------------------------------------------------------------------
// Maurer's universal statistical test

namespace {

struct UniversalReference {
  double expected;
  double variance;
};

// Indexed by L - 6.
constexpr std::array<UniversalReference, 11> kUniversalTable{{
    {5.2177052, 2.954},
    {6.1962507, 3.125},
    {7.1836656, 3.238},
    {8.1764248, 3.311},
    {9.1723243, 3.356},
    {10.170032, 3.384},
    {11.168765, 3.401},
    {12.168070, 3.410},
    {13.167693, 3.416},
    {14.167488, 3.419},
    {15.167379, 3.421},
}};

std::size_t read_block(const BitBlock& bits, std::size_t block, unsigned len) {
  std::size_t value = 0;
  const std::size_t base = block * len;
  for (unsigned j = 0; j < len; ++j) value = (value << 1) | (bits.get(base + j) ? 1U : 0U);
  return value;
}

}  // namespace

bool UniversalTestResult::passes(double threshold_sigma) const noexcept {
  return std::abs(z_score()) <= threshold_sigma;
}

UniversalTestResult rng_health_test(const BitBlock& bits, unsigned block_len_bits) {
  if (block_len_bits < 6 || block_len_bits > 16) {
    throw std::invalid_argument("rng_health_test: block length must be in [6, 16]");
  }
  const unsigned L = block_len_bits;
  const std::size_t patterns = std::size_t{1} << L;
  const std::size_t q = 10 * patterns;
  const std::size_t total_blocks = bits.size() / L;
  if (total_blocks < q + 1000 * patterns) {
    throw InsufficientDataError("rng_health_test: need at least " +
                                std::to_string((q + 1000 * patterns) * L) + " bits for L=" +
                                std::to_string(L));
  }
  const std::size_t k = total_blocks - q;

  std::vector<std::size_t> last_seen(patterns, 0);
  for (std::size_t i = 1; i <= q; ++i) last_seen[read_block(bits, i - 1, L)] = i;

  double sum = 0.0;
  for (std::size_t i = q + 1; i <= q + k; ++i) {
    const auto pattern = read_block(bits, i - 1, L);
    sum += std::log2(static_cast<double>(i - last_seen[pattern]));
    last_seen[pattern] = i;
  }

  const auto& ref = kUniversalTable[L - 6];
  const double dl = static_cast<double>(L);
  const double dk = static_cast<double>(k);
  const double c = 0.7 - 0.8 / dl + (4.0 + 32.0 / dl) * std::pow(dk, -3.0 / dl) / 15.0;

  UniversalTestResult result;
  result.block_len = L;
  result.init_blocks = q;
  result.test_blocks = k;
  result.statistic = sum / dk;
  result.expected = ref.expected;
  result.variance = ref.variance;
  result.sigma = c * std::sqrt(ref.variance / dk);
  return result;
}

}  // namespace nkd
