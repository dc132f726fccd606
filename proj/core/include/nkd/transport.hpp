#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "nkd/bitstream.hpp"
#include "nkd/distillation.hpp"

namespace nkd {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint8_t kFrameMagic0 = 0x4E;
inline constexpr std::uint8_t kFrameMagic1 = 0x4B;
inline constexpr std::uint8_t kFrameVersion = 0x01;
inline constexpr std::size_t kFrameHeaderSize = 8;
inline constexpr std::size_t kMaxPayload = std::size_t{1} << 24;
inline constexpr std::uint16_t kDefaultPort = 47923;

enum class MsgType : std::uint8_t {
  kHello = 0x01,
  kRandomBlock = 0x02,
  kMaskedPairs = 0x03,
  kAcceptMask = 0x04,
  kRoundDone = 0x05,
  kPaParams = 0x06,
  kKeyCheck = 0x07,
  kKeyOk = 0x08,
  kAbort = 0x09,
};

struct Frame {
  MsgType type = MsgType::kHello;
  Bytes payload;
  friend bool operator==(const Frame&, const Frame&) = default;
};

enum class FrameError {
  kNone,
  kBadMagic,
  kBadVersion,
  kUnknownType,
  kOversize,
  kTruncated,
};

std::string_view to_string(FrameError error) noexcept;

/// Protocol-level failure: malformed frame or payload, or an out-of-order message.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an operation is attempted in the wrong protocol phase.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Header (magic, version, type, big-endian payload length) followed by payload.
Bytes encode_frame(const Frame& frame);

struct DecodeResult {
  std::optional<Frame> frame;
  FrameError error = FrameError::kNone;
  std::size_t consumed = 0;
};

/// Decodes one frame from the start of `bytes`. Never throws on bad input.
DecodeResult decode_frame(std::span<const std::uint8_t> bytes);

/// Reassembles frames from arbitrarily fragmented stream input.
class FrameReader {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  /// Next complete frame, or nullopt if more input is needed.
  /// Throws ProtocolError on a malformed header.
  std::optional<Frame> next();
  std::size_t buffered() const noexcept { return buffer_.size() - offset_; }

 private:
  Bytes buffer_;
  std::size_t offset_ = 0;
};

// ---------------------------------------------------------------------------
// Typed messages

struct Hello {
  std::uint64_t config_digest = 0;
  friend bool operator==(const Hello&, const Hello&) = default;
};
struct RandomBlock {
  BitBlock r;
  friend bool operator==(const RandomBlock&, const RandomBlock&) = default;
};
struct MaskedPairs {
  std::uint16_t round = 0;
  MaskedBlock block;
  friend bool operator==(const MaskedPairs&, const MaskedPairs&) = default;
};
struct AcceptMask {
  std::uint16_t round = 0;
  BitBlock mask;
  friend bool operator==(const AcceptMask&, const AcceptMask&) = default;
};
struct RoundDone {
  std::uint16_t round = 0;
  friend bool operator==(const RoundDone&, const RoundDone&) = default;
};
struct PaParamsMsg {
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  BitBlock seed;
  friend bool operator==(const PaParamsMsg&, const PaParamsMsg&) = default;
};
struct KeyCheck {
  BitBlock check_seed;
  BitBlock digest;
  friend bool operator==(const KeyCheck&, const KeyCheck&) = default;
};
struct KeyOk {
  friend bool operator==(const KeyOk&, const KeyOk&) = default;
};

enum class AbortReason : std::uint8_t {
  kConfigMismatch = 1,
  kTamperAlarm = 2,
  kConfirmationFailed = 3,
  kProtocolViolation = 4,
  kEmptyKey = 5,
};

std::string_view to_string(AbortReason reason) noexcept;

struct Abort {
  AbortReason reason = AbortReason::kProtocolViolation;
  friend bool operator==(const Abort&, const Abort&) = default;
};

using Message =
    std::variant<Hello, RandomBlock, MaskedPairs, AcceptMask, RoundDone, PaParamsMsg, KeyCheck,
                 KeyOk, Abort>;

Frame to_frame(const Message& msg);
/// Throws ProtocolError on a malformed payload.
Message from_frame(const Frame& frame);

// ---------------------------------------------------------------------------
// Channels

/// One side of a frame-oriented duplex connection.
class Endpoint {
 public:
  virtual ~Endpoint() = default;
  virtual void send(const Frame& frame) = 0;
  /// Blocking endpoints wait for a frame; in-memory endpoints return nullopt
  /// when nothing is queued. nullopt from a stream endpoint means EOF.
  virtual std::optional<Frame> receive() = 0;
};

/// Pair of in-memory queues for lock-step simulation.
class MemoryDuplex {
 public:
  MemoryDuplex();
  ~MemoryDuplex();
  Endpoint& a() noexcept;
  Endpoint& b() noexcept;

 private:
  class Side;
  std::deque<Frame> a_to_b_;
  std::deque<Frame> b_to_a_;
  std::unique_ptr<Side> a_;
  std::unique_ptr<Side> b_;
};

enum class Direction { kOutbound, kInbound };

/// Adversary-aware view of an endpoint.
///
/// Taps receive every frame in order and cannot modify anything. A single
/// interceptor may rewrite RANDOM_BLOCK frames on their way out; every
/// other frame type passes untouched.
class Wire : public Endpoint {
 public:
  using Observer = std::function<void(const Frame&, Direction)>;
  using Interceptor = std::function<Frame(const Frame&)>;

  explicit Wire(Endpoint& inner) : inner_(inner) {}

  /// Throws StateError once traffic has flowed.
  void tap(Observer observer);
  void set_interceptor(Interceptor interceptor);

  void send(const Frame& frame) override;
  std::optional<Frame> receive() override;

  std::size_t bytes_seen() const noexcept { return bytes_seen_; }

 private:
  void notify(const Frame& frame, Direction dir);

  Endpoint& inner_;
  std::vector<Observer> observers_;
  Interceptor interceptor_;
  bool started_ = false;
  std::size_t bytes_seen_ = 0;
};

/// Blocking TCP stream endpoint (IPv4).
class TcpEndpoint : public Endpoint {
 public:
  /// Throws std::system_error on failure.
  static std::unique_ptr<TcpEndpoint> connect(const std::string& host, std::uint16_t port);

  explicit TcpEndpoint(int fd) noexcept : fd_(fd) {}
  ~TcpEndpoint() override;
  TcpEndpoint(const TcpEndpoint&) = delete;
  TcpEndpoint& operator=(const TcpEndpoint&) = delete;

  void send(const Frame& frame) override;
  std::optional<Frame> receive() override;

 private:
  int fd_;
  FrameReader reader_;
};

class TcpListener {
 public:
  /// Binds to the given port on all interfaces; port 0 picks an ephemeral port.
  explicit TcpListener(std::uint16_t port, bool loopback_only = false);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  std::unique_ptr<TcpEndpoint> accept();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Appends every observed frame verbatim to a .nkt transcript file.
class TranscriptWriter {
 public:
  explicit TranscriptWriter(const std::filesystem::path& path);
  void operator()(const Frame& frame, Direction dir);

 private:
  std::shared_ptr<std::FILE> file_;
};

/// Reads back a .nkt transcript. Throws ProtocolError on a corrupt file.
std::vector<Frame> read_transcript(const std::filesystem::path& path);

}  // namespace nkd
