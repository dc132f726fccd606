#include "nkd/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <system_error>
#include <type_traits>

namespace nkd {

std::string_view to_string(FrameError error) noexcept {
  switch (error) {
    case FrameError::kNone:
      return "none";
    case FrameError::kBadMagic:
      return "bad magic";
    case FrameError::kBadVersion:
      return "bad version";
    case FrameError::kUnknownType:
      return "unknown message type";
    case FrameError::kOversize:
      return "payload too large";
    case FrameError::kTruncated:
      return "truncated frame";
  }
  return "unknown";
}

std::string_view to_string(AbortReason reason) noexcept {
  switch (reason) {
    case AbortReason::kConfigMismatch:
      return "config-mismatch";
    case AbortReason::kTamperAlarm:
      return "tamper-alarm";
    case AbortReason::kConfirmationFailed:
      return "confirmation-failed";
    case AbortReason::kProtocolViolation:
      return "protocol-violation";
    case AbortReason::kEmptyKey:
      return "empty-key";
  }
  return "unknown";
}

namespace {

bool known_type(std::uint8_t t) noexcept { return t >= 0x01 && t <= 0x09; }

class PayloadWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  void bits(const BitBlock& b) {
    u64(b.size());
    const auto bytes = b.bytes();
    out_.insert(out_.end(), bytes.begin(), bytes.end());
  }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class PayloadReader {
 public:
  explicit PayloadReader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>((in_[pos_] << 8) | in_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | in_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 8;
    return v;
  }
  BitBlock bits() {
    const std::uint64_t len = u64();
    if (len > static_cast<std::uint64_t>(remaining()) * 8) {
      throw ProtocolError("payload: bit length exceeds remaining bytes");
    }
    const std::size_t nbytes = static_cast<std::size_t>((len + 7) / 8);
    Bytes bytes(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
                in_.begin() + static_cast<std::ptrdiff_t>(pos_ + nbytes));
    pos_ += nbytes;
    try {
      return BitBlock::from_bytes(static_cast<std::size_t>(len), std::move(bytes));
    } catch (const std::invalid_argument& e) {
      throw ProtocolError(std::string("payload: ") + e.what());
    }
  }
  void finish() const {
    if (pos_ != in_.size()) throw ProtocolError("payload: trailing bytes");
  }

 private:
  std::size_t remaining() const noexcept { return in_.size() - pos_; }
  void need(std::size_t n) const {
    if (remaining() < n) throw ProtocolError("payload: truncated");
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

Bytes encode_frame(const Frame& frame) {
  if (frame.payload.size() > kMaxPayload) throw std::length_error("encode_frame: payload too large");
  Bytes out;
  out.reserve(kFrameHeaderSize + frame.payload.size());
  out.push_back(kFrameMagic0);
  out.push_back(kFrameMagic1);
  out.push_back(kFrameVersion);
  out.push_back(static_cast<std::uint8_t>(frame.type));
  const auto len = static_cast<std::uint32_t>(frame.payload.size());
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(len >> shift));
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  return out;
}

DecodeResult decode_frame(std::span<const std::uint8_t> bytes) {
  DecodeResult result;
  const auto fail = [&](FrameError e) {
    result.error = e;
    return result;
  };
  if (!bytes.empty() && bytes[0] != kFrameMagic0) return fail(FrameError::kBadMagic);
  if (bytes.size() > 1 && bytes[1] != kFrameMagic1) return fail(FrameError::kBadMagic);
  if (bytes.size() > 2 && bytes[2] != kFrameVersion) return fail(FrameError::kBadVersion);
  if (bytes.size() > 3 && !known_type(bytes[3])) return fail(FrameError::kUnknownType);
  if (bytes.size() < kFrameHeaderSize) return fail(FrameError::kTruncated);
  const std::uint32_t len = (std::uint32_t{bytes[4]} << 24) | (std::uint32_t{bytes[5]} << 16) |
                            (std::uint32_t{bytes[6]} << 8) | std::uint32_t{bytes[7]};
  if (len > kMaxPayload) return fail(FrameError::kOversize);
  if (bytes.size() < kFrameHeaderSize + len) return fail(FrameError::kTruncated);
  Frame frame;
  frame.type = static_cast<MsgType>(bytes[3]);
  frame.payload.assign(bytes.begin() + kFrameHeaderSize, bytes.begin() + kFrameHeaderSize + len);
  result.frame = std::move(frame);
  result.consumed = kFrameHeaderSize + len;
  return result;
}

void FrameReader::feed(std::span<const std::uint8_t> bytes) {
  if (offset_ > 0 && offset_ == buffer_.size()) {
    buffer_.clear();
    offset_ = 0;
  }
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<Frame> FrameReader::next() {
  auto result = decode_frame(std::span(buffer_).subspan(offset_));
  if (result.error == FrameError::kTruncated) {
    if (offset_ > 0) {
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(offset_));
      offset_ = 0;
    }
    return std::nullopt;
  }
  if (result.error != FrameError::kNone) {
    throw ProtocolError(std::string("frame: ") + std::string(to_string(result.error)));
  }
  offset_ += result.consumed;
  return std::move(result.frame);
}

// ---------------------------------------------------------------------------

Frame to_frame(const Message& msg) {
  PayloadWriter w;
  const MsgType type = std::visit(
      [&w](const auto& m) -> MsgType {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Hello>) {
          w.u64(m.config_digest);
          return MsgType::kHello;
        } else if constexpr (std::is_same_v<T, RandomBlock>) {
          w.bits(m.r);
          return MsgType::kRandomBlock;
        } else if constexpr (std::is_same_v<T, MaskedPairs>) {
          w.u16(m.round);
          w.u16(static_cast<std::uint16_t>(m.block.n_rep));
          w.bits(m.block.payload);
          return MsgType::kMaskedPairs;
        } else if constexpr (std::is_same_v<T, AcceptMask>) {
          w.u16(m.round);
          w.bits(m.mask);
          return MsgType::kAcceptMask;
        } else if constexpr (std::is_same_v<T, RoundDone>) {
          w.u16(m.round);
          return MsgType::kRoundDone;
        } else if constexpr (std::is_same_v<T, PaParamsMsg>) {
          w.u64(m.n);
          w.u64(m.m);
          w.bits(m.seed);
          return MsgType::kPaParams;
        } else if constexpr (std::is_same_v<T, KeyCheck>) {
          w.bits(m.check_seed);
          w.bits(m.digest);
          return MsgType::kKeyCheck;
        } else if constexpr (std::is_same_v<T, KeyOk>) {
          return MsgType::kKeyOk;
        } else {
          w.u8(static_cast<std::uint8_t>(m.reason));
          return MsgType::kAbort;
        }
      },
      msg);
  return Frame{type, w.take()};
}

Message from_frame(const Frame& frame) {
  PayloadReader r(frame.payload);
  Message msg;
  switch (frame.type) {
    case MsgType::kHello:
      msg = Hello{r.u64()};
      break;
    case MsgType::kRandomBlock:
      msg = RandomBlock{r.bits()};
      break;
    case MsgType::kMaskedPairs: {
      MaskedPairs m;
      m.round = r.u16();
      m.block.n_rep = r.u16();
      m.block.payload = r.bits();
      if (m.block.n_rep == 0 || m.block.payload.size() % m.block.n_rep != 0) {
        throw ProtocolError("payload: masked block not a whole number of groups");
      }
      msg = std::move(m);
      break;
    }
    case MsgType::kAcceptMask: {
      AcceptMask m;
      m.round = r.u16();
      m.mask = r.bits();
      msg = std::move(m);
      break;
    }
    case MsgType::kRoundDone:
      msg = RoundDone{r.u16()};
      break;
    case MsgType::kPaParams: {
      PaParamsMsg m;
      m.n = r.u64();
      m.m = r.u64();
      m.seed = r.bits();
      msg = std::move(m);
      break;
    }
    case MsgType::kKeyCheck: {
      KeyCheck m;
      m.check_seed = r.bits();
      m.digest = r.bits();
      msg = std::move(m);
      break;
    }
    case MsgType::kKeyOk:
      msg = KeyOk{};
      break;
    case MsgType::kAbort: {
      const auto reason = r.u8();
      if (reason < 1 || reason > 5) throw ProtocolError("payload: unknown abort reason");
      msg = Abort{static_cast<AbortReason>(reason)};
      break;
    }
    default:
      throw ProtocolError("frame: unknown message type");
  }
  r.finish();
  return msg;
}

// ---------------------------------------------------------------------------

class MemoryDuplex::Side : public Endpoint {
 public:
  Side(std::deque<Frame>& out, std::deque<Frame>& in) : out_(out), in_(in) {}
  void send(const Frame& frame) override { out_.push_back(frame); }
  std::optional<Frame> receive() override {
    if (in_.empty()) return std::nullopt;
    Frame f = std::move(in_.front());
    in_.pop_front();
    return f;
  }

 private:
  std::deque<Frame>& out_;
  std::deque<Frame>& in_;
};

MemoryDuplex::MemoryDuplex()
    : a_(std::make_unique<Side>(a_to_b_, b_to_a_)), b_(std::make_unique<Side>(b_to_a_, a_to_b_)) {}

MemoryDuplex::~MemoryDuplex() = default;
Endpoint& MemoryDuplex::a() noexcept { return *a_; }
Endpoint& MemoryDuplex::b() noexcept { return *b_; }

void Wire::tap(Observer observer) {
  if (started_) throw StateError("Wire::tap: observers must attach before traffic starts");
  observers_.push_back(std::move(observer));
}

void Wire::set_interceptor(Interceptor interceptor) {
  if (started_) throw StateError("Wire::set_interceptor: traffic already started");
  interceptor_ = std::move(interceptor);
}

void Wire::notify(const Frame& frame, Direction dir) {
  bytes_seen_ += kFrameHeaderSize + frame.payload.size();
  for (auto& obs : observers_) obs(frame, dir);
}

void Wire::send(const Frame& frame) {
  started_ = true;
  if (interceptor_ && frame.type == MsgType::kRandomBlock) {
    Frame rewritten = interceptor_(frame);
    rewritten.type = MsgType::kRandomBlock;
    notify(rewritten, Direction::kOutbound);
    inner_.send(rewritten);
    return;
  }
  notify(frame, Direction::kOutbound);
  inner_.send(frame);
}

std::optional<Frame> Wire::receive() {
  started_ = true;
  auto frame = inner_.receive();
  if (frame) notify(*frame, Direction::kInbound);
  return frame;
}

// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void throw_errno(const char* what) {
  throw std::system_error(errno, std::generic_category(), what);
}

}  // namespace

std::unique_ptr<TcpEndpoint> TcpEndpoint::connect(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const auto service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw std::system_error(std::make_error_code(std::errc::host_unreachable),
                            std::string("getaddrinfo: ") + ::gai_strerror(rc));
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return std::make_unique<TcpEndpoint>(fd);
    }
    ::close(fd);
  }
  throw_errno("connect");
}

TcpEndpoint::~TcpEndpoint() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpEndpoint::send(const Frame& frame) {
  const Bytes bytes = encode_frame(frame);
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("send");
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::optional<Frame> TcpEndpoint::receive() {
  std::array<std::uint8_t, 65536> buf{};
  for (;;) {
    if (auto frame = reader_.next()) return frame;
    const ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("recv");
    }
    if (n == 0) {
      if (reader_.buffered() > 0) throw ProtocolError("frame: connection closed mid-frame");
      return std::nullopt;
    }
    reader_.feed(std::span(buf.data(), static_cast<std::size_t>(n)));
  }
}

TcpListener::TcpListener(std::uint16_t port, bool loopback_only) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw_errno("socket");
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(loopback_only ? INADDR_LOOPBACK : INADDR_ANY);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd_, 1) != 0) {
    const int err = errno;
    ::close(fd_);
    throw std::system_error(err, std::generic_category(), "bind/listen");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<TcpEndpoint> TcpListener::accept() {
  for (;;) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) {
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return std::make_unique<TcpEndpoint>(fd);
    }
    if (errno != EINTR) throw_errno("accept");
  }
}

// ---------------------------------------------------------------------------

TranscriptWriter::TranscriptWriter(const std::filesystem::path& path)
    : file_(std::fopen(path.c_str(), "ab"), [](std::FILE* f) {
        if (f) std::fclose(f);
      }) {
  if (!file_) throw_errno("open transcript");
}

void TranscriptWriter::operator()(const Frame& frame, Direction) {
  const Bytes bytes = encode_frame(frame);
  if (std::fwrite(bytes.data(), 1, bytes.size(), file_.get()) != bytes.size()) {
    throw_errno("write transcript");
  }
  std::fflush(file_.get());
}

std::vector<Frame> read_transcript(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) throw_errno("open transcript");
  FrameReader reader;
  std::array<std::uint8_t, 65536> buf{};
  std::vector<Frame> frames;
  for (;;) {
    const std::size_t n = std::fread(buf.data(), 1, buf.size(), file.get());
    if (n == 0) break;
    reader.feed(std::span(buf.data(), n));
    while (auto frame = reader.next()) frames.push_back(std::move(*frame));
  }
  if (reader.buffered() > 0) throw ProtocolError("transcript: trailing partial frame");
  return frames;
}

}  // namespace nkd
