#include "farview/wire/endpoint.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <charconv>
#include <cstring>

namespace farview::wire {

namespace {

[[noreturn]] void fail_errno(const std::string& what) {
  fail(ErrorCode::kIo, what + ": " + std::strerror(errno));
}

constexpr std::size_t kWriteFlushBytes = 64 * 1024;
constexpr std::size_t kReadChunk = 64 * 1024;

}  // namespace

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Socket Socket::connect(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const auto service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
    fail(ErrorCode::kIo, "resolve " + host + ": " + ::gai_strerror(rc));
  Socket s(::socket(AF_INET, SOCK_STREAM, 0));
  if (!s.valid()) {
    ::freeaddrinfo(res);
    fail_errno("socket");
  }
  const int rc = ::connect(s.fd(), res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0) fail_errno("connect " + host + ":" + service);
  int one = 1;
  ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return s;
}

void Socket::write_all(ByteSpan bytes) {
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail_errno("send");
    }
    done += static_cast<std::size_t>(n);
  }
}

std::size_t Socket::read_some(MutableByteSpan out) {
  for (;;) {
    const ssize_t n = ::recv(fd_, out.data(), out.size(), 0);
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno == EINTR) continue;
    if (errno == ECONNRESET) return 0;
    fail_errno("recv");
  }
}

bool Socket::read_exact(MutableByteSpan out) {
  std::size_t done = 0;
  while (done < out.size()) {
    const std::size_t n = read_some(out.subspan(done));
    if (n == 0) {
      if (done == 0) return false;
      fail(ErrorCode::kIo, "connection closed mid-read");
    }
    done += n;
  }
  return true;
}

void Socket::shutdown_read() const {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RD);
}

void Socket::shutdown_both() const {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Listener Listener::bind(const std::string& host, std::uint16_t port) {
  Listener l;
  l.sock_ = Socket(::socket(AF_INET, SOCK_STREAM, 0));
  if (!l.sock_.valid()) fail_errno("socket");
  int one = 1;
  ::setsockopt(l.sock_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) fail(ErrorCode::kConfig, "bad listen host " + host);
  if (::bind(l.sock_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    fail_errno("bind " + host + ":" + std::to_string(port));
  if (::listen(l.sock_.fd(), 64) != 0) fail_errno("listen");
  socklen_t len = sizeof(addr);
  ::getsockname(l.sock_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  l.port_ = ntohs(addr.sin_port);
  return l;
}

Socket Listener::accept() {
  for (;;) {
    const int fd = ::accept(sock_.fd(), nullptr, nullptr);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return Socket(fd);
    }
    if (errno == EINTR || errno == ECONNABORTED) continue;
    return Socket{};
  }
}

void Listener::shutdown() const { sock_.shutdown_both(); }

NodeAddress NodeAddress::parse(const std::string& host_port) {
  const auto colon = host_port.rfind(':');
  if (colon == std::string::npos) fail(ErrorCode::kConfig, "address must be host:port, got " + host_port);
  NodeAddress a;
  a.host = host_port.substr(0, colon);
  const std::string_view digits = std::string_view(host_port).substr(colon + 1);
  unsigned port = 0;
  const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc{} || end != digits.data() + digits.size() || digits.empty() || port > 65535)
    fail(ErrorCode::kConfig, "bad port in " + host_port);
  a.port = static_cast<std::uint16_t>(port);
  return a;
}

std::string NodeAddress::to_string() const { return host + ":" + std::to_string(port); }

Endpoint::Endpoint(Socket sock, std::size_t mtu, std::uint32_t window)
    : sock_(std::move(sock)), mtu_(mtu), credits_{window, window}, grant_batch_(std::max<std::uint32_t>(1, window / 2)) {
  if (mtu < 64 || mtu > 65535) fail(ErrorCode::kArgument, "mtu must be in [64, 65535]");
  if (window == 0) fail(ErrorCode::kArgument, "credit window must be >= 1");
  rbuf_.reserve(kReadChunk);
}

void Endpoint::reconfigure(std::size_t mtu, std::uint32_t window) {
  if (in_flight() != 0) fail(ErrorCode::kProtocol, "reconfigure with packets in flight");
  if (mtu < 64 || mtu > 65535 || window == 0) fail(ErrorCode::kArgument, "bad mtu/window");
  mtu_ = mtu;
  credits_ = CreditState{window, window};
  grant_batch_ = std::max<std::uint32_t>(1, window / 2);
}

void Endpoint::send_packet(const Packet& pk, bool count_bytes) {
  if (!pk.control()) {
    std::optional<CreditState> next;
    while (!(next = consume_credit(credits_))) {
      flush();
      if (!pump()) fail(ErrorCode::kIo, "peer closed while waiting for credits");
    }
    credits_ = *next;
    stats_.max_in_flight = std::max(stats_.max_in_flight, in_flight());
  }
  const std::size_t at = wbuf_.size();
  wbuf_.resize(at + kPacketHeaderBytes + pk.payload.size());
  encode_packet_header(pk, wbuf_.data() + at);
  std::copy(pk.payload.begin(), pk.payload.end(), wbuf_.begin() + static_cast<std::ptrdiff_t>(at + kPacketHeaderBytes));
  ++stats_.packets_sent;
  if (count_bytes) stats_.valid_bytes_sent += pk.payload.size();
  if (wbuf_.size() >= kWriteFlushBytes) flush();
}

void Endpoint::send_verb(const Verb& v, bool control) {
  const Bytes frame = encode_verb(v);
  const std::uint8_t flags = control ? kFlagControl : 0;
  for (const auto& pk : packetize(qpair_, next_message_id(), frame, mtu_, flags))
    send_packet(pk, v.kind != VerbKind::kCreditGrant);
  flush();
}

void Endpoint::flush() {
  if (wbuf_.empty()) return;
  sock_.write_all(wbuf_);
  wbuf_.clear();
}

void Endpoint::fill(std::size_t need) {
  if (rbuf_.size() - rpos_ >= need) return;
  rbuf_.erase(rbuf_.begin(), rbuf_.begin() + static_cast<std::ptrdiff_t>(rpos_));
  rpos_ = 0;
  while (rbuf_.size() < need) {
    const std::size_t at = rbuf_.size();
    rbuf_.resize(at + std::max(kReadChunk, need - at));
    const std::size_t n = sock_.read_some(MutableByteSpan(rbuf_).subspan(at));
    rbuf_.resize(at + n);
    if (n == 0) {
      eof_ = true;
      return;
    }
  }
}

void Endpoint::grant_pending(bool force) {
  if (pending_grant_ == 0) return;
  if (!force && pending_grant_ < grant_batch_) return;
  Verb g;
  g.kind = VerbKind::kCreditGrant;
  g.qpair = qpair_;
  append_le<std::uint32_t>(g.payload, pending_grant_);
  pending_grant_ = 0;
  ++stats_.grants_sent;
  try {
    send_verb(g, /*control=*/true);
  } catch (const Error& e) {
    // The peer stopped reading; what it already sent is still delivered.
    if (e.code() != ErrorCode::kIo) throw;
    wbuf_.clear();
  }
}

bool Endpoint::pump() {
  if (eof_) return false;
  fill(kPacketHeaderBytes);
  if (rbuf_.size() - rpos_ < kPacketHeaderBytes) {
    if (rbuf_.size() != rpos_) fail(ErrorCode::kIo, "connection closed mid-packet");
    return false;
  }
  const auto hdr = decode_packet_header(ByteSpan(rbuf_).subspan(rpos_, kPacketHeaderBytes));
  fill(kPacketHeaderBytes + hdr.valid_bytes);
  if (rbuf_.size() - rpos_ < kPacketHeaderBytes + hdr.valid_bytes) fail(ErrorCode::kIo, "connection closed mid-packet");
  Packet pk{hdr.qpair, hdr.msg_id, hdr.seq, hdr.flags, {}};
  const auto* body = rbuf_.data() + rpos_ + kPacketHeaderBytes;
  pk.payload.assign(body, body + hdr.valid_bytes);
  rpos_ += kPacketHeaderBytes + hdr.valid_bytes;
  ++stats_.packets_received;
  stats_.valid_bytes_received += hdr.valid_bytes;

  const bool counted = !pk.control();
  if (counted) ++pending_grant_;
  auto msg = reassembler_.add(std::move(pk));
  if (msg) {
    if (msg->flags & kFlagData) {
      inbox_.push_back(Incoming{true, std::move(msg->payload), msg->packets, 0});
      // valid_bytes equals the payload size for a fully reassembled message.
      inbox_.back().valid_bytes = inbox_.back().payload.size();
    } else {
      Verb v = decode_verb(msg->payload);
      if (v.kind == VerbKind::kCreditGrant) {
        if (v.payload.size() != 4) fail(ErrorCode::kProtocol, "CREDIT_GRANT payload must be 4 bytes");
        credits_ = grant_credits(credits_, load_le<std::uint32_t>(v.payload.data()));
        ++stats_.grants_received;
        stats_.valid_bytes_received -= msg->payload.size();
      } else {
        const std::size_t n = msg->payload.size();
        inbox_.push_back(Incoming{false, std::move(msg->payload), msg->packets, n});
      }
    }
  }
  if (counted) grant_pending(/*force=*/msg.has_value());
  return true;
}

std::size_t Endpoint::poll_ready() {
  while (!eof_) {
    if (rbuf_.size() - rpos_ < kPacketHeaderBytes) {
      pollfd p{sock_.fd(), POLLIN, 0};
      if (::poll(&p, 1, 0) <= 0) break;
    }
    if (!pump()) break;
  }
  return inbox_.size();
}

std::optional<Endpoint::Incoming> Endpoint::receive() {
  flush();
  while (inbox_.empty()) {
    if (!pump()) return std::nullopt;
  }
  Incoming in = std::move(inbox_.front());
  inbox_.pop_front();
  return in;
}

Verb Endpoint::receive_verb() {
  auto in = receive();
  if (!in) fail(ErrorCode::kIo, "connection closed");
  if (in->data) fail(ErrorCode::kProtocol, "expected a framed verb, got a data message");
  return decode_verb(in->payload);
}

}  // namespace farview::wire
