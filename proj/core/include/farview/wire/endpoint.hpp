#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>

#include "farview/wire/protocol.hpp"

namespace farview::wire {

/// Owning TCP socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  static Socket connect(const std::string& host, std::uint16_t port);

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }

  void write_all(ByteSpan bytes);
  /// Reads exactly out.size() bytes. Returns false on EOF before the first
  /// byte; throws on EOF mid-read.
  bool read_exact(MutableByteSpan out);
  std::size_t read_some(MutableByteSpan out);

  void shutdown_read() const;
  void shutdown_both() const;
  void close();

 private:
  int fd_ = -1;
};

class Listener {
 public:
  static Listener bind(const std::string& host, std::uint16_t port);

  std::uint16_t port() const { return port_; }
  /// Returns an invalid socket once the listener has been shut down.
  Socket accept();
  void shutdown() const;

 private:
  Socket sock_;
  std::uint16_t port_ = 0;
};

struct NodeAddress {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  static NodeAddress parse(const std::string& host_port);
  std::string to_string() const;
};

struct EndpointStats {
  std::uint64_t packets_sent = 0;
  std::uint64_t packets_received = 0;
  std::uint64_t valid_bytes_sent = 0;      // excludes credit grants
  std::uint64_t valid_bytes_received = 0;  // excludes credit grants
  std::uint64_t grants_sent = 0;
  std::uint64_t grants_received = 0;
  std::uint32_t max_in_flight = 0;
};

/// One side of a connection: packetizes outgoing messages under credit-based
/// flow control and reassembles incoming ones. Owned by a single logical
/// handler; not thread-safe.
class Endpoint {
 public:
  struct Incoming {
    bool data = false;  // raw result bytes rather than a framed verb
    Bytes payload;
    std::size_t packets = 0;
    std::size_t valid_bytes = 0;  // sum of packet valid_bytes
  };

  Endpoint(Socket sock, std::size_t mtu, std::uint32_t window);

  void set_qpair(QueuePairId qp) { qpair_ = qp; }
  QueuePairId qpair() const { return qpair_; }
  /// Re-negotiates mtu/window; only legal before any credit is in flight.
  void reconfigure(std::size_t mtu, std::uint32_t window);
  std::size_t mtu() const { return mtu_; }
  CreditState credits() const { return credits_; }
  std::uint32_t in_flight() const { return credits_.max - credits_.available; }
  const EndpointStats& stats() const { return stats_; }

  /// Sends a framed verb. Control messages bypass credit accounting.
  void send_verb(const Verb& v, bool control = false);

  /// Sends one packet of the current data or frame stream, blocking on
  /// credits (the would-block signal) until the peer grants more.
  void send_packet(const Packet& pk, bool count_bytes = true);
  std::uint32_t next_message_id() { return next_msg_++; }
  void flush();

  /// Next complete non-grant message, or nullopt on orderly EOF.
  std::optional<Incoming> receive();

  /// Receives a framed verb; throws if a data message or EOF arrives.
  Verb receive_verb();

  /// Complete messages read off the socket but not yet returned.
  std::size_t queued() const { return inbox_.size(); }
  /// Reads whatever packets are already on the socket without blocking for
  /// new ones; returns queued().
  std::size_t poll_ready();

  Socket& socket() { return sock_; }

 private:
  /// Reads one packet and processes it. Returns false on EOF.
  bool pump();
  void grant_pending(bool force);
  void fill(std::size_t need);

  Socket sock_;
  QueuePairId qpair_ = 0;
  std::size_t mtu_;
  CreditState credits_;
  std::uint32_t grant_batch_;
  std::uint32_t pending_grant_ = 0;
  std::uint32_t next_msg_ = 1;
  Reassembler reassembler_;
  std::deque<Incoming> inbox_;
  Bytes wbuf_;
  Bytes rbuf_;
  std::size_t rpos_ = 0;
  EndpointStats stats_;
  bool eof_ = false;
};

}  // namespace farview::wire
