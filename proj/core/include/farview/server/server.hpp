#pragma once

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "farview/opstack/operator_stack.hpp"
#include "farview/query/result.hpp"
#include "farview/server/config.hpp"
#include "farview/wire/endpoint.hpp"

namespace farview::server {

struct ServerStats {
  std::uint64_t connections_accepted = 0;
  std::uint64_t connections_refused = 0;
  std::uint64_t active_connections = 0;
  std::uint64_t farview_requests = 0;
  std::uint64_t rcpu_requests = 0;
  std::uint64_t pipeline_loads = 0;
  std::uint64_t rejected_busy = 0;
  /// Valid bytes sent to clients (credit grants excluded), closed
  /// connections included.
  std::uint64_t valid_bytes_sent = 0;
};

/// Server-CPU execution of a query over the stored table range.
RawResult rcpu_execute(mem::MemoryStack& memory, std::size_t port, wire::QueuePairId qpair, const Query& q,
                       std::uint64_t vaddr, std::uint64_t length);

/// The memory node: one acceptor thread and one worker per connection.
class Server {
 public:
  explicit Server(ServerConfig cfg);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds the listener and starts accepting. Throws Error(kIo) on bind
  /// failure.
  void start();
  /// Aborts in-flight requests (clients get an abort frame), closes every
  /// connection and joins all threads. Idempotent.
  void stop();
  /// Blocks until stop() has completed.
  void wait();

  std::uint16_t port() const { return port_; }
  const ServerConfig& config() const { return cfg_; }
  mem::MemoryStack& memory() { return *memory_; }
  opstack::OperatorStack& operators() { return *operators_; }
  ServerStats stats() const;

 private:
  struct Connection {
    std::thread thread;
    int fd = -1;
    bool done = false;
  };

  void accept_loop();
  void serve(Connection* conn, wire::Socket sock);
  void reap_finished();

  ServerConfig cfg_;
  std::unique_ptr<mem::MemoryStack> memory_;
  std::unique_ptr<opstack::OperatorStack> operators_;
  wire::Listener listener_;
  std::uint16_t port_ = 0;
  std::thread acceptor_;
  std::atomic<bool> stopping_{false};
  bool started_ = false;
  bool stopped_ = false;
  std::atomic<wire::QueuePairId> next_qpair_{1};

  mutable std::mutex mu_;
  std::condition_variable stopped_cv_;
  std::vector<std::unique_ptr<Connection>> conns_;
  ServerStats stats_;
};

}  // namespace farview::server
