#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <vector>

namespace farview::mem {

/// Round-robin choice among ports with demand. The search starts after the
/// port granted last, so continuously demanding ports alternate strictly.
class RoundRobinArbiter {
 public:
  explicit RoundRobinArbiter(std::size_t ports) : ports_(ports), last_(ports ? ports - 1 : 0) {}

  std::size_t ports() const { return ports_; }

  template <typename HasDemand>
  std::optional<std::size_t> next(HasDemand&& has_demand) {
    for (std::size_t step = 1; step <= ports_; ++step) {
      const std::size_t p = (last_ + step) % ports_;
      if (has_demand(p)) {
        last_ = p;
        return p;
      }
    }
    return std::nullopt;
  }

 private:
  std::size_t ports_;
  std::size_t last_;
};

struct GrantRecord {
  std::uint32_t port;
  std::uint64_t waiting_mask;  // ports with a queued request at grant time
};

/// Blocking single-holder arbitration for one channel direction. A worker
/// acquires before touching the channel and releases after; on release the
/// grant is handed to the next waiting port in round-robin order.
class ChannelGate {
 public:
  explicit ChannelGate(std::size_t ports) : rr_(ports), waiting_(ports, 0) {}

  void acquire(std::size_t port);
  void release(std::size_t port);

  void set_recording(bool on);
  std::vector<GrantRecord> grant_log() const;
  std::uint64_t grants() const;

 private:
  void pick_locked();

  mutable std::mutex mu_;
  std::condition_variable cv_;
  RoundRobinArbiter rr_;
  std::vector<std::uint32_t> waiting_;
  std::optional<std::size_t> holder_;
  bool recording_ = false;
  std::vector<GrantRecord> log_;
  std::uint64_t grants_ = 0;
};

class ChannelGrant {
 public:
  ChannelGrant(ChannelGate& gate, std::size_t port) : gate_(gate), port_(port) { gate_.acquire(port_); }
  ~ChannelGrant() { gate_.release(port_); }
  ChannelGrant(const ChannelGrant&) = delete;
  ChannelGrant& operator=(const ChannelGrant&) = delete;

 private:
  ChannelGate& gate_;
  std::size_t port_;
};

}  // namespace farview::mem
