#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <vector>

#include "farview/memory/arbiter.hpp"
#include "farview/schema.hpp"
#include "farview/wire/protocol.hpp"

namespace farview::mem {

using wire::QueuePairId;

struct MemoryConfig {
  std::uint32_t channels = 2;
  std::uint64_t channel_capacity = std::uint64_t{256} << 20;
  std::uint64_t page_size = kPageSize;
  std::uint64_t stripe = 64;
  std::uint64_t channel_word = kChannelWord;
  /// Largest physical span moved under one channel grant.
  std::uint64_t burst_bytes = 4096;
  bool record_grants = false;

  void validate() const;
};

struct PageTableEntry {
  std::uint64_t vpage = 0;              // virtual page number
  std::vector<std::uint32_t> frames;    // one frame per channel
  std::set<QueuePairId> owner_qpairs;
  std::uint64_t table_base = 0;
};

struct TableHandle {
  QueuePairId qpair = 0;
  std::uint64_t base_vaddr = 0;
  std::uint64_t size = 0;
  Schema schema;

  std::uint64_t end() const { return base_vaddr + size; }
  std::uint64_t rows() const { return schema.tuple_bytes() ? size / schema.tuple_bytes() : 0; }
};

enum class Direction : std::uint8_t { kRead, kWrite };

struct ChannelRequest {
  std::uint32_t channel = 0;
  std::uint64_t offset = 0;  // physical byte offset within the channel
  std::uint64_t length = 0;
  Direction direction = Direction::kRead;

  bool operator==(const ChannelRequest&) const = default;
};

struct Translation {
  std::uint32_t channel;
  std::uint64_t physical_offset;

  bool operator==(const Translation&) const = default;
};

/// Virtual extent for gather reads.
struct Extent {
  std::uint64_t vaddr;
  std::uint32_t length;
};

struct ChannelCounters {
  std::uint64_t read_requests = 0;
  std::uint64_t read_bytes = 0;
  std::uint64_t write_requests = 0;
  std::uint64_t write_bytes = 0;
};

/// Round-robin arbitration over per-region queues of channel requests: for
/// every channel, grants the head-most request for that channel of the next
/// region in turn and pops it.
class RequestArbiter {
 public:
  RequestArbiter(std::size_t regions, std::uint32_t channels);

  std::vector<std::optional<std::pair<std::size_t, ChannelRequest>>> arbitrate(
      std::vector<std::deque<ChannelRequest>>& pending);

 private:
  std::vector<RoundRobinArbiter> per_channel_;
};

/// The node's buffer pool: 2 MiB virtual pages striped over C channels,
/// a complete page table, and arbitrated streaming access.
class MemoryStack {
 public:
  using ChunkSink = std::function<void(std::uint64_t vaddr, ByteSpan chunk)>;

  explicit MemoryStack(MemoryConfig cfg, std::size_t ports = 1);
  ~MemoryStack();
  MemoryStack(const MemoryStack&) = delete;
  MemoryStack& operator=(const MemoryStack&) = delete;

  const MemoryConfig& config() const { return cfg_; }
  std::size_t ports() const { return ports_; }
  std::uint64_t frame_bytes() const { return frame_bytes_; }
  std::uint64_t frames_per_channel() const { return frames_per_channel_; }

  TableHandle alloc_table(QueuePairId qpair, std::uint64_t size, const Schema& schema);
  void free_table(QueuePairId qpair, std::uint64_t base_vaddr);
  void share_table(QueuePairId owner, std::uint64_t base_vaddr, QueuePairId other);

  /// Table containing `vaddr`, checked against qpair ownership.
  TableHandle table_for(QueuePairId qpair, std::uint64_t vaddr) const;
  std::optional<TableHandle> find_table(std::uint64_t base_vaddr) const;

  Translation translate(std::uint64_t vaddr) const;

  /// Per-channel requests a streamed access of the range decomposes into.
  std::vector<ChannelRequest> plan_requests(std::uint64_t vaddr, std::uint64_t length, Direction dir) const;

  /// Streams [vaddr, vaddr+length) to `sink` in address order, `chunk` bytes
  /// at a time. `port` selects the arbitration slot (one per region).
  void read_stream(QueuePairId qpair, std::size_t port, std::uint64_t vaddr, std::uint64_t length,
                   const ChunkSink& sink, std::uint64_t chunk = 64 * 1024);
  Bytes read(QueuePairId qpair, std::size_t port, std::uint64_t vaddr, std::uint64_t length);
  /// Reads each extent into consecutive positions of `out`.
  void read_gather(QueuePairId qpair, std::size_t port, std::span<const Extent> extents, MutableByteSpan out);
  void write_stream(QueuePairId qpair, std::size_t port, std::uint64_t vaddr, ByteSpan bytes);

  std::vector<ChannelCounters> counters() const;
  void reset_counters();
  std::size_t mapped_pages() const;
  std::size_t live_tables() const;
  std::uint64_t live_bytes() const;
  /// Allocated frame indices, per channel.
  std::vector<std::set<std::uint32_t>> allocated_frames() const;
  std::vector<PageTableEntry> page_table() const;

  ChannelGate& read_gate(std::uint32_t channel) { return *read_gates_[channel]; }

 private:
  struct Channel {
    std::byte* base = nullptr;
    std::size_t bytes = 0;
    std::set<std::uint32_t> free_frames;
    std::atomic<std::uint64_t> read_requests{0}, read_bytes{0}, write_requests{0}, write_bytes{0};
  };

  const PageTableEntry& entry_for(std::uint64_t vaddr) const;
  void check_access(QueuePairId qpair, std::uint64_t vaddr, std::uint64_t length) const;
  void transfer(std::size_t port, std::uint64_t vaddr, MutableByteSpan buf, Direction dir);
  void copy_request(const ChannelRequest& rq, std::uint32_t frame, std::byte* virt_page_buf_base,
                    std::uint64_t virt_lo, std::uint64_t virt_hi, Direction dir);

  MemoryConfig cfg_;
  std::size_t ports_;
  std::uint64_t stripes_per_page_;
  std::uint64_t frame_bytes_;
  std::uint64_t frames_per_channel_;
  std::vector<std::unique_ptr<Channel>> channels_;
  std::vector<std::unique_ptr<ChannelGate>> read_gates_;
  std::vector<std::unique_ptr<ChannelGate>> write_gates_;

  mutable std::shared_mutex table_mu_;
  std::map<std::uint64_t, PageTableEntry> pages_;  // keyed by vpage
  std::map<std::uint64_t, TableHandle> tables_;    // keyed by base_vaddr
  std::uint64_t next_vpage_ = 1;
};

}  // namespace farview::mem
