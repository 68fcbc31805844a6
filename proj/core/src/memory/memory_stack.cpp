#include "farview/memory/memory_stack.hpp"

#include <sys/mman.h>

#include <algorithm>
#include <cstring>
#include <mutex>

namespace farview::mem {

void MemoryConfig::validate() const {
  if (channels == 0) fail(ErrorCode::kConfig, "channels must be >= 1");
  if (page_size != kPageSize) fail(ErrorCode::kConfig, "page_size is fixed at 2 MiB");
  if (channel_word != kChannelWord) fail(ErrorCode::kConfig, "channel_word is fixed at 64 bytes");
  if (stripe == 0 || page_size % stripe != 0) fail(ErrorCode::kConfig, "stripe must divide the page size");
  if (burst_bytes == 0) fail(ErrorCode::kConfig, "burst_bytes must be positive");
  const std::uint64_t stripes = page_size / stripe;
  const std::uint64_t frame = div_ceil(stripes, channels) * stripe;
  if (channel_capacity < frame) fail(ErrorCode::kConfig, "channel_capacity smaller than one page frame");
}

RequestArbiter::RequestArbiter(std::size_t regions, std::uint32_t channels)
    : per_channel_(channels, RoundRobinArbiter(regions)) {}

std::vector<std::optional<std::pair<std::size_t, ChannelRequest>>> RequestArbiter::arbitrate(
    std::vector<std::deque<ChannelRequest>>& pending) {
  std::vector<std::optional<std::pair<std::size_t, ChannelRequest>>> out(per_channel_.size());
  for (std::uint32_t c = 0; c < per_channel_.size(); ++c) {
    auto wants = [&](std::size_t r) {
      return r < pending.size() &&
             std::any_of(pending[r].begin(), pending[r].end(), [&](const ChannelRequest& q) { return q.channel == c; });
    };
    const auto region = per_channel_[c].next(wants);
    if (!region) continue;
    auto& q = pending[*region];
    auto it = std::find_if(q.begin(), q.end(), [&](const ChannelRequest& rq) { return rq.channel == c; });
    out[c] = std::make_pair(*region, *it);
    q.erase(it);
  }
  return out;
}

MemoryStack::MemoryStack(MemoryConfig cfg, std::size_t ports) : cfg_(cfg), ports_(std::max<std::size_t>(1, ports)) {
  cfg_.validate();
  stripes_per_page_ = cfg_.page_size / cfg_.stripe;
  frame_bytes_ = div_ceil(stripes_per_page_, cfg_.channels) * cfg_.stripe;
  frames_per_channel_ = cfg_.channel_capacity / frame_bytes_;
  for (std::uint32_t c = 0; c < cfg_.channels; ++c) {
    auto ch = std::make_unique<Channel>();
    ch->bytes = frames_per_channel_ * frame_bytes_;
    void* p = ::mmap(nullptr, ch->bytes, PROT_READ | PROT_WRITE, MAP_PRIVATE | MAP_ANONYMOUS | MAP_NORESERVE, -1, 0);
    if (p == MAP_FAILED) fail(ErrorCode::kAllocation, "cannot map channel backing store");
    ch->base = static_cast<std::byte*>(p);
    for (std::uint32_t f = 0; f < frames_per_channel_; ++f) ch->free_frames.insert(f);
    channels_.push_back(std::move(ch));
    read_gates_.push_back(std::make_unique<ChannelGate>(ports_));
    write_gates_.push_back(std::make_unique<ChannelGate>(ports_));
    read_gates_.back()->set_recording(cfg_.record_grants);
  }
}

MemoryStack::~MemoryStack() {
  for (auto& ch : channels_)
    if (ch->base) ::munmap(ch->base, ch->bytes);
}

TableHandle MemoryStack::alloc_table(QueuePairId qpair, std::uint64_t size, const Schema& schema) {
  if (size == 0) fail(ErrorCode::kArgument, "table size must be positive");
  const std::uint64_t pages = div_ceil(size, cfg_.page_size);
  std::unique_lock lk(table_mu_);
  for (auto& ch : channels_)
    if (ch->free_frames.size() < pages) fail(ErrorCode::kAllocation, "out of node memory");

  TableHandle h{qpair, next_vpage_ * cfg_.page_size, size, schema};
  for (std::uint64_t i = 0; i < pages; ++i) {
    PageTableEntry e;
    e.vpage = next_vpage_ + i;
    e.owner_qpairs.insert(qpair);
    e.table_base = h.base_vaddr;
    for (auto& ch : channels_) {
      e.frames.push_back(*ch->free_frames.begin());
      ch->free_frames.erase(ch->free_frames.begin());
    }
    pages_.emplace(e.vpage, std::move(e));
  }
  next_vpage_ += pages;
  tables_.emplace(h.base_vaddr, h);
  return h;
}

void MemoryStack::free_table(QueuePairId qpair, std::uint64_t base_vaddr) {
  std::unique_lock lk(table_mu_);
  auto it = tables_.find(base_vaddr);
  if (it == tables_.end()) fail(ErrorCode::kDoubleFree, "no live table at this address");
  const std::uint64_t first = base_vaddr / cfg_.page_size;
  if (!pages_.at(first).owner_qpairs.contains(qpair)) fail(ErrorCode::kPermission, "queue pair does not own table");
  const std::uint64_t pages = div_ceil(it->second.size, cfg_.page_size);
  for (std::uint64_t vp = first; vp < first + pages; ++vp) {
    auto node = pages_.extract(vp);
    for (std::uint32_t c = 0; c < channels_.size(); ++c) {
      auto& ch = *channels_[c];
      const std::uint32_t f = node.mapped().frames[c];
      std::memset(ch.base + std::uint64_t{f} * frame_bytes_, 0, frame_bytes_);
      ch.free_frames.insert(f);
    }
  }
  tables_.erase(it);
}

void MemoryStack::share_table(QueuePairId owner, std::uint64_t base_vaddr, QueuePairId other) {
  std::unique_lock lk(table_mu_);
  auto it = tables_.find(base_vaddr);
  if (it == tables_.end()) fail(ErrorCode::kTranslationFault, "no live table at this address");
  const std::uint64_t first = base_vaddr / cfg_.page_size;
  if (!pages_.at(first).owner_qpairs.contains(owner)) fail(ErrorCode::kPermission, "queue pair does not own table");
  const std::uint64_t pages = div_ceil(it->second.size, cfg_.page_size);
  for (std::uint64_t vp = first; vp < first + pages; ++vp) pages_.at(vp).owner_qpairs.insert(other);
}

const PageTableEntry& MemoryStack::entry_for(std::uint64_t vaddr) const {
  auto it = pages_.find(vaddr / cfg_.page_size);
  if (it == pages_.end()) fail(ErrorCode::kTranslationFault, "unmapped virtual address " + std::to_string(vaddr));
  return it->second;
}

void MemoryStack::check_access(QueuePairId qpair, std::uint64_t vaddr, std::uint64_t length) const {
  const auto& e = entry_for(vaddr);
  if (!e.owner_qpairs.contains(qpair)) fail(ErrorCode::kPermission, "queue pair may not access this table");
  const auto& t = tables_.at(e.table_base);
  if (vaddr >= t.end() || length > t.end() - vaddr) fail(ErrorCode::kBounds, "access escapes the table");
}

TableHandle MemoryStack::table_for(QueuePairId qpair, std::uint64_t vaddr) const {
  std::shared_lock lk(table_mu_);
  const auto& e = entry_for(vaddr);
  if (!e.owner_qpairs.contains(qpair)) fail(ErrorCode::kPermission, "queue pair may not access this table");
  return tables_.at(e.table_base);
}

std::optional<TableHandle> MemoryStack::find_table(std::uint64_t base_vaddr) const {
  std::shared_lock lk(table_mu_);
  auto it = tables_.find(base_vaddr);
  if (it == tables_.end()) return std::nullopt;
  return it->second;
}

Translation MemoryStack::translate(std::uint64_t vaddr) const {
  std::shared_lock lk(table_mu_);
  const auto& e = entry_for(vaddr);
  const std::uint64_t off = vaddr % cfg_.page_size;
  const std::uint64_t s = off / cfg_.stripe;
  const std::uint32_t c = static_cast<std::uint32_t>(s % cfg_.channels);
  return Translation{c, std::uint64_t{e.frames[c]} * frame_bytes_ + (s / cfg_.channels) * cfg_.stripe + off % cfg_.stripe};
}

namespace {

// Channel-local physical span [lo, hi) within a frame that holds every byte
// of page offsets [a, b) belonging to channel c. Empty when lo >= hi.
std::pair<std::uint64_t, std::uint64_t> channel_span(std::uint64_t a, std::uint64_t b, std::uint64_t stripe,
                                                     std::uint64_t channels, std::uint64_t c) {
  const std::uint64_t first = a / stripe;
  const std::uint64_t last = (b - 1) / stripe;
  std::uint64_t s0 = first + (c + channels - first % channels) % channels;
  if (s0 > last) return {0, 0};
  std::uint64_t s1 = last - (last % channels + channels - c) % channels;
  const std::uint64_t lo = (s0 / channels) * stripe + (s0 == first ? a % stripe : 0);
  const std::uint64_t hi = (s1 / channels) * stripe + (s1 == last ? (b - 1) % stripe + 1 : stripe);
  return {lo, hi};
}

}  // namespace

std::vector<ChannelRequest> MemoryStack::plan_requests(std::uint64_t vaddr, std::uint64_t length,
                                                       Direction dir) const {
  std::shared_lock lk(table_mu_);
  std::vector<ChannelRequest> out;
  std::uint64_t v = vaddr;
  const std::uint64_t end = vaddr + length;
  while (v < end) {
    const auto& e = entry_for(v);
    const std::uint64_t page_base = (v / cfg_.page_size) * cfg_.page_size;
    const std::uint64_t a = v - page_base;
    const std::uint64_t b = std::min(end - page_base, cfg_.page_size);
    for (std::uint32_t c = 0; c < cfg_.channels; ++c) {
      auto [lo, hi] = channel_span(a, b, cfg_.stripe, cfg_.channels, c);
      for (std::uint64_t p = lo; p < hi; p += cfg_.burst_bytes) {
        out.push_back(ChannelRequest{c, std::uint64_t{e.frames[c]} * frame_bytes_ + p,
                                     std::min(cfg_.burst_bytes, hi - p), dir});
      }
    }
    v = page_base + b;
  }
  return out;
}

void MemoryStack::copy_request(const ChannelRequest& rq, std::uint32_t frame, std::byte* buf, std::uint64_t virt_lo,
                               std::uint64_t virt_hi, Direction dir) {
  // buf corresponds to page offset virt_lo; [virt_lo, virt_hi) bounds the copy.
  auto& ch = *channels_[rq.channel];
  const std::uint64_t frame_base = std::uint64_t{frame} * frame_bytes_;
  std::uint64_t p = rq.offset - frame_base;
  const std::uint64_t p_end = p + rq.length;
  while (p < p_end) {
    const std::uint64_t k = p / cfg_.stripe;
    const std::uint64_t intra = p % cfg_.stripe;
    const std::uint64_t page_off = (k * cfg_.channels + rq.channel) * cfg_.stripe + intra;
    const std::uint64_t run = std::min({cfg_.stripe - intra, p_end - p, virt_hi - page_off});
    std::byte* phys = ch.base + frame_base + p;
    std::byte* virt = buf + (page_off - virt_lo);
    if (dir == Direction::kRead)
      std::memcpy(virt, phys, run);
    else
      std::memcpy(phys, virt, run);
    p += run;
  }
}

void MemoryStack::transfer(std::size_t port, std::uint64_t vaddr, MutableByteSpan buf, Direction dir) {
  std::shared_lock lk(table_mu_);
  std::uint64_t v = vaddr;
  const std::uint64_t end = vaddr + buf.size();
  port %= ports_;
  while (v < end) {
    const auto& e = entry_for(v);
    const std::uint64_t page_base = (v / cfg_.page_size) * cfg_.page_size;
    const std::uint64_t a = v - page_base;
    const std::uint64_t b = std::min(end - page_base, cfg_.page_size);
    std::byte* seg = buf.data() + (v - vaddr);
    for (std::uint32_t c = 0; c < cfg_.channels; ++c) {
      auto [lo, hi] = channel_span(a, b, cfg_.stripe, cfg_.channels, c);
      auto& ch = *channels_[c];
      auto& gate = dir == Direction::kRead ? *read_gates_[c] : *write_gates_[c];
      for (std::uint64_t p = lo; p < hi; p += cfg_.burst_bytes) {
        const ChannelRequest rq{c, std::uint64_t{e.frames[c]} * frame_bytes_ + p, std::min(cfg_.burst_bytes, hi - p),
                                dir};
        {
          ChannelGrant grant(gate, port);
          copy_request(rq, e.frames[c], seg, a, b, dir);
        }
        if (dir == Direction::kRead) {
          ch.read_requests.fetch_add(1, std::memory_order_relaxed);
          ch.read_bytes.fetch_add(rq.length, std::memory_order_relaxed);
        } else {
          ch.write_requests.fetch_add(1, std::memory_order_relaxed);
          ch.write_bytes.fetch_add(rq.length, std::memory_order_relaxed);
        }
      }
    }
    v = page_base + b;
  }
}

void MemoryStack::read_stream(QueuePairId qpair, std::size_t port, std::uint64_t vaddr, std::uint64_t length,
                              const ChunkSink& sink, std::uint64_t chunk) {
  {
    std::shared_lock lk(table_mu_);
    check_access(qpair, vaddr, length);
  }
  if (chunk == 0) chunk = 64 * 1024;
  Bytes buf(std::min(chunk, length));
  for (std::uint64_t done = 0; done < length;) {
    const std::uint64_t n = std::min(chunk, length - done);
    MutableByteSpan view(buf.data(), n);
    transfer(port, vaddr + done, view, Direction::kRead);
    sink(vaddr + done, view);
    done += n;
  }
}

Bytes MemoryStack::read(QueuePairId qpair, std::size_t port, std::uint64_t vaddr, std::uint64_t length) {
  Bytes out;
  out.reserve(length);
  read_stream(qpair, port, vaddr, length,
              [&](std::uint64_t, ByteSpan chunk) { out.insert(out.end(), chunk.begin(), chunk.end()); });
  return out;
}

void MemoryStack::read_gather(QueuePairId qpair, std::size_t port, std::span<const Extent> extents,
                              MutableByteSpan out) {
  if (extents.empty()) return;
  std::uint64_t lo = extents.front().vaddr;
  std::uint64_t hi = lo;
  std::uint64_t total = 0;
  for (const auto& e : extents) {
    lo = std::min(lo, e.vaddr);
    hi = std::max(hi, e.vaddr + e.length);
    total += e.length;
  }
  if (total > out.size()) fail(ErrorCode::kArgument, "gather buffer too small");
  {
    std::shared_lock lk(table_mu_);
    check_access(qpair, lo, hi - lo);
  }
  std::size_t at = 0;
  for (const auto& e : extents) {
    transfer(port, e.vaddr, out.subspan(at, e.length), Direction::kRead);
    at += e.length;
  }
}

void MemoryStack::write_stream(QueuePairId qpair, std::size_t port, std::uint64_t vaddr, ByteSpan bytes) {
  if (bytes.empty()) return;
  {
    std::shared_lock lk(table_mu_);
    check_access(qpair, vaddr, bytes.size());
  }
  // transfer() only writes through the span on kWrite; it never mutates it.
  MutableByteSpan view(const_cast<std::byte*>(bytes.data()), bytes.size());
  transfer(port, vaddr, view, Direction::kWrite);
}

std::vector<ChannelCounters> MemoryStack::counters() const {
  std::vector<ChannelCounters> out;
  for (const auto& ch : channels_) {
    out.push_back(ChannelCounters{ch->read_requests.load(), ch->read_bytes.load(), ch->write_requests.load(),
                                  ch->write_bytes.load()});
  }
  return out;
}

void MemoryStack::reset_counters() {
  for (auto& ch : channels_) {
    ch->read_requests = 0;
    ch->read_bytes = 0;
    ch->write_requests = 0;
    ch->write_bytes = 0;
  }
}

std::size_t MemoryStack::mapped_pages() const {
  std::shared_lock lk(table_mu_);
  return pages_.size();
}

std::size_t MemoryStack::live_tables() const {
  std::shared_lock lk(table_mu_);
  return tables_.size();
}

std::uint64_t MemoryStack::live_bytes() const {
  std::shared_lock lk(table_mu_);
  std::uint64_t total = 0;
  for (const auto& [base, t] : tables_) total += t.size;
  return total;
}

std::vector<std::set<std::uint32_t>> MemoryStack::allocated_frames() const {
  std::shared_lock lk(table_mu_);
  std::vector<std::set<std::uint32_t>> out(channels_.size());
  for (const auto& [vp, e] : pages_)
    for (std::size_t c = 0; c < e.frames.size(); ++c) out[c].insert(e.frames[c]);
  return out;
}

std::vector<PageTableEntry> MemoryStack::page_table() const {
  std::shared_lock lk(table_mu_);
  std::vector<PageTableEntry> out;
  for (const auto& [vp, e] : pages_) out.push_back(e);
  return out;
}

}  // namespace farview::mem
