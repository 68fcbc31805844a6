#include "farview/memory/arbiter.hpp"

namespace farview::mem {

void ChannelGate::acquire(std::size_t port) {
  std::unique_lock lk(mu_);
  ++waiting_[port];
  if (!holder_) pick_locked();
  cv_.wait(lk, [&] { return holder_ == port; });
}

void ChannelGate::release(std::size_t port) {
  std::lock_guard lk(mu_);
  if (holder_ != port) return;
  holder_.reset();
  pick_locked();
  cv_.notify_all();
}

void ChannelGate::pick_locked() {
  auto next = rr_.next([&](std::size_t p) { return waiting_[p] > 0; });
  if (!next) return;
  if (recording_) {
    std::uint64_t mask = 0;
    for (std::size_t p = 0; p < waiting_.size() && p < 64; ++p)
      if (waiting_[p] > 0) mask |= std::uint64_t{1} << p;
    log_.push_back(GrantRecord{static_cast<std::uint32_t>(*next), mask});
  }
  --waiting_[*next];
  holder_ = *next;
  ++grants_;
}

void ChannelGate::set_recording(bool on) {
  std::lock_guard lk(mu_);
  recording_ = on;
  if (on) log_.clear();
}

std::vector<GrantRecord> ChannelGate::grant_log() const {
  std::lock_guard lk(mu_);
  return log_;
}

std::uint64_t ChannelGate::grants() const {
  std::lock_guard lk(mu_);
  return grants_;
}

}  // namespace farview::mem
