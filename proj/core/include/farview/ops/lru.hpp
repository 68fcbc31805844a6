#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "farview/common.hpp"

namespace farview::ops {

/// A D-entry shift register of fixed-width keys, most recent at position 0,
/// with true LRU replacement. Each cell carries a u32 payload.
class LruShiftRegister {
 public:
  LruShiftRegister(std::size_t depth, std::size_t key_bytes);

  std::size_t depth() const { return depth_; }
  std::size_t size() const { return size_; }

  /// Payload of `key` when cached; the key moves to the front.
  std::optional<std::uint32_t> touch(ByteSpan key);
  /// Inserts or refreshes `key` at the front, shifting older cells back and
  /// dropping the oldest when full.
  void push(ByteSpan key, std::uint32_t payload);
  /// touch() falling back to push(); returns whether it was a hit.
  bool access(ByteSpan key, std::uint32_t payload = 0);

  bool contains(ByteSpan key) const { return find(key) >= 0; }
  /// Cells in recency order.
  std::vector<Bytes> contents() const;

 private:
  long find(ByteSpan key) const;
  void move_to_front(std::size_t i);

  std::size_t depth_;
  std::size_t key_bytes_;
  std::size_t size_ = 0;
  Bytes keys_;
  std::vector<std::uint32_t> payloads_;
};

}  // namespace farview::ops
