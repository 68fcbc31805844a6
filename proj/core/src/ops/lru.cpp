#include "farview/ops/lru.hpp"

#include <cstring>

namespace farview::ops {

LruShiftRegister::LruShiftRegister(std::size_t depth, std::size_t key_bytes)
    : depth_(depth), key_bytes_(key_bytes), keys_(depth * key_bytes), payloads_(depth) {
  if (depth_ == 0) fail(ErrorCode::kConfig, "LRU depth must be >= 1");
  if (key_bytes_ == 0) fail(ErrorCode::kArgument, "LRU keys need at least one byte");
}

long LruShiftRegister::find(ByteSpan key) const {
  if (key.size() != key_bytes_) fail(ErrorCode::kArgument, "key width mismatch");
  for (std::size_t i = 0; i < size_; ++i)
    if (std::memcmp(keys_.data() + i * key_bytes_, key.data(), key_bytes_) == 0) return static_cast<long>(i);
  return -1;
}

void LruShiftRegister::move_to_front(std::size_t i) {
  if (i == 0) return;
  Bytes tmp(keys_.begin() + i * key_bytes_, keys_.begin() + (i + 1) * key_bytes_);
  const std::uint32_t p = payloads_[i];
  std::memmove(keys_.data() + key_bytes_, keys_.data(), i * key_bytes_);
  std::memmove(payloads_.data() + 1, payloads_.data(), i * sizeof(std::uint32_t));
  std::memcpy(keys_.data(), tmp.data(), key_bytes_);
  payloads_[0] = p;
}

std::optional<std::uint32_t> LruShiftRegister::touch(ByteSpan key) {
  const long i = find(key);
  if (i < 0) return std::nullopt;
  move_to_front(static_cast<std::size_t>(i));
  return payloads_[0];
}

void LruShiftRegister::push(ByteSpan key, std::uint32_t payload) {
  const long i = find(key);
  std::size_t from;
  if (i >= 0) {
    from = static_cast<std::size_t>(i);
  } else {
    if (size_ < depth_) ++size_;
    from = size_ - 1;  // the oldest cell is overwritten when full
  }
  std::memmove(keys_.data() + key_bytes_, keys_.data(), from * key_bytes_);
  std::memmove(payloads_.data() + 1, payloads_.data(), from * sizeof(std::uint32_t));
  std::memcpy(keys_.data(), key.data(), key_bytes_);
  payloads_[0] = payload;
}

bool LruShiftRegister::access(ByteSpan key, std::uint32_t payload) {
  if (touch(key)) return true;
  push(key, payload);
  return false;
}

std::vector<Bytes> LruShiftRegister::contents() const {
  std::vector<Bytes> out;
  for (std::size_t i = 0; i < size_; ++i)
    out.emplace_back(keys_.begin() + i * key_bytes_, keys_.begin() + (i + 1) * key_bytes_);
  return out;
}

}  // namespace farview::ops
