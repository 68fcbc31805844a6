#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "farview/common.hpp"

namespace farview::ops {

struct CuckooConfig {
  std::uint32_t tables = 4;
  std::uint32_t slots_per_table = 1u << 16;  // power of two
  std::uint32_t max_evictions = 32;
  /// One odd multiplier per table; empty selects built-in defaults.
  std::vector<std::uint64_t> seeds;

  void validate() const;
};

/// Folds arbitrary key bytes to 64 bits. Keys of at most 8 bytes map
/// injectively (little-endian, zero-extended).
std::uint64_t fold_key(ByteSpan key);

/// K multiply-shift hashed tables of fixed-width keys with a u32 payload.
/// Inserts follow a bounded displacement chain; a chain that runs out is
/// rolled back, leaving the tables exactly as before the call.
class CuckooTableSet {
 public:
  enum class Outcome : std::uint8_t { kInserted, kPresent, kOverflow };
  struct InsertResult {
    Outcome outcome;
    std::uint32_t payload;  // existing payload when kPresent
  };

  CuckooTableSet(CuckooConfig cfg, std::size_t key_bytes);

  const CuckooConfig& config() const { return cfg_; }
  std::size_t key_bytes() const { return key_bytes_; }
  std::size_t size() const { return size_; }
  std::uint64_t seed(std::size_t table) const { return seeds_[table]; }
  std::size_t slot_of(std::size_t table, ByteSpan key) const;

  std::optional<std::uint32_t> lookup(ByteSpan key) const;
  InsertResult insert(ByteSpan key, std::uint32_t payload);
  /// Number of slots holding `key` across all tables (full scan).
  std::size_t residency(ByteSpan key) const;
  /// Visits every occupied slot as fn(key, payload).
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& tab : tables_)
      for (std::size_t s = 0; s < tab.used.size(); ++s)
        if (tab.used[s]) fn(ByteSpan(tab.keys).subspan(s * key_bytes_, key_bytes_), tab.payloads[s]);
  }

  std::uint64_t displacements() const { return displacements_; }

 private:
  struct Table {
    std::vector<std::byte> keys;
    std::vector<std::uint32_t> payloads;
    std::vector<std::uint8_t> used;
  };

  bool key_at(std::size_t t, std::size_t s, ByteSpan key) const;
  void put(std::size_t t, std::size_t s, const std::byte* key, std::uint32_t payload);

  CuckooConfig cfg_;
  std::size_t key_bytes_;
  int shift_;
  std::vector<std::uint64_t> seeds_;
  std::vector<Table> tables_;
  std::size_t size_ = 0;
  std::uint64_t displacements_ = 0;
};

}  // namespace farview::ops
