#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "farview/ops/cuckoo.hpp"
#include "farview/ops/lru.hpp"
#include "farview/ops/tuple.hpp"

namespace farview::ops {

struct DistinctConfig {
  CuckooConfig cuckoo;
  std::size_t cache_depth = 8;
  /// Tuples between a table lookup and the matching table update.
  std::size_t table_latency = 8;
};

struct DistinctStats {
  std::uint64_t input = 0;
  std::uint64_t emitted = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t table_hits = 0;
  /// Duplicates that passed both lookups inside the update window and were
  /// caught only when committing to the tables.
  std::uint64_t late_duplicates = 0;
  std::uint64_t overflowed = 0;
};

/// Streaming DISTINCT. A tuple whose key misses both the LRU cache and the
/// cuckoo tables becomes a candidate; candidates commit to the tables
/// `table_latency` tuples later and are emitted only if the commit inserts
/// a new key. Keys that cannot be placed go to the overflow sink.
class DistinctOperator {
 public:
  using Sink = std::function<void(const std::byte* tuple)>;

  DistinctOperator(const Schema& schema, ColumnMask key, DistinctConfig cfg, Sink emit, Sink overflow);

  void push(const std::byte* tuple);
  void finish();

  const DistinctStats& stats() const { return stats_; }
  const CuckooTableSet& tables() const { return tables_; }
  const LruShiftRegister& cache() const { return cache_; }

 private:
  void commit_oldest();

  const Schema& schema_;
  KeyExtractor key_;
  DistinctConfig cfg_;
  Sink emit_, overflow_;
  CuckooTableSet tables_;
  LruShiftRegister cache_;
  Bytes scratch_;
  std::vector<Bytes> fifo_;  // ring of pending candidate tuples
  std::size_t fifo_head_ = 0, fifo_count_ = 0;
  DistinctStats stats_;
};

struct DistinctResult {
  Bytes main;      // full tuples, emission order
  Bytes overflow;  // full tuples
  DistinctStats stats;
};

DistinctResult distinct_stream(const std::vector<AnnotatedTuple>& tuples, ColumnMask key,
                               const DistinctConfig& cfg = {});

}  // namespace farview::ops
