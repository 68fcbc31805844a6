#pragma once

#include <cstdint>
#include <functional>
#include <variant>
#include <vector>

#include "farview/ops/cuckoo.hpp"
#include "farview/ops/lru.hpp"
#include "farview/ops/predicate.hpp"

namespace farview::ops {

enum class AggFn : std::uint8_t { kCount = 0, kMin = 1, kMax = 2, kSum = 3, kAvg = 4 };

struct Measure {
  std::uint32_t column = 0;
  AggFn fn = AggFn::kCount;
  ValueType type = ValueType::kInt;

  bool operator==(const Measure&) const = default;
};

struct AggregateSpec {
  ColumnMask key_columns = 0;
  std::vector<Measure> measures;

  void validate(const Schema& schema) const;
  bool operator==(const AggregateSpec&) const = default;
};

/// Partial-aggregate row: key bytes, then 8 bytes per measure (16 for AVG:
/// sum then count), then a u64 whose bit i marks a saturated SUM/AVG of
/// measure i. Integer sums saturate at the 64-bit bounds.
struct GroupRowLayout {
  std::uint32_t key_bytes = 0;
  std::vector<std::uint32_t> measure_offset;
  std::uint32_t status_offset = 0;
  std::uint32_t row_bytes = 0;

  static GroupRowLayout of(const AggregateSpec& spec, const Schema& schema);
};

/// Writes the partial row of a single tuple into `row`.
void init_group_row(const GroupRowLayout& layout, const AggregateSpec& spec, const Schema& schema,
                    const KeyExtractor& key, const std::byte* tuple, std::byte* row);
/// Folds the partial row `src` into `dst` (same key).
void merge_group_row(const GroupRowLayout& layout, const AggregateSpec& spec, std::byte* dst, const std::byte* src);

using AggValue = std::variant<std::int64_t, std::uint64_t, double>;

struct FinalGroup {
  Bytes key;
  std::vector<AggValue> values;  // AVG as binary64 sum / count
  std::uint64_t saturated = 0;

  bool operator==(const FinalGroup&) const = default;
};

FinalGroup finalize_group_row(const GroupRowLayout& layout, const AggregateSpec& spec, const std::byte* row);

struct GroupByConfig {
  CuckooConfig cuckoo;
  std::size_t cache_depth = 8;
};

/// Blocking GROUP BY. Groups live in a row store addressed by the cuckoo
/// payload; the LRU cache maps recent keys to the same rows, so updates
/// through either path land in one place. New groups join an insertion
/// queue that fixes the output order. Tuples whose key cannot be placed are
/// forwarded to the overflow sink as singleton partial rows.
class GroupByOperator {
 public:
  using RowSink = std::function<void(const std::byte* row)>;

  GroupByOperator(const Schema& schema, AggregateSpec spec, GroupByConfig cfg, RowSink overflow);

  void push(const std::byte* tuple);
  /// Emits one row per group in first-occurrence order.
  void finish(const RowSink& emit);

  const GroupRowLayout& layout() const { return layout_; }
  std::size_t groups() const { return rows_.size() / layout_.row_bytes; }
  std::uint64_t overflowed() const { return overflowed_; }

 private:
  const Schema& schema_;
  AggregateSpec spec_;
  GroupRowLayout layout_;
  KeyExtractor key_;
  RowSink overflow_;
  CuckooTableSet tables_;
  LruShiftRegister cache_;
  Bytes rows_;  // insertion queue: row i belongs to the i-th new group
  Bytes scratch_key_, scratch_row_;
  std::uint64_t overflowed_ = 0;
};

struct GroupByResult {
  GroupRowLayout layout;
  Bytes rows;
  Bytes overflow;
};

GroupByResult group_by_stream(const std::vector<AnnotatedTuple>& tuples, const AggregateSpec& spec,
                              const GroupByConfig& cfg = {});

}  // namespace farview::ops
