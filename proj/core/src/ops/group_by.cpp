#include "farview/ops/group_by.hpp"

#include <cstring>
#include <limits>

namespace farview::ops {

void AggregateSpec::validate(const Schema& schema) const {
  if (key_columns == 0) fail(ErrorCode::kRequest, "group by needs at least one key column");
  schema.check_mask(key_columns, "group key");
  if (measures.empty()) fail(ErrorCode::kRequest, "group by needs at least one measure");
  if (measures.size() > 63) fail(ErrorCode::kRequest, "at most 63 measures");
  for (const auto& m : measures) {
    if (m.column >= schema.columns()) fail(ErrorCode::kRequest, "measure column outside schema");
    if (static_cast<unsigned>(m.fn) > static_cast<unsigned>(AggFn::kAvg)) fail(ErrorCode::kRequest, "unknown aggregate");
    if (static_cast<unsigned>(m.type) > static_cast<unsigned>(ValueType::kFloat))
      fail(ErrorCode::kRequest, "unknown value type");
    const auto w = schema.width(m.column);
    if (m.fn != AggFn::kCount &&
        (m.type == ValueType::kFloat ? (w != 4 && w != 8) : (w != 1 && w != 2 && w != 4 && w != 8)))
      fail(ErrorCode::kRequest, "measure column width does not fit its value type");
  }
}

GroupRowLayout GroupRowLayout::of(const AggregateSpec& spec, const Schema& schema) {
  GroupRowLayout l;
  l.key_bytes = schema.projected_bytes(spec.key_columns);
  std::uint32_t at = l.key_bytes;
  for (const auto& m : spec.measures) {
    l.measure_offset.push_back(at);
    at += m.fn == AggFn::kAvg ? 16 : 8;
  }
  l.status_offset = at;
  l.row_bytes = at + 8;
  return l;
}

namespace {

std::uint64_t raw_value(const Schema& schema, const Measure& m, const std::byte* tuple) {
  const ByteSpan col(tuple + schema.offset(m.column), schema.width(m.column));
  switch (m.type) {
    case ValueType::kInt: return static_cast<std::uint64_t>(read_int(col));
    case ValueType::kUint: return read_uint(col);
    case ValueType::kFloat: return float_bits(read_float(col));
  }
  return 0;
}

// Adds b into *a under the measure type; returns true on saturation.
bool add_sum(std::byte* a, const std::byte* b, ValueType type) {
  switch (type) {
    case ValueType::kInt: {
      const auto x = load_le<std::int64_t>(a), y = load_le<std::int64_t>(b);
      std::int64_t r;
      if (__builtin_add_overflow(x, y, &r)) {
        store_le(a, y > 0 ? std::numeric_limits<std::int64_t>::max() : std::numeric_limits<std::int64_t>::min());
        return true;
      }
      store_le(a, r);
      return false;
    }
    case ValueType::kUint: {
      const auto x = load_le<std::uint64_t>(a), y = load_le<std::uint64_t>(b);
      std::uint64_t r;
      if (__builtin_add_overflow(x, y, &r)) {
        store_le(a, std::numeric_limits<std::uint64_t>::max());
        return true;
      }
      store_le(a, r);
      return false;
    }
    case ValueType::kFloat:
      store_le(a, load_le<double>(a) + load_le<double>(b));
      return false;
  }
  return false;
}

bool less(const std::byte* a, const std::byte* b, ValueType type) {
  switch (type) {
    case ValueType::kInt: return load_le<std::int64_t>(a) < load_le<std::int64_t>(b);
    case ValueType::kUint: return load_le<std::uint64_t>(a) < load_le<std::uint64_t>(b);
    case ValueType::kFloat: return load_le<double>(a) < load_le<double>(b);
  }
  return false;
}

}  // namespace

void init_group_row(const GroupRowLayout& layout, const AggregateSpec& spec, const Schema& schema,
                    const KeyExtractor& key, const std::byte* tuple, std::byte* row) {
  key.extract(tuple, row);
  for (std::size_t i = 0; i < spec.measures.size(); ++i) {
    const auto& m = spec.measures[i];
    std::byte* slot = row + layout.measure_offset[i];
    if (m.fn == AggFn::kCount) {
      store_le<std::uint64_t>(slot, 1);
      continue;
    }
    store_le(slot, raw_value(schema, m, tuple));
    if (m.fn == AggFn::kAvg) store_le<std::uint64_t>(slot + 8, 1);
  }
  store_le<std::uint64_t>(row + layout.status_offset, 0);
}

void merge_group_row(const GroupRowLayout& layout, const AggregateSpec& spec, std::byte* dst, const std::byte* src) {
  std::uint64_t status = load_le<std::uint64_t>(dst + layout.status_offset) |
                         load_le<std::uint64_t>(src + layout.status_offset);
  for (std::size_t i = 0; i < spec.measures.size(); ++i) {
    const auto& m = spec.measures[i];
    std::byte* d = dst + layout.measure_offset[i];
    const std::byte* s = src + layout.measure_offset[i];
    switch (m.fn) {
      case AggFn::kCount:
        store_le(d, load_le<std::uint64_t>(d) + load_le<std::uint64_t>(s));
        break;
      case AggFn::kMin:
        if (less(s, d, m.type)) std::memcpy(d, s, 8);
        break;
      case AggFn::kMax:
        if (less(d, s, m.type)) std::memcpy(d, s, 8);
        break;
      case AggFn::kSum:
        if (add_sum(d, s, m.type)) status |= std::uint64_t{1} << i;
        break;
      case AggFn::kAvg:
        if (add_sum(d, s, m.type)) status |= std::uint64_t{1} << i;
        store_le(d + 8, load_le<std::uint64_t>(d + 8) + load_le<std::uint64_t>(s + 8));
        break;
    }
  }
  store_le(dst + layout.status_offset, status);
}

FinalGroup finalize_group_row(const GroupRowLayout& layout, const AggregateSpec& spec, const std::byte* row) {
  FinalGroup g;
  g.key.assign(row, row + layout.key_bytes);
  for (std::size_t i = 0; i < spec.measures.size(); ++i) {
    const auto& m = spec.measures[i];
    const std::byte* slot = row + layout.measure_offset[i];
    if (m.fn == AggFn::kCount) {
      g.values.emplace_back(load_le<std::uint64_t>(slot));
      continue;
    }
    if (m.fn == AggFn::kAvg) {
      const double n = static_cast<double>(load_le<std::uint64_t>(slot + 8));
      double sum = 0;
      switch (m.type) {
        case ValueType::kInt: sum = static_cast<double>(load_le<std::int64_t>(slot)); break;
        case ValueType::kUint: sum = static_cast<double>(load_le<std::uint64_t>(slot)); break;
        case ValueType::kFloat: sum = load_le<double>(slot); break;
      }
      g.values.emplace_back(sum / n);
      continue;
    }
    switch (m.type) {
      case ValueType::kInt: g.values.emplace_back(load_le<std::int64_t>(slot)); break;
      case ValueType::kUint: g.values.emplace_back(load_le<std::uint64_t>(slot)); break;
      case ValueType::kFloat: g.values.emplace_back(load_le<double>(slot)); break;
    }
  }
  g.saturated = load_le<std::uint64_t>(row + layout.status_offset);
  return g;
}

GroupByOperator::GroupByOperator(const Schema& schema, AggregateSpec spec, GroupByConfig cfg, RowSink overflow)
    : schema_(schema),
      spec_((spec.validate(schema), std::move(spec))),
      layout_(GroupRowLayout::of(spec_, schema)),
      key_(schema, spec_.key_columns),
      overflow_(std::move(overflow)),
      tables_(cfg.cuckoo, key_.bytes()),
      cache_(cfg.cache_depth, key_.bytes()),
      scratch_key_(key_.bytes()),
      scratch_row_(layout_.row_bytes) {}

void GroupByOperator::push(const std::byte* tuple) {
  key_.extract(tuple, scratch_key_.data());
  init_group_row(layout_, spec_, schema_, key_, tuple, scratch_row_.data());
  std::optional<std::uint32_t> group = cache_.touch(scratch_key_);
  if (!group) {
    group = tables_.lookup(scratch_key_);
    if (group) cache_.push(scratch_key_, *group);
  }
  if (group) {
    merge_group_row(layout_, spec_, rows_.data() + std::size_t{*group} * layout_.row_bytes, scratch_row_.data());
    return;
  }
  const auto next = static_cast<std::uint32_t>(groups());
  if (tables_.insert(scratch_key_, next).outcome == CuckooTableSet::Outcome::kOverflow) {
    ++overflowed_;
    overflow_(scratch_row_.data());
    return;
  }
  rows_.insert(rows_.end(), scratch_row_.begin(), scratch_row_.end());
  cache_.push(scratch_key_, next);
}

void GroupByOperator::finish(const RowSink& emit) {
  for (std::size_t at = 0; at < rows_.size(); at += layout_.row_bytes) emit(rows_.data() + at);
}

GroupByResult group_by_stream(const std::vector<AnnotatedTuple>& tuples, const AggregateSpec& spec,
                              const GroupByConfig& cfg) {
  GroupByResult r;
  if (tuples.empty()) return r;
  const Schema& schema = *tuples.front().schema;
  GroupByOperator op(schema, spec, cfg, [&](const std::byte* row) {
    r.overflow.insert(r.overflow.end(), row, row + r.layout.row_bytes);
  });
  r.layout = op.layout();
  for (const auto& t : tuples) op.push(t.bytes.data());
  op.finish([&](const std::byte* row) { r.rows.insert(r.rows.end(), row, row + r.layout.row_bytes); });
  return r;
}

}  // namespace farview::ops
