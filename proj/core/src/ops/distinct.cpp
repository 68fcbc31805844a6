#include "farview/ops/distinct.hpp"

namespace farview::ops {

DistinctOperator::DistinctOperator(const Schema& schema, ColumnMask key, DistinctConfig cfg, Sink emit, Sink overflow)
    : schema_(schema),
      key_(schema, key),
      cfg_(std::move(cfg)),
      emit_(std::move(emit)),
      overflow_(std::move(overflow)),
      tables_(cfg_.cuckoo, key_.bytes() ? key_.bytes() : 1),
      cache_(cfg_.cache_depth, key_.bytes() ? key_.bytes() : 1),
      scratch_(key_.bytes()),
      fifo_(cfg_.table_latency) {
  if (key == 0) fail(ErrorCode::kRequest, "distinct needs at least one key column");
}

void DistinctOperator::push(const std::byte* tuple) {
  ++stats_.input;
  key_.extract(tuple, scratch_.data());
  if (cache_.touch(scratch_)) {
    ++stats_.cache_hits;
    return;
  }
  if (tables_.lookup(scratch_)) {
    ++stats_.table_hits;
    cache_.push(scratch_, 0);
    return;
  }
  cache_.push(scratch_, 0);
  if (fifo_.empty()) {
    fifo_.emplace_back(tuple, tuple + schema_.tuple_bytes());
    fifo_count_ = 1;
    commit_oldest();
    fifo_.clear();
    return;
  }
  if (fifo_count_ == fifo_.size()) commit_oldest();
  fifo_[(fifo_head_ + fifo_count_) % fifo_.size()].assign(tuple, tuple + schema_.tuple_bytes());
  ++fifo_count_;
}

void DistinctOperator::commit_oldest() {
  const Bytes& t = fifo_[fifo_head_];
  Bytes key(key_.bytes());
  key_.extract(t.data(), key.data());
  switch (tables_.insert(key, 0).outcome) {
    case CuckooTableSet::Outcome::kInserted:
      ++stats_.emitted;
      emit_(t.data());
      break;
    case CuckooTableSet::Outcome::kPresent:
      ++stats_.late_duplicates;
      break;
    case CuckooTableSet::Outcome::kOverflow:
      ++stats_.overflowed;
      overflow_(t.data());
      break;
  }
  fifo_head_ = (fifo_head_ + 1) % fifo_.size();
  --fifo_count_;
}

void DistinctOperator::finish() {
  while (fifo_count_ > 0) commit_oldest();
}

DistinctResult distinct_stream(const std::vector<AnnotatedTuple>& tuples, ColumnMask key, const DistinctConfig& cfg) {
  DistinctResult r;
  if (tuples.empty()) return r;
  const Schema& schema = *tuples.front().schema;
  const std::size_t tb = schema.tuple_bytes();
  DistinctOperator op(
      schema, key, cfg, [&](const std::byte* t) { r.main.insert(r.main.end(), t, t + tb); },
      [&](const std::byte* t) { r.overflow.insert(r.overflow.end(), t, t + tb); });
  for (const auto& t : tuples) op.push(t.bytes.data());
  op.finish();
  r.stats = op.stats();
  return r;
}

}  // namespace farview::ops
