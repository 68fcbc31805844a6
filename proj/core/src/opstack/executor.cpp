#include "farview/opstack/executor.hpp"

#include <cstring>

namespace farview::opstack {

void check_query_for_spec(const PipelineSpec& spec, const Query& q, const Schema& schema) {
  if (static_cast<std::uint16_t>(q.pipeline) != spec.pipeline_id)
    fail(ErrorCode::kRequest, "query targets pipeline " + std::to_string(static_cast<int>(q.pipeline)) +
                                  " but " + spec.name + " is loaded");
  validate_query(q, schema);
  if (spec.has(StageKind::kDecrypt) != q.decrypt.has_value())
    fail(ErrorCode::kRequest, "decrypt parameters do not match the pipeline");
  if (spec.has(StageKind::kEncrypt) != q.encrypt.has_value())
    fail(ErrorCode::kRequest, "encrypt parameters do not match the pipeline");
  if (spec.has(StageKind::kRegex)) (void)ops::Regex::compile(q.pattern);
}

namespace {

ResultShape checked_shape(const PipelineSpec& spec, const Query& q, const Schema& schema) {
  check_query_for_spec(spec, q, schema);
  return result_shape(q, schema);
}

}  // namespace

PipelineExecutor::PipelineExecutor(const PipelineSpec& spec, const Query& q, const Schema& schema,
                                   const ExecutionConfig& cfg, std::uint32_t channels, ops::ByteSink& out)
    : spec_(spec),
      q_(q),
      schema_(schema),
      cfg_(cfg),
      shape_(checked_shape(spec, q, schema)),
      packer_(q.encrypt ? static_cast<ops::ByteSink&>(
                              *(encrypt_ = std::make_unique<ops::CtrEncryptSink>(*q.encrypt, out)))
                        : out) {
  if (cfg_.queue_depth == 0) fail(ErrorCode::kConfig, "queue_depth must be >= 1");
  plan_ = ops::plan_smart_addressing(schema, q.needed_columns(), cfg_.cost);
  switch (q.addressing) {
    case Addressing::kAuto: break;
    case Addressing::kFullScan: plan_.mode = ops::AccessMode::kFullScan; break;
    case Addressing::kSmart: plan_.mode = ops::AccessMode::kSmart; break;
  }
  if (q.decrypt) decrypt_.emplace(*q.decrypt);
  if (spec.has(StageKind::kSelect)) {
    pred_.emplace(q.predicate, schema);
    lanes_ = q.vectorize ? ops::compute_lanes(channels, schema.tuple_bytes()) : spec.lanes;
  }
  if (spec.has(StageKind::kRegex)) regex_.emplace(q.pattern, cfg_.regex_engines);
  if (spec.has(StageKind::kDistinct)) {
    distinct_ = std::make_unique<ops::DistinctOperator>(
        schema, q.key, cfg_.distinct, [this](const std::byte* t) { emit_row(t); },
        [this](const std::byte* t) {
          ops::append_projected(overflow_, t, schema_, q_.proj);
          ++stats_.overflow_entries;
        });
  }
  if (spec.has(StageKind::kGroupBy)) {
    group_by_ = std::make_unique<ops::GroupByOperator>(schema, q.aggregate(), cfg_.group_by, [this](const std::byte* r) {
      overflow_.insert(overflow_.end(), r, r + shape_.row_bytes);
      ++stats_.overflow_entries;
    });
  }
  stats_.access = plan_.mode;
  stats_.lanes = lanes_;
}

void PipelineExecutor::emit_row(const std::byte* tuple) {
  ++stats_.rows_emitted;
  packer_.add_projected(tuple, schema_, q_.proj);
}

void PipelineExecutor::push(ops::TupleBatch& batch) {
  stats_.rows_scanned += batch.rows();
  if (batch.sel.empty()) batch.select_all();
  for (StageKind s : spec_.stages) {
    switch (s) {
      case StageKind::kDecrypt:
        decrypt_->apply(batch.data, batch.stream_offset);
        break;
      case StageKind::kSelect:
        ops::select_batch(batch, *pred_, lanes_);
        break;
      case StageKind::kRegex: {
        const std::uint32_t engines = regex_->engines();
        const std::uint32_t off = schema_.offset(q_.string_column), w = schema_.width(q_.string_column);
        std::vector<std::vector<std::uint32_t>> items(engines);
        std::vector<std::vector<bool>> valid(engines);
        for (std::size_t i = 0; i < batch.sel.size(); ++i) items[i % engines].push_back(batch.sel[i]);
        for (std::uint32_t e = 0; e < engines; ++e)
          for (auto row : items[e])
            valid[e].push_back(regex_->match(e, string_cell(ByteSpan(batch.row(row) + off, w))));
        batch.sel = ops::merge_lanes(items, valid);
        break;
      }
      case StageKind::kDistinct:
        for (auto row : batch.sel) distinct_->push(batch.row(row));
        return;
      case StageKind::kGroupBy:
        for (auto row : batch.sel) group_by_->push(batch.row(row));
        return;
      case StageKind::kPack:
        for (auto row : batch.sel) emit_row(batch.row(row));
        return;
      default:
        break;
    }
  }
}

ExecutionResult PipelineExecutor::finish() {
  if (distinct_) {
    distinct_->finish();
    stats_.late_duplicates = distinct_->stats().late_duplicates;
  }
  if (group_by_) {
    group_by_->finish([this](const std::byte* row) {
      ++stats_.rows_emitted;
      packer_.add(ByteSpan(row, shape_.row_bytes));
    });
  }
  packer_.finish();
  stats_.main_bytes = packer_.valid_bytes();
  return ExecutionResult{shape_.row_bytes, std::move(overflow_), stats_};
}

namespace {

void check_range(const mem::TableHandle& t, std::uint64_t vaddr, std::uint64_t length) {
  const std::uint32_t tb = t.schema.tuple_bytes();
  if (vaddr < t.base_vaddr || (vaddr - t.base_vaddr) % tb != 0)
    fail(ErrorCode::kRequest, "scan must start on a tuple boundary");
  if (length % tb != 0) fail(ErrorCode::kRequest, "scan length must be whole tuples");
  if (vaddr - t.base_vaddr + length > t.size) fail(ErrorCode::kBounds, "scan escapes the table");
}

}  // namespace

ExecutionResult run_pipeline(mem::MemoryStack& memory, std::size_t port, wire::QueuePairId qpair,
                             const PipelineSpec& spec, const Query& q, std::uint64_t vaddr, std::uint64_t length,
                             ops::ByteSink& out, const ExecutionConfig& cfg, const std::atomic<bool>* abort) {
  const mem::TableHandle table = memory.table_for(qpair, vaddr);
  const Schema& schema = table.schema;
  PipelineExecutor exec(spec, q, schema, cfg, memory.config().channels, out);
  check_range(table, vaddr, length);
  const std::uint32_t tb = schema.tuple_bytes();
  const std::uint64_t batch_bytes = std::uint64_t{cfg.queue_depth} * tb;
  auto check_abort = [&] {
    if (abort && abort->load(std::memory_order_relaxed)) fail(ErrorCode::kAborted, "request aborted");
  };

  if (exec.access_plan().mode == ops::AccessMode::kFullScan) {
    memory.read_stream(
        qpair, port, vaddr, length,
        [&](std::uint64_t at, ByteSpan chunk) {
          check_abort();
          ops::TupleBatch batch;
          batch.schema = &schema;
          batch.data.assign(chunk.begin(), chunk.end());
          batch.stream_offset = at - table.base_vaddr;
          exec.push(batch);
        },
        batch_bytes);
  } else {
    const auto& reqs = exec.access_plan().requests;
    const std::uint32_t fetched = exec.access_plan().fetched_bytes;
    std::vector<mem::Extent> extents;
    Bytes gathered;
    for (std::uint64_t done = 0; done < length;) {
      check_abort();
      const std::uint64_t n = std::min(batch_bytes, length - done) / tb;
      extents.clear();
      for (std::uint64_t r = 0; r < n; ++r)
        for (const auto& w : reqs) extents.push_back(mem::Extent{vaddr + done + r * tb + w.offset, w.length});
      gathered.resize(n * fetched);
      memory.read_gather(qpair, port, extents, gathered);
      ops::TupleBatch batch;
      batch.schema = &schema;
      batch.data.assign(n * tb, std::byte{0});
      batch.stream_offset = vaddr + done - table.base_vaddr;
      const std::byte* src = gathered.data();
      for (std::uint64_t r = 0; r < n; ++r)
        for (const auto& w : reqs) {
          std::memcpy(batch.data.data() + r * tb + w.offset, src, w.length);
          src += w.length;
        }
      exec.push(batch);
      done += n * tb;
    }
  }
  check_abort();
  return exec.finish();
}

ExecutionResult run_pipeline_on_bytes(const PipelineSpec& spec, const Query& q, const Schema& schema, ByteSpan table,
                                      ops::ByteSink& out, const ExecutionConfig& cfg, std::uint32_t channels) {
  PipelineExecutor exec(spec, q, schema, cfg, channels, out);
  const std::uint32_t tb = schema.tuple_bytes();
  if (table.size() % tb != 0) fail(ErrorCode::kParse, "table ends with a partial tuple");
  const std::size_t batch_bytes = std::size_t{cfg.queue_depth} * tb;
  for (std::size_t at = 0; at < table.size(); at += batch_bytes) {
    ops::TupleBatch batch;
    batch.schema = &schema;
    const auto chunk = table.subspan(at, std::min(batch_bytes, table.size() - at));
    batch.data.assign(chunk.begin(), chunk.end());
    batch.stream_offset = at;
    exec.push(batch);
  }
  return exec.finish();
}

}  // namespace farview::opstack
