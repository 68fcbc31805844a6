#pragma once

#include <atomic>
#include <memory>
#include <optional>

#include "farview/memory/memory_stack.hpp"
#include "farview/ops/distinct.hpp"
#include "farview/ops/group_by.hpp"
#include "farview/ops/pack.hpp"
#include "farview/ops/regex.hpp"
#include "farview/ops/select.hpp"
#include "farview/ops/smart_addressing.hpp"
#include "farview/opstack/pipeline.hpp"
#include "farview/query/query.hpp"

namespace farview::opstack {

struct ExecutionConfig {
  /// Tuples per batch handed between stages.
  std::uint32_t queue_depth = 1024;
  std::uint32_t regex_engines = 4;
  ops::DistinctConfig distinct;
  ops::GroupByConfig group_by;
  ops::CostModel cost;
};

struct ExecutionStats {
  std::uint64_t rows_scanned = 0;
  std::uint64_t rows_emitted = 0;
  std::uint64_t main_bytes = 0;
  std::uint64_t overflow_entries = 0;
  std::uint64_t late_duplicates = 0;
  ops::AccessMode access = ops::AccessMode::kFullScan;
  std::uint32_t lanes = 1;
};

struct ExecutionResult {
  std::uint32_t row_bytes = 0;
  Bytes overflow;
  ExecutionStats stats;
};

/// One request's instance of a loaded pipeline: the stage chain the spec
/// lists, configured from the query. Batches are pushed in stream order;
/// packed output goes to `out` (encrypted first when the spec says so).
class PipelineExecutor {
 public:
  PipelineExecutor(const PipelineSpec& spec, const Query& q, const Schema& schema, const ExecutionConfig& cfg,
                   std::uint32_t channels, ops::ByteSink& out);

  void push(ops::TupleBatch& batch);
  ExecutionResult finish();

  /// The addressing the first stage uses (chosen at plan time).
  const ops::AccessPlan& access_plan() const { return plan_; }

 private:
  void emit_row(const std::byte* tuple);

  const PipelineSpec& spec_;
  const Query& q_;
  const Schema& schema_;
  ExecutionConfig cfg_;
  ResultShape shape_;
  ops::AccessPlan plan_;
  std::uint32_t lanes_ = 1;
  std::optional<ops::CtrCipher> decrypt_;
  std::optional<ops::CompiledPredicate> pred_;
  std::optional<ops::RegexBank> regex_;
  std::unique_ptr<ops::CtrEncryptSink> encrypt_;
  ops::Packer packer_;
  std::unique_ptr<ops::DistinctOperator> distinct_;
  std::unique_ptr<ops::GroupByOperator> group_by_;
  Bytes overflow_;
  ExecutionStats stats_;
};

/// Streams [vaddr, vaddr+length) of a table through a pipeline. The query is
/// validated against the spec and schema before any memory is read.
/// `abort` is polled between batches; a set flag ends the request with
/// Error(kAborted).
ExecutionResult run_pipeline(mem::MemoryStack& memory, std::size_t port, wire::QueuePairId qpair,
                             const PipelineSpec& spec, const Query& q, std::uint64_t vaddr, std::uint64_t length,
                             ops::ByteSink& out, const ExecutionConfig& cfg,
                             const std::atomic<bool>* abort = nullptr);

/// Same pipeline over a table held in host memory (full scan only).
ExecutionResult run_pipeline_on_bytes(const PipelineSpec& spec, const Query& q, const Schema& schema, ByteSpan table,
                                      ops::ByteSink& out, const ExecutionConfig& cfg, std::uint32_t channels = 2);

/// Throws Error(kRequest) when the query cannot run on the spec.
void check_query_for_spec(const PipelineSpec& spec, const Query& q, const Schema& schema);

}  // namespace farview::opstack
