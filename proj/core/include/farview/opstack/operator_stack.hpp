#pragma once

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <vector>

#include "farview/opstack/executor.hpp"
#include "farview/wire/protocol.hpp"

namespace farview::opstack {

enum class RegionState : std::uint8_t { kIdle, kBusy };

struct RegionInfo {
  std::uint32_t region_id = 0;
  std::optional<wire::QueuePairId> bound_qpair;
  std::optional<std::uint16_t> loaded;
  RegionState state = RegionState::kIdle;
  std::uint64_t requests = 0;
  std::uint64_t loads = 0;
};

/// The node's fixed set of dynamic regions. Each bound queue pair owns one
/// region; FARVIEW requests run through the region's loaded pipeline, plain
/// reads and writes go straight to the memory stack. Region i uses memory
/// arbitration port i.
class OperatorStack {
 public:
  OperatorStack(mem::MemoryStack& memory, PipelineRegistry registry, std::uint32_t regions,
                ExecutionConfig exec = {});

  std::uint32_t regions() const { return static_cast<std::uint32_t>(regions_.size()); }
  const PipelineRegistry& registry() const { return registry_; }
  mem::MemoryStack& memory() { return memory_; }
  const ExecutionConfig& exec_config() const { return exec_; }

  /// Lowest free region. Throws Error(kResourceExhausted) when all are bound.
  std::uint32_t bind_region(wire::QueuePairId qpair);
  /// Unbinds and clears the region; an in-flight request is aborted first.
  /// No-op for an unbound queue pair.
  void release_region(wire::QueuePairId qpair);
  std::optional<std::uint32_t> region_of(wire::QueuePairId qpair) const;
  RegionInfo region(std::uint32_t region_id) const;

  /// Throws kUnknownPipeline, kRegionBusy, or kArgument (unbound region).
  void load_pipeline(std::uint32_t region_id, std::uint16_t pipeline_id, std::vector<std::uint64_t> default_params = {});

  /// Runs a FARVIEW verb on the region's loaded pipeline.
  ExecutionResult execute_request(std::uint32_t region_id, const wire::Verb& farview, ops::ByteSink& out);

  /// Bypass path: plain reads and writes never enter a region.
  void read_bypass(wire::QueuePairId qpair, std::uint64_t vaddr, std::uint64_t length, ops::ByteSink& out);
  void write_bypass(wire::QueuePairId qpair, std::uint64_t vaddr, ByteSpan bytes);

  /// Flags the region's in-flight request for abort.
  void abort(std::uint32_t region_id);
  /// Aborts every in-flight request.
  void abort_all();

  /// Highest number of simultaneous requests ever observed on one region.
  std::uint32_t max_region_concurrency() const { return max_concurrency_.load(); }

 private:
  struct Region {
    std::optional<wire::QueuePairId> bound;
    std::optional<PipelineSpec> loaded;
    RegionState state = RegionState::kIdle;
    std::atomic<bool> abort{false};
    std::atomic<std::uint32_t> active{0};
    std::uint64_t requests = 0;
    std::uint64_t loads = 0;
  };

  Region& checked(std::uint32_t region_id);
  std::size_t port_for(wire::QueuePairId qpair) const;

  mem::MemoryStack& memory_;
  PipelineRegistry registry_;
  ExecutionConfig exec_;
  mutable std::mutex mu_;
  std::condition_variable idle_cv_;
  std::vector<std::unique_ptr<Region>> regions_;
  std::atomic<std::uint32_t> max_concurrency_{0};
};

}  // namespace farview::opstack
