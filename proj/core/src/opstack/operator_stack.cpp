#include "farview/opstack/operator_stack.hpp"

#include <chrono>
#include <thread>

namespace farview::opstack {

OperatorStack::OperatorStack(mem::MemoryStack& memory, PipelineRegistry registry, std::uint32_t regions,
                             ExecutionConfig exec)
    : memory_(memory), registry_(std::move(registry)), exec_(std::move(exec)) {
  if (regions == 0) fail(ErrorCode::kConfig, "need at least one dynamic region");
  for (std::uint32_t i = 0; i < regions; ++i) regions_.push_back(std::make_unique<Region>());
}

OperatorStack::Region& OperatorStack::checked(std::uint32_t region_id) {
  if (region_id >= regions_.size()) fail(ErrorCode::kArgument, "no such region");
  return *regions_[region_id];
}

std::uint32_t OperatorStack::bind_region(wire::QueuePairId qpair) {
  std::lock_guard lk(mu_);
  for (std::uint32_t i = 0; i < regions_.size(); ++i)
    if (regions_[i]->bound == qpair) fail(ErrorCode::kArgument, "queue pair already bound");
  for (std::uint32_t i = 0; i < regions_.size(); ++i) {
    auto& r = *regions_[i];
    if (!r.bound) {
      r.bound = qpair;
      r.loaded.reset();
      r.abort = false;
      return i;
    }
  }
  fail(ErrorCode::kResourceExhausted, "all " + std::to_string(regions_.size()) + " dynamic regions are bound");
}

void OperatorStack::release_region(wire::QueuePairId qpair) {
  std::unique_lock lk(mu_);
  for (auto& rp : regions_) {
    auto& r = *rp;
    if (r.bound != qpair) continue;
    r.abort = true;
    idle_cv_.wait(lk, [&] { return r.state == RegionState::kIdle; });
    r.bound.reset();
    r.loaded.reset();
    r.abort = false;
    return;
  }
}

std::optional<std::uint32_t> OperatorStack::region_of(wire::QueuePairId qpair) const {
  std::lock_guard lk(mu_);
  for (std::uint32_t i = 0; i < regions_.size(); ++i)
    if (regions_[i]->bound == qpair) return i;
  return std::nullopt;
}

RegionInfo OperatorStack::region(std::uint32_t region_id) const {
  std::lock_guard lk(mu_);
  if (region_id >= regions_.size()) fail(ErrorCode::kArgument, "no such region");
  const auto& r = *regions_[region_id];
  RegionInfo info;
  info.region_id = region_id;
  info.bound_qpair = r.bound;
  if (r.loaded) info.loaded = r.loaded->pipeline_id;
  info.state = r.state;
  info.requests = r.requests;
  info.loads = r.loads;
  return info;
}

void OperatorStack::load_pipeline(std::uint32_t region_id, std::uint16_t pipeline_id,
                                  std::vector<std::uint64_t> default_params) {
  PipelineSpec spec = registry_.make(pipeline_id);
  if (!default_params.empty()) spec.default_params = std::move(default_params);
  {
    std::lock_guard lk(mu_);
    auto& r = checked(region_id);
    if (!r.bound) fail(ErrorCode::kArgument, "region is not bound");
    if (r.state != RegionState::kIdle) fail(ErrorCode::kRegionBusy, "region is busy");
    r.state = RegionState::kBusy;
  }
  if (registry_.reconfig_delay_ms > 0)
    std::this_thread::sleep_for(std::chrono::milliseconds(registry_.reconfig_delay_ms));
  {
    std::lock_guard lk(mu_);
    auto& r = *regions_[region_id];
    r.loaded = std::move(spec);
    ++r.loads;
    r.state = RegionState::kIdle;
  }
  idle_cv_.notify_all();
}

ExecutionResult OperatorStack::execute_request(std::uint32_t region_id, const wire::Verb& farview, ops::ByteSink& out) {
  if (farview.kind != wire::VerbKind::kFarview) fail(ErrorCode::kArgument, "not a FARVIEW verb");
  const Query q = decode_query(farview.params, farview.payload);
  Region* rp;
  PipelineSpec spec;
  wire::QueuePairId qpair;
  {
    std::lock_guard lk(mu_);
    rp = &checked(region_id);
    if (!rp->bound) fail(ErrorCode::kArgument, "region is not bound");
    if (rp->state != RegionState::kIdle) fail(ErrorCode::kRegionBusy, "region is busy");
    if (!rp->loaded) fail(ErrorCode::kRequest, "no pipeline loaded");
    if (rp->abort) fail(ErrorCode::kAborted, "region is being released");
    rp->state = RegionState::kBusy;
    spec = *rp->loaded;
    qpair = *rp->bound;
  }
  const std::uint32_t now = ++rp->active;
  std::uint32_t seen = max_concurrency_.load();
  while (now > seen && !max_concurrency_.compare_exchange_weak(seen, now)) {
  }
  auto done = [&] {
    --rp->active;
    {
      std::lock_guard lk(mu_);
      rp->state = RegionState::kIdle;
      ++rp->requests;
      if (rp->bound) rp->abort = false;
    }
    idle_cv_.notify_all();
  };
  try {
    ExecutionResult r = run_pipeline(memory_, region_id, qpair, spec, q, farview.vaddr, farview.length, out, exec_,
                                     &rp->abort);
    done();
    return r;
  } catch (...) {
    done();
    throw;
  }
}

std::size_t OperatorStack::port_for(wire::QueuePairId qpair) const {
  const auto r = region_of(qpair);
  return r ? *r : 0;
}

void OperatorStack::read_bypass(wire::QueuePairId qpair, std::uint64_t vaddr, std::uint64_t length,
                                ops::ByteSink& out) {
  memory_.read_stream(qpair, port_for(qpair), vaddr, length, [&](std::uint64_t, ByteSpan chunk) { out.write(chunk); });
  out.finish();
}

void OperatorStack::write_bypass(wire::QueuePairId qpair, std::uint64_t vaddr, ByteSpan bytes) {
  memory_.write_stream(qpair, port_for(qpair), vaddr, bytes);
}

void OperatorStack::abort(std::uint32_t region_id) {
  std::lock_guard lk(mu_);
  auto& r = checked(region_id);
  if (r.state == RegionState::kBusy) r.abort = true;
}

void OperatorStack::abort_all() {
  std::lock_guard lk(mu_);
  for (auto& r : regions_)
    if (r->state == RegionState::kBusy) r->abort = true;
}

}  // namespace farview::opstack
