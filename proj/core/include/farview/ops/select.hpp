#pragma once

#include <cstdint>
#include <vector>

#include "farview/ops/predicate.hpp"

namespace farview::ops {

/// lanes = max(1, floor(channels * 64 / tuple_bytes)).
std::uint32_t compute_lanes(std::uint32_t channels, std::uint32_t tuple_bytes);

std::vector<AnnotatedTuple> select_stream(const std::vector<AnnotatedTuple>& tuples, const SelectionPredicate& p);

/// Deals tuples round-robin to `lanes` selection units and re-merges their
/// outputs round-robin using per-slot valid bits, so the order is the input
/// order.
std::vector<AnnotatedTuple> vectorized_select(const std::vector<AnnotatedTuple>& tuples, const SelectionPredicate& p,
                                              std::uint32_t lanes);

/// Batch form used by the pipelines: filters `batch.sel` in place.
void select_batch(TupleBatch& batch, const CompiledPredicate& pred, std::uint32_t lanes);

/// Order-restoring round-robin merge: slot i of the output sequence is
/// lane i % L, position i / L. Items whose valid bit is clear are dropped.
template <typename T>
std::vector<T> merge_lanes(const std::vector<std::vector<T>>& lane_items,
                           const std::vector<std::vector<bool>>& lane_valid) {
  std::vector<T> out;
  const std::size_t lanes = lane_items.size();
  if (lanes == 0) return out;
  std::size_t total = 0;
  for (const auto& l : lane_items) total += l.size();
  for (std::size_t slot = 0; slot < total; ++slot) {
    const std::size_t lane = slot % lanes;
    const std::size_t pos = slot / lanes;
    if (lane_valid[lane][pos]) out.push_back(lane_items[lane][pos]);
  }
  return out;
}

}  // namespace farview::ops
