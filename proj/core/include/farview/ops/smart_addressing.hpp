#pragma once

#include <cstdint>
#include <vector>

#include "farview/schema.hpp"

namespace farview::ops {

struct CostModel {
  /// Byte-equivalent overhead of issuing one memory request.
  std::uint32_t request_cost = 256;
};

/// Tuple-relative byte range read by one request.
struct WordRequest {
  std::uint32_t offset = 0;
  std::uint32_t length = 0;

  bool operator==(const WordRequest&) const = default;
};

enum class AccessMode : std::uint8_t { kFullScan, kSmart };

struct AccessPlan {
  AccessMode mode = AccessMode::kFullScan;
  std::vector<WordRequest> requests;  // the smart plan, even when not chosen
  std::uint32_t fetched_bytes = 0;
  std::uint64_t smart_cost = 0;
  std::uint64_t full_cost = 0;
};

/// Covers the `needed` columns with 64-byte tuple-relative words, merging
/// adjacent words into one request, and picks smart addressing iff
/// requests * request_cost + fetched_bytes < tuple_bytes.
AccessPlan plan_smart_addressing(const Schema& schema, ColumnMask needed, const CostModel& cost = {});

}  // namespace farview::ops
