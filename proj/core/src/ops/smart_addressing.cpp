#include "farview/ops/smart_addressing.hpp"

#include <algorithm>
#include <set>

namespace farview::ops {

AccessPlan plan_smart_addressing(const Schema& schema, ColumnMask needed, const CostModel& cost) {
  if (needed == 0) fail(ErrorCode::kArgument, "smart addressing needs at least one column");
  schema.check_mask(needed, "projection");
  std::set<std::uint32_t> words;
  for_each_column(needed, [&](std::size_t c) {
    const std::uint32_t lo = schema.offset(c) / kChannelWord;
    const std::uint32_t hi = (schema.offset(c) + schema.width(c) - 1) / kChannelWord;
    for (std::uint32_t w = lo; w <= hi; ++w) words.insert(w);
  });
  AccessPlan plan;
  for (std::uint32_t w : words) {
    const auto off = static_cast<std::uint32_t>(w * kChannelWord);
    const std::uint32_t len = std::min<std::uint32_t>(kChannelWord, schema.tuple_bytes() - off);
    if (!plan.requests.empty() && plan.requests.back().offset + plan.requests.back().length == off)
      plan.requests.back().length += len;
    else
      plan.requests.push_back(WordRequest{off, len});
    plan.fetched_bytes += len;
  }
  plan.smart_cost = std::uint64_t{plan.requests.size()} * cost.request_cost + plan.fetched_bytes;
  plan.full_cost = schema.tuple_bytes();
  plan.mode = plan.smart_cost < plan.full_cost ? AccessMode::kSmart : AccessMode::kFullScan;
  return plan;
}

}  // namespace farview::ops
