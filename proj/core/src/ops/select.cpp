#include "farview/ops/select.hpp"

#include <algorithm>

namespace farview::ops {

std::uint32_t compute_lanes(std::uint32_t channels, std::uint32_t tuple_bytes) {
  if (tuple_bytes == 0) fail(ErrorCode::kArgument, "tuple_bytes must be positive");
  return std::max<std::uint32_t>(1, channels * static_cast<std::uint32_t>(kChannelWord) / tuple_bytes);
}

std::vector<AnnotatedTuple> select_stream(const std::vector<AnnotatedTuple>& tuples, const SelectionPredicate& p) {
  std::vector<AnnotatedTuple> out;
  for (const auto& t : tuples)
    if (eval_predicate(t, p)) out.push_back(t);
  return out;
}

std::vector<AnnotatedTuple> vectorized_select(const std::vector<AnnotatedTuple>& tuples, const SelectionPredicate& p,
                                              std::uint32_t lanes) {
  if (lanes == 0) fail(ErrorCode::kArgument, "lanes must be >= 1");
  std::vector<std::vector<AnnotatedTuple>> items(lanes);
  std::vector<std::vector<bool>> valid(lanes);
  for (std::size_t i = 0; i < tuples.size(); ++i) items[i % lanes].push_back(tuples[i]);
  for (std::uint32_t l = 0; l < lanes; ++l)
    for (const auto& t : items[l]) valid[l].push_back(eval_predicate(t, p));
  return merge_lanes(items, valid);
}

void select_batch(TupleBatch& batch, const CompiledPredicate& pred, std::uint32_t lanes) {
  if (pred.empty()) return;
  if (lanes <= 1) {
    std::erase_if(batch.sel, [&](std::uint32_t i) { return !pred(batch.row(i)); });
    return;
  }
  std::vector<std::vector<std::uint32_t>> items(lanes);
  std::vector<std::vector<bool>> valid(lanes);
  for (std::size_t i = 0; i < batch.sel.size(); ++i) items[i % lanes].push_back(batch.sel[i]);
  for (std::uint32_t l = 0; l < lanes; ++l) {
    valid[l].reserve(items[l].size());
    for (auto row : items[l]) valid[l].push_back(pred(batch.row(row)));
  }
  batch.sel = merge_lanes(items, valid);
}

}  // namespace farview::ops
