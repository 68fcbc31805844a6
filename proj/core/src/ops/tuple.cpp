#include "farview/ops/tuple.hpp"

#include <cstring>
#include <numeric>

namespace farview::ops {

std::vector<AnnotatedTuple> parse_and_project(ByteSpan raw, const Schema& schema, Annotations flags) {
  const std::size_t tb = schema.tuple_bytes();
  if (raw.size() % tb != 0) fail(ErrorCode::kParse, "stream ends with a partial tuple");
  std::vector<AnnotatedTuple> out;
  out.reserve(raw.size() / tb);
  for (std::size_t at = 0; at < raw.size(); at += tb) out.push_back(AnnotatedTuple{raw.subspan(at, tb), &schema, flags});
  return out;
}

Bytes serialize_tuples(const std::vector<AnnotatedTuple>& tuples) {
  Bytes out;
  for (const auto& t : tuples) out.insert(out.end(), t.bytes.begin(), t.bytes.end());
  return out;
}

void append_projected(Bytes& out, const std::byte* tuple, const Schema& schema, ColumnMask proj) {
  for_each_column(proj, [&](std::size_t c) {
    const std::byte* col = tuple + schema.offset(c);
    out.insert(out.end(), col, col + schema.width(c));
  });
}

KeyExtractor::KeyExtractor(const Schema& schema, ColumnMask columns) {
  schema.check_mask(columns, "key columns");
  for_each_column(columns, [&](std::size_t c) {
    const std::uint32_t off = schema.offset(c);
    const std::uint32_t w = schema.width(c);
    if (!runs_.empty() && runs_.back().first + runs_.back().second == off)
      runs_.back().second += w;
    else
      runs_.emplace_back(off, w);
    bytes_ += w;
  });
}

void KeyExtractor::extract(const std::byte* tuple, std::byte* out) const {
  for (auto [off, w] : runs_) {
    std::memcpy(out, tuple + off, w);
    out += w;
  }
}

void TupleBatch::select_all() {
  sel.resize(rows());
  std::iota(sel.begin(), sel.end(), 0u);
}

}  // namespace farview::ops
