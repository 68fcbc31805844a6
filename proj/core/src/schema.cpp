#include "farview/schema.hpp"

namespace farview {

Schema::Schema(std::vector<std::uint32_t> column_bytes) : widths_(std::move(column_bytes)) {
  if (widths_.empty()) fail(ErrorCode::kArgument, "schema needs at least one column");
  if (widths_.size() > kMaxColumns) fail(ErrorCode::kArgument, "schema supports at most 64 columns");
  offsets_.reserve(widths_.size());
  std::uint64_t at = 0;
  for (auto w : widths_) {
    if (w == 0) fail(ErrorCode::kArgument, "column width must be positive");
    offsets_.push_back(static_cast<std::uint32_t>(at));
    at += w;
  }
  if (at > 0xFFFFu) fail(ErrorCode::kArgument, "tuple wider than 65535 bytes");
  tuple_bytes_ = static_cast<std::uint32_t>(at);
}

Schema Schema::uniform(std::size_t columns, std::uint32_t width) {
  return Schema(std::vector<std::uint32_t>(columns, width));
}

ColumnMask Schema::all_columns() const {
  return widths_.size() == 64 ? ~ColumnMask{0} : ((ColumnMask{1} << widths_.size()) - 1);
}

void Schema::check_mask(ColumnMask mask, const char* what) const {
  if ((mask & ~all_columns()) != 0)
    fail(ErrorCode::kArgument, std::string(what) + " names a column outside the schema");
}

std::uint32_t Schema::projected_bytes(ColumnMask mask) const {
  std::uint32_t total = 0;
  for_each_column(mask & all_columns(), [&](std::size_t c) { total += widths_[c]; });
  return total;
}

Bytes Schema::serialize() const {
  Bytes out;
  append_le<std::uint16_t>(out, static_cast<std::uint16_t>(widths_.size()));
  for (auto w : widths_) append_le<std::uint32_t>(out, w);
  return out;
}

Schema Schema::deserialize(ByteSpan bytes) {
  if (bytes.size() < 2) fail(ErrorCode::kProtocol, "schema blob too short");
  const std::size_t n = load_le<std::uint16_t>(bytes.data());
  if (bytes.size() != 2 + 4 * n) fail(ErrorCode::kProtocol, "schema blob length mismatch");
  std::vector<std::uint32_t> widths(n);
  for (std::size_t i = 0; i < n; ++i) widths[i] = load_le<std::uint32_t>(bytes.data() + 2 + 4 * i);
  return Schema(std::move(widths));
}

}  // namespace farview
