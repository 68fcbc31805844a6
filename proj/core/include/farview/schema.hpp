#pragma once

#include <cstdint>
#include <vector>

#include "farview/common.hpp"

namespace farview {

/// Row layout of a table: fixed-width columns stored back to back.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<std::uint32_t> column_bytes);

  static Schema uniform(std::size_t columns, std::uint32_t width);

  std::size_t columns() const { return widths_.size(); }
  std::uint32_t tuple_bytes() const { return tuple_bytes_; }
  std::uint32_t width(std::size_t col) const { return widths_[col]; }
  std::uint32_t offset(std::size_t col) const { return offsets_[col]; }
  const std::vector<std::uint32_t>& column_bytes() const { return widths_; }

  ColumnMask all_columns() const;
  /// Throws Error(kArgument) when `mask` names a column the schema lacks.
  void check_mask(ColumnMask mask, const char* what) const;
  std::uint32_t projected_bytes(ColumnMask mask) const;

  /// Wire form: u16 column count, then u32 width per column.
  Bytes serialize() const;
  static Schema deserialize(ByteSpan bytes);

  bool operator==(const Schema&) const = default;

 private:
  std::vector<std::uint32_t> widths_;
  std::vector<std::uint32_t> offsets_;
  std::uint32_t tuple_bytes_ = 0;
};

/// Calls fn(column) for each set bit of `mask`, lowest column first.
template <typename Fn>
inline void for_each_column(ColumnMask mask, Fn&& fn) {
  while (mask != 0) {
    const int col = std::countr_zero(mask);
    fn(static_cast<std::size_t>(col));
    mask &= mask - 1;
  }
}

}  // namespace farview
