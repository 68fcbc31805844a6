#pragma once

#include <cstdint>
#include <vector>

#include "farview/schema.hpp"

namespace farview::ops {

/// Per-request column flags, copied verbatim onto every tuple.
struct Annotations {
  ColumnMask proj = 0;
  ColumnMask sel = 0;
  ColumnMask group = 0;
};

/// A parsed tuple: a view over one tuple's bytes plus its annotations.
struct AnnotatedTuple {
  ByteSpan bytes;
  const Schema* schema = nullptr;
  Annotations flags;

  ByteSpan column(std::size_t c) const { return bytes.subspan(schema->offset(c), schema->width(c)); }
};

/// Splits a raw row stream into annotated tuples. Throws Error(kParse) on a
/// trailing partial tuple. The tuples view `raw`.
std::vector<AnnotatedTuple> parse_and_project(ByteSpan raw, const Schema& schema, Annotations flags);

/// Inverse of parse_and_project for the full row.
Bytes serialize_tuples(const std::vector<AnnotatedTuple>& tuples);

/// Appends the projected columns of `tuple` (ascending column order).
void append_projected(Bytes& out, const std::byte* tuple, const Schema& schema, ColumnMask proj);

/// Concatenates the bytes of a column set, ascending column order.
class KeyExtractor {
 public:
  KeyExtractor() = default;
  KeyExtractor(const Schema& schema, ColumnMask columns);

  std::uint32_t bytes() const { return bytes_; }
  void extract(const std::byte* tuple, std::byte* out) const;

 private:
  std::vector<std::pair<std::uint32_t, std::uint32_t>> runs_;  // (offset, width), adjacent columns merged
  std::uint32_t bytes_ = 0;
};

/// A contiguous run of tuples flowing through a pipeline, with a selection
/// vector of the rows still alive.
struct TupleBatch {
  const Schema* schema = nullptr;
  Bytes data;
  std::vector<std::uint32_t> sel;
  std::uint64_t stream_offset = 0;  // byte offset of data[0] from the table base

  std::size_t rows() const { return schema ? data.size() / schema->tuple_bytes() : 0; }
  const std::byte* row(std::size_t i) const { return data.data() + i * schema->tuple_bytes(); }
  void select_all();
};

}  // namespace farview::ops
