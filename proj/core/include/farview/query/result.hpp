#pragma once

#include "farview/query/query.hpp"

namespace farview {

/// Result bytes as produced by an executor: the main row stream and the
/// overflow entries (distinct rows or partial group rows).
struct RawResult {
  Bytes main;
  Bytes overflow;
};

/// Response trailer: u32 entry count, u32 entry width, entries. Empty when
/// there are no entries.
Bytes encode_trailer(std::uint32_t row_bytes, ByteSpan overflow_rows);
/// Returns the overflow rows; checks the width against `row_bytes`.
Bytes decode_trailer(ByteSpan trailer, std::uint32_t row_bytes);

/// Folds overflow entries into the main rows: distinct keeps the first row
/// per key, group-by merges partial aggregates. Keys new to the main stream
/// are appended in overflow order.
Bytes merge_overflow(const ResultShape& shape, const Query& q, ByteSpan main, ByteSpan overflow);

/// Reference evaluation on the host CPU with hash maps and linear scans.
/// Output bytes match the offloaded pipeline's main stream, including
/// encryption of the response. `stream_offset` is the byte offset of
/// `table` from the table base (positions the decrypt keystream).
RawResult execute_cpu(const Query& q, const Schema& schema, ByteSpan table, std::uint64_t stream_offset = 0);

}  // namespace farview
