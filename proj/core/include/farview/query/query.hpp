#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "farview/ops/aes.hpp"
#include "farview/ops/group_by.hpp"
#include "farview/ops/predicate.hpp"

namespace farview {

enum class PipelineId : std::uint16_t {
  kSelect = 1,
  kDistinct = 2,
  kGroupBy = 3,
  kRegex = 4,
  kDecryptSelectEncrypt = 5,
  kEncryptRead = 6,
};

const char* pipeline_name(PipelineId id);

enum class Addressing : std::uint8_t { kAuto = 0, kFullScan = 1, kSmart = 2 };

/// A FARVIEW request in structured form.
///
/// Parameter words (u64, little-endian on the wire):
///   w0       bits 0-15 pipeline id, 16-17 addressing, 18 vectorize,
///            19 execute on the server CPU
///   select   w1 proj, w2 sel mask, w3 bits 0-3 combiner then 8 bits per
///            term in ascending column order (low nibble comparator, high
///            nibble value type), w4.. one constant per term
///   distinct w1 proj, w2 key (subset of proj)
///   group_by w1 key, w2.. per measure: bits 0-7 column, 8-11 fn, 12-15 type
///   regex    w1 proj, w2 pattern length, w3 string column; pattern bytes
///            in the payload
///   decrypt_select_encrypt  the select words, then 4 decrypt words, then
///            4 encrypt words
///   encrypt_read  w1 proj, then 4 encrypt words
/// Crypto words: key[0..8], key[8..16], nonce[0..8], nonce[8..12] |
/// counter << 32, each little-endian.
struct Query {
  PipelineId pipeline = PipelineId::kSelect;
  Addressing addressing = Addressing::kAuto;
  bool vectorize = false;
  bool server_cpu = false;

  ColumnMask proj = 0;
  ops::SelectionPredicate predicate;
  ColumnMask key = 0;
  std::vector<ops::Measure> measures;
  std::uint32_t string_column = 0;
  std::string pattern;
  std::optional<ops::CryptoParams> decrypt;
  std::optional<ops::CryptoParams> encrypt;

  static Query select(ColumnMask proj, ops::SelectionPredicate predicate = {});
  static Query distinct(ColumnMask proj, ColumnMask key);
  static Query group_by(ColumnMask key, std::vector<ops::Measure> measures);
  static Query regex(ColumnMask proj, std::uint32_t string_column, std::string pattern);
  static Query decrypt_select_encrypt(ColumnMask proj, ops::SelectionPredicate predicate, ops::CryptoParams decrypt,
                                      ops::CryptoParams encrypt);
  static Query encrypt_read(ColumnMask proj, ops::CryptoParams encrypt);

  ColumnMask sel_mask() const { return predicate.columns(); }
  /// Every column the pipeline has to look at.
  ColumnMask needed_columns() const;
  ops::AggregateSpec aggregate() const { return {key, measures}; }

  bool operator==(const Query&) const = default;
};

struct EncodedQuery {
  std::vector<std::uint64_t> params;
  Bytes payload;
};

/// Throws Error(kRequest) for a query that cannot be expressed in params.
EncodedQuery encode_query(const Query& q);
/// Throws Error(kUnknownPipeline) or Error(kRequest).
Query decode_query(std::span<const std::uint64_t> params, ByteSpan payload);
/// Checks the query against a table schema. Throws Error(kRequest).
void validate_query(const Query& q, const Schema& schema);

/// Reads the u16 length-prefixed string stored in a column.
std::string_view string_cell(ByteSpan column);
/// Writes `s` into a string column of width w (needs s.size() + 2 <= w).
void put_string_cell(MutableByteSpan column, std::string_view s);

/// Shape of the rows a query returns.
struct ResultShape {
  std::uint32_t row_bytes = 0;
  bool grouped = false;
  ops::GroupRowLayout groups;  // when grouped
  Schema row_schema;           // projected columns (ungrouped only)
  ColumnMask row_key = 0;      // distinct key, as a row_schema mask
};

ResultShape result_shape(const Query& q, const Schema& schema);

/// Projected sub-schema and a mask translated into its column numbering.
Schema project_schema(const Schema& schema, ColumnMask proj);
ColumnMask remap_mask(ColumnMask mask, ColumnMask proj);

}  // namespace farview
