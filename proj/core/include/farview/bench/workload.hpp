#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "farview/query/result.hpp"

namespace farview::bench {

enum class QueryKind {
  kSelect,
  kDistinct,
  kGroupBy,
  kRegex,
  kEncryptRead,
  kDecryptSelect,
  kMultiClientDistinct,
  kProjectionCrossover,
};

const char* query_kind_name(QueryKind k);
/// Throws Error(kArgument) on an unknown name.
QueryKind parse_query_kind(const std::string& name);

struct WorkloadSpec {
  QueryKind query = QueryKind::kSelect;
  std::uint64_t rows = 1 << 14;
  std::uint32_t tuple_bytes = 64;
  double selectivity = 1.0;  // select-type queries; regex match share
  std::uint32_t groups = 256;
  std::uint32_t string_len = 32;  // regex string column width
  std::uint32_t clients = 1;
  std::uint32_t runs = 5;
  std::uint64_t seed = 1;

  /// Throws Error(kArgument).
  void validate() const;
};

/// A generated table, the query to run over it and the expected answer.
struct Workload {
  WorkloadSpec spec;
  Schema schema;
  Bytes table;      // bytes as stored on the node (ciphertext for decrypt-select)
  Bytes plaintext;  // logical table contents
  Query query;
  ResultShape shape;
  Bytes expected;  // canonical rows, see canonical_rows()
  std::uint64_t expected_rows = 0;
};

/// Deterministic in spec.seed. Selective queries pass exactly
/// ceil(rows * selectivity) rows; group_by and distinct produce exactly
/// spec.groups keys.
Workload gen_table(const WorkloadSpec& spec);

/// Rows in a path-independent order: sorted for distinct and group_by,
/// unchanged otherwise.
Bytes canonical_rows(const ResultShape& shape, const Query& q, ByteSpan rows);

/// Local-CPU path: evaluates the query over a local copy of the table and
/// returns plaintext result rows.
Bytes lcpu_execute(ByteSpan table, const Schema& schema, const Query& q);

/// Seeded crypto material for the encrypting workloads.
ops::CryptoParams crypto_params(std::uint64_t seed, std::uint64_t salt);

}  // namespace farview::bench
