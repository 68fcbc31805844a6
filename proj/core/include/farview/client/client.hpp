#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "farview/query/result.hpp"
#include "farview/wire/endpoint.hpp"

namespace farview::client {

/// A table as the client's catalog knows it.
struct FTable {
  std::string name;
  Schema schema;
  std::uint64_t size = 0;
  std::uint64_t base_vaddr = 0;
  bool allocated = false;

  std::uint64_t rows() const { return schema.tuple_bytes() ? size / schema.tuple_bytes() : 0; }
};

struct QueryStats {
  std::uint64_t bytes_on_wire = 0;  // valid bytes received for this call
  std::uint64_t packets = 0;
  std::uint64_t server_rows_emitted = 0;
  std::uint64_t overflow_entries = 0;
  std::uint64_t wall_us = 0;
};

struct QueryResult {
  Query query;
  ResultShape shape;
  Bytes rows;  // decrypted, overflow merged
  bool overflow_merged = false;
  QueryStats stats;

  std::size_t row_count() const { return shape.row_bytes ? rows.size() / shape.row_bytes : 0; }
  std::span<const std::byte> row(std::size_t i) const {
    return std::span<const std::byte>(rows).subspan(i * shape.row_bytes, shape.row_bytes);
  }
  /// One byte vector per row.
  std::vector<Bytes> unpack() const;
  /// Finalized groups (group_by only), in result order.
  std::vector<ops::FinalGroup> groups() const;
};

/// A connection to a memory node bound to one dynamic region.
class QPair {
 public:
  QPair() = default;
  ~QPair();
  QPair(QPair&&) noexcept;
  QPair& operator=(QPair&&) noexcept;

  /// Connects and performs the OPEN_CONN handshake. Throws Error with the
  /// server's code on refusal (kResourceExhausted when regions run out).
  static QPair open(const wire::NodeAddress& node);

  void close();
  bool is_open() const { return ep_ != nullptr; }

  wire::QueuePairId id() const { return qpair_; }
  std::uint32_t region_id() const { return region_; }
  const wire::NodeAddress& node() const { return node_; }
  wire::CreditState credits() const;
  const wire::EndpointStats& wire_stats() const;

  void alloc_table(FTable& ft);
  void free_table(FTable& ft);

  /// Plain reads and writes through the pipeline bypass. Offsets are relative
  /// to the table base; a length of nullopt reads to the end of the table.
  Bytes read(const FTable& ft, std::uint64_t offset = 0, std::optional<std::uint64_t> length = std::nullopt);
  void write(const FTable& ft, ByteSpan bytes, std::uint64_t offset = 0);

  QueryResult far_view(const FTable& ft, const Query& q);
  QueryResult far_view(const FTable& ft, std::span<const std::uint64_t> params, ByteSpan payload = {});

  /// SELECT proj WHERE every column in `sel` satisfies `cmp constant`
  /// (binary64 compare).
  QueryResult select(const FTable& ft, ColumnMask proj, ColumnMask sel, ops::Comparator cmp, double constant);

  /// Pipeline the region was last loaded with, as seen by this connection.
  std::optional<PipelineId> loaded_pipeline() const { return loaded_; }
  std::uint64_t pipeline_loads() const { return loads_; }

 private:
  wire::Verb call(wire::Verb v);
  void require_open() const;
  QueryResult run(const FTable& ft, const Query& q, const EncodedQuery& enc);

  std::unique_ptr<wire::Endpoint> ep_;
  wire::NodeAddress node_;
  wire::QueuePairId qpair_ = 0;
  std::uint32_t region_ = 0;
  std::optional<PipelineId> loaded_;
  std::uint64_t loads_ = 0;
};

// Function-style interface.
QPair open_connection(const wire::NodeAddress& node);
void close_connection(QPair& qp);
void alloc_table_mem(QPair& qp, FTable& ft);
void free_table_mem(QPair& qp, FTable& ft);
Bytes table_read(QPair& qp, const FTable& ft);
void table_write(QPair& qp, const FTable& ft, ByteSpan bytes);
QueryResult far_view(QPair& qp, const FTable& ft, std::span<const std::uint64_t> params, ByteSpan payload = {});
QueryResult select(QPair& qp, const FTable& ft, ColumnMask proj, ColumnMask sel, ops::Comparator cmp,
                   double constant);

/// Restores exact distinct / group-by semantics from the main rows and the
/// overflow entries.
Bytes dedup_overflow(const ResultShape& shape, const Query& q, ByteSpan main, ByteSpan overflow);

}  // namespace farview::client
