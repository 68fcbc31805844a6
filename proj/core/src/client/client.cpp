#include "farview/client/client.hpp"

#include <chrono>

#include "farview/ops/aes.hpp"

namespace farview::client {

using wire::Verb;
using wire::VerbKind;

namespace {

constexpr std::size_t kDefaultMtu = 1024;
constexpr std::uint32_t kDefaultWindow = 64;
constexpr std::uint64_t kTransferChunk = 4u << 20;

[[noreturn]] void raise_status(const Verb& r) {
  const auto code = static_cast<ErrorCode>(r.status);
  std::string msg(reinterpret_cast<const char*>(r.payload.data()), r.payload.size());
  const std::string prefix = std::string(error_code_name(code)) + ": ";
  if (msg.starts_with(prefix)) msg.erase(0, prefix.size());
  throw Error(code, msg.empty() ? "request failed on the server" : msg);
}

}  // namespace

std::vector<Bytes> QueryResult::unpack() const {
  std::vector<Bytes> out;
  out.reserve(row_count());
  for (std::size_t i = 0; i < row_count(); ++i) {
    auto r = row(i);
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

std::vector<ops::FinalGroup> QueryResult::groups() const {
  if (!shape.grouped) fail(ErrorCode::kArgument, "not a group-by result");
  std::vector<ops::FinalGroup> out;
  out.reserve(row_count());
  const auto spec = query.aggregate();
  for (std::size_t i = 0; i < row_count(); ++i) out.push_back(ops::finalize_group_row(shape.groups, spec, row(i).data()));
  return out;
}

QPair::~QPair() {
  try {
    close();
  } catch (...) {
  }
}

QPair::QPair(QPair&&) noexcept = default;

QPair& QPair::operator=(QPair&& other) noexcept {
  if (this != &other) {
    try {
      close();
    } catch (...) {
    }
    ep_ = std::move(other.ep_);
    node_ = std::move(other.node_);
    qpair_ = other.qpair_;
    region_ = other.region_;
    loaded_ = other.loaded_;
    loads_ = other.loads_;
  }
  return *this;
}

QPair QPair::open(const wire::NodeAddress& node) {
  QPair qp;
  qp.node_ = node;
  qp.ep_ = std::make_unique<wire::Endpoint>(wire::Socket::connect(node.host, node.port), kDefaultMtu, kDefaultWindow);
  Verb v;
  v.kind = VerbKind::kOpenConn;
  const Verb r = qp.call(std::move(v));
  if (r.payload.size() != 12) fail(ErrorCode::kProtocol, "malformed OPEN_CONN response");
  qp.qpair_ = r.qpair;
  qp.region_ = load_le<std::uint32_t>(r.payload.data());
  const auto mtu = load_le<std::uint32_t>(r.payload.data() + 4);
  const auto window = load_le<std::uint32_t>(r.payload.data() + 8);
  qp.ep_->set_qpair(qp.qpair_);
  qp.ep_->reconfigure(mtu, window);
  return qp;
}

void QPair::close() {
  if (!ep_) return;
  Verb v;
  v.kind = VerbKind::kCloseConn;
  try {
    call(std::move(v));
  } catch (...) {
    ep_.reset();
    throw;
  }
  ep_.reset();
}

void QPair::require_open() const {
  if (!ep_) fail(ErrorCode::kArgument, "connection is not open");
}

wire::CreditState QPair::credits() const {
  require_open();
  return ep_->credits();
}

const wire::EndpointStats& QPair::wire_stats() const {
  require_open();
  return ep_->stats();
}

Verb QPair::call(Verb v) {
  require_open();
  v.qpair = qpair_;
  v.msg_id = ep_->next_message_id();
  const std::uint32_t id = v.msg_id;
  ep_->send_verb(v);
  for (;;) {
    auto in = ep_->receive();
    if (!in) fail(ErrorCode::kIo, "connection closed by the node");
    if (in->data) continue;  // stray data from an aborted transfer
    Verb r = wire::decode_verb(in->payload);
    if (r.kind != VerbKind::kResponse) fail(ErrorCode::kProtocol, "expected a RESPONSE");
    if (r.status != 0) raise_status(r);
    if (r.msg_id != id) fail(ErrorCode::kProtocol, "RESPONSE for an unexpected request");
    return r;
  }
}

void QPair::alloc_table(FTable& ft) {
  if (ft.allocated) fail(ErrorCode::kArgument, "table already allocated");
  Verb v;
  v.kind = VerbKind::kAllocTable;
  v.length = ft.size;
  v.payload = ft.schema.serialize();
  const Verb r = call(std::move(v));
  ft.base_vaddr = r.vaddr;
  ft.size = r.length;
  ft.allocated = true;
}

void QPair::free_table(FTable& ft) {
  Verb v;
  v.kind = VerbKind::kFreeTable;
  v.vaddr = ft.base_vaddr;
  call(std::move(v));
  ft.allocated = false;
}

Bytes QPair::read(const FTable& ft, std::uint64_t offset, std::optional<std::uint64_t> length) {
  require_open();
  const std::uint64_t n = length.value_or(offset <= ft.size ? ft.size - offset : 0);
  Bytes out;
  out.reserve(n);
  for (std::uint64_t at = 0; at < n; at += kTransferChunk) {
    Verb v;
    v.kind = VerbKind::kRdmaRead;
    v.qpair = qpair_;
    v.msg_id = ep_->next_message_id();
    v.vaddr = ft.base_vaddr + offset + at;
    v.length = std::min(kTransferChunk, n - at);
    ep_->send_verb(v);
    Bytes data;
    for (;;) {
      auto in = ep_->receive();
      if (!in) fail(ErrorCode::kIo, "connection closed by the node");
      if (in->data) {
        data = std::move(in->payload);
        continue;
      }
      const Verb r = wire::decode_verb(in->payload);
      if (r.status != 0) raise_status(r);
      if (r.kind != VerbKind::kResponse || r.msg_id != v.msg_id) fail(ErrorCode::kProtocol, "unexpected reply to read");
      if (data.size() != r.length) fail(ErrorCode::kProtocol, "read returned a short data message");
      break;
    }
    out.insert(out.end(), data.begin(), data.end());
  }
  return out;
}

void QPair::write(const FTable& ft, ByteSpan bytes, std::uint64_t offset) {
  for (std::uint64_t at = 0; at < bytes.size(); at += kTransferChunk) {
    Verb v;
    v.kind = VerbKind::kRdmaWrite;
    v.vaddr = ft.base_vaddr + offset + at;
    const auto chunk = bytes.subspan(at, std::min<std::uint64_t>(kTransferChunk, bytes.size() - at));
    v.payload.assign(chunk.begin(), chunk.end());
    v.length = chunk.size();
    call(std::move(v));
  }
}

QueryResult QPair::far_view(const FTable& ft, const Query& q) { return run(ft, q, encode_query(q)); }

QueryResult QPair::far_view(const FTable& ft, std::span<const std::uint64_t> params, ByteSpan payload) {
  EncodedQuery enc{std::vector<std::uint64_t>(params.begin(), params.end()), Bytes(payload.begin(), payload.end())};
  std::optional<Query> q;
  try {
    q = decode_query(params, payload);
  } catch (const Error&) {
    // Let the node report the rejection.
    run(ft, Query{}, enc);
    throw;
  }
  return run(ft, *q, enc);
}

QueryResult QPair::select(const FTable& ft, ColumnMask proj, ColumnMask sel, ops::Comparator cmp, double constant) {
  ops::SelectionPredicate pred;
  for_each_column(sel, [&](std::size_t c) {
    pred.terms.push_back(
        ops::PredicateTerm{static_cast<std::uint32_t>(c), cmp, ops::ValueType::kFloat, ops::float_bits(constant)});
  });
  return far_view(ft, Query::select(proj, std::move(pred)));
}

QueryResult QPair::run(const FTable& ft, const Query& q, const EncodedQuery& enc) {
  require_open();
  const auto t0 = std::chrono::steady_clock::now();
  const auto before = ep_->stats();

  Verb v;
  v.kind = VerbKind::kFarview;
  v.qpair = qpair_;
  v.msg_id = ep_->next_message_id();
  v.vaddr = ft.base_vaddr;
  v.length = ft.size;
  v.params = enc.params;
  v.payload = enc.payload;
  ep_->send_verb(v);
  if (!q.server_cpu && loaded_ != q.pipeline) {
    loaded_ = q.pipeline;
    ++loads_;
  }

  Bytes main;
  Verb r;
  for (;;) {
    auto in = ep_->receive();
    if (!in) fail(ErrorCode::kIo, "connection closed by the node");
    if (in->data) {
      main = std::move(in->payload);
      continue;
    }
    r = wire::decode_verb(in->payload);
    if (r.kind != VerbKind::kResponse) fail(ErrorCode::kProtocol, "expected a RESPONSE");
    if (r.status != 0) {
      if (r.msg_id == v.msg_id && static_cast<ErrorCode>(r.status) == ErrorCode::kAborted) loaded_.reset();
      raise_status(r);
    }
    if (r.msg_id != v.msg_id) fail(ErrorCode::kProtocol, "RESPONSE for an unexpected request");
    break;
  }
  if (main.size() != r.length) fail(ErrorCode::kProtocol, "result length does not match the RESPONSE");

  QueryResult res;
  res.query = q;
  res.shape = result_shape(q, ft.schema);
  if (q.encrypt) ops::CtrCipher(*q.encrypt).apply(main, 0);
  const Bytes overflow = decode_trailer(r.payload, res.shape.row_bytes);
  if (res.shape.row_bytes && main.size() % res.shape.row_bytes != 0)
    fail(ErrorCode::kProtocol, "result is not a whole number of rows");
  res.stats.server_rows_emitted = res.shape.row_bytes ? main.size() / res.shape.row_bytes : 0;
  res.stats.overflow_entries = res.shape.row_bytes ? overflow.size() / res.shape.row_bytes : 0;
  res.rows = overflow.empty() ? std::move(main) : dedup_overflow(res.shape, q, main, overflow);
  res.overflow_merged = true;

  const auto& after = ep_->stats();
  res.stats.bytes_on_wire = after.valid_bytes_received - before.valid_bytes_received;
  res.stats.packets = after.packets_received - before.packets_received - (after.grants_received - before.grants_received);
  res.stats.wall_us = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0).count());
  return res;
}

QPair open_connection(const wire::NodeAddress& node) { return QPair::open(node); }
void close_connection(QPair& qp) { qp.close(); }
void alloc_table_mem(QPair& qp, FTable& ft) { qp.alloc_table(ft); }
void free_table_mem(QPair& qp, FTable& ft) { qp.free_table(ft); }
Bytes table_read(QPair& qp, const FTable& ft) { return qp.read(ft); }
void table_write(QPair& qp, const FTable& ft, ByteSpan bytes) { qp.write(ft, bytes); }

QueryResult far_view(QPair& qp, const FTable& ft, std::span<const std::uint64_t> params, ByteSpan payload) {
  return qp.far_view(ft, params, payload);
}

QueryResult select(QPair& qp, const FTable& ft, ColumnMask proj, ColumnMask sel, ops::Comparator cmp, double constant) {
  return qp.select(ft, proj, sel, cmp, constant);
}

Bytes dedup_overflow(const ResultShape& shape, const Query& q, ByteSpan main, ByteSpan overflow) {
  return merge_overflow(shape, q, main, overflow);
}

}  // namespace farview::client
