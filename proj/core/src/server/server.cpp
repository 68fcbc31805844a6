#include "farview/server/server.hpp"

#include <sys/socket.h>

#include <algorithm>

#include "farview/ops/send.hpp"

namespace farview::server {

using wire::Verb;
using wire::VerbKind;

RawResult rcpu_execute(mem::MemoryStack& memory, std::size_t port, wire::QueuePairId qpair, const Query& q,
                       std::uint64_t vaddr, std::uint64_t length) {
  const auto table = memory.table_for(qpair, vaddr);
  validate_query(q, table.schema);
  const std::uint32_t tb = table.schema.tuple_bytes();
  if ((vaddr - table.base_vaddr) % tb != 0 || length % tb != 0)
    fail(ErrorCode::kRequest, "scan must cover whole tuples");
  const Bytes bytes = length ? memory.read(qpair, port, vaddr, length) : Bytes{};
  return execute_cpu(q, table.schema, bytes, vaddr - table.base_vaddr);
}

Server::Server(ServerConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  memory_ = std::make_unique<mem::MemoryStack>(cfg_.memory, cfg_.regions);
  operators_ = std::make_unique<opstack::OperatorStack>(
      *memory_, opstack::PipelineRegistry::builtin(cfg_.reconfig_delay_ms), cfg_.regions, cfg_.execution());
}

Server::~Server() { stop(); }

void Server::start() {
  if (started_) return;
  const auto addr = wire::NodeAddress::parse(cfg_.listen);
  listener_ = wire::Listener::bind(addr.host, addr.port);
  port_ = listener_.port();
  started_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void Server::accept_loop() {
  while (!stopping_) {
    wire::Socket sock = listener_.accept();
    if (!sock.valid()) break;
    std::lock_guard lk(mu_);
    if (stopping_) break;
    reap_finished();
    auto conn = std::make_unique<Connection>();
    conn->fd = sock.fd();
    Connection* raw = conn.get();
    ++stats_.connections_accepted;
    ++stats_.active_connections;
    conn->thread = std::thread([this, raw, s = std::move(sock)]() mutable { serve(raw, std::move(s)); });
    conns_.push_back(std::move(conn));
  }
}

void Server::reap_finished() {
  for (auto it = conns_.begin(); it != conns_.end();) {
    if ((*it)->done) {
      (*it)->thread.join();
      it = conns_.erase(it);
    } else {
      ++it;
    }
  }
}

namespace {

Verb response_to(const Verb& req, ErrorCode status = ErrorCode::kOk) {
  Verb r;
  r.kind = VerbKind::kResponse;
  r.qpair = req.qpair;
  r.msg_id = req.msg_id;
  r.vaddr = req.vaddr;
  r.status = static_cast<std::uint16_t>(status);
  return r;
}

// Streams a data message over the endpoint.
class DataSink final : public ops::ByteSink {
 public:
  explicit DataSink(wire::Endpoint& ep)
      : ep_(ep), msg_id_(ep.next_message_id()), sender_(ep.mtu(), [this](Bytes payload, bool last) {
          wire::Packet pk;
          pk.qpair = ep_.qpair();
          pk.msg_id = msg_id_;
          pk.seq = seq_++;
          pk.flags = static_cast<std::uint8_t>(wire::kFlagData | (last ? wire::kFlagLast : 0));
          pk.payload = std::move(payload);
          ep_.send_packet(pk);
        }) {}

  void write(ByteSpan bytes) override { sender_.write(bytes); }
  void finish() override {
    if (!finished_) sender_.finish();
    finished_ = true;
  }
  std::uint64_t bytes() const { return sender_.valid_bytes(); }

 private:
  wire::Endpoint& ep_;
  std::uint32_t msg_id_;
  std::uint32_t seq_ = 0;
  ops::Sender sender_;
  bool finished_ = false;
};

}  // namespace

void Server::serve(Connection* conn, wire::Socket sock) {
  wire::QueuePairId qpair = 0;
  std::optional<std::uint32_t> region;
  std::uint64_t sent = 0;
  {
    wire::Endpoint ep(std::move(sock), cfg_.mtu, cfg_.credit_window);
    auto reply_error = [&](const Verb& req, const Error& e) {
      Verb r = response_to(req, e.code());
      const std::string what = e.what();
      r.payload.assign(as_bytes(what).begin(), as_bytes(what).end());
      ep.send_verb(r, /*control=*/true);
    };
    try {
      Verb open = ep.receive_verb();
      if (open.kind != VerbKind::kOpenConn) {
        reply_error(open, Error(ErrorCode::kProtocol, "first verb must be OPEN_CONN"));
        throw Error(ErrorCode::kProtocol, "no OPEN_CONN");
      }
      qpair = next_qpair_++;
      try {
        region = operators_->bind_region(qpair);
      } catch (const Error& e) {
        {
          std::lock_guard lk(mu_);
          ++stats_.connections_refused;
        }
        reply_error(open, e);
        throw;
      }
      ep.set_qpair(qpair);
      Verb ok = response_to(open);
      ok.qpair = qpair;
      append_le<std::uint32_t>(ok.payload, *region);
      append_le<std::uint32_t>(ok.payload, cfg_.mtu);
      append_le<std::uint32_t>(ok.payload, cfg_.credit_window);
      ep.send_verb(ok);

      std::size_t reject_budget = 0;
      bool open_conn = true;
      while (open_conn && !stopping_) {
        const bool may_reject = reject_budget > 0;
        if (may_reject) --reject_budget;
        auto in = ep.receive();
        if (!in) break;
        if (in->data) fail(ErrorCode::kProtocol, "unexpected data message from client");
        const Verb v = wire::decode_verb(in->payload);
        try {
          switch (v.kind) {
            case VerbKind::kCloseConn:
              ep.send_verb(response_to(v));
              open_conn = false;
              break;
            case VerbKind::kAllocTable: {
              const auto t = memory_->alloc_table(qpair, v.length, Schema::deserialize(v.payload));
              Verb r = response_to(v);
              r.vaddr = t.base_vaddr;
              r.length = t.size;
              ep.send_verb(r);
              break;
            }
            case VerbKind::kFreeTable:
              memory_->free_table(qpair, v.vaddr);
              ep.send_verb(response_to(v));
              break;
            case VerbKind::kRdmaWrite: {
              operators_->write_bypass(qpair, v.vaddr, v.payload);
              Verb r = response_to(v);
              r.length = v.payload.size();
              ep.send_verb(r);
              break;
            }
            case VerbKind::kRdmaRead: {
              DataSink sink(ep);
              try {
                operators_->read_bypass(qpair, v.vaddr, v.length, sink);
              } catch (...) {
                sink.finish();
                throw;
              }
              Verb r = response_to(v);
              r.length = sink.bytes();
              ep.send_verb(r);
              break;
            }
            case VerbKind::kFarview: {
              if (may_reject) {
                {
                  std::lock_guard lk(mu_);
                  ++stats_.rejected_busy;
                }
                fail(ErrorCode::kRegionBusy, "a FARVIEW request is already in flight on this queue pair");
              }
              const Query q = decode_query(v.params, v.payload);
              DataSink sink(ep);
              Verb r = response_to(v);
              try {
                if (q.server_cpu) {
                  if (!cfg_.rcpu_enabled) fail(ErrorCode::kRequest, "server-CPU execution is disabled");
                  auto res = rcpu_execute(*memory_, *region, qpair, q, v.vaddr, v.length);
                  sink.write(res.main);
                  sink.finish();
                  std::lock_guard lk(mu_);
                  ++stats_.rcpu_requests;
                } else {
                  const auto id = static_cast<std::uint16_t>(q.pipeline);
                  if (operators_->region(*region).loaded != id) {
                    operators_->load_pipeline(*region, id);
                    std::lock_guard lk(mu_);
                    ++stats_.pipeline_loads;
                  }
                  auto res = operators_->execute_request(*region, v, sink);
                  sink.finish();
                  r.payload = encode_trailer(res.row_bytes, res.overflow);
                  std::lock_guard lk(mu_);
                  ++stats_.farview_requests;
                }
              } catch (...) {
                // Once stopping, the read side is shut and credits stop
                // arriving; report the abort on the control path instead.
                try {
                  sink.finish();
                } catch (const Error&) {
                  if (!stopping_) throw;
                }
                if (stopping_) fail(ErrorCode::kAborted, "server is stopping");
                throw;
              }
              r.length = sink.bytes();
              // FARVIEWs that arrived while this one ran are rejected; poll
              // before responding so no follow-up can be counted.
              reject_budget = ep.poll_ready();
              ep.send_verb(r);
              break;
            }
            default:
              fail(ErrorCode::kProtocol, std::string("unexpected verb ") + wire::verb_kind_name(v.kind));
          }
        } catch (const Error& e) {
          if (e.code() == ErrorCode::kIo) throw;
          if (v.kind == VerbKind::kFarview && !may_reject) reject_budget = ep.poll_ready();
          reply_error(v, e);
          if (e.code() == ErrorCode::kAborted) break;
        }
      }
    } catch (const std::exception&) {
      // Connection-level failure: peer gone or framing lost. Fall through to
      // cleanup.
    }
    sent = ep.stats().valid_bytes_sent;
    if (region) operators_->release_region(qpair);
    std::lock_guard lk(mu_);
    stats_.valid_bytes_sent += sent;
    --stats_.active_connections;
    conn->fd = -1;
    conn->done = true;
  }
}

void Server::stop() {
  {
    std::lock_guard lk(mu_);
    if (!started_ || stopped_) {
      stopped_ = true;
      stopped_cv_.notify_all();
      return;
    }
  }
  stopping_ = true;
  listener_.shutdown();
  if (acceptor_.joinable()) acceptor_.join();
  operators_->abort_all();
  std::vector<std::unique_ptr<Connection>> conns;
  {
    std::lock_guard lk(mu_);
    for (auto& c : conns_)
      if (c->fd >= 0) ::shutdown(c->fd, SHUT_RD);
    conns.swap(conns_);
  }
  for (auto& c : conns)
    if (c->thread.joinable()) c->thread.join();
  std::lock_guard lk(mu_);
  stopped_ = true;
  stopped_cv_.notify_all();
}

void Server::wait() {
  std::unique_lock lk(mu_);
  stopped_cv_.wait(lk, [&] { return stopped_; });
}

ServerStats Server::stats() const {
  std::lock_guard lk(mu_);
  return stats_;
}

}  // namespace farview::server
