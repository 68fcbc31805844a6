#include "farview/wire/protocol.hpp"

#include <limits>

namespace farview::wire {

const char* verb_kind_name(VerbKind kind) {
  switch (kind) {
    case VerbKind::kOpenConn: return "OPEN_CONN";
    case VerbKind::kCloseConn: return "CLOSE_CONN";
    case VerbKind::kAllocTable: return "ALLOC_TABLE";
    case VerbKind::kFreeTable: return "FREE_TABLE";
    case VerbKind::kRdmaRead: return "RDMA_READ";
    case VerbKind::kRdmaWrite: return "RDMA_WRITE";
    case VerbKind::kFarview: return "FARVIEW";
    case VerbKind::kResponse: return "RESPONSE";
    case VerbKind::kCreditGrant: return "CREDIT_GRANT";
  }
  return "?";
}

bool is_known_verb_kind(std::uint8_t tag) {
  return tag >= static_cast<std::uint8_t>(VerbKind::kOpenConn) &&
         tag <= static_cast<std::uint8_t>(VerbKind::kCreditGrant);
}

namespace {

bool carries_payload(VerbKind k) {
  // ALLOC_TABLE carries the table schema, FARVIEW the regex pattern,
  // CREDIT_GRANT its 4-byte count.
  return k == VerbKind::kRdmaWrite || k == VerbKind::kResponse || k == VerbKind::kAllocTable ||
         k == VerbKind::kFarview || k == VerbKind::kCreditGrant;
}

std::string check_invariants(const Verb& v) {
  if (v.params.size() > kMaxParams) return "more than 64 params";
  if (!v.params.empty() && v.kind != VerbKind::kFarview) return "params on non-FARVIEW verb";
  if (!v.payload.empty() && !carries_payload(v.kind)) return "payload on a verb that carries none";
  if (v.payload.size() > std::numeric_limits<std::uint32_t>::max()) return "payload too large";
  if (v.length > std::numeric_limits<std::uint64_t>::max() - v.vaddr) return "vaddr + length overflows";
  if (v.status != 0 && v.kind != VerbKind::kResponse) return "status on non-RESPONSE verb";
  return {};
}

}  // namespace

void validate_verb(const Verb& v) {
  if (auto why = check_invariants(v); !why.empty()) fail(ErrorCode::kArgument, "encode_verb: " + why);
}

Bytes encode_verb(const Verb& v) {
  validate_verb(v);
  Bytes out;
  out.reserve(kMinFrameBytes + v.params.size() * 8 + v.payload.size());
  append_le<std::uint16_t>(out, kFrameMagic);
  append_le<std::uint8_t>(out, kFrameVersion);
  append_le<std::uint8_t>(out, static_cast<std::uint8_t>(v.kind));
  append_le<std::uint32_t>(out, v.qpair);
  append_le<std::uint32_t>(out, v.msg_id);
  append_le<std::uint64_t>(out, v.vaddr);
  append_le<std::uint64_t>(out, v.length);
  append_le<std::uint16_t>(out, static_cast<std::uint16_t>(v.params.size()));
  append_le<std::uint16_t>(out, v.status);
  for (auto p : v.params) append_le<std::uint64_t>(out, p);
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.payload.size()));
  out.insert(out.end(), v.payload.begin(), v.payload.end());
  return out;
}

Verb decode_verb(ByteSpan bytes) {
  if (bytes.size() < 4) fail(ErrorCode::kFraming, "frame shorter than its preamble");
  const std::byte* p = bytes.data();
  if (load_le<std::uint16_t>(p) != kFrameMagic) fail(ErrorCode::kProtocol, "bad frame magic");
  if (load_le<std::uint8_t>(p + 2) != kFrameVersion) fail(ErrorCode::kProtocol, "unsupported frame version");
  const auto tag = load_le<std::uint8_t>(p + 3);
  if (!is_known_verb_kind(tag)) fail(ErrorCode::kProtocol, "unknown verb kind tag " + std::to_string(tag));
  if (bytes.size() < kMinFrameBytes) fail(ErrorCode::kFraming, "truncated frame header");

  Verb v;
  v.kind = static_cast<VerbKind>(tag);
  v.qpair = load_le<std::uint32_t>(p + 4);
  v.msg_id = load_le<std::uint32_t>(p + 8);
  v.vaddr = load_le<std::uint64_t>(p + 12);
  v.length = load_le<std::uint64_t>(p + 20);
  const auto param_count = load_le<std::uint16_t>(p + 28);
  v.status = load_le<std::uint16_t>(p + 30);
  if (param_count > kMaxParams) fail(ErrorCode::kProtocol, "param count exceeds 64");

  const std::size_t params_end = kFrameHeaderBytes + std::size_t{param_count} * 8;
  if (bytes.size() < params_end + 4) fail(ErrorCode::kFraming, "truncated param block");
  v.params.resize(param_count);
  for (std::size_t i = 0; i < param_count; ++i) v.params[i] = load_le<std::uint64_t>(p + kFrameHeaderBytes + i * 8);

  const std::size_t payload_len = load_le<std::uint32_t>(p + params_end);
  const std::size_t payload_at = params_end + 4;
  if (bytes.size() - payload_at < payload_len) fail(ErrorCode::kFraming, "payload length exceeds buffer");
  if (bytes.size() - payload_at > payload_len) fail(ErrorCode::kFraming, "trailing bytes after frame");
  v.payload.assign(p + payload_at, p + payload_at + payload_len);

  if (auto why = check_invariants(v); !why.empty()) fail(ErrorCode::kProtocol, why);
  return v;
}

void encode_packet_header(const Packet& pk, std::byte* out) {
  store_le<std::uint32_t>(out, pk.qpair);
  store_le<std::uint32_t>(out + 4, pk.msg_id);
  store_le<std::uint32_t>(out + 8, pk.seq);
  store_le<std::uint8_t>(out + 12, pk.flags);
  store_le<std::uint16_t>(out + 13, pk.valid_bytes());
}

Bytes encode_packet(const Packet& pk) {
  if (pk.payload.size() > std::numeric_limits<std::uint16_t>::max())
    fail(ErrorCode::kArgument, "packet payload exceeds 16-bit valid_bytes");
  Bytes out(kPacketHeaderBytes + pk.payload.size());
  encode_packet_header(pk, out.data());
  std::copy(pk.payload.begin(), pk.payload.end(), out.begin() + kPacketHeaderBytes);
  return out;
}

PacketHeader decode_packet_header(ByteSpan header) {
  if (header.size() < kPacketHeaderBytes) fail(ErrorCode::kFraming, "truncated packet header");
  const std::byte* p = header.data();
  return PacketHeader{load_le<std::uint32_t>(p), load_le<std::uint32_t>(p + 4), load_le<std::uint32_t>(p + 8),
                      load_le<std::uint8_t>(p + 12), load_le<std::uint16_t>(p + 13)};
}

std::vector<Packet> packetize(QueuePairId qpair, std::uint32_t msg_id, ByteSpan payload, std::size_t mtu,
                              std::uint8_t extra_flags) {
  if (mtu < 64 || mtu > std::numeric_limits<std::uint16_t>::max())
    fail(ErrorCode::kArgument, "mtu must be in [64, 65535]");
  const std::size_t count = payload.empty() ? 1 : div_ceil(payload.size(), mtu);
  std::vector<Packet> out;
  out.reserve(count);
  extra_flags &= static_cast<std::uint8_t>(~kFlagLast);
  for (std::size_t i = 0; i < count; ++i) {
    Packet pk;
    pk.qpair = qpair;
    pk.msg_id = msg_id;
    pk.seq = static_cast<std::uint32_t>(i);
    pk.flags = static_cast<std::uint8_t>(extra_flags | (i + 1 == count ? kFlagLast : 0));
    const std::size_t begin = i * mtu;
    const std::size_t end = std::min(payload.size(), begin + mtu);
    pk.payload.assign(payload.begin() + static_cast<std::ptrdiff_t>(begin),
                      payload.begin() + static_cast<std::ptrdiff_t>(end));
    out.push_back(std::move(pk));
  }
  return out;
}

Bytes reassemble(const std::vector<Packet>& packets) {
  if (packets.empty()) fail(ErrorCode::kIncompleteMessage, "no packets");
  const auto qp = packets.front().qpair;
  const auto id = packets.front().msg_id;
  std::map<std::uint32_t, const Packet*> by_seq;
  std::optional<std::uint32_t> last_seq;
  for (const auto& pk : packets) {
    if (pk.qpair != qp || pk.msg_id != id) fail(ErrorCode::kArgument, "packets from different messages");
    if (pk.last()) {
      if (last_seq && *last_seq != pk.seq) fail(ErrorCode::kProtocol, "two packets flagged last");
      last_seq = pk.seq;
    }
    auto [it, inserted] = by_seq.try_emplace(pk.seq, &pk);
    if (!inserted && it->second->payload != pk.payload)
      fail(ErrorCode::kProtocol, "duplicate seq with differing payload");
  }
  if (!last_seq) fail(ErrorCode::kIncompleteMessage, "no packet flagged last");
  if (by_seq.rbegin()->first > *last_seq) fail(ErrorCode::kProtocol, "packet seq beyond last");
  if (by_seq.size() != std::size_t{*last_seq} + 1) fail(ErrorCode::kIncompleteMessage, "message has missing packets");
  Bytes out;
  for (const auto& [seq, pk] : by_seq) out.insert(out.end(), pk->payload.begin(), pk->payload.end());
  return out;
}

std::optional<Reassembler::Message> Reassembler::add(Packet packet) {
  const Key key{packet.qpair, packet.msg_id, packet.data()};
  auto& part = partial_[key];
  if (packet.last()) {
    if (part.last_seq && *part.last_seq != packet.seq) fail(ErrorCode::kProtocol, "two packets flagged last");
    part.last_seq = packet.seq;
    part.flags = packet.flags;
  }
  if (part.last_seq && packet.seq > *part.last_seq) fail(ErrorCode::kProtocol, "packet seq beyond last");
  auto [it, inserted] = part.fragments.try_emplace(packet.seq, std::move(packet.payload));
  if (!inserted && it->second != packet.payload) {
    // packet.payload was not moved from when the emplace did not happen.
    fail(ErrorCode::kProtocol, "duplicate seq with differing payload");
  }
  if (!part.last_seq) return std::nullopt;
  if (part.fragments.size() != std::size_t{*part.last_seq} + 1) return std::nullopt;

  Message msg{std::get<0>(key), std::get<1>(key), part.flags, {}, part.fragments.size()};
  std::size_t total = 0;
  for (const auto& [seq, frag] : part.fragments) total += frag.size();
  msg.payload.reserve(total);
  for (const auto& [seq, frag] : part.fragments) msg.payload.insert(msg.payload.end(), frag.begin(), frag.end());
  partial_.erase(key);
  return msg;
}

std::optional<CreditState> consume_credit(CreditState c) {
  if (c.available == 0) return std::nullopt;
  --c.available;
  return c;
}

CreditState grant_credits(CreditState c, std::uint32_t n) {
  if (n > c.max - c.available) fail(ErrorCode::kProtocol, "credit grant exceeds window");
  c.available += n;
  return c;
}

}  // namespace farview::wire
