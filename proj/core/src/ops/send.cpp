#include "farview/ops/send.hpp"

#include <limits>

namespace farview::ops {

Sender::Sender(std::size_t mtu, Emit emit) : mtu_(mtu), emit_(std::move(emit)) {
  if (mtu_ < 64 || mtu_ > std::numeric_limits<std::uint16_t>::max())
    fail(ErrorCode::kArgument, "mtu must be in [64, 65535]");
  pending_.reserve(2 * mtu_);
}

void Sender::write(ByteSpan bytes) {
  valid_ += bytes.size();
  pending_.insert(pending_.end(), bytes.begin(), bytes.end());
  if (pending_.size() <= mtu_) return;
  std::size_t at = 0;
  while (pending_.size() - at > mtu_) {
    emit_(Bytes(pending_.begin() + static_cast<std::ptrdiff_t>(at),
                pending_.begin() + static_cast<std::ptrdiff_t>(at + mtu_)),
          false);
    ++packets_;
    at += mtu_;
  }
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(at));
}

void Sender::finish() {
  if (pending_.empty()) return;
  emit_(std::move(pending_), true);
  pending_.clear();
  ++packets_;
}

std::vector<wire::Packet> emit_send_commands(const PackedStream& packed, std::size_t mtu, wire::QueuePairId qpair,
                                             std::uint32_t msg_id) {
  std::vector<wire::Packet> out;
  Sender sender(mtu, [&](Bytes payload, bool last) {
    wire::Packet pk;
    pk.qpair = qpair;
    pk.msg_id = msg_id;
    pk.seq = static_cast<std::uint32_t>(out.size());
    pk.flags = static_cast<std::uint8_t>(wire::kFlagData | (last ? wire::kFlagLast : 0));
    pk.payload = std::move(payload);
    out.push_back(std::move(pk));
  });
  // Feed word by word, as the packer would.
  const ByteSpan valid = packed.valid();
  for (std::size_t at = 0; at < valid.size(); at += kChannelWord)
    sender.write(valid.subspan(at, std::min(kChannelWord, valid.size() - at)));
  sender.finish();
  return out;
}

}  // namespace farview::ops
