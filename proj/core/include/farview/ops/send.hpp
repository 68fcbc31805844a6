#pragma once

#include <functional>
#include <vector>

#include "farview/ops/pack.hpp"
#include "farview/wire/protocol.hpp"

namespace farview::ops {

/// Cuts a byte stream into MTU-sized packet payloads without knowing its
/// length up front: a full MTU is released only once more bytes follow it,
/// so the final packet can carry the last flag. An empty stream yields no
/// packets.
class Sender final : public ByteSink {
 public:
  using Emit = std::function<void(Bytes payload, bool last)>;

  Sender(std::size_t mtu, Emit emit);

  void write(ByteSpan bytes) override;
  void finish() override;

  std::uint64_t valid_bytes() const { return valid_; }
  std::uint64_t packets() const { return packets_; }

 private:
  std::size_t mtu_;
  Emit emit_;
  Bytes pending_;
  std::uint64_t valid_ = 0;
  std::uint64_t packets_ = 0;
};

/// Packets (data flag set) carrying the valid bytes of a packed stream.
std::vector<wire::Packet> emit_send_commands(const PackedStream& packed, std::size_t mtu, wire::QueuePairId qpair,
                                             std::uint32_t msg_id);

}  // namespace farview::ops
