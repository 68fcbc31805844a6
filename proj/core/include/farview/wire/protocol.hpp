#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "farview/common.hpp"

namespace farview::wire {

using QueuePairId = std::uint32_t;

inline constexpr std::uint16_t kFrameMagic = 0xFA57;
inline constexpr std::uint8_t kFrameVersion = 0x01;
inline constexpr std::size_t kFrameHeaderBytes = 32;  // up to and including reserved/status
inline constexpr std::size_t kMinFrameBytes = kFrameHeaderBytes + 4;
inline constexpr std::size_t kMaxParams = 64;
inline constexpr std::size_t kPacketHeaderBytes = 15;
inline constexpr std::size_t kDefaultMtu = 1024;
inline constexpr std::uint32_t kDefaultCreditWindow = 64;

enum class VerbKind : std::uint8_t {
  kOpenConn = 0x01,
  kCloseConn = 0x02,
  kAllocTable = 0x03,
  kFreeTable = 0x04,
  kRdmaRead = 0x05,
  kRdmaWrite = 0x06,
  kFarview = 0x07,
  kResponse = 0x08,
  kCreditGrant = 0x09,
};

const char* verb_kind_name(VerbKind kind);
bool is_known_verb_kind(std::uint8_t tag);

/// One protocol message. `msg_id` correlates a RESPONSE with its request;
/// `status` occupies the frame's reserved slot and is non-zero only on
/// failed RESPONSEs.
struct Verb {
  VerbKind kind = VerbKind::kOpenConn;
  QueuePairId qpair = 0;
  std::uint32_t msg_id = 0;
  std::uint64_t vaddr = 0;
  std::uint64_t length = 0;
  std::uint16_t status = 0;
  std::vector<std::uint64_t> params;
  Bytes payload;

  bool operator==(const Verb&) const = default;
};

/// Throws Error(kArgument) when the verb breaks a field invariant.
void validate_verb(const Verb& v);

Bytes encode_verb(const Verb& v);

/// Inverse of encode_verb. Bad magic/version/kind -> kProtocol; a buffer
/// that is short of (or longer than) the frame its fields describe -> kFraming.
Verb decode_verb(ByteSpan bytes);

// Packet flag bits.
inline constexpr std::uint8_t kFlagLast = 0x01;
inline constexpr std::uint8_t kFlagData = 0x02;     // raw result bytes, not a framed verb
inline constexpr std::uint8_t kFlagControl = 0x04;  // exempt from credit accounting

struct Packet {
  QueuePairId qpair = 0;
  std::uint32_t msg_id = 0;
  std::uint32_t seq = 0;
  std::uint8_t flags = 0;
  Bytes payload;

  bool last() const { return (flags & kFlagLast) != 0; }
  bool data() const { return (flags & kFlagData) != 0; }
  bool control() const { return (flags & kFlagControl) != 0; }
  std::uint16_t valid_bytes() const { return static_cast<std::uint16_t>(payload.size()); }

  bool operator==(const Packet&) const = default;
};

Bytes encode_packet(const Packet& p);
void encode_packet_header(const Packet& p, std::byte* out);

struct PacketHeader {
  QueuePairId qpair;
  std::uint32_t msg_id;
  std::uint32_t seq;
  std::uint8_t flags;
  std::uint16_t valid_bytes;
};
PacketHeader decode_packet_header(ByteSpan header);

/// Splits a payload into ceil(len/mtu) packets (one empty packet for an
/// empty payload). `extra_flags` is OR-ed into every packet.
std::vector<Packet> packetize(QueuePairId qpair, std::uint32_t msg_id, ByteSpan payload,
                              std::size_t mtu, std::uint8_t extra_flags = 0);

/// Rebuilds a payload from packets in any arrival order.
Bytes reassemble(const std::vector<Packet>& packets);

/// Incremental reassembly keyed by (qpair, msg_id, data-flag). Never mixes
/// bytes across keys.
class Reassembler {
 public:
  struct Message {
    QueuePairId qpair;
    std::uint32_t msg_id;
    std::uint8_t flags;  // flags of the last packet
    Bytes payload;
    std::size_t packets;
  };

  /// Returns the completed message once every fragment has arrived.
  std::optional<Message> add(Packet packet);

  std::size_t pending_messages() const { return partial_.size(); }

 private:
  struct Partial {
    std::map<std::uint32_t, Bytes> fragments;
    std::optional<std::uint32_t> last_seq;
    std::uint8_t flags = 0;
  };
  using Key = std::tuple<QueuePairId, std::uint32_t, bool>;
  std::map<Key, Partial> partial_;
};

struct CreditState {
  std::uint32_t available = kDefaultCreditWindow;
  std::uint32_t max = kDefaultCreditWindow;

  bool operator==(const CreditState&) const = default;
};

/// nullopt is the would-block signal: the sender must wait for CREDIT_GRANT.
std::optional<CreditState> consume_credit(CreditState c);

/// Throws Error(kProtocol) if the grant would exceed the window.
CreditState grant_credits(CreditState c, std::uint32_t n);

}  // namespace farview::wire
