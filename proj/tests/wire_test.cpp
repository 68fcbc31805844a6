#include <gtest/gtest.h>
#include <sys/socket.h>

#include <algorithm>
#include <thread>

#include "farview/wire/endpoint.hpp"
#include "test_util.hpp"

using namespace farview;
using namespace farview::wire;

namespace {

Verb random_verb(std::mt19937_64& rng) {
  static constexpr VerbKind kinds[] = {VerbKind::kOpenConn,  VerbKind::kCloseConn, VerbKind::kAllocTable,
                                       VerbKind::kFreeTable, VerbKind::kRdmaRead,  VerbKind::kRdmaWrite,
                                       VerbKind::kFarview,   VerbKind::kResponse,  VerbKind::kCreditGrant};
  Verb v;
  v.kind = kinds[rng() % std::size(kinds)];
  v.qpair = static_cast<QueuePairId>(rng());
  v.msg_id = static_cast<std::uint32_t>(rng());
  v.vaddr = rng() >> 1;
  v.length = rng() >> 2;
  if (v.kind == VerbKind::kFarview) v.params.resize(rng() % 65);
  for (auto& p : v.params) p = rng();
  if (v.kind == VerbKind::kRdmaWrite || v.kind == VerbKind::kResponse || v.kind == VerbKind::kFarview)
    v.payload = test::random_bytes(rng, rng() % 300);
  if (v.kind == VerbKind::kResponse) v.status = static_cast<std::uint16_t>(rng() % 19);
  return v;
}

std::pair<Socket, Socket> socket_pair() {
  int fds[2];
  EXPECT_EQ(::socketpair(AF_UNIX, SOCK_STREAM, 0, fds), 0);
  return {Socket(fds[0]), Socket(fds[1])};
}

}  // namespace

TEST(Verb, OpenConnFrameHasZeroAddressFields) {
  Verb v;
  v.kind = VerbKind::kOpenConn;
  const Bytes f = encode_verb(v);
  ASSERT_EQ(f.size(), kMinFrameBytes);
  EXPECT_EQ(load_le<std::uint16_t>(f.data()), 0xFA57);
  EXPECT_EQ(std::to_integer<int>(f[2]), 1);
  EXPECT_EQ(std::to_integer<int>(f[3]), 0x01);
  EXPECT_TRUE(std::all_of(f.begin() + 4, f.end(), [](std::byte b) { return b == std::byte{0}; }));
}

TEST(Verb, FarviewParamBlock) {
  Verb v;
  v.kind = VerbKind::kFarview;
  v.params = {3, 0x07, 0x40, 512};
  const Bytes f = encode_verb(v);
  EXPECT_EQ(load_le<std::uint16_t>(f.data() + 28), 4);
  EXPECT_EQ(f.size(), kMinFrameBytes + 32);
  EXPECT_EQ(load_le<std::uint64_t>(f.data() + 32 + 24), 512u);
}

TEST(Verb, ReadRoundTrip) {
  Verb v;
  v.kind = VerbKind::kRdmaRead;
  v.vaddr = 2097152;
  v.length = 4096;
  EXPECT_EQ(decode_verb(encode_verb(v)), v);
}

TEST(Verb, RandomRoundTrip) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10000; ++i) {
    const Verb v = random_verb(rng);
    const Bytes f = encode_verb(v);
    ASSERT_EQ(decode_verb(f), v);
    ASSERT_EQ(encode_verb(decode_verb(f)), f);
  }
}

TEST(Verb, EncodeRejectsBrokenInvariants) {
  Verb v;
  v.kind = VerbKind::kFarview;
  v.params.assign(65, 0);
  EXPECT_THROW(encode_verb(v), Error);
  Verb r;
  r.kind = VerbKind::kRdmaRead;
  r.params = {1};
  EXPECT_THROW(encode_verb(r), Error);
  Verb o;
  o.kind = VerbKind::kRdmaRead;
  o.vaddr = ~0ull;
  o.length = 2;
  EXPECT_THROW(encode_verb(o), Error);
  Verb p;
  p.kind = VerbKind::kRdmaRead;
  p.payload = Bytes(3);
  EXPECT_THROW(encode_verb(p), Error);
}

TEST(Verb, DecodeErrors) {
  Verb v;
  v.kind = VerbKind::kRdmaWrite;
  v.payload = Bytes(10, std::byte{1});
  Bytes f = encode_verb(v);

  Bytes bad_kind = f;
  bad_kind[3] = std::byte{0xFF};
  try {
    decode_verb(bad_kind);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProtocol);
  }
  Bytes bad_magic = f;
  bad_magic[0] = std::byte{0};
  EXPECT_THROW(decode_verb(bad_magic), Error);

  // Every truncation is a framing error, never a partial verb.
  for (std::size_t n = 4; n < f.size(); ++n) {
    try {
      decode_verb(ByteSpan(f).first(n));
      FAIL() << n;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kFraming) << n;
    }
  }
  // Payload length claiming more than the buffer holds.
  Bytes longer = f;
  store_le<std::uint32_t>(longer.data() + kFrameHeaderBytes, 1000);
  try {
    decode_verb(longer);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFraming);
  }
}

TEST(Packetize, SplitsAtMtu) {
  const Bytes payload(2500, std::byte{7});
  const auto pk = packetize(1, 9, payload, 1024);
  ASSERT_EQ(pk.size(), 3u);
  EXPECT_EQ(pk[0].valid_bytes(), 1024);
  EXPECT_EQ(pk[1].valid_bytes(), 1024);
  EXPECT_EQ(pk[2].valid_bytes(), 452);
  for (std::uint32_t i = 0; i < 3; ++i) {
    EXPECT_EQ(pk[i].seq, i);
    EXPECT_EQ(pk[i].last(), i == 2);
  }
}

TEST(Packetize, Boundaries) {
  EXPECT_EQ(packetize(1, 1, Bytes(1024), 1024).size(), 1u);
  EXPECT_TRUE(packetize(1, 1, Bytes(1024), 1024)[0].last());
  const auto empty = packetize(1, 1, Bytes{}, 1024);
  ASSERT_EQ(empty.size(), 1u);
  EXPECT_EQ(empty[0].valid_bytes(), 0);
  EXPECT_TRUE(empty[0].last());
}

TEST(Packetize, PacketHeaderRoundTrip) {
  Packet p{5, 6, 7, kFlagLast | kFlagData, Bytes(33, std::byte{1})};
  const Bytes b = encode_packet(p);
  ASSERT_EQ(b.size(), kPacketHeaderBytes + 33);
  const auto h = decode_packet_header(b);
  EXPECT_EQ(h.qpair, 5u);
  EXPECT_EQ(h.msg_id, 6u);
  EXPECT_EQ(h.seq, 7u);
  EXPECT_EQ(h.flags, p.flags);
  EXPECT_EQ(h.valid_bytes, 33);
}

TEST(Reassemble, PermutationInvariant) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Bytes payload = test::random_bytes(rng, rng() % (1 << 20));
    auto pk = packetize(1, 2, payload, 1024);
    std::shuffle(pk.begin(), pk.end(), rng);
    ASSERT_EQ(reassemble(pk), payload);
  }
}

TEST(Reassemble, SingleAndReordered) {
  const Bytes payload(2500, std::byte{3});
  auto pk = packetize(1, 2, payload, 1024);
  EXPECT_EQ(reassemble({pk[2], pk[0], pk[1]}), reassemble(pk));
  EXPECT_EQ(reassemble({packetize(1, 1, Bytes(5), 1024)[0]}), Bytes(5));
}

TEST(Reassemble, Errors) {
  auto pk = packetize(1, 2, Bytes(2500), 1024);
  try {
    reassemble({pk[0], pk[2]});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIncompleteMessage);
  }
  Packet dup = pk[1];
  dup.payload[0] = std::byte{9};
  try {
    reassemble({pk[0], pk[1], dup, pk[2]});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProtocol);
  }
}

TEST(Reassembler, InterleavedQueuePairsStaySeparate) {
  std::mt19937_64 rng(11);
  const Bytes a = test::random_bytes(rng, 5000), b = test::random_bytes(rng, 7000);
  auto pa = packetize(1, 1, a, 1024), pb = packetize(2, 1, b, 1024);
  std::vector<Packet> all(pa.begin(), pa.end());
  all.insert(all.end(), pb.begin(), pb.end());
  std::shuffle(all.begin(), all.end(), rng);
  Reassembler r;
  std::map<QueuePairId, Bytes> done;
  for (auto& p : all)
    if (auto m = r.add(p)) done[m->qpair] = m->payload;
  EXPECT_EQ(done[1], a);
  EXPECT_EQ(done[2], b);
  EXPECT_EQ(r.pending_messages(), 0u);
}

TEST(Credits, ConsumeAndGrant) {
  CreditState c{1, 8};
  auto next = consume_credit(c);
  ASSERT_TRUE(next);
  EXPECT_EQ(next->available, 0u);
  EXPECT_FALSE(consume_credit(*next));
  EXPECT_EQ(grant_credits({0, 8}, 8).available, 8u);
  try {
    grant_credits({5, 8}, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProtocol);
  }
}

TEST(Credits, SimulatedWindowNeverExceeded) {
  // Sender/receiver loop with a lossy-in-time grant channel.
  std::mt19937_64 rng(5);
  CreditState sender{8, 8};
  std::uint32_t in_flight = 0, max_in_flight = 0, received_unacked = 0;
  std::deque<std::uint32_t> grants;
  for (int step = 0; step < 100000; ++step) {
    if (rng() % 2) {
      if (auto n = consume_credit(sender)) {
        sender = *n;
        ++in_flight;
        max_in_flight = std::max(max_in_flight, in_flight);
      }
    }
    if (in_flight > 0 && rng() % 2) {
      --in_flight;
      if (++received_unacked == 4) {
        grants.push_back(received_unacked);
        received_unacked = 0;
      }
    }
    if (!grants.empty() && rng() % 3 == 0) {
      sender = grant_credits(sender, grants.front());
      grants.pop_front();
    }
  }
  EXPECT_LE(max_in_flight, 8u);
}

TEST(Endpoint, VerbsAndDataOverSocket) {
  auto [a, b] = socket_pair();
  Endpoint client(std::move(a), 256, 4);
  Endpoint server(std::move(b), 256, 4);
  std::mt19937_64 rng(9);
  const Bytes big = test::random_bytes(rng, 100000);
  std::thread t([&] {
    Verb v = server.receive_verb();
    Verb r;
    r.kind = VerbKind::kResponse;
    r.msg_id = v.msg_id;
    r.payload = v.payload;
    server.send_verb(r);
  });
  Verb w;
  w.kind = VerbKind::kRdmaWrite;
  w.msg_id = client.next_message_id();
  w.payload = big;
  client.send_verb(w);
  Verb r = client.receive_verb();
  t.join();
  EXPECT_EQ(r.payload, big);
  EXPECT_LE(client.stats().max_in_flight, 4u);
  EXPECT_LE(server.stats().max_in_flight, 4u);
}

TEST(Endpoint, WindowBoundUnderStress) {
  auto [a, b] = socket_pair();
  Endpoint tx(std::move(a), 64, 16);
  Endpoint rx(std::move(b), 64, 16);
  constexpr std::uint32_t kPackets = 20000;
  std::thread t([&] {
    const auto id = tx.next_message_id();
    for (std::uint32_t i = 0; i < kPackets; ++i) {
      Packet p{0, id, i, static_cast<std::uint8_t>(kFlagData | (i + 1 == kPackets ? kFlagLast : 0)), Bytes(64)};
      tx.send_packet(p);
      ASSERT_LE(tx.in_flight(), 16u);
    }
    tx.flush();
    // Keep reading so the final grant is consumed.
    tx.receive();
  });
  auto in = rx.receive();
  ASSERT_TRUE(in);
  EXPECT_TRUE(in->data);
  EXPECT_EQ(in->packets, kPackets);
  EXPECT_EQ(in->payload.size(), kPackets * 64u);
  rx.socket().shutdown_both();
  t.join();
  EXPECT_LE(tx.stats().max_in_flight, 16u);
  EXPECT_EQ(tx.stats().max_in_flight, 16u);
}

TEST(NodeAddress, Parse) {
  const auto a = NodeAddress::parse("10.0.0.1:9000");
  EXPECT_EQ(a.host, "10.0.0.1");
  EXPECT_EQ(a.port, 9000);
  EXPECT_EQ(a.to_string(), "10.0.0.1:9000");
  EXPECT_THROW(NodeAddress::parse("nohost"), Error);
}
