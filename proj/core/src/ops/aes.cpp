#include "farview/ops/aes.hpp"

#include <cstring>

namespace farview::ops {

namespace {

struct Tables {
  std::uint8_t sbox[256];
  std::uint32_t te[4][256];

  Tables() {
    // S-box from the multiplicative inverse in GF(2^8) and the affine map.
    std::uint8_t p = 1, q = 1;
    do {
      p = static_cast<std::uint8_t>(p ^ (p << 1) ^ (p & 0x80 ? 0x1B : 0));
      q ^= static_cast<std::uint8_t>(q << 1);
      q ^= static_cast<std::uint8_t>(q << 2);
      q ^= static_cast<std::uint8_t>(q << 4);
      if (q & 0x80) q ^= 0x09;
      const std::uint8_t x = static_cast<std::uint8_t>(q ^ rotl8(q, 1) ^ rotl8(q, 2) ^ rotl8(q, 3) ^ rotl8(q, 4));
      sbox[p] = x ^ 0x63;
    } while (p != 1);
    sbox[0] = 0x63;
    for (int i = 0; i < 256; ++i) {
      const std::uint8_t s = sbox[i];
      const std::uint8_t s2 = xtime(s);
      const std::uint8_t s3 = s2 ^ s;
      const std::uint32_t w = (std::uint32_t{s2} << 24) | (std::uint32_t{s} << 16) | (std::uint32_t{s} << 8) | s3;
      te[0][i] = w;
      te[1][i] = (w >> 8) | (w << 24);
      te[2][i] = (w >> 16) | (w << 16);
      te[3][i] = (w >> 24) | (w << 8);
    }
  }

  static std::uint8_t rotl8(std::uint8_t x, int s) { return static_cast<std::uint8_t>((x << s) | (x >> (8 - s))); }
  static std::uint8_t xtime(std::uint8_t x) { return static_cast<std::uint8_t>((x << 1) ^ (x & 0x80 ? 0x1B : 0)); }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

void put_be32(std::uint8_t* p, std::uint32_t v) {
  p[0] = static_cast<std::uint8_t>(v >> 24);
  p[1] = static_cast<std::uint8_t>(v >> 16);
  p[2] = static_cast<std::uint8_t>(v >> 8);
  p[3] = static_cast<std::uint8_t>(v);
}

std::uint32_t sub_word(std::uint32_t w) {
  const auto& s = tables().sbox;
  return (std::uint32_t{s[w >> 24]} << 24) | (std::uint32_t{s[(w >> 16) & 0xFF]} << 16) |
         (std::uint32_t{s[(w >> 8) & 0xFF]} << 8) | s[w & 0xFF];
}

}  // namespace

Aes128::Aes128(const std::array<std::uint8_t, 16>& key) {
  for (int i = 0; i < 4; ++i) rk_[i] = be32(key.data() + 4 * i);
  std::uint32_t rcon = 0x01;
  for (int i = 4; i < 44; ++i) {
    std::uint32_t t = rk_[i - 1];
    if (i % 4 == 0) {
      t = sub_word((t << 8) | (t >> 24)) ^ (rcon << 24);
      rcon = Tables::xtime(static_cast<std::uint8_t>(rcon));
    }
    rk_[i] = rk_[i - 4] ^ t;
  }
}

void Aes128::encrypt_block(const std::uint8_t in[16], std::uint8_t out[16]) const {
  const auto& T = tables();
  std::uint32_t s0 = be32(in) ^ rk_[0], s1 = be32(in + 4) ^ rk_[1], s2 = be32(in + 8) ^ rk_[2],
                s3 = be32(in + 12) ^ rk_[3];
  for (int r = 1; r < 10; ++r) {
    const std::uint32_t* k = &rk_[4 * r];
    const std::uint32_t t0 = T.te[0][s0 >> 24] ^ T.te[1][(s1 >> 16) & 0xFF] ^ T.te[2][(s2 >> 8) & 0xFF] ^
                             T.te[3][s3 & 0xFF] ^ k[0];
    const std::uint32_t t1 = T.te[0][s1 >> 24] ^ T.te[1][(s2 >> 16) & 0xFF] ^ T.te[2][(s3 >> 8) & 0xFF] ^
                             T.te[3][s0 & 0xFF] ^ k[1];
    const std::uint32_t t2 = T.te[0][s2 >> 24] ^ T.te[1][(s3 >> 16) & 0xFF] ^ T.te[2][(s0 >> 8) & 0xFF] ^
                             T.te[3][s1 & 0xFF] ^ k[2];
    const std::uint32_t t3 = T.te[0][s3 >> 24] ^ T.te[1][(s0 >> 16) & 0xFF] ^ T.te[2][(s1 >> 8) & 0xFF] ^
                             T.te[3][s2 & 0xFF] ^ k[3];
    s0 = t0;
    s1 = t1;
    s2 = t2;
    s3 = t3;
  }
  const auto& S = T.sbox;
  auto last = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d, std::uint32_t k) {
    return ((std::uint32_t{S[a >> 24]} << 24) | (std::uint32_t{S[(b >> 16) & 0xFF]} << 16) |
            (std::uint32_t{S[(c >> 8) & 0xFF]} << 8) | S[d & 0xFF]) ^
           k;
  };
  put_be32(out, last(s0, s1, s2, s3, rk_[40]));
  put_be32(out + 4, last(s1, s2, s3, s0, rk_[41]));
  put_be32(out + 8, last(s2, s3, s0, s1, rk_[42]));
  put_be32(out + 12, last(s3, s0, s1, s2, rk_[43]));
}

CtrCipher::CtrCipher(const CryptoParams& cp) : aes_(cp.key), cp_(cp) {}

void CtrCipher::apply(MutableByteSpan data, std::uint64_t stream_offset) const {
  std::uint8_t block[16];
  std::uint8_t ks[16];
  std::memcpy(block, cp_.nonce.data(), 12);
  std::size_t at = 0;
  while (at < data.size()) {
    const std::uint64_t pos = stream_offset + at;
    const auto counter = static_cast<std::uint32_t>(cp_.initial_counter + pos / 16);
    put_be32(block + 12, counter);
    aes_.encrypt_block(block, ks);
    const std::size_t intra = pos % 16;
    const std::size_t n = std::min<std::size_t>(16 - intra, data.size() - at);
    for (std::size_t i = 0; i < n; ++i) data[at + i] ^= std::byte{ks[intra + i]};
    at += n;
  }
}

Bytes aes_ctr_transform(ByteSpan bytes, const CryptoParams& cp) {
  Bytes out(bytes.begin(), bytes.end());
  CtrCipher(cp).apply(out, 0);
  return out;
}

}  // namespace farview::ops
