#pragma once

#include <array>
#include <cstdint>

#include "farview/common.hpp"

namespace farview::ops {

struct CryptoParams {
  std::array<std::uint8_t, 16> key{};
  std::array<std::uint8_t, 12> nonce{};
  std::uint32_t initial_counter = 0;

  bool operator==(const CryptoParams&) const = default;
};

/// AES-128 block encryption (FIPS-197), table driven.
class Aes128 {
 public:
  explicit Aes128(const std::array<std::uint8_t, 16>& key);
  void encrypt_block(const std::uint8_t in[16], std::uint8_t out[16]) const;

 private:
  std::array<std::uint32_t, 44> rk_;
};

/// CTR keystream. Counter block = nonce(96) || counter(32) big-endian; block
/// n of the stream uses counter initial_counter + n (mod 2^32).
class CtrCipher {
 public:
  explicit CtrCipher(const CryptoParams& cp);

  /// XORs the keystream into `data`, which sits at byte `stream_offset` of
  /// the stream.
  void apply(MutableByteSpan data, std::uint64_t stream_offset) const;

 private:
  Aes128 aes_;
  CryptoParams cp_;
};

/// Encrypts or decrypts; the transform is its own inverse.
Bytes aes_ctr_transform(ByteSpan bytes, const CryptoParams& cp);

}  // namespace farview::ops
