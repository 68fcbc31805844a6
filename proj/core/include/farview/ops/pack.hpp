#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "farview/ops/stream.hpp"
#include "farview/ops/tuple.hpp"

namespace farview::ops {

/// Concatenates projected bytes densely into 64-byte words through a carry
/// buffer. Full words go downstream as they fill; finish() flushes the
/// valid prefix of the final word.
class Packer {
 public:
  explicit Packer(ByteSink& out) : out_(out) {}

  void add(ByteSpan piece);
  void add_projected(const std::byte* tuple, const Schema& schema, ColumnMask proj);
  void finish();

  std::uint64_t valid_bytes() const { return valid_; }
  std::uint64_t words() const { return words_; }

 private:
  ByteSink& out_;
  std::array<std::byte, kChannelWord> carry_{};
  std::size_t carry_len_ = 0;
  std::uint64_t valid_ = 0;
  std::uint64_t words_ = 0;
};

struct PackedStream {
  Bytes words;  // word_count * 64 bytes, final word zero padded
  std::uint64_t valid_bytes = 0;

  std::size_t word_count() const { return words.size() / kChannelWord; }
  ByteSpan valid() const { return ByteSpan(words).first(valid_bytes); }
};

/// Packs each tuple's flags.proj columns. Lanes are merged round-robin
/// (one tuple per non-empty lane per turn) before packing.
PackedStream pack_stream(const std::vector<std::vector<AnnotatedTuple>>& lanes);
PackedStream pack_stream(const std::vector<AnnotatedTuple>& tuples);

/// Splits a dense stream back into rows of `row_bytes`.
std::vector<Bytes> unpack_rows(ByteSpan valid, std::uint32_t row_bytes);

}  // namespace farview::ops
