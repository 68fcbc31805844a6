#include "farview/ops/pack.hpp"

#include <cstring>

namespace farview::ops {

void Packer::add(ByteSpan piece) {
  valid_ += piece.size();
  std::size_t at = 0;
  if (carry_len_ > 0) {
    const std::size_t n = std::min(piece.size(), kChannelWord - carry_len_);
    std::memcpy(carry_.data() + carry_len_, piece.data(), n);
    carry_len_ += n;
    at = n;
    if (carry_len_ < kChannelWord) return;
    out_.write(carry_);
    ++words_;
    carry_len_ = 0;
  }
  const std::size_t full = (piece.size() - at) / kChannelWord * kChannelWord;
  if (full > 0) {
    out_.write(piece.subspan(at, full));
    words_ += full / kChannelWord;
    at += full;
  }
  carry_len_ = piece.size() - at;
  std::memcpy(carry_.data(), piece.data() + at, carry_len_);
}

void Packer::add_projected(const std::byte* tuple, const Schema& schema, ColumnMask proj) {
  for_each_column(proj, [&](std::size_t c) { add(ByteSpan(tuple + schema.offset(c), schema.width(c))); });
}

void Packer::finish() {
  if (carry_len_ > 0) {
    out_.write(ByteSpan(carry_.data(), carry_len_));
    ++words_;
    carry_len_ = 0;
  }
  out_.finish();
}

PackedStream pack_stream(const std::vector<std::vector<AnnotatedTuple>>& lanes) {
  CollectSink sink;
  Packer packer(sink);
  std::vector<std::size_t> pos(lanes.size(), 0);
  for (bool progress = true; progress;) {
    progress = false;
    for (std::size_t l = 0; l < lanes.size(); ++l) {
      if (pos[l] >= lanes[l].size()) continue;
      const auto& t = lanes[l][pos[l]++];
      packer.add_projected(t.bytes.data(), *t.schema, t.flags.proj);
      progress = true;
    }
  }
  packer.finish();
  PackedStream out;
  out.valid_bytes = packer.valid_bytes();
  out.words = sink.take();
  out.words.resize(packer.words() * kChannelWord);
  return out;
}

PackedStream pack_stream(const std::vector<AnnotatedTuple>& tuples) {
  return pack_stream(std::vector<std::vector<AnnotatedTuple>>{tuples});
}

std::vector<Bytes> unpack_rows(ByteSpan valid, std::uint32_t row_bytes) {
  if (row_bytes == 0) fail(ErrorCode::kArgument, "row_bytes must be positive");
  if (valid.size() % row_bytes != 0) fail(ErrorCode::kParse, "packed stream is not a whole number of rows");
  std::vector<Bytes> rows;
  rows.reserve(valid.size() / row_bytes);
  for (std::size_t at = 0; at < valid.size(); at += row_bytes)
    rows.emplace_back(valid.begin() + static_cast<std::ptrdiff_t>(at),
                      valid.begin() + static_cast<std::ptrdiff_t>(at + row_bytes));
  return rows;
}

}  // namespace farview::ops
