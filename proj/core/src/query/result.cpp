#include "farview/query/result.hpp"

#include <string>
#include <unordered_map>
#include <unordered_set>

#include "farview/ops/regex.hpp"

namespace farview {

Bytes encode_trailer(std::uint32_t row_bytes, ByteSpan overflow_rows) {
  Bytes out;
  const std::uint32_t n = row_bytes ? static_cast<std::uint32_t>(overflow_rows.size() / row_bytes) : 0;
  if (n == 0) return out;
  append_le(out, n);
  append_le(out, row_bytes);
  out.insert(out.end(), overflow_rows.begin(), overflow_rows.end());
  return out;
}

Bytes decode_trailer(ByteSpan trailer, std::uint32_t row_bytes) {
  if (trailer.empty()) return {};
  if (trailer.size() < 8) fail(ErrorCode::kProtocol, "truncated response trailer");
  const auto n = load_le<std::uint32_t>(trailer.data());
  const auto w = load_le<std::uint32_t>(trailer.data() + 4);
  if (n == 0) return {};
  if (w != row_bytes) fail(ErrorCode::kProtocol, "trailer entry width does not match the result rows");
  if (trailer.size() - 8 != std::uint64_t{n} * w) fail(ErrorCode::kProtocol, "trailer length mismatch");
  return Bytes(trailer.begin() + 8, trailer.end());
}

namespace {

std::string key_string(const std::byte* p, std::size_t n) { return std::string(reinterpret_cast<const char*>(p), n); }

}  // namespace

Bytes merge_overflow(const ResultShape& shape, const Query& q, ByteSpan main, ByteSpan overflow) {
  Bytes out(main.begin(), main.end());
  if (overflow.empty()) return out;
  const std::size_t rb = shape.row_bytes;
  if (shape.grouped) {
    const auto spec = q.aggregate();
    const std::size_t kb = shape.groups.key_bytes;
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t at = 0; at < out.size(); at += rb) index.emplace(key_string(out.data() + at, kb), at);
    for (std::size_t at = 0; at < overflow.size(); at += rb) {
      const std::byte* row = overflow.data() + at;
      auto [it, fresh] = index.emplace(key_string(row, kb), out.size());
      if (fresh)
        out.insert(out.end(), row, row + rb);
      else
        ops::merge_group_row(shape.groups, spec, out.data() + it->second, row);
    }
    return out;
  }
  if (shape.row_key == 0) {
    out.insert(out.end(), overflow.begin(), overflow.end());
    return out;
  }
  const ops::KeyExtractor key(shape.row_schema, shape.row_key);
  std::string k(key.bytes(), '\0');
  std::unordered_set<std::string> seen;
  auto key_of = [&](const std::byte* row) {
    key.extract(row, reinterpret_cast<std::byte*>(k.data()));
    return k;
  };
  for (std::size_t at = 0; at < out.size(); at += rb) seen.insert(key_of(out.data() + at));
  for (std::size_t at = 0; at < overflow.size(); at += rb) {
    const std::byte* row = overflow.data() + at;
    if (seen.insert(key_of(row)).second) out.insert(out.end(), row, row + rb);
  }
  return out;
}

RawResult execute_cpu(const Query& q, const Schema& schema, ByteSpan table, std::uint64_t stream_offset) {
  validate_query(q, schema);
  const std::size_t tb = schema.tuple_bytes();
  if (table.size() % tb != 0) fail(ErrorCode::kParse, "table ends with a partial tuple");
  Bytes plain;
  if (q.decrypt) {
    plain.assign(table.begin(), table.end());
    ops::CtrCipher(*q.decrypt).apply(plain, stream_offset);
    table = plain;
  }
  RawResult r;
  const std::size_t rows = table.size() / tb;
  switch (q.pipeline) {
    case PipelineId::kSelect:
    case PipelineId::kDecryptSelectEncrypt:
    case PipelineId::kEncryptRead: {
      const ops::CompiledPredicate pred(q.predicate, schema);
      for (std::size_t i = 0; i < rows; ++i) {
        const std::byte* t = table.data() + i * tb;
        if (pred(t)) ops::append_projected(r.main, t, schema, q.proj);
      }
      break;
    }
    case PipelineId::kDistinct: {
      const ops::KeyExtractor key(schema, q.key);
      std::unordered_set<std::string> seen;
      std::string k(key.bytes(), '\0');
      for (std::size_t i = 0; i < rows; ++i) {
        const std::byte* t = table.data() + i * tb;
        key.extract(t, reinterpret_cast<std::byte*>(k.data()));
        if (seen.insert(k).second) ops::append_projected(r.main, t, schema, q.proj);
      }
      break;
    }
    case PipelineId::kGroupBy: {
      const auto spec = q.aggregate();
      const auto layout = ops::GroupRowLayout::of(spec, schema);
      const ops::KeyExtractor key(schema, q.key);
      std::unordered_map<std::string, std::size_t> index;
      Bytes single(layout.row_bytes);
      for (std::size_t i = 0; i < rows; ++i) {
        const std::byte* t = table.data() + i * tb;
        ops::init_group_row(layout, spec, schema, key, t, single.data());
        auto [it, fresh] = index.emplace(key_string(single.data(), layout.key_bytes), r.main.size());
        if (fresh)
          r.main.insert(r.main.end(), single.begin(), single.end());
        else
          ops::merge_group_row(layout, spec, r.main.data() + it->second, single.data());
      }
      break;
    }
    case PipelineId::kRegex: {
      const auto re = ops::Regex::compile(q.pattern);
      const std::uint32_t off = schema.offset(q.string_column), w = schema.width(q.string_column);
      for (std::size_t i = 0; i < rows; ++i) {
        const std::byte* t = table.data() + i * tb;
        if (re.search(string_cell(ByteSpan(t + off, w)))) ops::append_projected(r.main, t, schema, q.proj);
      }
      break;
    }
  }
  if (q.encrypt) ops::CtrCipher(*q.encrypt).apply(r.main, 0);
  return r;
}

}  // namespace farview
