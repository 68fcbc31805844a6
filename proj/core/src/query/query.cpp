#include "farview/query/query.hpp"

#include <algorithm>
#include <bit>

namespace farview {

const char* pipeline_name(PipelineId id) {
  switch (id) {
    case PipelineId::kSelect: return "select";
    case PipelineId::kDistinct: return "distinct";
    case PipelineId::kGroupBy: return "group_by";
    case PipelineId::kRegex: return "regex";
    case PipelineId::kDecryptSelectEncrypt: return "decrypt_select_encrypt";
    case PipelineId::kEncryptRead: return "encrypt_read";
  }
  return "unknown";
}

Query Query::select(ColumnMask proj, ops::SelectionPredicate predicate) {
  Query q;
  q.pipeline = PipelineId::kSelect;
  q.proj = proj;
  q.predicate = std::move(predicate);
  return q;
}

Query Query::distinct(ColumnMask proj, ColumnMask key) {
  Query q;
  q.pipeline = PipelineId::kDistinct;
  q.proj = proj;
  q.key = key;
  return q;
}

Query Query::group_by(ColumnMask key, std::vector<ops::Measure> measures) {
  Query q;
  q.pipeline = PipelineId::kGroupBy;
  q.key = key;
  q.measures = std::move(measures);
  return q;
}

Query Query::regex(ColumnMask proj, std::uint32_t string_column, std::string pattern) {
  Query q;
  q.pipeline = PipelineId::kRegex;
  q.proj = proj;
  q.string_column = string_column;
  q.pattern = std::move(pattern);
  return q;
}

Query Query::decrypt_select_encrypt(ColumnMask proj, ops::SelectionPredicate predicate, ops::CryptoParams decrypt,
                                    ops::CryptoParams encrypt) {
  Query q = select(proj, std::move(predicate));
  q.pipeline = PipelineId::kDecryptSelectEncrypt;
  q.decrypt = decrypt;
  q.encrypt = encrypt;
  return q;
}

Query Query::encrypt_read(ColumnMask proj, ops::CryptoParams encrypt) {
  Query q;
  q.pipeline = PipelineId::kEncryptRead;
  q.proj = proj;
  q.encrypt = encrypt;
  return q;
}

ColumnMask Query::needed_columns() const {
  switch (pipeline) {
    case PipelineId::kSelect:
    case PipelineId::kDecryptSelectEncrypt: return proj | sel_mask();
    case PipelineId::kDistinct: return proj | key;
    case PipelineId::kGroupBy: {
      ColumnMask m = key;
      for (const auto& me : measures) m |= ColumnMask{1} << me.column;
      return m;
    }
    case PipelineId::kRegex: return proj | (ColumnMask{1} << string_column);
    case PipelineId::kEncryptRead: return proj;
  }
  return proj;
}

namespace {

constexpr std::size_t kMaxTerms = 7;

void put_crypto(std::vector<std::uint64_t>& w, const ops::CryptoParams& cp) {
  w.push_back(load_le<std::uint64_t>(reinterpret_cast<const std::byte*>(cp.key.data())));
  w.push_back(load_le<std::uint64_t>(reinterpret_cast<const std::byte*>(cp.key.data() + 8)));
  w.push_back(load_le<std::uint64_t>(reinterpret_cast<const std::byte*>(cp.nonce.data())));
  w.push_back(std::uint64_t{load_le<std::uint32_t>(reinterpret_cast<const std::byte*>(cp.nonce.data() + 8))} |
              (std::uint64_t{cp.initial_counter} << 32));
}

ops::CryptoParams get_crypto(std::span<const std::uint64_t> w) {
  ops::CryptoParams cp;
  store_le(reinterpret_cast<std::byte*>(cp.key.data()), w[0]);
  store_le(reinterpret_cast<std::byte*>(cp.key.data() + 8), w[1]);
  store_le(reinterpret_cast<std::byte*>(cp.nonce.data()), w[2]);
  store_le(reinterpret_cast<std::byte*>(cp.nonce.data() + 8), static_cast<std::uint32_t>(w[3]));
  cp.initial_counter = static_cast<std::uint32_t>(w[3] >> 32);
  return cp;
}

void put_select(std::vector<std::uint64_t>& w, const Query& q) {
  auto terms = q.predicate.terms;
  if (terms.size() > kMaxTerms) fail(ErrorCode::kRequest, "at most 7 predicate terms");
  ColumnMask sel = 0;
  for (const auto& t : terms) {
    if (t.column >= kMaxColumns) fail(ErrorCode::kRequest, "predicate column out of range");
    if (sel & (ColumnMask{1} << t.column)) fail(ErrorCode::kRequest, "one predicate term per column");
    sel |= ColumnMask{1} << t.column;
  }
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.column < b.column; });
  std::uint64_t codes = static_cast<std::uint64_t>(q.predicate.combiner);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::uint64_t code = static_cast<std::uint64_t>(terms[i].cmp) | (static_cast<std::uint64_t>(terms[i].type) << 4);
    codes |= code << (4 + 8 * i);
  }
  w.push_back(q.proj);
  w.push_back(sel);
  w.push_back(codes);
  for (const auto& t : terms) w.push_back(t.constant);
}

std::size_t get_select(std::span<const std::uint64_t> w, Query& q) {
  if (w.size() < 4) fail(ErrorCode::kRequest, "select needs proj, sel and comparator words");
  q.proj = w[1];
  const ColumnMask sel = w[2];
  const std::uint64_t codes = w[3];
  const auto n = static_cast<std::size_t>(std::popcount(sel));
  if (n > kMaxTerms) fail(ErrorCode::kRequest, "at most 7 predicate terms");
  if (w.size() < 4 + n) fail(ErrorCode::kRequest, "missing predicate constants");
  const auto combiner = codes & 0xF;
  if (combiner > 1) fail(ErrorCode::kRequest, "unknown combiner");
  q.predicate.combiner = static_cast<ops::Combiner>(combiner);
  std::size_t i = 0;
  for_each_column(sel, [&](std::size_t c) {
    const auto code = (codes >> (4 + 8 * i)) & 0xFF;
    const auto cmp = code & 0xF, type = code >> 4;
    if (cmp > 5) fail(ErrorCode::kRequest, "unknown comparator");
    if (type > 2) fail(ErrorCode::kRequest, "unknown value type");
    q.predicate.terms.push_back(ops::PredicateTerm{static_cast<std::uint32_t>(c), static_cast<ops::Comparator>(cmp),
                                                   static_cast<ops::ValueType>(type), w[4 + i]});
    ++i;
  });
  return 4 + n;
}

void expect_words(std::span<const std::uint64_t> w, std::size_t n, const char* what) {
  if (w.size() != n) fail(ErrorCode::kRequest, std::string(what) + ": wrong parameter word count");
}

}  // namespace

EncodedQuery encode_query(const Query& q) {
  EncodedQuery e;
  auto& w = e.params;
  w.push_back(static_cast<std::uint64_t>(q.pipeline) | (static_cast<std::uint64_t>(q.addressing) << 16) |
              (std::uint64_t{q.vectorize} << 18) | (std::uint64_t{q.server_cpu} << 19));
  switch (q.pipeline) {
    case PipelineId::kSelect:
      put_select(w, q);
      break;
    case PipelineId::kDistinct:
      w.push_back(q.proj);
      w.push_back(q.key);
      break;
    case PipelineId::kGroupBy:
      w.push_back(q.key);
      for (const auto& m : q.measures) {
        if (m.column > 0xFF) fail(ErrorCode::kRequest, "measure column out of range");
        w.push_back(m.column | (std::uint64_t(m.fn) << 8) | (std::uint64_t(m.type) << 12));
      }
      break;
    case PipelineId::kRegex:
      w.push_back(q.proj);
      w.push_back(q.pattern.size());
      w.push_back(q.string_column);
      e.payload.assign(as_bytes(q.pattern).begin(), as_bytes(q.pattern).end());
      break;
    case PipelineId::kDecryptSelectEncrypt:
      if (!q.decrypt || !q.encrypt) fail(ErrorCode::kRequest, "decrypt_select_encrypt needs both key sets");
      put_select(w, q);
      put_crypto(w, *q.decrypt);
      put_crypto(w, *q.encrypt);
      break;
    case PipelineId::kEncryptRead:
      if (!q.encrypt) fail(ErrorCode::kRequest, "encrypt_read needs a key set");
      w.push_back(q.proj);
      put_crypto(w, *q.encrypt);
      break;
    default:
      fail(ErrorCode::kUnknownPipeline, "pipeline id not registered");
  }
  if (w.size() > 64) fail(ErrorCode::kRequest, "too many parameter words");
  return e;
}

Query decode_query(std::span<const std::uint64_t> w, ByteSpan payload) {
  if (w.empty()) fail(ErrorCode::kRequest, "missing pipeline word");
  Query q;
  const auto id = static_cast<std::uint16_t>(w[0] & 0xFFFF);
  if (id < 1 || id > 6) fail(ErrorCode::kUnknownPipeline, "pipeline id " + std::to_string(id) + " not registered");
  if (w[0] >> 20) fail(ErrorCode::kRequest, "reserved pipeline word bits set");
  q.pipeline = static_cast<PipelineId>(id);
  const auto addressing = (w[0] >> 16) & 3;
  if (addressing > 2) fail(ErrorCode::kRequest, "unknown addressing mode");
  q.addressing = static_cast<Addressing>(addressing);
  q.vectorize = (w[0] >> 18) & 1;
  q.server_cpu = (w[0] >> 19) & 1;
  const bool has_payload = q.pipeline == PipelineId::kRegex;
  if (!has_payload && !payload.empty()) fail(ErrorCode::kRequest, "unexpected payload");
  switch (q.pipeline) {
    case PipelineId::kSelect:
      expect_words(w, get_select(w, q), "select");
      break;
    case PipelineId::kDistinct:
      expect_words(w, 3, "distinct");
      q.proj = w[1];
      q.key = w[2];
      break;
    case PipelineId::kGroupBy:
      if (w.size() < 3) fail(ErrorCode::kRequest, "group_by needs a key and at least one measure");
      q.key = w[1];
      for (std::size_t i = 2; i < w.size(); ++i) {
        if (w[i] >> 16) fail(ErrorCode::kRequest, "reserved measure bits set");
        const auto fn = (w[i] >> 8) & 0xF, type = (w[i] >> 12) & 0xF;
        if (fn > 4) fail(ErrorCode::kRequest, "unknown aggregate");
        if (type > 2) fail(ErrorCode::kRequest, "unknown value type");
        q.measures.push_back(ops::Measure{static_cast<std::uint32_t>(w[i] & 0xFF), static_cast<ops::AggFn>(fn),
                                          static_cast<ops::ValueType>(type)});
      }
      break;
    case PipelineId::kRegex:
      expect_words(w, 4, "regex");
      q.proj = w[1];
      if (w[2] != payload.size()) fail(ErrorCode::kRequest, "pattern length does not match payload");
      if (w[3] >= kMaxColumns) fail(ErrorCode::kRequest, "string column out of range");
      q.string_column = static_cast<std::uint32_t>(w[3]);
      q.pattern.assign(reinterpret_cast<const char*>(payload.data()), payload.size());
      break;
    case PipelineId::kDecryptSelectEncrypt: {
      const std::size_t n = get_select(w, q);
      expect_words(w, n + 8, "decrypt_select_encrypt");
      q.decrypt = get_crypto(w.subspan(n, 4));
      q.encrypt = get_crypto(w.subspan(n + 4, 4));
      break;
    }
    case PipelineId::kEncryptRead:
      expect_words(w, 6, "encrypt_read");
      q.proj = w[1];
      q.encrypt = get_crypto(w.subspan(2, 4));
      break;
  }
  return q;
}

void validate_query(const Query& q, const Schema& schema) {
  auto check = [&](ColumnMask m, const char* what) {
    if (m & ~schema.all_columns()) fail(ErrorCode::kRequest, std::string(what) + " names a column outside the schema");
  };
  if (q.pipeline != PipelineId::kGroupBy) {
    if (q.proj == 0) fail(ErrorCode::kRequest, "projection is empty");
    check(q.proj, "projection");
  }
  switch (q.pipeline) {
    case PipelineId::kSelect:
    case PipelineId::kDecryptSelectEncrypt:
      check(q.sel_mask(), "predicate");
      (void)ops::CompiledPredicate(q.predicate, schema);
      break;
    case PipelineId::kDistinct:
      if (q.key == 0) fail(ErrorCode::kRequest, "distinct key is empty");
      check(q.key, "distinct key");
      if (q.key & ~q.proj) fail(ErrorCode::kRequest, "distinct key must be projected");
      break;
    case PipelineId::kGroupBy:
      check(q.key, "group key");
      try {
        q.aggregate().validate(schema);
      } catch (const Error& e) {
        fail(ErrorCode::kRequest, e.what());
      }
      break;
    case PipelineId::kRegex:
      if (q.string_column >= schema.columns()) fail(ErrorCode::kRequest, "string column outside the schema");
      if (schema.width(q.string_column) < 2) fail(ErrorCode::kRequest, "string column narrower than its length prefix");
      break;
    case PipelineId::kEncryptRead:
      break;
  }
}

std::string_view string_cell(ByteSpan column) {
  const std::size_t n = std::min<std::size_t>(load_le<std::uint16_t>(column.data()), column.size() - 2);
  return {reinterpret_cast<const char*>(column.data() + 2), n};
}

void put_string_cell(MutableByteSpan column, std::string_view s) {
  if (s.size() + 2 > column.size()) fail(ErrorCode::kArgument, "string does not fit its column");
  store_le<std::uint16_t>(column.data(), static_cast<std::uint16_t>(s.size()));
  std::memcpy(column.data() + 2, s.data(), s.size());
  std::memset(column.data() + 2 + s.size(), 0, column.size() - 2 - s.size());
}

Schema project_schema(const Schema& schema, ColumnMask proj) {
  std::vector<std::uint32_t> widths;
  for_each_column(proj, [&](std::size_t c) { widths.push_back(schema.width(c)); });
  return Schema(std::move(widths));
}

ColumnMask remap_mask(ColumnMask mask, ColumnMask proj) {
  ColumnMask out = 0;
  std::size_t i = 0;
  for_each_column(proj, [&](std::size_t c) {
    if (mask & (ColumnMask{1} << c)) out |= ColumnMask{1} << i;
    ++i;
  });
  return out;
}

ResultShape result_shape(const Query& q, const Schema& schema) {
  ResultShape s;
  if (q.pipeline == PipelineId::kGroupBy) {
    s.grouped = true;
    s.groups = ops::GroupRowLayout::of(q.aggregate(), schema);
    s.row_bytes = s.groups.row_bytes;
    return s;
  }
  s.row_schema = project_schema(schema, q.proj);
  s.row_bytes = s.row_schema.tuple_bytes();
  if (q.pipeline == PipelineId::kDistinct) s.row_key = remap_mask(q.key, q.proj);
  return s;
}

}  // namespace farview
