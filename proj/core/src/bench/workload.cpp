#include "farview/bench/workload.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "farview/ops/aes.hpp"

namespace farview::bench {

namespace {

constexpr std::uint64_t kPassLimit = 1'000'000;  // select: col2 < limit passes
constexpr const char* kRegexPattern = "x\\d+y";

struct KindName {
  QueryKind kind;
  const char* name;
};

constexpr KindName kKinds[] = {
    {QueryKind::kSelect, "select"},
    {QueryKind::kDistinct, "distinct"},
    {QueryKind::kGroupBy, "group_by"},
    {QueryKind::kRegex, "regex"},
    {QueryKind::kEncryptRead, "encrypt_read"},
    {QueryKind::kDecryptSelect, "decrypt_select"},
    {QueryKind::kMultiClientDistinct, "multi_client_distinct"},
    {QueryKind::kProjectionCrossover, "projection_crossover"},
};

// Exactly `k` of `n` flags set, at random positions.
std::vector<bool> choose(std::uint64_t n, std::uint64_t k, std::mt19937_64& rng) {
  std::vector<bool> pass(n, false);
  std::vector<std::uint64_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::uint64_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::uint64_t> d(i, n - 1);
    std::swap(idx[i], idx[d(rng)]);
    pass[idx[i]] = true;
  }
  return pass;
}

std::uint64_t pass_count(const WorkloadSpec& s) {
  return static_cast<std::uint64_t>(std::ceil(static_cast<double>(s.rows) * s.selectivity - 1e-9));
}

// Spreads small ids over the 64-bit key space so keys collide in no
// particular pattern.
std::uint64_t scatter(std::uint64_t id) { return (id + 1) * 0x9E3779B97F4A7C15ull >> 1; }

std::string random_word(std::mt19937_64& rng, std::size_t len) {
  std::uniform_int_distribution<int> letter('a', 'w');
  std::string s(len, 'a');
  for (auto& c : s) c = static_cast<char>(letter(rng));
  return s;
}

ops::SelectionPredicate select_predicate() {
  ops::SelectionPredicate p;
  p.terms.push_back({0, ops::Comparator::kGe, ops::ValueType::kInt, 0});
  p.terms.push_back({2, ops::Comparator::kLt, ops::ValueType::kInt, kPassLimit});
  return p;
}

void fill_numeric(Workload& w, std::mt19937_64& rng, const std::vector<bool>& pass) {
  const auto& s = w.spec;
  const std::uint32_t tb = s.tuple_bytes;
  std::uniform_int_distribution<std::uint64_t> any(0, kPassLimit * 1000);
  std::uniform_int_distribution<std::uint64_t> low(0, kPassLimit - 1);
  std::uniform_int_distribution<std::uint64_t> high(kPassLimit, 2 * kPassLimit);
  for (std::uint64_t r = 0; r < s.rows; ++r) {
    std::byte* t = w.plaintext.data() + r * tb;
    for (std::uint32_t c = 0; c < w.schema.columns(); ++c) store_le<std::uint64_t>(t + 8 * c, any(rng));
    store_le<std::uint64_t>(t, r);
    store_le<std::uint64_t>(t + 16, pass[r] ? low(rng) : high(rng));
  }
}

// Expected answer straight from the plaintext, written against the
// generator's own encoding rather than the query engine.
Bytes brute_force(const Workload& w) {
  const auto& s = w.spec;
  const std::uint32_t tb = s.tuple_bytes;
  Bytes out;
  auto tuple = [&](std::uint64_t r) { return w.plaintext.data() + r * tb; };
  switch (s.query) {
    case QueryKind::kSelect:
    case QueryKind::kDecryptSelect:
    case QueryKind::kProjectionCrossover: {
      const std::uint32_t keep = s.query == QueryKind::kProjectionCrossover ? 24 : tb;
      for (std::uint64_t r = 0; r < s.rows; ++r)
        if (load_le<std::int64_t>(tuple(r) + 16) < static_cast<std::int64_t>(kPassLimit))
          out.insert(out.end(), tuple(r), tuple(r) + keep);
      break;
    }
    case QueryKind::kEncryptRead:
      out = w.plaintext;
      break;
    case QueryKind::kDistinct:
    case QueryKind::kMultiClientDistinct: {
      std::set<std::uint64_t> keys;
      for (std::uint64_t r = 0; r < s.rows; ++r) keys.insert(load_le<std::uint64_t>(tuple(r)));
      for (auto k : keys) append_le(out, k);
      break;
    }
    case QueryKind::kGroupBy: {
      struct Agg {
        std::uint64_t count = 0;
        std::int64_t sum = 0, min = 0, max = 0, avg_sum = 0;
      };
      std::map<std::uint64_t, Agg> groups;
      for (std::uint64_t r = 0; r < s.rows; ++r) {
        const std::byte* t = tuple(r);
        auto [it, fresh] = groups.try_emplace(load_le<std::uint64_t>(t));
        Agg& a = it->second;
        const auto v2 = load_le<std::int64_t>(t + 16), v3 = load_le<std::int64_t>(t + 24);
        a.min = fresh ? v2 : std::min(a.min, v2);
        a.max = fresh ? v3 : std::max(a.max, v3);
        ++a.count;
        a.sum += load_le<std::int64_t>(t + 8);
        a.avg_sum += load_le<std::int64_t>(t + 32);
      }
      // key | COUNT | SUM | MIN | MAX | AVG sum, count | status
      for (const auto& [k, a] : groups) {
        append_le(out, k);
        append_le(out, a.count);
        append_le(out, a.sum);
        append_le(out, a.min);
        append_le(out, a.max);
        append_le(out, a.avg_sum);
        append_le(out, a.count);
        append_le(out, std::uint64_t{0});
      }
      break;
    }
    case QueryKind::kRegex:
      for (std::uint64_t r = 0; r < s.rows; ++r) {
        const auto cell = string_cell(ByteSpan(tuple(r) + 8, s.string_len));
        if (cell.find('x') != std::string_view::npos) out.insert(out.end(), tuple(r), tuple(r) + 8 + s.string_len);
      }
      break;
  }
  return out;
}

}  // namespace

const char* query_kind_name(QueryKind k) {
  for (const auto& e : kKinds)
    if (e.kind == k) return e.name;
  return "?";
}

QueryKind parse_query_kind(const std::string& name) {
  for (const auto& e : kKinds)
    if (name == e.name) return e.kind;
  fail(ErrorCode::kArgument, "unknown query '" + name + "'");
}

void WorkloadSpec::validate() const {
  if (rows == 0) fail(ErrorCode::kArgument, "rows must be >= 1");
  if (tuple_bytes < 64 || tuple_bytes % 8 != 0 || tuple_bytes / 8 > 64)
    fail(ErrorCode::kArgument, "tuple_bytes must be a multiple of 8 in [64, 512]");
  if (!(selectivity > 0.0 && selectivity <= 1.0)) fail(ErrorCode::kArgument, "selectivity must be in (0, 1]");
  if (clients == 0 || runs == 0) fail(ErrorCode::kArgument, "clients and runs must be >= 1");
  const bool keyed = query == QueryKind::kDistinct || query == QueryKind::kGroupBy ||
                     query == QueryKind::kMultiClientDistinct;
  if (keyed && (groups == 0 || groups > rows)) fail(ErrorCode::kArgument, "groups must be in [1, rows]");
  if (query == QueryKind::kRegex &&
      (string_len < 16 || string_len % 8 != 0 || string_len + 8 > tuple_bytes))
    fail(ErrorCode::kArgument, "string_len must be a multiple of 8 in [16, tuple_bytes - 8]");
}

ops::CryptoParams crypto_params(std::uint64_t seed, std::uint64_t salt) {
  std::mt19937_64 rng(seed ^ (salt * 0xD1B54A32D192ED03ull));
  ops::CryptoParams cp;
  for (auto& b : cp.key) b = static_cast<std::uint8_t>(rng());
  for (auto& b : cp.nonce) b = static_cast<std::uint8_t>(rng());
  cp.initial_counter = static_cast<std::uint32_t>(rng());
  return cp;
}

Workload gen_table(const WorkloadSpec& spec) {
  spec.validate();
  Workload w;
  w.spec = spec;
  std::mt19937_64 rng(spec.seed);
  const std::uint32_t cols = spec.tuple_bytes / 8;

  if (spec.query == QueryKind::kRegex) {
    std::vector<std::uint32_t> widths{8, spec.string_len};
    for (std::uint32_t left = spec.tuple_bytes - 8 - spec.string_len; left; left -= 8) widths.push_back(8);
    w.schema = Schema(widths);
  } else {
    w.schema = Schema::uniform(cols, 8);
  }
  w.plaintext.assign(spec.rows * spec.tuple_bytes, std::byte{0});
  const ColumnMask all = w.schema.all_columns();

  switch (spec.query) {
    case QueryKind::kSelect:
    case QueryKind::kDecryptSelect:
    case QueryKind::kProjectionCrossover: {
      fill_numeric(w, rng, choose(spec.rows, pass_count(spec), rng));
      const ColumnMask proj = spec.query == QueryKind::kProjectionCrossover ? ColumnMask{0b111} : all;
      if (spec.query == QueryKind::kDecryptSelect)
        w.query = Query::decrypt_select_encrypt(proj, select_predicate(), crypto_params(spec.seed, 1),
                                                crypto_params(spec.seed, 2));
      else
        w.query = Query::select(proj, select_predicate());
      break;
    }
    case QueryKind::kEncryptRead:
      fill_numeric(w, rng, std::vector<bool>(spec.rows, true));
      w.query = Query::encrypt_read(all, crypto_params(spec.seed, 2));
      break;
    case QueryKind::kDistinct:
    case QueryKind::kMultiClientDistinct:
    case QueryKind::kGroupBy: {
      fill_numeric(w, rng, std::vector<bool>(spec.rows, true));
      // Every group id appears at least once; the rest draw uniformly.
      std::vector<std::uint64_t> ids(spec.rows);
      std::uniform_int_distribution<std::uint64_t> pick(0, spec.groups - 1);
      for (std::uint64_t r = 0; r < spec.rows; ++r) ids[r] = r < spec.groups ? r : pick(rng);
      std::shuffle(ids.begin(), ids.end(), rng);
      std::uniform_int_distribution<std::int64_t> val(-1'000'000, 1'000'000);
      for (std::uint64_t r = 0; r < spec.rows; ++r) {
        std::byte* t = w.plaintext.data() + r * spec.tuple_bytes;
        store_le<std::uint64_t>(t, scatter(ids[r]));
        for (std::uint32_t c = 1; c < 5; ++c) store_le<std::int64_t>(t + 8 * c, val(rng));
      }
      if (spec.query == QueryKind::kGroupBy) {
        w.query = Query::group_by(0b1, {{0, ops::AggFn::kCount, ops::ValueType::kInt},
                                        {1, ops::AggFn::kSum, ops::ValueType::kInt},
                                        {2, ops::AggFn::kMin, ops::ValueType::kInt},
                                        {3, ops::AggFn::kMax, ops::ValueType::kInt},
                                        {4, ops::AggFn::kAvg, ops::ValueType::kInt}});
      } else {
        w.query = Query::distinct(0b1, 0b1);
      }
      break;
    }
    case QueryKind::kRegex: {
      const auto pass = choose(spec.rows, pass_count(spec), rng);
      std::uniform_int_distribution<std::size_t> len(4, spec.string_len - 2 - 4);
      std::uniform_int_distribution<int> digit('0', '9');
      std::uniform_int_distribution<std::uint64_t> any;
      for (std::uint64_t r = 0; r < spec.rows; ++r) {
        std::byte* t = w.plaintext.data() + r * spec.tuple_bytes;
        store_le<std::uint64_t>(t, r);
        std::string s = random_word(rng, len(rng));
        if (pass[r]) {
          // Splice "x<digits>y" somewhere inside; the letters never match.
          const std::size_t at = std::uniform_int_distribution<std::size_t>(0, s.size() - 3)(rng);
          s[at] = 'x';
          s[at + 1] = static_cast<char>(digit(rng));
          s[at + 2] = 'y';
        }
        put_string_cell(MutableByteSpan(t + 8, spec.string_len), s);
        for (std::size_t c = 2; c < w.schema.columns(); ++c) store_le<std::uint64_t>(t + w.schema.offset(c), any(rng));
      }
      w.query = Query::regex(0b11, 1, kRegexPattern);
      break;
    }
  }

  w.table = w.plaintext;
  if (w.query.decrypt) ops::CtrCipher(*w.query.decrypt).apply(w.table, 0);
  w.shape = result_shape(w.query, w.schema);
  w.expected = canonical_rows(w.shape, w.query, brute_force(w));
  w.expected_rows = w.shape.row_bytes ? w.expected.size() / w.shape.row_bytes : 0;
  return w;
}

Bytes canonical_rows(const ResultShape& shape, const Query& q, ByteSpan rows) {
  if (q.pipeline != PipelineId::kDistinct && q.pipeline != PipelineId::kGroupBy) return Bytes(rows.begin(), rows.end());
  const std::size_t w = shape.row_bytes;
  std::vector<std::size_t> order(rows.size() / w);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(rows.begin() + a * w, rows.begin() + (a + 1) * w, rows.begin() + b * w,
                                        rows.begin() + (b + 1) * w);
  });
  Bytes out;
  out.reserve(rows.size());
  for (auto i : order) out.insert(out.end(), rows.begin() + i * w, rows.begin() + (i + 1) * w);
  return out;
}

Bytes lcpu_execute(ByteSpan table, const Schema& schema, const Query& q) {
  Query local = q;
  local.server_cpu = false;
  RawResult r = execute_cpu(local, schema, table);
  if (q.encrypt) ops::CtrCipher(*q.encrypt).apply(r.main, 0);
  return r.main;
}

}  // namespace farview::bench
