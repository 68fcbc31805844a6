#include <gtest/gtest.h>

#include <map>
#include <set>

#include "farview/query/result.hpp"
#include "test_util.hpp"

using namespace farview;
using namespace farview::ops;

namespace {

CryptoParams params(std::uint8_t fill, std::uint32_t counter) {
  CryptoParams cp;
  cp.key.fill(fill);
  cp.nonce.fill(static_cast<std::uint8_t>(fill + 1));
  cp.initial_counter = counter;
  return cp;
}

std::vector<Query> sample_queries() {
  SelectionPredicate p;
  p.terms = {{2, Comparator::kGt, ValueType::kFloat, float_bits(3.14)}, {0, Comparator::kLe, ValueType::kInt, 7}};
  SelectionPredicate por = p;
  por.combiner = Combiner::kOr;
  std::vector<Query> qs = {
      Query::select(0b1, p),
      Query::select(0xFF, por),
      Query::select(0b101),
      Query::distinct(0b11, 0b1),
      Query::group_by(0b1, {{1, AggFn::kSum, ValueType::kInt}, {2, AggFn::kAvg, ValueType::kFloat}}),
      Query::regex(0b11, 1, "a[0-9]+b"),
      Query::decrypt_select_encrypt(0b111, p, params(1, 5), params(2, 0xffffffff)),
      Query::encrypt_read(0b1111, params(3, 9)),
  };
  qs[0].addressing = Addressing::kSmart;
  qs[1].vectorize = true;
  qs[2].server_cpu = true;
  qs[3].addressing = Addressing::kFullScan;
  return qs;
}

}  // namespace

TEST(QueryCodec, SelectHelperLayout) {
  SelectionPredicate p;
  p.terms = {{2, Comparator::kGt, ValueType::kFloat, float_bits(3.14)}};
  const auto e = encode_query(Query::select(0b1, p));
  const std::uint64_t cmp_code = 4 | (2 << 4);
  EXPECT_EQ(e.params, (std::vector<std::uint64_t>{1, 0b1, 0b100, cmp_code << 4, float_bits(3.14)}));
  EXPECT_TRUE(e.payload.empty());
}

TEST(QueryCodec, RoundTrips) {
  for (const auto& q : sample_queries()) {
    const auto e = encode_query(q);
    Query back = decode_query(e.params, e.payload);
    // Terms come back in column order.
    Query norm = q;
    std::sort(norm.predicate.terms.begin(), norm.predicate.terms.end(),
              [](const auto& a, const auto& b) { return a.column < b.column; });
    EXPECT_EQ(back, norm) << pipeline_name(q.pipeline);
  }
}

TEST(QueryCodec, RandomSelectRoundTrips) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 2000; ++i) {
    SelectionPredicate p;
    p.combiner = static_cast<Combiner>(rng() % 2);
    std::vector<std::uint32_t> cols(16);
    std::iota(cols.begin(), cols.end(), 0u);
    std::shuffle(cols.begin(), cols.end(), rng);
    for (std::size_t t = 0; t < rng() % 8; ++t)
      p.terms.push_back({cols[t], static_cast<Comparator>(rng() % 6), static_cast<ValueType>(rng() % 3), rng()});
    Query q = Query::select(rng() | 1, p);
    std::sort(q.predicate.terms.begin(), q.predicate.terms.end(),
              [](const auto& a, const auto& b) { return a.column < b.column; });
    const auto e = encode_query(q);
    ASSERT_EQ(decode_query(e.params, e.payload), q);
  }
}

TEST(QueryCodec, Rejections) {
  auto code_of = [](std::vector<std::uint64_t> w, Bytes payload = {}) {
    try {
      decode_query(w, payload);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kOk;
  };
  EXPECT_EQ(code_of({}), ErrorCode::kRequest);
  EXPECT_EQ(code_of({0}), ErrorCode::kUnknownPipeline);
  EXPECT_EQ(code_of({99}), ErrorCode::kUnknownPipeline);
  EXPECT_EQ(code_of({1 | (std::uint64_t{1} << 25), 1, 0, 0}), ErrorCode::kRequest);
  EXPECT_EQ(code_of({1 | (std::uint64_t{3} << 16), 1, 0, 0}), ErrorCode::kRequest);
  EXPECT_EQ(code_of({1, 1, 0b1, 0}), ErrorCode::kRequest);          // missing constant
  EXPECT_EQ(code_of({1, 1, 0b1, 6 << 4, 0}), ErrorCode::kRequest);  // comparator 6
  EXPECT_EQ(code_of({1, 1, 0, 0, 5}), ErrorCode::kRequest);         // extra word
  EXPECT_EQ(code_of({1, 1, 0, 0}, Bytes(1)), ErrorCode::kRequest);
  EXPECT_EQ(code_of({2, 1}), ErrorCode::kRequest);
  EXPECT_EQ(code_of({3, 1}), ErrorCode::kRequest);
  EXPECT_EQ(code_of({3, 1, 5 << 8}), ErrorCode::kRequest);  // fn 5
  EXPECT_EQ(code_of({4, 1, 3, 0}, Bytes(2)), ErrorCode::kRequest);
  EXPECT_EQ(code_of({6, 1, 0, 0}), ErrorCode::kRequest);
  EXPECT_EQ(code_of({1, 1, 0, 0}), ErrorCode::kOk);

  SelectionPredicate dup;
  dup.terms = {{1, Comparator::kEq, ValueType::kInt, 0}, {1, Comparator::kNe, ValueType::kInt, 0}};
  EXPECT_THROW(encode_query(Query::select(1, dup)), Error);
  Query dse = Query::select(1);
  dse.pipeline = PipelineId::kDecryptSelectEncrypt;
  EXPECT_THROW(encode_query(dse), Error);
}

TEST(QueryValidate, AgainstSchema) {
  const Schema s = Schema::uniform(4, 8);
  EXPECT_NO_THROW(validate_query(Query::select(0b1111), s));
  EXPECT_THROW(validate_query(Query::select(0), s), Error);
  EXPECT_THROW(validate_query(Query::select(0b10000), s), Error);
  EXPECT_THROW(validate_query(Query::distinct(0b1, 0b10), s), Error);
  EXPECT_THROW(validate_query(Query::distinct(0b1, 0), s), Error);
  EXPECT_THROW(validate_query(Query::group_by(0b1, {{9, AggFn::kSum, ValueType::kInt}}), s), Error);
  EXPECT_THROW(validate_query(Query::regex(0b1, 7, "a"), s), Error);
  SelectionPredicate p;
  p.terms = {{5, Comparator::kEq, ValueType::kInt, 0}};
  EXPECT_THROW(validate_query(Query::select(1, p), s), Error);
}

TEST(ResultShapeTest, WidthsFollowProjection) {
  const Schema s({8, 4, 16, 8});
  EXPECT_EQ(result_shape(Query::select(0b1010), s).row_bytes, 12u);
  const auto d = result_shape(Query::distinct(0b1100, 0b1000), s);
  EXPECT_EQ(d.row_bytes, 24u);
  EXPECT_EQ(d.row_key, ColumnMask{0b10});
  const auto g = result_shape(Query::group_by(0b1, {{1, AggFn::kAvg, ValueType::kInt}}), s);
  EXPECT_TRUE(g.grouped);
  EXPECT_EQ(g.row_bytes, 8u + 16u + 8u);
  EXPECT_EQ(remap_mask(0b1000, 0b1100), ColumnMask{0b10});
  EXPECT_EQ(project_schema(s, 0b0101).tuple_bytes(), 24u);
}

TEST(Trailer, RoundTripAndChecks) {
  EXPECT_TRUE(encode_trailer(16, {}).empty());
  EXPECT_TRUE(decode_trailer({}, 16).empty());
  std::mt19937_64 rng(2);
  const Bytes rows = test::random_bytes(rng, 48);
  const Bytes t = encode_trailer(16, rows);
  EXPECT_EQ(t.size(), 8u + 48u);
  EXPECT_EQ(decode_trailer(t, 16), rows);
  EXPECT_THROW(decode_trailer(t, 24), Error);
  EXPECT_THROW(decode_trailer(ByteSpan(t).first(20), 16), Error);
}

TEST(ExecuteCpu, SelectProjects) {
  const Bytes table = test::u64_rows({{1, 10, 100}, {2, 20, 200}, {3, 30, 300}});
  SelectionPredicate p;
  p.terms = {{1, Comparator::kGe, ValueType::kInt, 20}};
  const auto r = execute_cpu(Query::select(0b101, p), Schema::uniform(3, 8), table);
  EXPECT_EQ(r.main, test::u64_rows({{2, 200}, {3, 300}}));
  EXPECT_TRUE(r.overflow.empty());
}

TEST(ExecuteCpu, DistinctFirstOccurrence) {
  const Bytes table = test::u64_rows({{5, 1}, {3, 2}, {5, 3}, {7, 4}});
  const auto r = execute_cpu(Query::distinct(0b11, 0b1), Schema::uniform(2, 8), table);
  EXPECT_EQ(r.main, test::u64_rows({{5, 1}, {3, 2}, {7, 4}}));
}

TEST(ExecuteCpu, EncryptedPathsInvert) {
  std::mt19937_64 rng(3);
  const Schema s = Schema::uniform(4, 8);
  const Bytes plain = test::uniform_table(rng, 500, 100, 4);
  const auto dk = params(7, 11), ek = params(8, 0);
  const Bytes stored = aes_ctr_transform(plain, dk);
  SelectionPredicate p;
  p.terms = {{1, Comparator::kLt, ValueType::kInt, 50}};
  const auto enc = execute_cpu(Query::decrypt_select_encrypt(0b1011, p, dk, ek), s, stored);
  const auto ref = execute_cpu(Query::select(0b1011, p), s, plain);
  EXPECT_EQ(aes_ctr_transform(enc.main, ek), ref.main);
  const auto er = execute_cpu(Query::encrypt_read(0b1111, ek), s, plain);
  EXPECT_EQ(aes_ctr_transform(er.main, ek), plain);
}

TEST(ExecuteCpu, DecryptHonoursStreamOffset) {
  std::mt19937_64 rng(4);
  const Schema s = Schema::uniform(2, 8);
  const Bytes plain = test::uniform_table(rng, 64, 10, 2);
  const auto dk = params(1, 0), ek = params(2, 0);
  const Bytes stored = aes_ctr_transform(plain, dk);
  const std::size_t off = 16 * 13;
  const Query q = Query::decrypt_select_encrypt(0b11, {}, dk, ek);
  const auto part = execute_cpu(q, s, ByteSpan(stored).subspan(off), off);
  EXPECT_EQ(aes_ctr_transform(part.main, ek), Bytes(plain.begin() + off, plain.end()));
}

TEST(MergeOverflow, DistinctAppendsNewKeys) {
  const Schema s = Schema::uniform(2, 8);
  const Query q = Query::distinct(0b11, 0b1);
  const auto shape = result_shape(q, s);
  const Bytes main = test::u64_rows({{1, 0}, {2, 0}});
  const Bytes over = test::u64_rows({{2, 9}, {3, 9}, {3, 8}});
  EXPECT_EQ(merge_overflow(shape, q, main, over), test::u64_rows({{1, 0}, {2, 0}, {3, 9}}));
}

TEST(MergeOverflow, GroupPartialsFold) {
  const Schema s = Schema::uniform(2, 8);
  const Query q = Query::group_by(0b1, {{1, AggFn::kSum, ValueType::kInt}});
  const auto shape = result_shape(q, s);
  auto row = [](std::uint64_t k, std::int64_t v) {
    Bytes b;
    append_le(b, k);
    append_le(b, v);
    append_le<std::uint64_t>(b, 0);
    return b;
  };
  Bytes main = row(1, 10);
  Bytes over = row(1, 5);
  const Bytes extra = row(4, 2);
  over.insert(over.end(), extra.begin(), extra.end());
  Bytes expect = row(1, 15);
  expect.insert(expect.end(), extra.begin(), extra.end());
  EXPECT_EQ(merge_overflow(shape, q, main, over), expect);
}

TEST(StringCell, RoundTripAndClamp) {
  Bytes col(10);
  put_string_cell(col, "abcdefgh");
  EXPECT_EQ(string_cell(col), "abcdefgh");
  EXPECT_THROW(put_string_cell(col, "abcdefghi"), Error);
  store_le<std::uint16_t>(col.data(), 500);
  EXPECT_EQ(string_cell(col).size(), 8u);
}
