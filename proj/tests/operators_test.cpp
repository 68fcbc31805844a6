#include <gtest/gtest.h>

#include <cmath>

#include "farview/ops/pack.hpp"
#include "farview/ops/predicate.hpp"
#include "farview/ops/select.hpp"
#include "farview/ops/send.hpp"
#include "farview/ops/smart_addressing.hpp"
#include "test_util.hpp"

using namespace farview;
using namespace farview::ops;

namespace {

const Schema kSchema = Schema::uniform(8, 8);

PredicateTerm lt(std::uint32_t col, std::int64_t c) {
  return {col, Comparator::kLt, ValueType::kInt, static_cast<std::uint64_t>(c)};
}

PredicateTerm fterm(std::uint32_t col, Comparator cmp, double c) { return {col, cmp, ValueType::kFloat, float_bits(c)}; }

Bytes one_row(std::initializer_list<std::uint64_t> vals) {
  Bytes b;
  for (auto v : vals) append_le(b, v);
  b.resize(kSchema.tuple_bytes());
  return b;
}

Bytes float_row(double c) {
  Bytes b(64);
  store_le<double>(b.data() + 16, c);
  return b;
}

}  // namespace

TEST(Parse, OneTupleOfEightColumns) {
  const Bytes raw(64, std::byte{1});
  const auto t = parse_and_project(raw, kSchema, {0b1, 0b10, 0});
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].column(7).size(), 8u);
  EXPECT_EQ(t[0].flags.proj, 0b1u);
  EXPECT_EQ(t[0].flags.sel, 0b10u);
  EXPECT_TRUE(parse_and_project({}, kSchema, {}).empty());
}

TEST(Parse, PartialTupleIsAnError) {
  const Bytes raw(100);
  try {
    parse_and_project(raw, kSchema, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
}

TEST(Parse, RoundTrip) {
  std::mt19937_64 rng(1);
  const Bytes raw = test::random_bytes(rng, 10000 * 64);
  EXPECT_EQ(serialize_tuples(parse_and_project(raw, kSchema, {})), raw);
}

TEST(Predicate, PaperQueries) {
  const Bytes r = one_row({10, 20});
  const auto t = parse_and_project(r, kSchema, {})[0];
  EXPECT_TRUE(eval_predicate(t, {{lt(0, 50), lt(1, 50)}, Combiner::kAnd}));

  const Bytes above = float_row(3.15), equal = float_row(3.14);
  const SelectionPredicate gt{{fterm(2, Comparator::kGt, 3.14)}, Combiner::kAnd};
  EXPECT_TRUE(eval_predicate(parse_and_project(above, kSchema, {})[0], gt));
  EXPECT_FALSE(eval_predicate(parse_and_project(equal, kSchema, {})[0], gt));
}

TEST(Predicate, AllComparatorsAndTypes) {
  const Bytes r = one_row({static_cast<std::uint64_t>(-5), 7});
  const auto t = parse_and_project(r, kSchema, {})[0];
  auto check = [&](PredicateTerm term, bool want) {
    EXPECT_EQ(eval_predicate(t, {{term}, Combiner::kAnd}), want)
        << term.column << ' ' << static_cast<int>(term.cmp) << ' ' << static_cast<int>(term.type);
  };
  const auto m5 = static_cast<std::uint64_t>(-5);
  check({0, Comparator::kLt, ValueType::kInt, 0}, true);
  check({0, Comparator::kLt, ValueType::kUint, 0}, false);  // huge unsigned
  check({0, Comparator::kLe, ValueType::kInt, m5}, true);
  check({0, Comparator::kEq, ValueType::kInt, m5}, true);
  check({0, Comparator::kGe, ValueType::kInt, m5}, true);
  check({0, Comparator::kGt, ValueType::kInt, m5}, false);
  check({0, Comparator::kNe, ValueType::kInt, m5}, false);
  check({1, Comparator::kGt, ValueType::kUint, 6}, true);
  EXPECT_TRUE(eval_predicate(t, {{lt(1, 0), lt(0, 0)}, Combiner::kOr}));
  EXPECT_FALSE(eval_predicate(t, {{lt(1, 0), lt(0, 0)}, Combiner::kAnd}));
}

TEST(Predicate, NaNOnlyDiffers) {
  const Bytes r = float_row(std::nan(""));
  const auto t = parse_and_project(r, kSchema, {})[0];
  for (auto cmp : {Comparator::kLt, Comparator::kLe, Comparator::kEq, Comparator::kGe, Comparator::kGt})
    EXPECT_FALSE(eval_predicate(t, {{fterm(2, cmp, 1.0)}, Combiner::kAnd}));
  EXPECT_TRUE(eval_predicate(t, {{fterm(2, Comparator::kNe, 1.0)}, Combiner::kAnd}));
}

TEST(Predicate, CompiledMatchesInterpreted) {
  std::mt19937_64 rng(2);
  const Bytes raw = test::uniform_table(rng, 5000, 100);
  const auto tuples = parse_and_project(raw, kSchema, {});
  for (int trial = 0; trial < 50; ++trial) {
    SelectionPredicate p;
    p.combiner = rng() % 2 ? Combiner::kOr : Combiner::kAnd;
    for (int k = 0; k < 3; ++k)
      p.terms.push_back({static_cast<std::uint32_t>(rng() % 8), static_cast<Comparator>(rng() % 6),
                         static_cast<ValueType>(rng() % 2), rng() % 100});
    const CompiledPredicate cp(p, kSchema);
    for (const auto& t : tuples) ASSERT_EQ(cp(t.bytes.data()), eval_predicate(t, p));
  }
}

TEST(Predicate, CompileRejectsBadColumns) {
  EXPECT_THROW(CompiledPredicate({{lt(9, 0)}, Combiner::kAnd}, kSchema), Error);
  const Schema narrow({8, 3});
  EXPECT_THROW(CompiledPredicate({{lt(1, 0)}, Combiner::kAnd}, narrow), Error);
}

TEST(Predicate, HalfPassOnUniformKeys) {
  std::mt19937_64 rng(3);
  const std::size_t n = 1'000'000;
  const Bytes raw = test::uniform_table(rng, n, 1024, 1);
  const Schema one = Schema::uniform(1, 8);
  const CompiledPredicate p({{lt(0, 512)}, Combiner::kAnd}, one);
  std::size_t pass = 0;
  for (std::size_t i = 0; i < n; ++i) pass += p(raw.data() + 8 * i);
  EXPECT_NEAR(static_cast<double>(pass), n / 2.0, 3 * std::sqrt(n * 0.25));
}

TEST(Select, TrueFalseAndLanes) {
  std::mt19937_64 rng(4);
  const Bytes raw = test::uniform_table(rng, 2000, 100);
  const auto tuples = parse_and_project(raw, kSchema, {});
  EXPECT_EQ(select_stream(tuples, {}).size(), tuples.size());
  EXPECT_TRUE(select_stream(tuples, {{lt(0, 0)}, Combiner::kAnd}).empty());
  const SelectionPredicate p{{lt(0, 50), lt(3, 70)}, Combiner::kAnd};
  const auto scalar = select_stream(tuples, p);
  for (std::uint32_t lanes : {1u, 2u, 3u, 4u, 8u}) {
    const auto vec = vectorized_select(tuples, p, lanes);
    ASSERT_EQ(vec.size(), scalar.size());
    for (std::size_t i = 0; i < vec.size(); ++i) ASSERT_EQ(vec[i].bytes.data(), scalar[i].bytes.data());
  }
}

TEST(Select, BatchFormMatchesStream) {
  std::mt19937_64 rng(5);
  TupleBatch b;
  b.schema = &kSchema;
  b.data = test::uniform_table(rng, 3000, 100);
  b.select_all();
  const SelectionPredicate p{{lt(2, 30)}, Combiner::kAnd};
  const auto expect = select_stream(parse_and_project(b.data, kSchema, {}), p);
  select_batch(b, CompiledPredicate(p, kSchema), 4);
  ASSERT_EQ(b.sel.size(), expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_EQ(b.row(b.sel[i]), expect[i].bytes.data());
}

TEST(Lanes, Formula) {
  EXPECT_EQ(compute_lanes(2, 64), 2u);
  EXPECT_EQ(compute_lanes(1, 512), 1u);
  EXPECT_EQ(compute_lanes(4, 32), 8u);
  for (std::uint32_t c = 1; c <= 8; ++c)
    for (std::uint32_t tb = 1; tb <= 1024; tb += 7) ASSERT_EQ(compute_lanes(c, tb), std::max(1u, c * 64 / tb));
}

TEST(Pack, ArithmeticAndPadding) {
  std::mt19937_64 rng(6);
  const Bytes raw = test::random_bytes(rng, 5 * 64);
  const auto tuples = parse_and_project(raw, kSchema, {0b111, 0, 0});
  const auto packed = pack_stream(tuples);
  EXPECT_EQ(packed.word_count(), 2u);
  EXPECT_EQ(packed.valid_bytes, 120u);
  EXPECT_TRUE(std::all_of(packed.words.begin() + 120, packed.words.end(), [](std::byte b) { return b == std::byte{0}; }));
  const auto rows = unpack_rows(packed.valid(), 24);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_TRUE(std::equal(rows[i].begin(), rows[i].end(), raw.begin() + 64 * i));
}

TEST(Pack, UnpackInvertsRandomProjections) {
  std::mt19937_64 rng(7);
  const Schema s({8, 4, 2, 16, 1, 8, 3});
  const Bytes raw = test::random_bytes(rng, 300 * s.tuple_bytes());
  for (int trial = 0; trial < 100; ++trial) {
    const ColumnMask proj = 1 + rng() % ((1u << s.columns()) - 1);
    const auto tuples = parse_and_project(raw, s, {proj, 0, 0});
    const auto rows = unpack_rows(pack_stream(tuples).valid(), s.projected_bytes(proj));
    ASSERT_EQ(rows.size(), 300u);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Bytes expect;
      append_projected(expect, tuples[i].bytes.data(), s, proj);
      ASSERT_EQ(rows[i], expect);
    }
  }
}

TEST(Pack, LanesMergeRoundRobin) {
  std::mt19937_64 rng(8);
  const Bytes raw = test::random_bytes(rng, 10 * 64);
  const auto t = parse_and_project(raw, kSchema, {0b1, 0, 0});
  const std::vector<std::vector<AnnotatedTuple>> lanes{{t[0], t[2], t[4]}, {t[1], t[3]}};
  const auto packed = pack_stream(lanes);
  const auto rows = unpack_rows(packed.valid(), 8);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_TRUE(std::equal(rows[i].begin(), rows[i].end(), raw.begin() + 64 * i));
}

TEST(Send, PacketCounts) {
  PackedStream small;
  small.words.resize(128);
  small.valid_bytes = 120;
  auto pk = emit_send_commands(small, 1024, 1, 1);
  ASSERT_EQ(pk.size(), 1u);
  EXPECT_TRUE(pk[0].last());
  EXPECT_TRUE(pk[0].data());

  PackedStream big;
  big.words.resize(2560);
  big.valid_bytes = 2500;
  pk = emit_send_commands(big, 1024, 1, 1);
  ASSERT_EQ(pk.size(), 3u);
  EXPECT_EQ(pk[2].valid_bytes(), 452);
  EXPECT_TRUE(pk[2].last());
  EXPECT_FALSE(pk[1].last());
}

TEST(Send, StreamingIdentity) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const Bytes data = test::random_bytes(rng, rng() % 20000);
    Bytes out;
    std::size_t lasts = 0, packets = 0;
    Sender s(1024, [&](Bytes p, bool last) {
      EXPECT_LE(p.size(), 1024u);
      EXPECT_EQ(lasts, 0u);
      lasts += last;
      ++packets;
      out.insert(out.end(), p.begin(), p.end());
    });
    // Feed in random slices; the sender never sees the total length.
    for (std::size_t at = 0; at < data.size();) {
      const std::size_t n = std::min<std::size_t>(data.size() - at, rng() % 3000);
      s.write(ByteSpan(data).subspan(at, n));
      at += n;
    }
    s.finish();
    ASSERT_EQ(out, data);
    EXPECT_EQ(s.valid_bytes(), data.size());
    EXPECT_EQ(lasts, data.empty() ? 0u : 1u);
    EXPECT_EQ(packets, div_ceil(data.size(), 1024));
  }
}

TEST(SmartAddressing, CrossoverAtStatedCost) {
  const Schema wide = Schema::uniform(64, 8);
  const auto p512 = plan_smart_addressing(wide, 0b111);
  EXPECT_EQ(p512.mode, AccessMode::kSmart);
  ASSERT_EQ(p512.requests.size(), 1u);
  EXPECT_EQ(p512.fetched_bytes, 64u);
  EXPECT_EQ(p512.smart_cost, 320u);
  EXPECT_EQ(p512.full_cost, 512u);

  const auto p256 = plan_smart_addressing(Schema::uniform(32, 8), 0b111);
  EXPECT_EQ(p256.mode, AccessMode::kFullScan);
  EXPECT_EQ(p256.smart_cost, 320u);
}

TEST(SmartAddressing, AllColumnsIsFullScan) {
  for (std::size_t cols : {8u, 32u, 64u}) {
    const Schema s = Schema::uniform(cols, 8);
    EXPECT_EQ(plan_smart_addressing(s, s.all_columns()).mode, AccessMode::kFullScan);
  }
}

TEST(SmartAddressing, AdjacentWordsMerge) {
  const Schema s = Schema::uniform(64, 8);
  // Columns in words 0 and 1 merge; word 5 stands alone.
  const ColumnMask m = (ColumnMask{1} << 0) | (ColumnMask{1} << 9) | (ColumnMask{1} << 41);
  const auto p = plan_smart_addressing(s, m);
  ASSERT_EQ(p.requests.size(), 2u);
  EXPECT_EQ(p.requests[0], (WordRequest{0, 128}));
  EXPECT_EQ(p.requests[1], (WordRequest{320, 64}));
  EXPECT_EQ(p.fetched_bytes, 192u);
  EXPECT_EQ(p.smart_cost, 2u * 256 + 192);
  EXPECT_THROW(plan_smart_addressing(s, 0), Error);
}
