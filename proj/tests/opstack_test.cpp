#include <gtest/gtest.h>

#include <chrono>
#include <future>

#include "farview/opstack/operator_stack.hpp"
#include "farview/query/result.hpp"
#include "test_util.hpp"

using namespace farview;
using namespace farview::opstack;
using ops::AggFn;
using ops::Comparator;
using ops::ValueType;

namespace {

struct Rig {
  mem::MemoryStack memory;
  OperatorStack stack;

  explicit Rig(std::uint32_t regions = 6, std::uint32_t delay_ms = 0, ExecutionConfig exec = {})
      : memory(mem::MemoryConfig{}, regions), stack(memory, PipelineRegistry::builtin(delay_ms), regions, exec) {}

  mem::TableHandle upload(wire::QueuePairId qp, const Bytes& rows, const Schema& s) {
    const auto t = memory.alloc_table(qp, std::max<std::uint64_t>(rows.size(), 1), s);
    if (!rows.empty()) stack.write_bypass(qp, t.base_vaddr, rows);
    return t;
  }

  wire::Verb farview(const Query& q, const mem::TableHandle& t, std::uint64_t length) {
    const auto e = encode_query(q);
    wire::Verb v;
    v.kind = wire::VerbKind::kFarview;
    v.vaddr = t.base_vaddr;
    v.length = length;
    v.params = e.params;
    v.payload = e.payload;
    return v;
  }

  std::pair<Bytes, ExecutionResult> run(std::uint32_t region, const Query& q, const mem::TableHandle& t,
                                        std::uint64_t length) {
    ops::CollectSink sink;
    auto r = stack.execute_request(region, farview(q, t, length), sink);
    return {sink.take(), r};
  }
};

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kOk;
}

std::vector<Query> mixed_queries() {
  ops::SelectionPredicate p;
  p.terms = {{1, Comparator::kLt, ValueType::kInt, 40}};
  ops::CryptoParams k1, k2;
  k1.key.fill(1);
  k2.key.fill(2);
  k2.initial_counter = 77;
  return {
      Query::select(0b1011, p),
      Query::select(0xFF),
      Query::distinct(0b11, 0b10),
      Query::group_by(0b100, {{1, AggFn::kSum, ValueType::kInt}, {3, AggFn::kMax, ValueType::kInt},
                              {4, AggFn::kCount, ValueType::kInt}}),
      Query::encrypt_read(0b11110000, k2),
  };
}

}  // namespace

TEST(Registry, BuiltinPipelinesValidate) {
  const auto r = PipelineRegistry::builtin();
  EXPECT_EQ(r.ids(), (std::vector<std::uint16_t>{1, 2, 3, 4, 5, 6}));
  for (auto id : r.ids()) EXPECT_NO_THROW(r.make(id).validate());
  EXPECT_EQ(code_of([&] { r.make(42); }), ErrorCode::kUnknownPipeline);
}

TEST(Registry, StageRules) {
  using S = StageKind;
  auto spec = [](std::vector<S> st) { return PipelineSpec{9, "t", std::move(st), 1, {}}; };
  EXPECT_NO_THROW(spec({S::kSmartAddress, S::kSelect, S::kPack, S::kSend}).validate());
  EXPECT_THROW(spec({S::kSelect, S::kPack, S::kSend}).validate(), Error);
  EXPECT_THROW(spec({S::kParseProject, S::kSelect, S::kSend}).validate(), Error);
  EXPECT_THROW(spec({S::kParseProject, S::kSelect, S::kDecrypt, S::kPack, S::kSend}).validate(), Error);
  EXPECT_THROW(spec({S::kParseProject, S::kDistinct, S::kGroupBy, S::kPack, S::kSend}).validate(), Error);
  EXPECT_THROW(spec({S::kParseProject, S::kAggregate, S::kPack, S::kSend}).validate(), Error);
  EXPECT_THROW(spec({S::kParseProject, S::kPack, S::kSelect, S::kPack, S::kSend}).validate(), Error);
  PipelineRegistry r;
  r.add(9, [&] { return spec({S::kParseProject, S::kSelect, S::kPack, S::kSend}); });
  EXPECT_THROW(r.add(9, [&] { return spec({S::kParseProject, S::kSelect, S::kPack, S::kSend}); }), Error);
  EXPECT_THROW(r.add(10, [&] { return spec({S::kSelect, S::kPack, S::kSend}); }), Error);
}

TEST(Regions, BindReleaseAndRefusal) {
  Rig rig;
  for (wire::QueuePairId qp = 1; qp <= 6; ++qp) EXPECT_EQ(rig.stack.bind_region(qp), qp - 1);
  EXPECT_EQ(code_of([&] { rig.stack.bind_region(7); }), ErrorCode::kResourceExhausted);
  EXPECT_EQ(code_of([&] { rig.stack.bind_region(3); }), ErrorCode::kArgument);
  rig.stack.release_region(3);
  EXPECT_FALSE(rig.stack.region_of(3));
  EXPECT_EQ(rig.stack.bind_region(7), 2u);
  EXPECT_EQ(rig.stack.region(2).bound_qpair, 7u);
  rig.stack.release_region(99);  // unbound: no-op
}

TEST(Regions, LoadSwapsAndCounts) {
  Rig rig;
  const auto r = rig.stack.bind_region(1);
  EXPECT_EQ(code_of([&] { rig.stack.load_pipeline(r, 77); }), ErrorCode::kUnknownPipeline);
  EXPECT_EQ(code_of([&] { rig.stack.load_pipeline(5, 1); }), ErrorCode::kArgument);
  rig.stack.load_pipeline(r, 1);
  EXPECT_EQ(rig.stack.region(r).loaded, 1);
  rig.stack.load_pipeline(r, 3);
  EXPECT_EQ(rig.stack.region(r).loaded, 3);
  EXPECT_EQ(rig.stack.region(r).loads, 2u);
  rig.stack.release_region(1);
  rig.stack.bind_region(2);
  EXPECT_FALSE(rig.stack.region(r).loaded);
}

TEST(Regions, ReconfigurationDelayAndBusy) {
  Rig rig(6, 50);
  const auto r = rig.stack.bind_region(1);
  const auto t0 = std::chrono::steady_clock::now();
  auto loading = std::async(std::launch::async, [&] { rig.stack.load_pipeline(r, 1); });
  while (rig.stack.region(r).state != RegionState::kBusy) std::this_thread::yield();
  EXPECT_EQ(code_of([&] { rig.stack.load_pipeline(r, 2); }), ErrorCode::kRegionBusy);
  const auto t = rig.upload(1, Bytes(64), Schema::uniform(8, 8));
  EXPECT_EQ(code_of([&] { rig.run(r, Query::select(1), t, 64); }), ErrorCode::kRegionBusy);
  loading.get();
  rig.stack.load_pipeline(r, 2);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_GE(ms, 100);
}

TEST(Execute, EmptyRangeGivesEmptyResult) {
  Rig rig;
  const auto r = rig.stack.bind_region(1);
  rig.stack.load_pipeline(r, 1);
  const auto t = rig.upload(1, test::u64_rows({{1, 2}}), Schema::uniform(2, 8));
  const auto [bytes, res] = rig.run(r, Query::select(0b11), t, 0);
  EXPECT_TRUE(bytes.empty());
  EXPECT_EQ(res.stats.rows_scanned, 0u);
}

TEST(Execute, RequiresMatchingPipeline) {
  Rig rig;
  const auto r = rig.stack.bind_region(1);
  const auto t = rig.upload(1, test::u64_rows({{1, 2}}), Schema::uniform(2, 8));
  EXPECT_EQ(code_of([&] { rig.run(r, Query::select(0b11), t, 16); }), ErrorCode::kRequest);
  rig.stack.load_pipeline(r, 2);
  EXPECT_NE(code_of([&] { rig.run(r, Query::select(0b11), t, 16); }), ErrorCode::kOk);
  // A failed request leaves the region usable.
  EXPECT_EQ(rig.stack.region(r).state, RegionState::kIdle);
  EXPECT_EQ(code_of([&] { rig.run(r, Query::distinct(0b11, 0b1), t, 16); }), ErrorCode::kOk);
}

TEST(Execute, OtherQpairsTablesAreProtected) {
  Rig rig;
  const auto r = rig.stack.bind_region(1);
  rig.stack.bind_region(2);
  rig.stack.load_pipeline(r, 1);
  const auto theirs = rig.upload(2, test::u64_rows({{1, 2}}), Schema::uniform(2, 8));
  EXPECT_EQ(code_of([&] { rig.run(r, Query::select(0b11), theirs, 16); }), ErrorCode::kPermission);
}

TEST(Bypass, ReadsBackWhatWasWritten) {
  Rig rig;
  rig.stack.bind_region(1);
  std::mt19937_64 rng(1);
  const Bytes data = test::random_bytes(rng, 3 << 20);
  const auto t = rig.upload(1, data, Schema::uniform(1, 8));
  ops::CollectSink sink;
  rig.stack.read_bypass(1, t.base_vaddr, data.size(), sink);
  EXPECT_EQ(sink.bytes(), data);
  ops::CollectSink part;
  rig.stack.read_bypass(1, t.base_vaddr + 12345, 999, part);
  EXPECT_TRUE(std::equal(part.bytes().begin(), part.bytes().end(), data.begin() + 12345));
}

TEST(Execute, FullSelectReturnsTheTable) {
  Rig rig;
  const auto r = rig.stack.bind_region(1);
  rig.stack.load_pipeline(r, 1);
  std::mt19937_64 rng(2);
  const Bytes data = test::uniform_table(rng, 20000, 1000);
  const auto t = rig.upload(1, data, Schema::uniform(8, 8));
  EXPECT_EQ(rig.run(r, Query::select(0xFF), t, data.size()).first, data);
}

TEST(Execute, StreamingMatchesWholeTable) {
  std::mt19937_64 rng(3);
  const Schema s = Schema::uniform(8, 8);
  const Bytes data = test::uniform_table(rng, 5000, 100);
  const auto reg = PipelineRegistry::builtin();
  for (std::uint32_t depth : {1u, 7u, 1024u, 100000u}) {
    ExecutionConfig exec;
    exec.queue_depth = depth;
    Rig rig(6, 0, exec);
    const auto r = rig.stack.bind_region(1);
    const auto t = rig.upload(1, data, s);
    for (const auto& q : mixed_queries()) {
      rig.stack.load_pipeline(r, static_cast<std::uint16_t>(q.pipeline));
      const auto [bytes, res] = rig.run(r, q, t, data.size());
      const auto shape = result_shape(q, s);
      const auto ref = execute_cpu(q, s, data);
      ASSERT_EQ(merge_overflow(shape, q, bytes, res.overflow), merge_overflow(shape, q, ref.main, ref.overflow))
          << pipeline_name(q.pipeline) << " depth " << depth;
      ops::CollectSink host;
      const auto hr = run_pipeline_on_bytes(reg.make(static_cast<std::uint16_t>(q.pipeline)), q, s, data, host, exec);
      ASSERT_EQ(host.bytes(), bytes);
      ASSERT_EQ(hr.overflow, res.overflow);
    }
  }
}

TEST(Execute, SubrangeMatchesSlice) {
  Rig rig;
  const auto r = rig.stack.bind_region(1);
  rig.stack.load_pipeline(r, 1);
  std::mt19937_64 rng(4);
  const Schema s = Schema::uniform(8, 8);
  const Bytes data = test::uniform_table(rng, 4000, 100);
  const auto t = rig.upload(1, data, s);
  wire::Verb v = rig.farview(Query::select(0b101), t, 64 * 1000);
  v.vaddr += 64 * 500;
  ops::CollectSink sink;
  rig.stack.execute_request(r, v, sink);
  const auto ref = execute_cpu(Query::select(0b101), s, ByteSpan(data).subspan(64 * 500, 64 * 1000));
  EXPECT_EQ(sink.bytes(), ref.main);
  v.vaddr += 3;
  EXPECT_NE(code_of([&] { rig.stack.execute_request(r, v, sink); }), ErrorCode::kOk);
}

TEST(Execute, AbortStopsTheRequest) {
  ExecutionConfig exec;
  exec.queue_depth = 256;
  Rig rig(6, 0, exec);
  const auto r = rig.stack.bind_region(1);
  rig.stack.load_pipeline(r, 1);
  const Bytes data(64 * 100000, std::byte{1});
  const auto t = rig.upload(1, data, Schema::uniform(8, 8));
  struct AbortingSink : ops::ByteSink {
    OperatorStack* stack;
    std::uint32_t region;
    std::size_t bytes = 0;
    void write(ByteSpan b) override {
      bytes += b.size();
      stack->abort(region);
    }
  } sink;
  sink.stack = &rig.stack;
  sink.region = r;
  EXPECT_EQ(code_of([&] { rig.stack.execute_request(r, rig.farview(Query::select(0xFF), t, data.size()), sink); }),
            ErrorCode::kAborted);
  EXPECT_LT(sink.bytes, data.size());
  EXPECT_EQ(rig.stack.region(r).state, RegionState::kIdle);
  EXPECT_EQ(rig.run(r, Query::select(0xFF), t, 640).first.size(), 640u);
}

TEST(Execute, RegionsRunConcurrently) {
  Rig rig;
  std::mt19937_64 rng(5);
  const Schema s = Schema::uniform(8, 8);
  std::vector<std::future<void>> fs;
  for (wire::QueuePairId qp = 1; qp <= 6; ++qp) {
    const auto r = rig.stack.bind_region(qp);
    rig.stack.load_pipeline(r, 2);
    const Bytes data = test::uniform_table(rng, 20000, 50);
    const auto t = rig.upload(qp, data, s);
    fs.push_back(std::async(std::launch::async, [&rig, r, t, data, s] {
      const Query q = Query::distinct(0b1, 0b1);
      for (int i = 0; i < 3; ++i) {
        const auto [bytes, res] = rig.run(r, q, t, data.size());
        const auto ref = execute_cpu(q, s, data);
        ASSERT_EQ(merge_overflow(result_shape(q, s), q, bytes, res.overflow), ref.main);
      }
    }));
  }
  for (auto& f : fs) f.get();
  EXPECT_EQ(rig.stack.max_region_concurrency(), 1u);
}
