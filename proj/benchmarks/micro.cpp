#include <benchmark/benchmark.h>

#include <random>

#include "farview/bench/workload.hpp"
#include "farview/ops/aes.hpp"
#include "farview/ops/cuckoo.hpp"
#include "farview/ops/lru.hpp"
#include "farview/ops/select.hpp"
#include "farview/wire/protocol.hpp"

using namespace farview;

namespace {

ByteSpan key_bytes(const std::uint64_t& k) { return ByteSpan(reinterpret_cast<const std::byte*>(&k), sizeof k); }

void BM_AesCtr(benchmark::State& state) {
  Bytes data(static_cast<std::size_t>(state.range(0)), std::byte{0x5a});
  const ops::CtrCipher cipher(bench::crypto_params(1, 2));
  for (auto _ : state) {
    cipher.apply(data, 0);
    benchmark::DoNotOptimize(data.data());
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AesCtr)->Range(1 << 10, 1 << 20);

void BM_CuckooInsert(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::vector<std::uint64_t> keys(1 << 16);
  for (auto& k : keys) k = rng();
  for (auto _ : state) {
    ops::CuckooTableSet t(ops::CuckooConfig{}, 8);
    for (std::uint32_t i = 0; i < keys.size(); ++i)
      benchmark::DoNotOptimize(t.insert(key_bytes(keys[i]), i));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(keys.size()));
}
BENCHMARK(BM_CuckooInsert);

void BM_LruAccess(benchmark::State& state) {
  ops::LruShiftRegister lru(static_cast<std::size_t>(state.range(0)), 8);
  std::mt19937_64 rng(9);
  std::vector<std::uint64_t> keys(4096);
  for (auto& k : keys) k = rng() % 64;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lru.access(key_bytes(keys[i])));
    i = (i + 1) % keys.size();
  }
}
BENCHMARK(BM_LruAccess)->Arg(4)->Arg(16)->Arg(32);

void BM_SelectBatch(benchmark::State& state) {
  bench::WorkloadSpec spec;
  spec.rows = 1 << 16;
  spec.selectivity = 0.25;
  const auto w = bench::gen_table(spec);
  const ops::CompiledPredicate pred(w.query.predicate, w.schema);
  for (auto _ : state) {
    ops::TupleBatch batch{&w.schema, w.table, {}, 0};
    batch.select_all();
    ops::select_batch(batch, pred, static_cast<std::uint32_t>(state.range(0)));
    benchmark::DoNotOptimize(batch.sel.data());
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(w.table.size()));
}
BENCHMARK(BM_SelectBatch)->Arg(1)->Arg(4);

void BM_PacketizeReassemble(benchmark::State& state) {
  Bytes payload(1 << 20, std::byte{1});
  const auto mtu = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto packets = wire::packetize(1, 1, payload, mtu);
    benchmark::DoNotOptimize(wire::reassemble(packets));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(payload.size()));
}
BENCHMARK(BM_PacketizeReassemble)->Arg(1024)->Arg(4096);

void BM_LocalCpu(benchmark::State& state) {
  bench::WorkloadSpec spec;
  spec.query = static_cast<bench::QueryKind>(state.range(0));
  spec.rows = 1 << 14;
  spec.selectivity = 0.5;
  const auto w = bench::gen_table(spec);
  state.SetLabel(bench::query_kind_name(spec.query));
  for (auto _ : state) benchmark::DoNotOptimize(bench::lcpu_execute(w.table, w.schema, w.query));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(w.table.size()));
}
BENCHMARK(BM_LocalCpu)->DenseRange(0, 5);

}  // namespace

BENCHMARK_MAIN();
