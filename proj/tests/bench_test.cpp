#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "farview/bench/experiment.hpp"
#include "farview/server/server.hpp"

using namespace farview;
using namespace farview::bench;

namespace {

WorkloadSpec spec_for(QueryKind k, std::uint64_t rows = 1000, double sel = 1.0) {
  WorkloadSpec s;
  s.query = k;
  s.rows = rows;
  s.selectivity = sel;
  s.runs = 1;
  return s;
}

}  // namespace

TEST(Workload, ExactSelectivity) {
  for (double sel : {0.001, 0.02, 0.25, 0.5, 1.0}) {
    const auto w = gen_table(spec_for(QueryKind::kSelect, 1000, sel));
    EXPECT_EQ(w.expected_rows, static_cast<std::uint64_t>(std::ceil(1000 * sel)));
    EXPECT_EQ(lcpu_execute(w.table, w.schema, w.query), w.expected);
  }
}

TEST(Workload, GroupCountsAreExact) {
  for (auto k : {QueryKind::kDistinct, QueryKind::kGroupBy}) {
    auto s = spec_for(k, 5000);
    s.groups = 256;
    const auto w = gen_table(s);
    EXPECT_EQ(w.expected_rows, 256u);
    EXPECT_EQ(canonical_rows(w.shape, w.query, lcpu_execute(w.table, w.schema, w.query)), w.expected);
  }
}

TEST(Workload, RegexMatchShare) {
  const auto w = gen_table(spec_for(QueryKind::kRegex, 1000, 0.5));
  EXPECT_EQ(w.expected_rows, 500u);
  EXPECT_EQ(lcpu_execute(w.table, w.schema, w.query), w.expected);
}

TEST(Workload, EncryptedTablesDecryptToPlaintext) {
  const auto w = gen_table(spec_for(QueryKind::kDecryptSelect, 1000, 0.25));
  EXPECT_NE(w.table, w.plaintext);
  EXPECT_EQ(ops::aes_ctr_transform(w.table, crypto_params(w.spec.seed, 1)), w.plaintext);
  EXPECT_EQ(lcpu_execute(w.table, w.schema, w.query), w.expected);
}

TEST(Workload, DeterministicInSeed) {
  const auto a = gen_table(spec_for(QueryKind::kGroupBy, 2000));
  const auto b = gen_table(spec_for(QueryKind::kGroupBy, 2000));
  EXPECT_EQ(a.table, b.table);
  auto s = spec_for(QueryKind::kGroupBy, 2000);
  s.seed = 2;
  EXPECT_NE(gen_table(s).table, a.table);
}

TEST(Workload, SpecValidation) {
  auto s = spec_for(QueryKind::kSelect);
  s.selectivity = 1.5;
  EXPECT_THROW(s.validate(), Error);
  s = spec_for(QueryKind::kSelect);
  s.tuple_bytes = 60;
  EXPECT_THROW(s.validate(), Error);
  EXPECT_THROW(parse_query_kind("nope"), Error);
  EXPECT_EQ(parse_query_kind("group_by"), QueryKind::kGroupBy);
  EXPECT_EQ(parse_paths("fv,rcpu"), (std::vector<Path>{Path::kFv, Path::kRcpu}));
  EXPECT_THROW(parse_paths("fv,gpu"), Error);
}

TEST(Oracle, MismatchIsReported) {
  const auto w = gen_table(spec_for(QueryKind::kSelect, 100, 0.5));
  Bytes wrong = w.expected;
  wrong[3] ^= std::byte{1};
  try {
    verify_against_oracle(w, Path::kFv, wrong);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOracleMismatch);
  }
  EXPECT_NO_THROW(verify_against_oracle(w, Path::kFv, w.expected));
}

TEST(Experiment, AllPathsAgreeAndCsvIsWellFormed) {
  server::ServerConfig cfg;
  cfg.memory.channel_capacity = std::uint64_t{64} << 20;
  server::Server srv(cfg);
  srv.start();
  const wire::NodeAddress node{"127.0.0.1", srv.port()};
  const std::vector<Path> paths{Path::kFv, Path::kFvv, Path::kLcpu, Path::kRcpu};
  std::vector<RunRecord> all;
  for (auto k : {QueryKind::kSelect, QueryKind::kDistinct, QueryKind::kGroupBy, QueryKind::kRegex,
                 QueryKind::kDecryptSelect, QueryKind::kEncryptRead, QueryKind::kProjectionCrossover}) {
    auto s = spec_for(k, 3000, 0.5);
    s.runs = 2;
    const auto r = run_experiment(s, paths, node);
    EXPECT_EQ(r.runs.size(), 8u);
    std::set<std::uint64_t> rows_out;
    for (const auto& rec : r.runs) rows_out.insert(rec.rows_out);
    EXPECT_EQ(rows_out.size(), 1u) << query_kind_name(k);
    all.insert(all.end(), r.runs.begin(), r.runs.end());
  }
  srv.stop();
  std::ostringstream os;
  write_csv(os, all);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "path,query,rows,tuple_bytes,selectivity,run,wall_us,bytes_on_wire,rows_out");
  std::size_t n = 0;
  while (std::getline(is, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 8);
    ++n;
  }
  EXPECT_EQ(n, all.size());
}
