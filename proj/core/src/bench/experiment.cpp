#include "farview/bench/experiment.hpp"

#include <algorithm>
#include <barrier>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace farview::bench {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t elapsed_us(Clock::time_point t0) {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0).count());
}

client::FTable upload(client::QPair& qp, const Workload& w, const std::string& name) {
  client::FTable ft{name, w.schema, w.table.size()};
  qp.alloc_table(ft);
  qp.write(ft, w.table);
  return ft;
}

double median(std::vector<std::uint64_t> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? static_cast<double>(v[n / 2]) : (static_cast<double>(v[n / 2 - 1]) + static_cast<double>(v[n / 2])) / 2;
}

}  // namespace

const char* path_name(Path p) {
  switch (p) {
    case Path::kFv: return "fv";
    case Path::kFvv: return "fvv";
    case Path::kLcpu: return "lcpu";
    case Path::kRcpu: return "rcpu";
  }
  return "?";
}

std::vector<Path> parse_paths(const std::string& list) {
  std::vector<Path> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item == "fv") out.push_back(Path::kFv);
    else if (item == "fvv") out.push_back(Path::kFvv);
    else if (item == "lcpu") out.push_back(Path::kLcpu);
    else if (item == "rcpu") out.push_back(Path::kRcpu);
    else fail(ErrorCode::kArgument, "unknown path '" + item + "'");
  }
  if (out.empty()) fail(ErrorCode::kArgument, "no paths given");
  return out;
}

PathOutcome run_path(client::QPair& qp, const client::FTable& ft, const Workload& w, Path p) {
  PathOutcome out;
  if (p == Path::kLcpu) {
    const auto t0 = Clock::now();
    out.rows = lcpu_execute(w.table, w.schema, w.query);
    out.wall_us = elapsed_us(t0);
  } else {
    Query q = w.query;
    q.vectorize = p == Path::kFvv;
    q.server_cpu = p == Path::kRcpu;
    auto r = qp.far_view(ft, q);
    out.rows = std::move(r.rows);
    out.bytes_on_wire = r.stats.bytes_on_wire;
    out.wall_us = r.stats.wall_us;
  }
  out.rows = canonical_rows(w.shape, w.query, out.rows);
  return out;
}

void verify_against_oracle(const Workload& w, Path p, ByteSpan got) {
  if (got.size() == w.expected.size() && std::equal(got.begin(), got.end(), w.expected.begin())) return;
  const std::size_t rb = std::max<std::size_t>(1, w.shape.row_bytes);
  std::size_t first = 0;
  while (first * rb < std::min(got.size(), w.expected.size()) &&
         std::equal(got.begin() + first * rb, got.begin() + std::min(got.size(), (first + 1) * rb),
                    w.expected.begin() + first * rb))
    ++first;
  std::ostringstream os;
  os << "path " << path_name(p) << " on " << query_kind_name(w.spec.query) << " seed " << w.spec.seed << ": expected "
     << w.expected.size() / rb << " rows, got " << got.size() / rb << "; first differing row " << first;
  fail(ErrorCode::kOracleMismatch, os.str());
}

ExperimentResult run_experiment(const WorkloadSpec& spec, const std::vector<Path>& paths,
                                const wire::NodeAddress& node) {
  const Workload w = gen_table(spec);
  ExperimentResult res;
  res.spec = spec;
  res.table_bytes = w.table.size();
  res.access = ops::plan_smart_addressing(w.schema, w.query.needed_columns());
  res.client_bytes.assign(spec.clients, 0);

  std::mutex mu;
  std::exception_ptr failure;
  std::barrier start(static_cast<std::ptrdiff_t>(spec.clients));
  auto worker = [&](std::uint32_t c) {
    std::vector<RunRecord> local;
    std::uint64_t fv_bytes = 0;
    try {
      auto qp = client::QPair::open(node);
      auto ft = upload(qp, w, "bench_" + std::to_string(c));
      start.arrive_and_wait();
      for (Path p : paths) {
        for (std::uint32_t run = 0; run < spec.runs; ++run) {
          auto o = run_path(qp, ft, w, p);
          verify_against_oracle(w, p, o.rows);
          if (p == Path::kFv) fv_bytes += o.bytes_on_wire;
          local.push_back(RunRecord{p, spec.query, spec.rows, spec.tuple_bytes, spec.selectivity, c, run, o.wall_us,
                                    o.bytes_on_wire, w.expected_rows});
        }
      }
      qp.free_table(ft);
      qp.close();
    } catch (...) {
      std::lock_guard lk(mu);
      if (!failure) failure = std::current_exception();
      start.arrive_and_drop();
      return;
    }
    std::lock_guard lk(mu);
    res.client_bytes[c] = fv_bytes;
    res.runs.insert(res.runs.end(), local.begin(), local.end());
  };
  std::vector<std::thread> threads;
  for (std::uint32_t c = 0; c < spec.clients; ++c) threads.emplace_back(worker, c);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);

  std::sort(res.runs.begin(), res.runs.end(), [](const RunRecord& a, const RunRecord& b) {
    return std::tie(a.client, a.path, a.run) < std::tie(b.client, b.path, b.run);
  });
  for (Path p : paths) {
    PathSummary s{p};
    std::vector<std::uint64_t> times;
    for (const auto& r : res.runs) {
      if (r.path != p) continue;
      times.push_back(r.wall_us);
      if (r.client == 0) {
        s.bytes_on_wire = r.bytes_on_wire;
        s.rows_out = r.rows_out;
      }
    }
    s.median_us = median(times);
    s.mean_us = times.empty() ? 0
                              : static_cast<double>(std::accumulate(times.begin(), times.end(), std::uint64_t{0})) /
                                    static_cast<double>(times.size());
    res.summary.push_back(s);
  }
  return res;
}

void write_csv(std::ostream& os, const std::vector<RunRecord>& runs, bool header) {
  if (header) os << "path,query,rows,tuple_bytes,selectivity,run,wall_us,bytes_on_wire,rows_out\n";
  for (const auto& r : runs)
    os << path_name(r.path) << ',' << query_kind_name(r.query) << ',' << r.rows << ',' << r.tuple_bytes << ','
       << r.selectivity << ',' << r.run << ',' << r.wall_us << ',' << r.bytes_on_wire << ',' << r.rows_out << '\n';
}

std::vector<double> FairnessResult::shares() const {
  const double total = static_cast<double>(std::accumulate(bytes.begin(), bytes.end(), std::uint64_t{0}));
  std::vector<double> out;
  for (auto b : bytes) out.push_back(total > 0 ? static_cast<double>(b) / total : 0);
  return out;
}

FairnessResult measure_fairness(const WorkloadSpec& spec, const wire::NodeAddress& node,
                                std::chrono::milliseconds window) {
  const Workload w = gen_table(spec);
  FairnessResult res;
  res.bytes.assign(spec.clients, 0);
  res.queries.assign(spec.clients, 0);
  std::mutex mu;
  std::exception_ptr failure;
  std::barrier start(static_cast<std::ptrdiff_t>(spec.clients));
  Clock::time_point deadline;
  std::once_flag set_deadline;
  auto worker = [&](std::uint32_t c) {
    try {
      auto qp = client::QPair::open(node);
      auto ft = upload(qp, w, "fair_" + std::to_string(c));
      start.arrive_and_wait();
      std::call_once(set_deadline, [&] { deadline = Clock::now() + window; });
      std::uint64_t bytes = 0, done = 0;
      for (;;) {
        auto o = run_path(qp, ft, w, Path::kFv);
        if (Clock::now() > deadline) break;
        verify_against_oracle(w, Path::kFv, o.rows);
        bytes += o.bytes_on_wire;
        ++done;
      }
      qp.free_table(ft);
      qp.close();
      std::lock_guard lk(mu);
      res.bytes[c] = bytes;
      res.queries[c] = done;
    } catch (...) {
      std::lock_guard lk(mu);
      if (!failure) failure = std::current_exception();
      start.arrive_and_drop();
    }
  };
  std::vector<std::thread> threads;
  for (std::uint32_t c = 0; c < spec.clients; ++c) threads.emplace_back(worker, c);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return res;
}

}  // namespace farview::bench
