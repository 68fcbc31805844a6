#pragma once

#include <chrono>
#include <iosfwd>
#include <string>
#include <vector>

#include "farview/bench/workload.hpp"
#include "farview/client/client.hpp"
#include "farview/ops/smart_addressing.hpp"

namespace farview::bench {

enum class Path { kFv, kFvv, kLcpu, kRcpu };

const char* path_name(Path p);
/// Parses a comma-separated list such as "fv,fvv,lcpu,rcpu".
std::vector<Path> parse_paths(const std::string& list);

struct RunRecord {
  Path path = Path::kFv;
  QueryKind query = QueryKind::kSelect;
  std::uint64_t rows = 0;
  std::uint32_t tuple_bytes = 0;
  double selectivity = 0;
  std::uint32_t client = 0;
  std::uint32_t run = 0;
  std::uint64_t wall_us = 0;
  std::uint64_t bytes_on_wire = 0;
  std::uint64_t rows_out = 0;
};

struct PathSummary {
  Path path = Path::kFv;
  double median_us = 0;
  double mean_us = 0;
  std::uint64_t bytes_on_wire = 0;  // per run, first client
  std::uint64_t rows_out = 0;
};

struct ExperimentResult {
  WorkloadSpec spec;
  std::vector<RunRecord> runs;
  std::vector<PathSummary> summary;
  std::vector<std::uint64_t> client_bytes;  // FV-path bytes per client
  ops::AccessPlan access;                   // planner decision for the query
  std::uint64_t table_bytes = 0;
};

/// One execution of the workload's query on one path. Result rows are
/// plaintext and canonical.
struct PathOutcome {
  Bytes rows;
  std::uint64_t bytes_on_wire = 0;
  std::uint64_t wall_us = 0;
};

PathOutcome run_path(client::QPair& qp, const client::FTable& ft, const Workload& w, Path p);

/// Throws Error(kOracleMismatch) with a diff report when `got` differs from
/// the workload's expected rows.
void verify_against_oracle(const Workload& w, Path p, ByteSpan got);

/// Runs spec.runs repetitions of every path for each of spec.clients
/// concurrent clients, verifying every run before recording it.
ExperimentResult run_experiment(const WorkloadSpec& spec, const std::vector<Path>& paths,
                                const wire::NodeAddress& node);

void write_csv(std::ostream& os, const std::vector<RunRecord>& runs, bool header = true);

struct FairnessResult {
  std::vector<std::uint64_t> bytes;    // per client, completed queries only
  std::vector<std::uint64_t> queries;  // completed per client
  std::vector<double> shares() const;
};

/// Every client repeats the workload's FV query back to back; stops at the
/// deadline and reports what each client completed by then.
FairnessResult measure_fairness(const WorkloadSpec& spec, const wire::NodeAddress& node,
                                std::chrono::milliseconds window);

}  // namespace farview::bench
