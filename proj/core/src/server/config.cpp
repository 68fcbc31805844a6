#include "farview/server/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace farview::server {

using wire::NodeAddress;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_uint(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) fail(ErrorCode::kConfig, key + ": expected an unsigned integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  fail(ErrorCode::kConfig, key + ": expected a boolean, got '" + v + "'");
}

}  // namespace

void ServerConfig::set(const std::string& raw_key, const std::string& raw_value) {
  std::string key = trim(raw_key);
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string v = trim(raw_value);
  if (key == "listen") listen = v;
  else if (key == "regions") regions = parse_uint<std::uint32_t>(key, v);
  else if (key == "channels") memory.channels = parse_uint<std::uint32_t>(key, v);
  else if (key == "channel_capacity") memory.channel_capacity = parse_uint<std::uint64_t>(key, v);
  else if (key == "stripe") memory.stripe = parse_uint<std::uint64_t>(key, v);
  else if (key == "burst_bytes") memory.burst_bytes = parse_uint<std::uint64_t>(key, v);
  else if (key == "record_grants") memory.record_grants = parse_bool(key, v);
  else if (key == "mtu") mtu = parse_uint<std::uint32_t>(key, v);
  else if (key == "credit_window") credit_window = parse_uint<std::uint32_t>(key, v);
  else if (key == "cuckoo_tables") cuckoo_tables = parse_uint<std::uint32_t>(key, v);
  else if (key == "cuckoo_slots") cuckoo_slots = parse_uint<std::uint32_t>(key, v);
  else if (key == "cuckoo_max_evictions") cuckoo_max_evictions = parse_uint<std::uint32_t>(key, v);
  else if (key == "lru_depth") lru_depth = parse_uint<std::uint32_t>(key, v);
  else if (key == "table_latency") table_latency = parse_uint<std::uint32_t>(key, v);
  else if (key == "reconfig_delay_ms") reconfig_delay_ms = parse_uint<std::uint32_t>(key, v);
  else if (key == "rcpu_enabled") rcpu_enabled = parse_bool(key, v);
  else if (key == "queue_depth") queue_depth = parse_uint<std::uint32_t>(key, v);
  else if (key == "regex_engines") regex_engines = parse_uint<std::uint32_t>(key, v);
  else fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
}

void ServerConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kConfig, "cannot open config file " + path);
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kConfig, path + ":" + std::to_string(n) + ": expected key = value");
    set(line.substr(0, eq), line.substr(eq + 1));
  }
}

ServerConfig ServerConfig::from_file(const std::string& path) {
  ServerConfig c;
  c.load_file(path);
  return c;
}

void ServerConfig::validate() const {
  if (regions == 0) fail(ErrorCode::kConfig, "regions must be >= 1");
  if (mtu < 64 || mtu > 65535) fail(ErrorCode::kConfig, "mtu must be in [64, 65535]");
  if (credit_window == 0) fail(ErrorCode::kConfig, "credit_window must be >= 1");
  if (lru_depth == 0) fail(ErrorCode::kConfig, "lru_depth must be >= 1");
  if (queue_depth == 0) fail(ErrorCode::kConfig, "queue_depth must be >= 1");
  if (regex_engines == 0) fail(ErrorCode::kConfig, "regex_engines must be >= 1");
  if (cuckoo_max_evictions == 0) fail(ErrorCode::kConfig, "cuckoo_max_evictions must be >= 1");
  memory.validate();
  execution().distinct.cuckoo.validate();
  (void)NodeAddress::parse(listen);
}

std::string ServerConfig::dump() const {
  std::ostringstream o;
  o << "listen = " << listen << "\nregions = " << regions << "\nchannels = " << memory.channels
    << "\nchannel_capacity = " << memory.channel_capacity << "\nstripe = " << memory.stripe
    << "\nburst_bytes = " << memory.burst_bytes << "\nrecord_grants = " << memory.record_grants << "\nmtu = " << mtu
    << "\ncredit_window = " << credit_window << "\ncuckoo_tables = " << cuckoo_tables
    << "\ncuckoo_slots = " << cuckoo_slots << "\ncuckoo_max_evictions = " << cuckoo_max_evictions
    << "\nlru_depth = " << lru_depth << "\ntable_latency = " << table_latency
    << "\nreconfig_delay_ms = " << reconfig_delay_ms << "\nrcpu_enabled = " << rcpu_enabled
    << "\nqueue_depth = " << queue_depth << "\nregex_engines = " << regex_engines << "\n";
  return o.str();
}

opstack::ExecutionConfig ServerConfig::execution() const {
  opstack::ExecutionConfig e;
  e.queue_depth = queue_depth;
  e.regex_engines = regex_engines;
  ops::CuckooConfig ck{cuckoo_tables, cuckoo_slots, cuckoo_max_evictions, {}};
  e.distinct = ops::DistinctConfig{ck, lru_depth, table_latency};
  e.group_by = ops::GroupByConfig{ck, lru_depth};
  return e;
}

}  // namespace farview::server
