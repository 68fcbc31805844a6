#pragma once

#include <map>
#include <string>

#include "farview/memory/memory_stack.hpp"
#include "farview/opstack/executor.hpp"
#include "farview/wire/endpoint.hpp"

namespace farview::server {

/// Node configuration. The file form is flat `key = value` lines (`#`
/// comments); keys are the field names below, and `-` may stand for `_`.
struct ServerConfig {
  std::string listen = "127.0.0.1:0";
  std::uint32_t regions = 6;
  mem::MemoryConfig memory;
  std::uint32_t mtu = 1024;
  std::uint32_t credit_window = 64;
  std::uint32_t cuckoo_tables = 4;
  std::uint32_t cuckoo_slots = 1u << 16;
  std::uint32_t cuckoo_max_evictions = 32;
  std::uint32_t lru_depth = 8;
  std::uint32_t table_latency = 8;
  std::uint32_t reconfig_delay_ms = 0;
  bool rcpu_enabled = true;
  std::uint32_t queue_depth = 1024;
  std::uint32_t regex_engines = 4;

  /// Throws Error(kConfig) for an unknown key or a bad value.
  void set(const std::string& key, const std::string& value);
  void load_file(const std::string& path);
  static ServerConfig from_file(const std::string& path);
  void validate() const;
  /// Every key with its current value, in file form.
  std::string dump() const;

  opstack::ExecutionConfig execution() const;
};

}  // namespace farview::server
