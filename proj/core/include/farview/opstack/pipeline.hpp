#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace farview::opstack {

enum class StageKind : std::uint8_t {
  kSmartAddress,
  kParseProject,
  kDecrypt,
  kSelect,
  kRegex,
  kDistinct,
  kGroupBy,
  kAggregate,
  kEncrypt,
  kPack,
  kSend,
};

const char* stage_name(StageKind s);

struct PipelineSpec {
  std::uint16_t pipeline_id = 0;
  std::string name;
  std::vector<StageKind> stages;
  std::uint32_t lanes = 1;
  std::vector<std::uint64_t> default_params;

  /// Throws Error(kConfig) when the stage order breaks a pipeline rule.
  void validate() const;
  bool has(StageKind s) const;
};

/// Id -> pipeline constructor. Read-only once the server runs.
class PipelineRegistry {
 public:
  using Factory = std::function<PipelineSpec()>;

  /// The six built-in pipelines (ids 1-6).
  static PipelineRegistry builtin(std::uint32_t reconfig_delay_ms = 0);

  void add(std::uint16_t id, Factory factory);
  bool contains(std::uint16_t id) const { return factories_.contains(id); }
  /// Throws Error(kUnknownPipeline).
  PipelineSpec make(std::uint16_t id) const;
  std::vector<std::uint16_t> ids() const;

  std::uint32_t reconfig_delay_ms = 0;

 private:
  std::map<std::uint16_t, Factory> factories_;
};

}  // namespace farview::opstack
