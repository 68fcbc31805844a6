#include "farview/opstack/pipeline.hpp"

#include <algorithm>

#include "farview/common.hpp"
#include "farview/query/query.hpp"

namespace farview::opstack {

const char* stage_name(StageKind s) {
  switch (s) {
    case StageKind::kSmartAddress: return "smart_address";
    case StageKind::kParseProject: return "parse_project";
    case StageKind::kDecrypt: return "decrypt";
    case StageKind::kSelect: return "select";
    case StageKind::kRegex: return "regex";
    case StageKind::kDistinct: return "distinct";
    case StageKind::kGroupBy: return "group_by";
    case StageKind::kAggregate: return "aggregate";
    case StageKind::kEncrypt: return "encrypt";
    case StageKind::kPack: return "pack";
    case StageKind::kSend: return "send";
  }
  return "?";
}

bool PipelineSpec::has(StageKind s) const { return std::find(stages.begin(), stages.end(), s) != stages.end(); }

void PipelineSpec::validate() const {
  auto bad = [&](const std::string& why) { fail(ErrorCode::kConfig, "pipeline " + name + ": " + why); };
  if (lanes == 0) bad("lanes must be >= 1");
  if (stages.size() < 3) bad("too few stages");
  if (stages.front() != StageKind::kParseProject && stages.front() != StageKind::kSmartAddress)
    bad("first stage must parse the input");
  if (stages[stages.size() - 2] != StageKind::kPack || stages.back() != StageKind::kSend)
    bad("pipeline must end with pack, send");
  for (std::size_t i = 1; i + 2 < stages.size(); ++i) {
    const auto s = stages[i];
    if (s == StageKind::kParseProject || s == StageKind::kSmartAddress || s == StageKind::kPack ||
        s == StageKind::kSend)
      bad(std::string(stage_name(s)) + " in the middle of a pipeline");
  }
  if (has(StageKind::kDistinct) && has(StageKind::kGroupBy)) bad("distinct and group_by are exclusive");
  if (has(StageKind::kDecrypt)) {
    const auto at = std::find(stages.begin(), stages.end(), StageKind::kDecrypt) - stages.begin();
    for (std::size_t i = 0; i < static_cast<std::size_t>(at); ++i) {
      const auto s = stages[i];
      if (s == StageKind::kSelect || s == StageKind::kRegex || s == StageKind::kDistinct ||
          s == StageKind::kGroupBy || s == StageKind::kAggregate)
        bad("decrypt must precede every content-inspecting stage");
    }
  }
  if (has(StageKind::kAggregate) && !has(StageKind::kGroupBy)) bad("aggregate needs group_by");
}

PipelineRegistry PipelineRegistry::builtin(std::uint32_t reconfig_delay_ms) {
  using S = StageKind;
  PipelineRegistry r;
  r.reconfig_delay_ms = reconfig_delay_ms;
  auto def = [&](PipelineId id, std::vector<StageKind> stages) {
    const auto raw = static_cast<std::uint16_t>(id);
    r.add(raw, [raw, id, stages] { return PipelineSpec{raw, pipeline_name(id), stages, 1, {}}; });
  };
  def(PipelineId::kSelect, {S::kParseProject, S::kSelect, S::kPack, S::kSend});
  def(PipelineId::kDistinct, {S::kParseProject, S::kDistinct, S::kPack, S::kSend});
  def(PipelineId::kGroupBy, {S::kParseProject, S::kGroupBy, S::kAggregate, S::kPack, S::kSend});
  def(PipelineId::kRegex, {S::kParseProject, S::kRegex, S::kPack, S::kSend});
  def(PipelineId::kDecryptSelectEncrypt,
      {S::kParseProject, S::kDecrypt, S::kSelect, S::kEncrypt, S::kPack, S::kSend});
  def(PipelineId::kEncryptRead, {S::kParseProject, S::kEncrypt, S::kPack, S::kSend});
  return r;
}

void PipelineRegistry::add(std::uint16_t id, Factory factory) {
  if (factories_.contains(id)) fail(ErrorCode::kConfig, "pipeline id " + std::to_string(id) + " already registered");
  factory().validate();
  factories_.emplace(id, std::move(factory));
}

PipelineSpec PipelineRegistry::make(std::uint16_t id) const {
  auto it = factories_.find(id);
  if (it == factories_.end()) fail(ErrorCode::kUnknownPipeline, "pipeline id " + std::to_string(id) + " not registered");
  return it->second();
}

std::vector<std::uint16_t> PipelineRegistry::ids() const {
  std::vector<std::uint16_t> out;
  for (const auto& [id, f] : factories_) out.push_back(id);
  return out;
}

}  // namespace farview::opstack
