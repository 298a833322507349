#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowkit/attributes.hpp"
#include "flowkit/entities.hpp"
#include "flowkit/nlu_pack.hpp"
#include "flowkit/skimmer.hpp"

namespace flowkit {

struct NrgUsage {
  std::vector<DialogueAct> acts;
  bool fallback = false;

  friend bool operator==(const NrgUsage&, const NrgUsage&) = default;
};

/// Everything that happened in one turn. Index 0 is the launch turn, which has
/// an empty utterance.
struct TurnRecord {
  std::string session_id;
  int turn_index = 0;
  std::string raw_utterance;
  std::vector<EntitySpan> entities;
  std::string masked_utterance;
  std::optional<RoutingDecision> routing;
  std::vector<SkimmerWrite> skimmer_writes;
  std::vector<std::string> traversed_nodes;  // "dialogue/node"
  std::vector<std::string> responses;
  std::vector<AttributeChange> attribute_diff;
  std::optional<NrgUsage> nrg_used;
  std::int64_t duration_ms = 0;
  std::optional<std::string> error;
  std::int64_t timestamp_ms = 0;
  /// Reserved for n-best speech hypotheses; text clients leave it empty.
  std::vector<std::string> asr_hypotheses;
};

nlohmann::json to_json(const TurnRecord& r);
TurnRecord turn_record_from_json(const nlohmann::json& j);

/// The record without fields that vary between otherwise identical runs
/// (session id, timestamp, duration). Used for replay comparison.
nlohmann::json stable_json(const TurnRecord& r);

}  // namespace flowkit
