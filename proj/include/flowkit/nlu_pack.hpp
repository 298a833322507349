#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flowkit/classifier.hpp"
#include "flowkit/dialogue.hpp"
#include "flowkit/embedder.hpp"

namespace flowkit {

/// "dialogue/node", the bundle-wide name of a node.
std::string qualify(std::string_view dialogue_id, std::string_view node_id);
std::pair<std::string, std::string> split_qualified(std::string_view qualified);

struct BankEntry {
  std::string masked_text;
  Embedding embedding;
};

/// Everything inference needs: one classifier per User Input (over its local
/// intents), one per sub-dialogue with global intents, and the embedded
/// training examples used for scope routing.
struct TrainedNluPack {
  std::map<std::string, IntentClassifier> local_classifiers;   // qualified User Input id
  std::map<std::string, IntentClassifier> global_classifiers;  // dialogue id
  std::map<std::string, std::vector<BankEntry>> bank;          // qualified intent id
  double ood_threshold = 0.55;
  std::size_t dim = kEmbeddingDim;
  std::string bundle_fingerprint;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requires a validated bundle. Throws TrainingError for an intent without
/// usable examples.
TrainedNluPack train_pack(const DialogueBundle& bundle, const Embedder& embedder, const TrainingOptions& options = {});
TrainedNluPack train_pack(const DialogueBundle& bundle);

nlohmann::json pack_to_json(const TrainedNluPack& pack);
TrainedNluPack pack_from_json(const nlohmann::json& j);
/// Deterministic text form of the pack artifact.
std::string serialize_pack(const TrainedNluPack& pack);

enum class RoutingScope { Local, Global, OutOfDomain };

std::string_view to_string(RoutingScope s);

struct RoutingDecision {
  RoutingScope scope = RoutingScope::OutOfDomain;
  double best_local_sim = 0.0;
  double best_global_sim = 0.0;
  std::optional<std::string> chosen_intent;  // qualified intent id
  std::optional<double> confidence;

  friend bool operator==(const RoutingDecision&, const RoutingDecision&) = default;
};

nlohmann::json to_json(const RoutingDecision& r);
RoutingDecision routing_from_json(const nlohmann::json& j);

struct RoutingContext {
  std::string dialogue_id;
  std::string user_input_id;
  /// Sub-dialogues whose global intents are eligible, current first, main last.
  std::vector<std::string> global_scope;
};

class UnknownContextError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Nearest-example cosine routing into Local / Global / OutOfDomain, then the
/// winning scope's classifier picks the intent. Local wins similarity ties;
/// among global scopes the nearer sub-dialogue wins ties.
RoutingDecision route_and_classify(std::string_view masked_utterance, const RoutingContext& context,
                                   const TrainedNluPack& pack, const Embedder& embedder);

/// Entity types to mask at a User Input: markup types of its local intents
/// united with those of every eligible global intent.
std::set<std::string> masking_types(const DialogueBundle& bundle, const RoutingContext& context);

const Embedder& default_embedder();

}  // namespace flowkit
