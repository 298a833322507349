#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowkit/attributes.hpp"
#include "flowkit/dialogue.hpp"
#include "flowkit/embedder.hpp"
#include "flowkit/nlu_pack.hpp"
#include "flowkit/nrg.hpp"
#include "flowkit/time_util.hpp"
#include "flowkit/turn_record.hpp"

namespace flowkit {

struct Frame {
  std::string dialogue_id;
  /// Node in the parent dialogue to resume at after this frame exits. Unset
  /// for the main dialogue and for dialogues picked by the selector.
  std::optional<NodeId> return_node;
};

struct Cursor {
  enum class Kind { AwaitingInput, AwaitingNrgReply, Ended };
  Kind kind = Kind::AwaitingInput;
  NodeId node;
  /// Reply expected for the engine's own out-of-domain fallback rather than a Speech node.
  bool builtin_fallback = false;
};

struct Session {
  std::string session_id;
  std::string app_id;
  std::string user_id;
  std::string community;
  std::string client_tag;
  std::uint64_t seed = 0;
  std::mt19937_64 rng;

  std::vector<Frame> stack;
  Cursor cursor;
  SessionAttributeState attributes;
  std::set<std::string> discussed_labels;
  std::set<std::string> discussed_entities;
  std::vector<HistoryItem> history;

  int next_turn_index = 0;
  std::int64_t started_at_ms = 0;
  std::optional<std::int64_t> ended_at_ms;
  bool ended_with_error = false;

  bool ended() const { return cursor.kind == Cursor::Kind::Ended; }
  const std::string& current_dialogue() const { return stack.back().dialogue_id; }
};

struct SessionOptions {
  std::string session_id;
  std::string app_id;
  std::string user_id = "anonymous";
  std::string community = "default";
  std::string client_tag = "text";
  /// Defaults to the bundle's configured seed.
  std::optional<std::uint64_t> seed;
};

struct TurnResult {
  std::vector<std::string> responses;
  bool ended = false;
  TurnRecord record;
};

class SessionEndedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class SelectionStatus { Selected, NoneEligible };

struct SelectionResult {
  SelectionStatus status = SelectionStatus::NoneEligible;
  std::string dialogue_id;
  /// Candidates disqualified because their starting condition failed to evaluate.
  std::vector<std::string> errors;
};

/// Keeps candidates whose starting condition holds, scores each by how many of
/// its labels and entity tags the session has already discussed, and returns
/// the top score; ties go to the earlier pool entry.
SelectionResult select_dialogue(const std::vector<std::string>& pool, const std::set<std::string>& discussed_labels,
                                const std::set<std::string>& discussed_entities, const DialogueBundle& bundle,
                                const AttributeView& attributes);

/// Relevance score used by select_dialogue.
std::size_t selection_score(const SubDialogue& d, const std::set<std::string>& discussed_labels,
                            const std::set<std::string>& discussed_entities);

/// Executes a bundle: one instance serves any number of sessions, each driven
/// by one caller at a time.
class Engine {
 public:
  Engine(const DialogueBundle& bundle, const TrainedNluPack& pack, SharedAttributes& shared,
         const NrgGenerator& generator, const Embedder& embedder = default_embedder(), Clock clock = system_clock());

  /// Runs the main dialogue up to its first User Input; the launch record has index 0.
  TurnResult start_session(Session& session, const SessionOptions& options) const;
  /// Throws SessionEndedError once the session has ended.
  TurnResult process_turn(Session& session, const std::string& utterance) const;

  const DialogueBundle& bundle() const { return bundle_; }
  const std::map<AttributeRef, AttributeDecl>& catalog() const { return catalog_; }

  static constexpr int kMaxVisitsPerTurn = 200;

 private:
  struct TurnContext;

  void run(Session& s, TurnContext& ctx, std::optional<NodeId> next) const;
  std::optional<NodeId> fail(Session& s, TurnContext& ctx, const std::string& message) const;
  std::optional<NodeId> step(Session& s, TurnContext& ctx, const SubDialogue& d, const Node& n) const;
  std::optional<NodeId> follow(Session& s, TurnContext& ctx, const SubDialogue& d, const Node& n) const;
  std::optional<NodeId> exit_dialogue(Session& s, TurnContext& ctx) const;
  void push_dialogue(Session& s, const SubDialogue& d, std::optional<NodeId> return_node) const;
  /// Finds a Silence/OOD handler: local to `u` first, then global actions up the stack.
  /// Unwinds the stack to the owning dialogue when a global action is used.
  std::optional<NodeId> situation_handler(Session& s, const NodeId& u, Situation situation) const;
  void speak(Session& s, TurnContext& ctx, const std::string& text) const;
  void generate(Session& s, TurnContext& ctx, DialogueAct act, std::optional<std::string> grounding) const;
  void end_session(Session& s, TurnContext& ctx, bool with_error) const;
  TurnResult finish(Session& s, TurnContext& ctx) const;
  std::vector<std::string> global_scope(const Session& s) const;

  const DialogueBundle& bundle_;
  const TrainedNluPack& pack_;
  SharedAttributes& shared_;
  const NrgGenerator& generator_;
  const Embedder& embedder_;
  Clock clock_;
  std::map<AttributeRef, AttributeDecl> catalog_;
};

}  // namespace flowkit
