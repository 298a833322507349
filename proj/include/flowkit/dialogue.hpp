#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flowkit/condition.hpp"
#include "flowkit/entities.hpp"
#include "flowkit/skimmer.hpp"
#include "flowkit/value.hpp"

namespace flowkit {

using NodeId = std::string;

enum class NodeKind {
  Enter,
  Speech,
  UserInput,
  Intent,
  GlobalIntent,
  Function,
  Action,
  GlobalAction,
  SubDialogueRef,
  Exit,
};

std::string_view to_string(NodeKind k);
std::optional<NodeKind> parse_node_kind(std::string_view s);

enum class Situation { Silence, Error, OutOfDomain };

std::string_view to_string(Situation s);
std::optional<Situation> parse_situation(std::string_view s);

/// Response text with `{scope.name}` slots.
class TemplateString {
 public:
  struct Piece {
    std::string literal;
    std::optional<AttributeRef> slot;
  };

  TemplateString() = default;
  /// Throws std::invalid_argument on an unterminated or malformed slot. `{{` and `}}` are literal braces.
  explicit TemplateString(std::string source);

  const std::string& source() const { return source_; }
  const std::vector<Piece>& pieces() const { return pieces_; }
  std::vector<AttributeRef> slots() const;
  std::string render(const AttributeView& attrs) const;

 private:
  std::string source_;
  std::vector<Piece> pieces_;
};

/// One `[text]{type}` annotation inside an intent example.
struct EntityMarkup {
  std::size_t start = 0;  // byte offset in the plain text
  std::size_t end = 0;
  std::string surface;
  std::string type_name;
};

/// Intent example with markup stripped out.
struct AnnotatedExample {
  std::string source;  // as written, with markup
  std::string plain;   // markup removed, surface text kept
  std::string masked;  // every annotated span replaced by `{type}`
  std::vector<EntityMarkup> entities;
};

class MarkupError : public std::invalid_argument {
 public:
  MarkupError(std::size_t offset, const std::string& msg)
      : std::invalid_argument(msg + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Parses `My favorite movie is [Matrix]{movie}`. Throws MarkupError when brackets are unbalanced.
AnnotatedExample parse_example(std::string_view source);

enum class DialogueAct { Statement, Question, StatementThenQuestion };

std::string_view to_string(DialogueAct a);
std::optional<DialogueAct> parse_dialogue_act(std::string_view s);

/// Generated response plugged into a Speech node.
struct NrgSpec {
  DialogueAct act = DialogueAct::Statement;
  std::optional<TemplateString> grounding;
  /// Wait for one free-form user reply after speaking, without intent classification.
  bool await_reply = false;
};

struct EnterPayload {};
struct ExitPayload {};

struct SpeechPayload {
  std::vector<TemplateString> responses;
  std::optional<NrgSpec> nrg;
};

struct UserInputPayload {
  std::optional<NodeId> local_ood_action;
};

struct IntentPayload {
  std::vector<AnnotatedExample> examples;
  bool is_global = false;
};

struct Assignment {
  AttributeRef target;
  ConditionExpr expr;
};

struct Transition {
  ConditionExpr guard;
  std::string out_key;
};

struct FunctionPayload {
  std::vector<Assignment> assignments;
  std::vector<Transition> transitions;
};

struct ActionPayload {
  Situation situation = Situation::OutOfDomain;
  bool is_global = false;
};

struct SubDialogueRefPayload {
  std::string dialogue_id;
};

using NodePayload = std::variant<EnterPayload, SpeechPayload, UserInputPayload, IntentPayload, FunctionPayload,
                                 ActionPayload, SubDialogueRefPayload, ExitPayload>;

struct Node {
  NodeId id;
  NodeKind kind = NodeKind::Enter;
  NodePayload payload;

  template <class T>
  const T& as() const {
    return std::get<T>(payload);
  }
};

/// True when the payload alternative agrees with the node kind.
bool payload_matches(const Node& n);

struct Edge {
  NodeId from;
  std::string out_key;
  NodeId to;
};

struct AttributeDecl {
  std::string name;
  Scope scope = Scope::Session;
  Value default_value;

  AttributeRef ref() const { return {scope, name}; }
};

struct SubDialogue {
  std::string id;
  std::string name;
  std::set<std::string> labels;
  std::set<std::string> entity_tags;
  std::optional<ConditionExpr> starting_condition;
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<AttributeDecl> init_attributes;

  const Node* find(std::string_view node_id) const;
  const Node* enter() const;
  std::vector<const Edge*> out_edges(std::string_view node_id) const;
  /// First edge leaving `node_id`, or null.
  const Edge* out_edge(std::string_view node_id) const;
  const Edge* out_edge(std::string_view node_id, std::string_view out_key) const;
  /// Intent nodes reached by edges out of the given User Input node, in edge order.
  std::vector<const Node*> local_intents(std::string_view user_input_id) const;
  std::vector<const Node*> global_intents() const;
  std::vector<const Node*> user_inputs() const;
  /// Non-global Action of the given situation connected to a User Input.
  const Node* local_action(std::string_view user_input_id, Situation s) const;
  /// Global Action of the given situation declared in this sub-dialogue.
  const Node* global_action(Situation s) const;
  /// Any Action (local or global) of the situation; used for Error routing.
  const Node* any_action(Situation s) const;
};

struct BundleConfig {
  std::string app_id;
  std::string language = "en";
  double ood_threshold = 0.55;
  std::uint64_t seed = 0;
  /// External generator endpoint, e.g. "http://127.0.0.1:8090"; empty uses the stub.
  std::string nrg_url;
  int nrg_timeout_ms = 2000;
};

struct DialogueBundle {
  std::string main_dialogue_id;
  std::vector<SubDialogue> sub_dialogues;
  std::vector<EntityRule> entity_rules;
  std::vector<SkimmerRule> skimmer_rules;
  std::vector<std::string> selector_pool;
  BundleConfig config;

  const SubDialogue* find(std::string_view dialogue_id) const;
  const SubDialogue& main() const;

  /// Attribute declarations merged across all sub-dialogues, keyed by reference.
  std::map<AttributeRef, AttributeDecl> attribute_catalog() const;
};

}  // namespace flowkit
