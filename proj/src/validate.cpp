#include "flowkit/validate.hpp"

#include <deque>
#include <map>
#include <set>

namespace flowkit {

std::string Diagnostic::location() const {
  if (dialogue.empty()) return "bundle";
  return node.empty() ? dialogue : dialogue + ":" + node;
}

std::string Diagnostic::str() const {
  return std::string(severity == Severity::Error ? "error" : "warning") + " [" + rule + "] " + location() + ": " +
         message;
}

nlohmann::json to_json(const Diagnostic& d) {
  return {{"severity", d.severity == Diagnostic::Severity::Error ? "error" : "warning"},
          {"rule", d.rule},
          {"location", d.location()},
          {"message", d.message}};
}

std::set<std::string> markup_types(const std::vector<const Node*>& intents) {
  std::set<std::string> out;
  for (const Node* n : intents)
    for (const auto& ex : n->as<IntentPayload>().examples)
      for (const auto& m : ex.entities) out.insert(m.type_name);
  return out;
}

namespace {

class Validator {
 public:
  explicit Validator(const DialogueBundle& b) : b_(b), catalog_(b.attribute_catalog()) {
    for (const auto& r : b.entity_rules) entity_types_.insert(r.type_name);
  }

  std::vector<Diagnostic> run() {
    if (!b_.find(b_.main_dialogue_id))
      add("main-missing", "", "", "main dialogue '" + b_.main_dialogue_id + "' does not exist");
    check_attribute_decls();
    for (const auto& d : b_.sub_dialogues) check_dialogue(d);
    for (const auto& id : b_.selector_pool)
      if (!b_.find(id)) add("dangling-ref", "", "", "selector pool entry '" + id + "' does not name a dialogue");
    for (std::size_t i = 0; i < b_.skimmer_rules.size(); ++i) check_skimmer(b_.skimmer_rules[i], i);
    return std::move(out_);
  }

 private:
  void add(std::string rule, const std::string& dialogue, const std::string& node, std::string msg) {
    out_.push_back({Diagnostic::Severity::Error, std::move(rule), dialogue, node, std::move(msg)});
  }

  void check_ref(const AttributeRef& ref, const std::string& d, const std::string& n, const std::string& where) {
    if (!catalog_.count(ref)) add("undeclared-attribute", d, n, where + " references undeclared attribute " + ref.str());
  }

  void check_expr(const ConditionExpr& e, const std::string& d, const std::string& n, const std::string& where) {
    for (const auto& r : e.references()) check_ref(r, d, n, where);
    for (const auto& c : e.calls())
      if (!is_builtin(c)) add("unknown-builtin", d, n, where + " calls unknown built-in '" + c + "'");
  }

  void check_attribute_decls() {
    std::map<AttributeRef, const AttributeDecl*> seen;
    for (const auto& d : b_.sub_dialogues) {
      std::set<std::string> names;
      for (const auto& a : d.init_attributes) {
        if (!names.insert(a.name).second)
          add("duplicate-attribute", d.id, "", "attribute '" + a.name + "' declared twice");
        auto [it, inserted] = seen.emplace(a.ref(), &a);
        if (!inserted && !(it->second->default_value == a.default_value))
          add("duplicate-attribute", d.id, "", "attribute " + a.ref().str() + " redeclared with a different default");
      }
    }
  }

  void check_skimmer(const SkimmerRule& r, std::size_t index) {
    const std::string where = "skimmer rule #" + std::to_string(index);
    if (r.attribute.scope == Scope::Turn)
      add("skimmer-turn-scope", "", "", where + " targets turn-scoped " + r.attribute.str());
    check_ref(r.attribute, "", "", where);
    if (!r.capture_is_valid()) add("bad-capture-group", "", "", where + " references a group its first pattern lacks");
  }

  void check_dialogue(const SubDialogue& d) {
    std::set<std::string> ids;
    std::size_t enters = 0;
    for (const auto& n : d.nodes) {
      if (!ids.insert(n.id).second) add("duplicate-id", d.id, n.id, "duplicate node id");
      if (n.kind == NodeKind::Enter) ++enters;
      if (!payload_matches(n)) add("payload-mismatch", d.id, n.id, "payload does not match node kind");
    }
    if (enters == 0) add("missing-enter", d.id, "", "dialogue has no Enter node");
    if (enters > 1) add("multiple-enter", d.id, "", "dialogue has " + std::to_string(enters) + " Enter nodes");

    for (const auto& e : d.edges) {
      if (!d.find(e.from)) add("dangling-edge", d.id, e.from, "edge source '" + e.from + "' does not exist");
      if (!d.find(e.to)) add("dangling-edge", d.id, e.from, "edge target '" + e.to + "' does not exist");
    }

    for (const auto& tag : d.entity_tags)
      if (!entity_types_.count(tag)) add("unknown-entity-type", d.id, "", "entity tag '" + tag + "' has no entity rule");
    if (d.starting_condition) check_expr(*d.starting_condition, d.id, "", "starting condition");

    std::map<Situation, int> global_actions;
    for (const auto& n : d.nodes) {
      if (!payload_matches(n)) continue;
      check_node(d, n);
      if (n.kind == NodeKind::GlobalAction && ++global_actions[n.as<ActionPayload>().situation] == 2)
        add("duplicate-global-action", d.id, n.id,
            "second global " + std::string(to_string(n.as<ActionPayload>().situation)) + " action");
    }

    if (enters >= 1 && !exit_reachable(d)) add("unreachable-exit", d.id, "", "no Exit node is reachable from Enter");
  }

  std::size_t incoming_from_user_inputs(const SubDialogue& d, const Node& n) const {
    std::size_t count = 0;
    for (const auto& e : d.edges) {
      if (e.to != n.id) continue;
      const Node* src = d.find(e.from);
      if (src && src->kind == NodeKind::UserInput) ++count;
    }
    return count;
  }

  void check_node(const SubDialogue& d, const Node& n) {
    auto outs = d.out_edges(n.id);
    switch (n.kind) {
      case NodeKind::Speech: {
        const auto& p = n.as<SpeechPayload>();
        if (p.responses.empty() && !p.nrg) add("empty-speech", d.id, n.id, "speech node has no responses");
        for (const auto& r : p.responses)
          for (const auto& s : r.slots()) check_ref(s, d.id, n.id, "response slot");
        if (p.nrg && p.nrg->grounding)
          for (const auto& s : p.nrg->grounding->slots()) check_ref(s, d.id, n.id, "grounding slot");
        break;
      }
      case NodeKind::UserInput: {
        if (d.local_intents(n.id).empty())
          add("user-input-without-intents", d.id, n.id, "user input has no connected Intent node");
        if (const auto& ood = n.as<UserInputPayload>().local_ood_action) {
          const Node* a = d.find(*ood);
          if (!a || a->kind != NodeKind::Action || a->as<ActionPayload>().situation != Situation::OutOfDomain)
            add("bad-ood-action", d.id, n.id, "oodAction '" + *ood + "' is not an outOfDomain Action in this dialogue");
        }
        break;
      }
      case NodeKind::Intent:
      case NodeKind::GlobalIntent: {
        const auto& p = n.as<IntentPayload>();
        if (p.examples.empty()) add("empty-intent", d.id, n.id, "intent has no examples");
        for (const auto& ex : p.examples) {
          if (ex.masked.find_first_not_of(" \t\r\n") == std::string::npos)
            add("empty-intent", d.id, n.id, "blank intent example");
          for (const auto& m : ex.entities)
            if (!entity_types_.count(m.type_name))
              add("unknown-entity-type", d.id, n.id, "markup type '" + m.type_name + "' has no entity rule");
        }
        auto incoming = incoming_from_user_inputs(d, n);
        if (n.kind == NodeKind::Intent && incoming != 1)
          add("intent-not-connected", d.id, n.id,
              "intent must be connected to exactly one User Input (found " + std::to_string(incoming) + ")");
        if (n.kind == NodeKind::GlobalIntent && incoming != 0)
          add("global-intent-connected", d.id, n.id, "global intent must not be connected to a User Input");
        break;
      }
      case NodeKind::Function: {
        const auto& p = n.as<FunctionPayload>();
        for (const auto& a : p.assignments) {
          check_ref(a.target, d.id, n.id, "assignment target");
          check_expr(a.expr, d.id, n.id, "assignment");
        }
        std::set<std::string> keys;
        for (const auto& t : p.transitions) {
          check_expr(t.guard, d.id, n.id, "guard");
          keys.insert(t.out_key);
          if (!d.out_edge(n.id, t.out_key))
            add("missing-transition-edge", d.id, n.id, "no edge for transition '" + t.out_key + "'");
        }
        if (p.transitions.empty() || !p.transitions.back().guard.is_literal_true())
          add("function-without-default", d.id, n.id, "last transition guard must be the literal true");
        for (const auto* e : outs)
          if (!keys.count(e->out_key))
            add("unknown-out-key", d.id, n.id, "edge key '" + e->out_key + "' matches no transition");
        break;
      }
      case NodeKind::SubDialogueRef: {
        const auto& target = n.as<SubDialogueRefPayload>().dialogue_id;
        if (!b_.find(target)) add("dangling-ref", d.id, n.id, "referenced dialogue '" + target + "' does not exist");
        break;
      }
      case NodeKind::Exit:
        if (!outs.empty()) add("exit-has-edges", d.id, n.id, "Exit node must not have outgoing edges");
        break;
      default:
        break;
    }
    bool single_successor = n.kind == NodeKind::Enter || n.kind == NodeKind::Speech || n.kind == NodeKind::Intent ||
                            n.kind == NodeKind::GlobalIntent || n.kind == NodeKind::Action ||
                            n.kind == NodeKind::GlobalAction || n.kind == NodeKind::SubDialogueRef;
    if (single_successor && outs.size() > 1)
      add("ambiguous-edge", d.id, n.id, std::to_string(outs.size()) + " outgoing edges on a single-successor node");
  }

  bool exit_reachable(const SubDialogue& d) const {
    const Node* enter = d.enter();
    if (!enter) return false;
    std::set<std::string> seen{enter->id};
    std::deque<std::string> queue{enter->id};
    auto push = [&](const std::string& id) {
      if (d.find(id) && seen.insert(id).second) queue.push_back(id);
    };
    while (!queue.empty()) {
      std::string id = queue.front();
      queue.pop_front();
      const Node* n = d.find(id);
      if (n->kind == NodeKind::Exit) return true;
      for (const auto* e : d.out_edges(id)) push(e->to);
      // Global intents and actions are entered from any User Input.
      if (n->kind == NodeKind::UserInput)
        for (const auto& other : d.nodes)
          if (other.kind == NodeKind::GlobalIntent || other.kind == NodeKind::GlobalAction) push(other.id);
    }
    return false;
  }

  const DialogueBundle& b_;
  std::map<AttributeRef, AttributeDecl> catalog_;
  std::set<std::string> entity_types_;
  std::vector<Diagnostic> out_;
};

}  // namespace

std::vector<Diagnostic> validate_bundle(const DialogueBundle& bundle) { return Validator(bundle).run(); }

}  // namespace flowkit
