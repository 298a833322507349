#include "flowkit/engine.hpp"

#include <algorithm>
#include <cctype>

#include "flowkit/entities.hpp"
#include "flowkit/skimmer.hpp"

namespace flowkit {

std::size_t selection_score(const SubDialogue& d, const std::set<std::string>& discussed_labels,
                            const std::set<std::string>& discussed_entities) {
  std::set<std::string> hits;
  for (const auto& l : d.labels)
    if (discussed_labels.count(l)) hits.insert(l);
  for (const auto& e : d.entity_tags)
    if (discussed_entities.count(e)) hits.insert(e);
  return hits.size();
}

SelectionResult select_dialogue(const std::vector<std::string>& pool, const std::set<std::string>& discussed_labels,
                                const std::set<std::string>& discussed_entities, const DialogueBundle& bundle,
                                const AttributeView& attributes) {
  SelectionResult result;
  std::size_t best = 0;
  for (const auto& id : pool) {
    const SubDialogue* d = bundle.find(id);
    if (!d) continue;
    if (d->starting_condition) {
      try {
        if (!eval_guard(*d->starting_condition, attributes)) continue;
      } catch (const EvalError& e) {
        result.errors.push_back(id + ": " + e.what());
        continue;
      }
    }
    const std::size_t score = selection_score(*d, discussed_labels, discussed_entities);
    if (result.status == SelectionStatus::NoneEligible || score > best) {
      result.status = SelectionStatus::Selected;
      result.dialogue_id = id;
      best = score;
    }
  }
  return result;
}

struct Engine::TurnContext {
  TurnContext(const Engine& e, Session& s)
      : attrs(e.catalog_, s.attributes, e.shared_, s.user_id, s.community), started_ms(e.clock_()) {}

  TurnRecord record;
  SessionAttributes attrs;
  std::int64_t started_ms;
  int visits = 0;
  bool error_routed = false;
};

Engine::Engine(const DialogueBundle& bundle, const TrainedNluPack& pack, SharedAttributes& shared,
               const NrgGenerator& generator, const Embedder& embedder, Clock clock)
    : bundle_(bundle),
      pack_(pack),
      shared_(shared),
      generator_(generator),
      embedder_(embedder),
      clock_(std::move(clock)),
      catalog_(bundle.attribute_catalog()) {}

std::vector<std::string> Engine::global_scope(const Session& s) const {
  std::vector<std::string> out;
  for (auto it = s.stack.rbegin(); it != s.stack.rend(); ++it)
    if (std::find(out.begin(), out.end(), it->dialogue_id) == out.end()) out.push_back(it->dialogue_id);
  return out;
}

void Engine::push_dialogue(Session& s, const SubDialogue& d, std::optional<NodeId> return_node) const {
  s.stack.push_back({d.id, std::move(return_node)});
  s.discussed_labels.insert(d.labels.begin(), d.labels.end());
  s.discussed_entities.insert(d.entity_tags.begin(), d.entity_tags.end());
}

void Engine::speak(Session& s, TurnContext& ctx, const std::string& text) const {
  ctx.record.responses.push_back(text);
  s.history.push_back({Speaker::Bot, text});
}

void Engine::generate(Session& s, TurnContext& ctx, DialogueAct act, std::optional<std::string> grounding) const {
  NrgRequest req{s.history, act, std::move(grounding)};
  NrgResponse resp = generator_.generate(req);
  speak(s, ctx, resp.text);
  if (!ctx.record.nrg_used) ctx.record.nrg_used = NrgUsage{};
  ctx.record.nrg_used->acts.push_back(act);
  ctx.record.nrg_used->fallback = ctx.record.nrg_used->fallback || resp.fallback;
}

void Engine::end_session(Session& s, TurnContext&, bool with_error) const {
  s.cursor = {Cursor::Kind::Ended, {}, false};
  s.ended_at_ms = clock_();
  s.ended_with_error = with_error;
}

std::optional<NodeId> Engine::fail(Session& s, TurnContext& ctx, const std::string& message) const {
  ctx.record.error = ctx.record.error ? *ctx.record.error + "; " + message : message;
  if (ctx.error_routed) {
    end_session(s, ctx, true);
    return std::nullopt;
  }
  ctx.error_routed = true;
  ctx.visits = 0;
  for (std::size_t i = s.stack.size(); i-- > 0;) {
    const SubDialogue* d = bundle_.find(s.stack[i].dialogue_id);
    if (!d) continue;
    const Node* action = i + 1 == s.stack.size() ? d->any_action(Situation::Error) : d->global_action(Situation::Error);
    if (action) {
      s.stack.resize(i + 1);
      return action->id;
    }
  }
  end_session(s, ctx, true);
  return std::nullopt;
}

std::optional<NodeId> Engine::follow(Session& s, TurnContext& ctx, const SubDialogue& d, const Node& n) const {
  const Edge* e = d.out_edge(n.id);
  if (!e) return fail(s, ctx, "node " + qualify(d.id, n.id) + " has no outgoing edge");
  return e->to;
}

std::optional<NodeId> Engine::exit_dialogue(Session& s, TurnContext& ctx) const {
  if (s.stack.size() == 1) {
    end_session(s, ctx, false);
    return std::nullopt;
  }
  Frame frame = s.stack.back();
  s.stack.pop_back();
  if (frame.return_node) return frame.return_node;
  SelectionResult sel =
      select_dialogue(bundle_.selector_pool, s.discussed_labels, s.discussed_entities, bundle_, ctx.attrs);
  if (sel.status == SelectionStatus::NoneEligible) {
    end_session(s, ctx, false);
    return std::nullopt;
  }
  const SubDialogue* next = bundle_.find(sel.dialogue_id);
  push_dialogue(s, *next, std::nullopt);
  if (!next->enter()) return fail(s, ctx, "dialogue " + next->id + " has no Enter node");
  return next->enter()->id;
}

std::optional<NodeId> Engine::step(Session& s, TurnContext& ctx, const SubDialogue& d, const Node& n) const {
  switch (n.kind) {
    case NodeKind::Enter:
    case NodeKind::Intent:
    case NodeKind::GlobalIntent:
    case NodeKind::Action:
    case NodeKind::GlobalAction:
      return follow(s, ctx, d, n);

    case NodeKind::Speech: {
      const auto& p = n.as<SpeechPayload>();
      if (!p.responses.empty()) {
        std::size_t pick = p.responses.size() > 1 ? static_cast<std::size_t>(s.rng() % p.responses.size()) : 0;
        speak(s, ctx, p.responses[pick].render(ctx.attrs));
      }
      if (p.nrg) {
        std::optional<std::string> grounding;
        if (p.nrg->grounding) grounding = p.nrg->grounding->render(ctx.attrs);
        generate(s, ctx, p.nrg->act, std::move(grounding));
        if (p.nrg->await_reply) {
          s.cursor = {Cursor::Kind::AwaitingNrgReply, n.id, false};
          return std::nullopt;
        }
      }
      return follow(s, ctx, d, n);
    }

    case NodeKind::UserInput:
      s.cursor = {Cursor::Kind::AwaitingInput, n.id, false};
      return std::nullopt;

    case NodeKind::Function: {
      const auto& p = n.as<FunctionPayload>();
      try {
        for (const auto& a : p.assignments) ctx.attrs.set(a.target, eval_condition(a.expr, ctx.attrs));
        for (const auto& t : p.transitions) {
          if (!eval_guard(t.guard, ctx.attrs)) continue;
          const Edge* e = d.out_edge(n.id, t.out_key);
          if (!e) return fail(s, ctx, "function " + qualify(d.id, n.id) + " has no edge for '" + t.out_key + "'");
          return e->to;
        }
      } catch (const EvalError& e) {
        return fail(s, ctx, "function " + qualify(d.id, n.id) + ": " + e.what());
      } catch (const UndeclaredAttributeError& e) {
        return fail(s, ctx, "function " + qualify(d.id, n.id) + ": " + e.what());
      }
      return fail(s, ctx, "function " + qualify(d.id, n.id) + " has no satisfied transition");
    }

    case NodeKind::SubDialogueRef: {
      const auto& p = n.as<SubDialogueRefPayload>();
      const SubDialogue* child = bundle_.find(p.dialogue_id);
      if (!child || !child->enter()) return fail(s, ctx, "sub-dialogue " + p.dialogue_id + " cannot be entered");
      std::optional<NodeId> ret;
      if (const Edge* e = d.out_edge(n.id)) ret = e->to;
      push_dialogue(s, *child, ret);
      return child->enter()->id;
    }

    case NodeKind::Exit:
      return exit_dialogue(s, ctx);
  }
  return std::nullopt;
}

void Engine::run(Session& s, TurnContext& ctx, std::optional<NodeId> next) const {
  while (next && !s.ended()) {
    const SubDialogue* d = bundle_.find(s.current_dialogue());
    const Node* n = d ? d->find(*next) : nullptr;
    if (!n) {
      next = fail(s, ctx, "node " + qualify(s.current_dialogue(), *next) + " does not exist");
      continue;
    }
    if (++ctx.visits > kMaxVisitsPerTurn) {
      next = fail(s, ctx, "more than " + std::to_string(kMaxVisitsPerTurn) + " node visits in one turn");
      continue;
    }
    ctx.record.traversed_nodes.push_back(qualify(d->id, n->id));
    next = step(s, ctx, *d, *n);
  }
}

std::optional<NodeId> Engine::situation_handler(Session& s, const NodeId& u, Situation situation) const {
  const SubDialogue* top = bundle_.find(s.current_dialogue());
  if (top)
    if (const Node* a = top->local_action(u, situation)) return a->id;
  for (std::size_t i = s.stack.size(); i-- > 0;) {
    const SubDialogue* d = bundle_.find(s.stack[i].dialogue_id);
    if (!d) continue;
    if (const Node* a = d->global_action(situation)) {
      s.stack.resize(i + 1);
      return a->id;
    }
  }
  return std::nullopt;
}

TurnResult Engine::finish(Session& s, TurnContext& ctx) const {
  ctx.record.session_id = s.session_id;
  ctx.record.attribute_diff = ctx.attrs.changes();
  ctx.record.duration_ms = std::max<std::int64_t>(0, clock_() - ctx.started_ms);
  TurnResult r;
  r.responses = ctx.record.responses;
  r.ended = s.ended();
  r.record = std::move(ctx.record);
  return r;
}

TurnResult Engine::start_session(Session& s, const SessionOptions& options) const {
  s.session_id = options.session_id;
  s.app_id = options.app_id.empty() ? bundle_.config.app_id : options.app_id;
  s.user_id = options.user_id;
  s.community = options.community;
  s.client_tag = options.client_tag;
  s.seed = options.seed.value_or(bundle_.config.seed);
  s.rng.seed(s.seed);
  s.stack.clear();
  s.cursor = {};
  s.attributes = {};
  s.discussed_labels.clear();
  s.discussed_entities.clear();
  s.history.clear();
  s.next_turn_index = 1;
  s.started_at_ms = clock_();
  s.ended_at_ms.reset();
  s.ended_with_error = false;

  TurnContext ctx(*this, s);
  ctx.record.turn_index = 0;
  ctx.record.timestamp_ms = ctx.started_ms;
  const SubDialogue& main = bundle_.main();
  push_dialogue(s, main, std::nullopt);
  if (!main.enter())
    fail(s, ctx, "main dialogue has no Enter node");
  else
    run(s, ctx, main.enter()->id);
  return finish(s, ctx);
}

namespace {

bool is_blank(const std::string& text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

TurnResult Engine::process_turn(Session& s, const std::string& utterance) const {
  if (s.ended()) throw SessionEndedError("session " + s.session_id + " has ended");
  TurnContext ctx(*this, s);
  ctx.record.turn_index = s.next_turn_index++;
  ctx.record.timestamp_ms = ctx.started_ms;
  ctx.record.raw_utterance = utterance;
  s.attributes.turn.clear();

  const bool silent = is_blank(utterance);
  if (!silent) {
    s.history.push_back({Speaker::User, utterance});
    ctx.record.entities = recognize_entities(utterance, bundle_.entity_rules);
    for (const auto& e : ctx.record.entities) s.discussed_entities.insert(e.type_name);
    ctx.record.skimmer_writes = skim(utterance, bundle_.skimmer_rules);
    for (const auto& w : ctx.record.skimmer_writes) {
      try {
        ctx.attrs.set(w.attribute, w.value);
      } catch (const UndeclaredAttributeError& e) {
        ctx.record.error = e.what();
      }
    }
  }
  ctx.record.masked_utterance = utterance;

  const NodeId u = s.cursor.node;
  if (s.cursor.kind == Cursor::Kind::AwaitingNrgReply) {
    if (s.cursor.builtin_fallback) {
      generate(s, ctx, DialogueAct::Statement, std::nullopt);
      ctx.record.traversed_nodes.push_back(qualify(s.current_dialogue(), u));
      s.cursor = {Cursor::Kind::AwaitingInput, u, false};
    } else {
      const SubDialogue* d = bundle_.find(s.current_dialogue());
      const Node* n = d ? d->find(u) : nullptr;
      s.cursor = {Cursor::Kind::AwaitingInput, u, false};
      if (!n)
        run(s, ctx, fail(s, ctx, "awaiting node " + u + " does not exist"));
      else
        run(s, ctx, follow(s, ctx, *d, *n));
    }
    return finish(s, ctx);
  }

  if (silent) {
    if (auto handler = situation_handler(s, u, Situation::Silence)) run(s, ctx, handler);
    return finish(s, ctx);
  }

  RoutingContext rc{s.current_dialogue(), u, global_scope(s)};
  ctx.record.masked_utterance = mask_entities(utterance, ctx.record.entities, masking_types(bundle_, rc));
  RoutingDecision routing = route_and_classify(ctx.record.masked_utterance, rc, pack_, embedder_);
  ctx.record.routing = routing;

  switch (routing.scope) {
    case RoutingScope::OutOfDomain:
      if (auto handler = situation_handler(s, u, Situation::OutOfDomain)) {
        run(s, ctx, handler);
      } else {
        generate(s, ctx, DialogueAct::StatementThenQuestion, std::nullopt);
        s.cursor = {Cursor::Kind::AwaitingNrgReply, u, true};
      }
      break;
    case RoutingScope::Local:
      run(s, ctx, split_qualified(*routing.chosen_intent).second);
      break;
    case RoutingScope::Global: {
      auto [dialogue_id, node_id] = split_qualified(*routing.chosen_intent);
      for (std::size_t i = s.stack.size(); i-- > 0;)
        if (s.stack[i].dialogue_id == dialogue_id) {
          s.stack.resize(i + 1);
          break;
        }
      run(s, ctx, node_id);
      break;
    }
  }
  return finish(s, ctx);
}

}  // namespace flowkit
