#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowkit/engine.hpp"
#include "flowkit/entities.hpp"
#include "support.hpp"

// Random inputs shared by the unit tests and the acceptance checks.
namespace testing::gen {

using flowkit::RoutingScope;
using nlohmann::json;


inline std::string random_word(std::mt19937_64& rng, const std::string& alphabet) {
  std::string w;
  const int len = 3 + static_cast<int>(rng() % 5);
  for (int i = 0; i < len; ++i) w += alphabet[rng() % alphabet.size()];
  return w;
}

inline std::string random_phrase(std::mt19937_64& rng, const std::vector<std::string>& vocab) {
  std::string s;
  const int n = 1 + static_cast<int>(rng() % 4);
  for (int i = 0; i < n; ++i) s += (i ? " " : "") + vocab[rng() % vocab.size()];
  return s;
}

struct ToyIntent {
  std::string qualified;
  std::string dialogue;  // owning dialogue
  bool global = false;
  std::vector<std::string> examples;
};

struct Toy {
  json bundle;
  std::vector<ToyIntent> intents;
};

// "m" hosts a sub-dialogue "s"; routing happens at s/u with global scope [s, m].
inline Toy random_toy(std::mt19937_64& rng, const std::vector<std::string>& vocab) {
  Toy t;
  const int total = 2 + static_cast<int>(rng() % 4);
  const int locals = 1 + static_cast<int>(rng() % (total - 1));
  json s_nodes = json::array({{{"id", "in"}, {"kind", "enter"}},
                              {{"id", "ask"}, {"kind", "speech"}, {"responses", {"?"}}},
                              {{"id", "u"}, {"kind", "userInput"}},
                              {{"id", "out"}, {"kind", "exit"}}});
  json s_edges = json::array({{{"from", "in"}, {"to", "ask"}}, {{"from", "ask"}, {"to", "u"}}});
  json m_nodes = json::array({{{"id", "in"}, {"kind", "enter"}},
                              {{"id", "sub"}, {"kind", "subDialogue"}, {"dialogue", "s"}},
                              {{"id", "bye"}, {"kind", "speech"}, {"responses", {"bye"}}},
                              {{"id", "out"}, {"kind", "exit"}}});
  json m_edges = json::array(
      {{{"from", "in"}, {"to", "sub"}}, {{"from", "sub"}, {"to", "bye"}}, {{"from", "bye"}, {"to", "out"}}});
  for (int i = 0; i < total; ++i) {
    ToyIntent in;
    in.global = i >= locals;
    in.dialogue = in.global && rng() % 2 ? "m" : "s";
    const std::string id = "i" + std::to_string(i);
    in.qualified = in.dialogue + "/" + id;
    const int n_examples = 1 + static_cast<int>(rng() % 4);
    for (int e = 0; e < n_examples; ++e) in.examples.push_back(random_phrase(rng, vocab));
    json node = {{"id", id}, {"kind", in.global ? "globalIntent" : "intent"}, {"examples", in.examples}};
    if (in.dialogue == "s") {
      s_nodes.push_back(node);
      if (!in.global) s_edges.push_back({{"from", "u"}, {"to", id}});
      s_edges.push_back({{"from", id}, {"to", "out"}});
    } else {
      m_nodes.push_back(node);
      m_edges.push_back({{"from", id}, {"to", "bye"}});
    }
    t.intents.push_back(std::move(in));
  }
  t.bundle = {{"main", "m"},
              {"dialogues",
               {{{"id", "m"}, {"nodes", m_nodes}, {"edges", m_edges}},
                {{"id", "s"}, {"nodes", s_nodes}, {"edges", s_edges}}}}};
  return t;
}

struct OracleRoute {
  RoutingScope scope;
  double local = 0, global = 0;
  std::string global_dialogue;
};

inline OracleRoute oracle_route(const Toy& t, const std::string& query, double tau) {
  auto q = oracle::embed(query);
  OracleRoute r{RoutingScope::OutOfDomain};
  std::map<std::string, double> per_dialogue;
  for (const auto& in : t.intents) {
    double best = 0;
    for (const auto& ex : in.examples) best = std::max(best, oracle::cosine(q, oracle::embed(ex)));
    if (in.global) {
      auto& d = per_dialogue[in.dialogue];
      d = std::max(d, best);
    } else {
      r.local = std::max(r.local, best);
    }
  }
  bool any = false;
  for (const char* d : {"s", "m"}) {
    auto it = per_dialogue.find(d);
    if (it == per_dialogue.end()) continue;
    if (!any || it->second > r.global) {
      r.global = it->second;
      r.global_dialogue = d;
      any = true;
    }
  }
  if (std::max(r.local, r.global) < tau) return r;
  r.scope = (!any || r.local >= r.global) ? RoutingScope::Local : RoutingScope::Global;
  return r;
}


inline std::vector<flowkit::EntityRule> movie_rules() {
  return {flowkit::EntityRule::make("movie", {R"(\b(Matrix|Inception|Titanic|Alien|Avatar|Jaws)\b)"},
                                    flowkit::Normalizer::None),
          flowkit::EntityRule::make("count", {}, flowkit::Normalizer::Integer)};
}

/// Utterance assembled from filler words, movie titles and numbers, with the
/// masked form built alongside it.
struct MaskCase {
  std::string utterance;
  std::set<std::string> allowed;
  std::string expected;
  std::vector<std::pair<std::string, std::string>> inserted;  // (type, surface)
};

inline MaskCase random_mask_case(std::mt19937_64& rng) {
  static const std::vector<std::string> movies = {"Matrix", "Inception", "Titanic", "Alien", "Avatar", "Jaws"};
  static const std::vector<std::string> filler = {"I",     "really", "liked", "watched", "the",  "film", "with",
                                                  "my",    "friends", "and",  "it",      "was",  "great", "again",
                                                  "maybe", "\xC3\xA9", "na\xC3\xAFve", "x-ray", "ok", "so"};
  static const std::vector<std::string> punct = {"", "", "", ",", "!", "?", "."};
  MaskCase c;
  if (rng() % 2) c.allowed.insert("movie");
  if (rng() % 2) c.allowed.insert("count");
  const int n = 1 + static_cast<int>(rng() % 10);
  for (int i = 0; i < n; ++i) {
    if (i) {
      c.utterance += ' ';
      c.expected += ' ';
    }
    std::string tok, type;
    switch (rng() % 4) {
      case 0: tok = movies[rng() % movies.size()]; type = "movie"; break;
      case 1: tok = std::to_string(rng() % 10000); type = "count"; break;
      default: tok = filler[rng() % filler.size()];
    }
    c.utterance += tok;
    c.expected += (!type.empty() && c.allowed.count(type)) ? "{" + type + "}" : tok;
    if (!type.empty()) c.inserted.emplace_back(type, tok);
    const auto& p = punct[rng() % punct.size()];
    c.utterance += p;
    c.expected += p;
  }
  return c;
}

/// One randomized selector case: six candidate sub-dialogues with random
/// labels, entity tags and starting conditions, a random pool over them and
/// the exhaustive answer.
struct SelectorRound {
  flowkit::DialogueBundle bundle;
  std::vector<std::string> pool;
  std::set<std::string> discussed_labels, discussed_entities;
  MapView view;
  int expected = -1;  // index into pool, -1 for none eligible
  std::size_t expected_score = 0;
  std::size_t expected_errors = 0;
};

inline SelectorRound random_selector_round(std::mt19937_64& rng) {
  const std::vector<std::string> label_pool = {"movies", "sport", "music", "books", "travel"};
  // "movies" doubles as an entity type: the union counts it once
  const std::vector<std::string> entity_pool = {"movie", "person", "movies", "city"};
  auto subset = [&](const std::vector<std::string>& from) {
    std::set<std::string> out;
    for (const auto& x : from)
      if (rng() % 2) out.insert(x);
    return out;
  };
  SelectorRound r;
  // condition kinds: 0 none, 1 true, 2 false, 3 flag, 4 evaluation error
  json dialogues = json::array({{{"id", "m"},
                                 {"nodes", {{{"id", "in"}, {"kind", "enter"}}, {{"id", "out"}, {"kind", "exit"}}}},
                                 {"edges", {{{"from", "in"}, {"to", "out"}}}}}});
  std::vector<std::set<std::string>> labels(6), entities(6);
  std::vector<int> cond(6);
  std::vector<bool> flag(6);
  for (int i = 0; i < 6; ++i) {
    labels[i] = subset(label_pool);
    entities[i] = subset(entity_pool);
    cond[i] = static_cast<int>(rng() % 5);
    json d = dialogues[0];
    d["id"] = "d" + std::to_string(i);
    d["labels"] = labels[i];
    d["entities"] = entities[i];
    const std::string flag_ref = "session.flag" + std::to_string(i);
    if (cond[i] == 1) d["startingCondition"] = "true";
    if (cond[i] == 2) d["startingCondition"] = "false";
    if (cond[i] == 3) d["startingCondition"] = flag_ref;
    if (cond[i] == 4) d["startingCondition"] = "session.missing + 1 > 0";
    flag[i] = rng() % 2 == 1;
    if (cond[i] == 3) r.view.set(flag_ref, static_cast<bool>(flag[i]));
    dialogues.push_back(d);
  }
  r.bundle = flowkit::parse_bundle(json{{"main", "m"}, {"dialogues", dialogues}}.dump());

  std::vector<int> order = {0, 1, 2, 3, 4, 5};
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(rng() % 7);
  r.discussed_labels = subset(label_pool);
  r.discussed_entities = subset(entity_pool);

  std::vector<bool> eligible;
  std::vector<std::size_t> scores;
  for (int i : order) {
    r.pool.push_back("d" + std::to_string(i));
    eligible.push_back(cond[i] == 0 || cond[i] == 1 || (cond[i] == 3 && flag[i]));
    if (cond[i] == 4) ++r.expected_errors;
    std::set<std::string> hits;
    for (const auto& l : labels[i])
      if (r.discussed_labels.count(l)) hits.insert(l);
    for (const auto& e : entities[i])
      if (r.discussed_entities.count(e)) hits.insert(e);
    scores.push_back(hits.size());
  }
  r.expected = oracle::select(eligible, scores);
  if (r.expected >= 0) r.expected_score = scores[static_cast<std::size_t>(r.expected)];
  return r;
}

/// True when select_dialogue's answer matches the exhaustive one.
inline bool selector_agrees(const SelectorRound& r) {
  auto got = flowkit::select_dialogue(r.pool, r.discussed_labels, r.discussed_entities, r.bundle, r.view);
  if (got.errors.size() != r.expected_errors) return false;
  if (r.expected < 0) return got.status == flowkit::SelectionStatus::NoneEligible;
  return got.status == flowkit::SelectionStatus::Selected &&
         got.dialogue_id == r.pool[static_cast<std::size_t>(r.expected)];
}

}  // namespace testing::gen
