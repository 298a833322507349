#include "flowkit/nlu_pack.hpp"

#include <algorithm>

#include "flowkit/bundle_io.hpp"
#include "flowkit/validate.hpp"

namespace flowkit {

using nlohmann::json;

std::string qualify(std::string_view dialogue_id, std::string_view node_id) {
  return std::string(dialogue_id) + "/" + std::string(node_id);
}

std::pair<std::string, std::string> split_qualified(std::string_view qualified) {
  auto slash = qualified.find('/');
  if (slash == std::string_view::npos) return {std::string(qualified), {}};
  return {std::string(qualified.substr(0, slash)), std::string(qualified.substr(slash + 1))};
}

const Embedder& default_embedder() {
  static const HashedNgramEmbedder embedder;
  return embedder;
}

std::string_view to_string(RoutingScope s) {
  switch (s) {
    case RoutingScope::Local: return "local";
    case RoutingScope::Global: return "global";
    case RoutingScope::OutOfDomain: return "outOfDomain";
  }
  return "outOfDomain";
}

namespace {

IntentClassifier train_over(const std::vector<std::pair<std::string, const Node*>>& intents, TrainedNluPack& pack,
                            const Embedder& embedder, const TrainingOptions& options) {
  std::vector<std::string> classes;
  std::vector<Embedding> inputs;
  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < intents.size(); ++c) {
    const auto& [qualified, node] = intents[c];
    classes.push_back(qualified);
    auto& entries = pack.bank[qualified];
    entries.clear();
    for (const auto& ex : node->as<IntentPayload>().examples) {
      Embedding e = embedder.embed(ex.masked);
      if (e.is_zero()) continue;
      entries.push_back({ex.masked, e});
      inputs.push_back(std::move(e));
      labels.push_back(c);
    }
    if (entries.empty()) throw TrainingError("intent " + qualified + " has no usable examples after masking");
  }
  return IntentClassifier::train(std::move(classes), inputs, labels, options);
}

json sparse(const Embedding& e) {
  json idx = json::array(), val = json::array();
  for (std::size_t i = 0; i < e.values.size(); ++i)
    if (e.values[i] != 0.0) {
      idx.push_back(i);
      val.push_back(e.values[i]);
    }
  return {{"i", idx}, {"v", val}};
}

Embedding dense(const json& j, std::size_t dim) {
  Embedding e;
  e.values.assign(dim, 0.0);
  const auto& idx = j.at("i");
  const auto& val = j.at("v");
  for (std::size_t k = 0; k < idx.size(); ++k) e.values.at(idx[k].get<std::size_t>()) = val[k].get<double>();
  return e;
}

}  // namespace

TrainedNluPack train_pack(const DialogueBundle& bundle, const Embedder& embedder, const TrainingOptions& options) {
  TrainedNluPack pack;
  pack.ood_threshold = bundle.config.ood_threshold;
  pack.dim = embedder.dimension();
  pack.bundle_fingerprint = bundle_fingerprint(bundle);
  for (const auto& d : bundle.sub_dialogues) {
    for (const Node* u : d.user_inputs()) {
      std::vector<std::pair<std::string, const Node*>> intents;
      for (const Node* n : d.local_intents(u->id)) intents.emplace_back(qualify(d.id, n->id), n);
      if (intents.empty()) throw TrainingError("user input " + qualify(d.id, u->id) + " has no intents");
      pack.local_classifiers.emplace(qualify(d.id, u->id), train_over(intents, pack, embedder, options));
    }
    std::vector<std::pair<std::string, const Node*>> globals;
    for (const Node* n : d.global_intents()) globals.emplace_back(qualify(d.id, n->id), n);
    if (!globals.empty()) pack.global_classifiers.emplace(d.id, train_over(globals, pack, embedder, options));
  }
  return pack;
}

TrainedNluPack train_pack(const DialogueBundle& bundle) { return train_pack(bundle, default_embedder()); }

json pack_to_json(const TrainedNluPack& pack) {
  json local = json::object(), global = json::object(), bank = json::object();
  for (const auto& [k, c] : pack.local_classifiers) local[k] = c.to_json();
  for (const auto& [k, c] : pack.global_classifiers) global[k] = c.to_json();
  for (const auto& [k, entries] : pack.bank) {
    json arr = json::array();
    for (const auto& e : entries) arr.push_back({{"text", e.masked_text}, {"embedding", sparse(e.embedding)}});
    bank[k] = arr;
  }
  return {{"format", "flowkit-nlu-pack/1"},
          {"bundleFingerprint", pack.bundle_fingerprint},
          {"dim", pack.dim},
          {"oodThreshold", pack.ood_threshold},
          {"localClassifiers", local},
          {"globalClassifiers", global},
          {"bank", bank}};
}

TrainedNluPack pack_from_json(const json& j) {
  if (j.value("format", "") != "flowkit-nlu-pack/1") throw std::invalid_argument("not a flowkit NLU pack");
  TrainedNluPack pack;
  pack.bundle_fingerprint = j.at("bundleFingerprint").get<std::string>();
  pack.dim = j.at("dim").get<std::size_t>();
  pack.ood_threshold = j.at("oodThreshold").get<double>();
  for (const auto& [k, c] : j.at("localClassifiers").items()) pack.local_classifiers.emplace(k, IntentClassifier::from_json(c));
  for (const auto& [k, c] : j.at("globalClassifiers").items()) pack.global_classifiers.emplace(k, IntentClassifier::from_json(c));
  for (const auto& [k, arr] : j.at("bank").items()) {
    auto& entries = pack.bank[k];
    for (const auto& e : arr) entries.push_back({e.at("text").get<std::string>(), dense(e.at("embedding"), pack.dim)});
  }
  return pack;
}

std::string serialize_pack(const TrainedNluPack& pack) { return pack_to_json(pack).dump() + "\n"; }

json to_json(const RoutingDecision& r) {
  return {{"scope", std::string(to_string(r.scope))},
          {"best_local_sim", r.best_local_sim},
          {"best_global_sim", r.best_global_sim},
          {"chosen_intent", r.chosen_intent ? json(*r.chosen_intent) : json(nullptr)},
          {"confidence", r.confidence ? json(*r.confidence) : json(nullptr)}};
}

RoutingDecision routing_from_json(const json& j) {
  RoutingDecision r;
  std::string s = j.at("scope").get<std::string>();
  r.scope = s == "local" ? RoutingScope::Local : (s == "global" ? RoutingScope::Global : RoutingScope::OutOfDomain);
  r.best_local_sim = j.at("best_local_sim").get<double>();
  r.best_global_sim = j.at("best_global_sim").get<double>();
  if (!j.at("chosen_intent").is_null()) r.chosen_intent = j.at("chosen_intent").get<std::string>();
  if (!j.at("confidence").is_null()) r.confidence = j.at("confidence").get<double>();
  return r;
}

RoutingDecision route_and_classify(std::string_view masked_utterance, const RoutingContext& context,
                                   const TrainedNluPack& pack, const Embedder& embedder) {
  auto local_it = pack.local_classifiers.find(qualify(context.dialogue_id, context.user_input_id));
  if (local_it == pack.local_classifiers.end())
    throw UnknownContextError("no model for user input " + qualify(context.dialogue_id, context.user_input_id));
  const IntentClassifier& local = local_it->second;

  const Embedding x = embedder.embed(masked_utterance);
  auto best_over = [&](const std::vector<std::string>& intents) {
    double best = 0.0;
    for (const auto& id : intents) {
      auto it = pack.bank.find(id);
      if (it == pack.bank.end()) continue;
      for (const auto& entry : it->second) best = std::max(best, cosine(x, entry.embedding));
    }
    return best;
  };

  RoutingDecision r;
  r.best_local_sim = best_over(local.class_ids());

  const IntentClassifier* global = nullptr;
  bool any_global = false;
  for (const auto& dialogue_id : context.global_scope) {
    auto it = pack.global_classifiers.find(dialogue_id);
    if (it == pack.global_classifiers.end()) continue;
    double sim = best_over(it->second.class_ids());
    if (!any_global || sim > r.best_global_sim) {
      r.best_global_sim = sim;
      global = &it->second;
      any_global = true;
    }
  }

  if (std::max(r.best_local_sim, r.best_global_sim) < pack.ood_threshold) {
    r.scope = RoutingScope::OutOfDomain;
    return r;
  }
  const bool use_local = !global || r.best_local_sim >= r.best_global_sim;
  r.scope = use_local ? RoutingScope::Local : RoutingScope::Global;
  const IntentClassifier& model = use_local ? local : *global;
  auto p = model.predict_proba(x.values);
  auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  r.chosen_intent = model.class_ids()[best];
  r.confidence = p[best];
  return r;
}

std::set<std::string> masking_types(const DialogueBundle& bundle, const RoutingContext& context) {
  std::vector<const Node*> intents;
  if (const SubDialogue* d = bundle.find(context.dialogue_id)) intents = d->local_intents(context.user_input_id);
  for (const auto& id : context.global_scope)
    if (const SubDialogue* g = bundle.find(id))
      for (const Node* n : g->global_intents()) intents.push_back(n);
  return markup_types(intents);
}

}  // namespace flowkit
