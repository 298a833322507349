#include "flowkit/turn_record.hpp"

namespace flowkit {

using nlohmann::json;

namespace {

json skimmer_write_json(const SkimmerWrite& w) { return {{"attribute", w.attribute.str()}, {"value", to_json(w.value)}}; }

SkimmerWrite skimmer_write_from_json(const json& j) {
  auto ref = parse_attribute_ref(j.at("attribute").get<std::string>());
  if (!ref) throw std::invalid_argument("bad attribute reference in skimmer write");
  return {*ref, value_from_json(j.at("value"))};
}

}  // namespace

json to_json(const TurnRecord& r) {
  json entities = json::array(), writes = json::array(), diff = json::array();
  for (const auto& e : r.entities) entities.push_back(to_json(e));
  for (const auto& w : r.skimmer_writes) writes.push_back(skimmer_write_json(w));
  for (const auto& c : r.attribute_diff) diff.push_back(to_json(c));
  json nrg = nullptr;
  if (r.nrg_used) {
    json acts = json::array();
    for (auto a : r.nrg_used->acts) acts.push_back(std::string(to_string(a)));
    nrg = {{"acts", acts}, {"fallback", r.nrg_used->fallback}};
  }
  return {{"session_id", r.session_id},
          {"turn_index", r.turn_index},
          {"timestamp", r.timestamp_ms},
          {"raw_utterance", r.raw_utterance},
          {"asr_hypotheses", r.asr_hypotheses},
          {"entities", entities},
          {"masked_utterance", r.masked_utterance},
          {"routing", r.routing ? to_json(*r.routing) : json(nullptr)},
          {"skimmer_writes", writes},
          {"traversed_nodes", r.traversed_nodes},
          {"responses", r.responses},
          {"attribute_diff", diff},
          {"nrg_used", nrg},
          {"duration_ms", r.duration_ms},
          {"error", r.error ? json(*r.error) : json(nullptr)}};
}

TurnRecord turn_record_from_json(const json& j) {
  TurnRecord r;
  r.session_id = j.at("session_id").get<std::string>();
  r.turn_index = j.at("turn_index").get<int>();
  r.timestamp_ms = j.value("timestamp", std::int64_t{0});
  r.raw_utterance = j.at("raw_utterance").get<std::string>();
  r.asr_hypotheses = j.value("asr_hypotheses", std::vector<std::string>{});
  for (const auto& e : j.at("entities")) r.entities.push_back(entity_span_from_json(e));
  r.masked_utterance = j.at("masked_utterance").get<std::string>();
  if (!j.at("routing").is_null()) r.routing = routing_from_json(j.at("routing"));
  for (const auto& w : j.at("skimmer_writes")) r.skimmer_writes.push_back(skimmer_write_from_json(w));
  r.traversed_nodes = j.at("traversed_nodes").get<std::vector<std::string>>();
  r.responses = j.at("responses").get<std::vector<std::string>>();
  for (const auto& c : j.at("attribute_diff")) r.attribute_diff.push_back(attribute_change_from_json(c));
  if (const auto& n = j.at("nrg_used"); !n.is_null()) {
    NrgUsage u;
    for (const auto& a : n.at("acts")) {
      auto act = parse_dialogue_act(a.get<std::string>());
      if (!act) throw std::invalid_argument("bad dialogue act in turn record");
      u.acts.push_back(*act);
    }
    u.fallback = n.at("fallback").get<bool>();
    r.nrg_used = u;
  }
  r.duration_ms = j.value("duration_ms", std::int64_t{0});
  if (!j.at("error").is_null()) r.error = j.at("error").get<std::string>();
  return r;
}

json stable_json(const TurnRecord& r) {
  json j = to_json(r);
  j.erase("session_id");
  j.erase("timestamp");
  j.erase("duration_ms");
  return j;
}

}  // namespace flowkit
