#include "flowkit/nrg.hpp"

#include <cctype>
#include <set>

#include <httplib.h>

#include "flowkit/embedder.hpp"

namespace flowkit {

std::string_view to_string(Speaker s) { return s == Speaker::User ? "user" : "bot"; }

nlohmann::json to_json(const NrgRequest& r) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& h : r.history) history.push_back({{"speaker", std::string(to_string(h.speaker))}, {"text", h.text}});
  nlohmann::json j = {{"history", history}, {"act", std::string(to_string(r.desired_act))}};
  if (r.grounding) j["grounding"] = *r.grounding;
  return j;
}

std::string StubGenerator::content_word(std::string_view text) {
  static const std::set<std::string> kStop = {
      "a",    "about", "am",   "an",   "and",  "are",  "as",   "at",    "be",   "but",  "by",   "can",   "do",
      "does", "for",   "from", "have", "he",   "her",  "him",  "his",   "i",    "in",   "is",   "it",    "its",
      "like", "me",    "my",   "no",   "not",  "of",   "on",   "or",    "our",  "really", "she", "so",   "that",
      "the",  "their", "them", "then", "there", "they", "this", "to",   "too",  "very", "was",  "we",    "were",
      "what", "when",  "where", "which", "who", "why",  "will", "with", "would", "yes",  "you",  "your", "yeah",
      "ok",   "okay",  "just", "also", "think", "love", "know", "want", "did",  "has",  "had",  "all",
      "today", "yesterday", "tomorrow", "now"};
  auto tokens = HashedNgramEmbedder::tokenize(text);
  for (auto it = tokens.rbegin(); it != tokens.rend(); ++it)
    if (!kStop.count(*it) && !std::isdigit(static_cast<unsigned char>((*it)[0]))) return *it;
  return {};
}

NrgResponse StubGenerator::generate(const NrgRequest& request) const {
  std::string topic;
  if (request.grounding) topic = content_word(*request.grounding);
  if (topic.empty()) {
    for (auto it = request.history.rbegin(); it != request.history.rend(); ++it) {
      if (it->speaker != Speaker::User) continue;
      topic = content_word(it->text);
      break;
    }
  }
  if (topic.empty()) topic = "that";
  const std::string statement = "Interesting, tell me more about " + topic + ".";
  const std::string question = "What do you like most about " + topic + "?";
  NrgResponse r;
  r.act = request.desired_act;
  switch (request.desired_act) {
    case DialogueAct::Statement: r.text = statement; break;
    case DialogueAct::Question: r.text = question; break;
    case DialogueAct::StatementThenQuestion: r.text = statement + " " + question; break;
  }
  return r;
}

HttpGenerator::HttpGenerator(std::string base_url, int timeout_ms)
    : base_url_(std::move(base_url)), timeout_ms_(timeout_ms) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  const std::string suffix = "/generate";
  if (base_url_.size() >= suffix.size() && base_url_.compare(base_url_.size() - suffix.size(), suffix.size(), suffix) == 0)
    base_url_.erase(base_url_.size() - suffix.size());
}

NrgResponse HttpGenerator::generate(const NrgRequest& request) const {
  auto fallback = [&] {
    NrgResponse r = stub_.generate(request);
    r.fallback = true;
    return r;
  };
  try {
    httplib::Client client(base_url_);
    const time_t sec = timeout_ms_ / 1000;
    const time_t usec = static_cast<time_t>(timeout_ms_ % 1000) * 1000;
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    auto res = client.Post("/generate", to_json(request).dump(), "application/json");
    if (!res || res->status != 200) return fallback();
    auto body = nlohmann::json::parse(res->body);
    NrgResponse r;
    r.text = body.at("text").get<std::string>();
    auto act = parse_dialogue_act(body.value("act", std::string(to_string(request.desired_act))));
    r.act = act.value_or(request.desired_act);
    if (r.text.empty()) return fallback();
    return r;
  } catch (const std::exception&) {
    return fallback();
  }
}

std::unique_ptr<NrgGenerator> make_generator(const std::string& url, int timeout_ms) {
  if (url.empty()) return std::make_unique<StubGenerator>();
  return std::make_unique<HttpGenerator>(url, timeout_ms);
}

}  // namespace flowkit
