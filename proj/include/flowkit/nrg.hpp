#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flowkit/dialogue.hpp"

namespace flowkit {

enum class Speaker { User, Bot };

std::string_view to_string(Speaker s);

struct HistoryItem {
  Speaker speaker = Speaker::User;
  std::string text;
};

struct NrgRequest {
  std::vector<HistoryItem> history;
  DialogueAct desired_act = DialogueAct::Statement;
  /// Crawled text or a database fact the response should build on.
  std::optional<std::string> grounding;
};

struct NrgResponse {
  std::string text;
  DialogueAct act = DialogueAct::Statement;
  /// Set when the configured backend failed and the stub answered instead.
  bool fallback = false;
};

nlohmann::json to_json(const NrgRequest& r);

class NrgGenerator {
 public:
  virtual ~NrgGenerator() = default;
  virtual NrgResponse generate(const NrgRequest& request) const = 0;
};

/// Deterministic templates keyed by dialogue act, echoing a content word from
/// the grounding text or the last user utterance.
class StubGenerator final : public NrgGenerator {
 public:
  NrgResponse generate(const NrgRequest& request) const override;

  /// Last non-stopword token of `text`, lowercased; empty when there is none.
  static std::string content_word(std::string_view text);
};

/// Calls `POST <base>/generate`; any transport or protocol failure falls back
/// to the stub with `fallback` set.
class HttpGenerator final : public NrgGenerator {
 public:
  HttpGenerator(std::string base_url, int timeout_ms = 2000);
  NrgResponse generate(const NrgRequest& request) const override;

 private:
  std::string base_url_;
  int timeout_ms_;
  StubGenerator stub_;
};

/// Stub when `url` is empty, HTTP backend otherwise.
std::unique_ptr<NrgGenerator> make_generator(const std::string& url, int timeout_ms);

}  // namespace flowkit
