#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "flowkit/dialogue.hpp"

namespace flowkit {

struct Diagnostic {
  enum class Severity { Error, Warning };

  Severity severity = Severity::Error;
  std::string rule;      // stable identifier, e.g. "unreachable-exit"
  std::string dialogue;  // empty for bundle-level problems
  std::string node;
  std::string message;

  std::string location() const;
  std::string str() const;
  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

nlohmann::json to_json(const Diagnostic& d);

/// Checks every structural invariant of a parsed bundle. The result is empty
/// iff the bundle is valid, and is ordered deterministically (dialogue order,
/// then node order).
std::vector<Diagnostic> validate_bundle(const DialogueBundle& bundle);

/// Entity types referenced by `[text]{type}` markup in the given intent nodes.
std::set<std::string> markup_types(const std::vector<const Node*>& intents);

}  // namespace flowkit
