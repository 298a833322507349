#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <boost/regex.hpp>

#include "flowkit/value.hpp"

namespace flowkit {

/// Reference to a capture group of a rule's first pattern, by number or name.
struct CaptureRef {
  std::variant<int, std::string> group;
};

/// Turn-level extraction rule. Fires when every pattern matches the raw
/// utterance (case-insensitive) and writes `value` into `attribute`.
struct SkimmerRule {
  std::vector<std::string> patterns;
  AttributeRef attribute;
  std::variant<Value, CaptureRef> value;
  std::vector<boost::regex> compiled;

  /// Throws std::invalid_argument on a bad pattern or an empty pattern list.
  static SkimmerRule make(std::vector<std::string> patterns, AttributeRef attribute,
                          std::variant<Value, CaptureRef> value);

  /// False when `value` names a group the first pattern does not define.
  bool capture_is_valid() const;
};

struct SkimmerWrite {
  AttributeRef attribute;
  Value value;

  friend bool operator==(const SkimmerWrite&, const SkimmerWrite&) = default;
};

/// Writes of every firing rule, in rule-declaration order.
std::vector<SkimmerWrite> skim(std::string_view utterance, const std::vector<SkimmerRule>& rules);

}  // namespace flowkit
