#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <boost/regex.hpp>
#include <json.hpp>

namespace flowkit {

enum class Normalizer { None, Integer, Decimal, TimeOfDay, Date, Url, Money };

std::string_view to_string(Normalizer n);
std::optional<Normalizer> parse_normalizer(std::string_view s);

/// Regex-backed entity type. Patterns match case-insensitively and may use
/// named groups the normalizer understands (value, hour, minute, ampm, year,
/// month, day, relative, amount, currency).
struct EntityRule {
  std::string type_name;
  std::vector<std::string> patterns;
  Normalizer normalizer = Normalizer::None;
  std::vector<boost::regex> compiled;

  /// Compiles `patterns`; an empty list pulls in the built-in patterns for the
  /// normalizer. Throws std::invalid_argument on a bad pattern.
  static EntityRule make(std::string type_name, std::vector<std::string> patterns, Normalizer normalizer);

  /// True when the rule was declared without patterns and uses the built-ins.
  bool uses_builtin_patterns = false;
};

/// Built-in patterns for a normalizer; empty for Normalizer::None.
const std::vector<std::string>& builtin_patterns(Normalizer n);

struct EntitySpan {
  std::size_t start = 0;  // byte offsets into the utterance, end exclusive
  std::size_t end = 0;
  std::string surface;
  std::string type_name;
  nlohmann::json normalized;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

nlohmann::json to_json(const EntitySpan& s);
EntitySpan entity_span_from_json(const nlohmann::json& j);

/// Left-to-right, longest-match, non-overlapping. Equal-length matches at the
/// same offset go to the earlier rule.
std::vector<EntitySpan> recognize_entities(std::string_view utterance, const std::vector<EntityRule>& rules);

/// Normalized value for a surface string under a normalizer, using the same
/// named-group conventions as the rule patterns.
nlohmann::json normalize_entity(Normalizer n, const boost::smatch& match);

struct MaskResult {
  std::string text;
  /// Input spans re-expressed in `text` coordinates. Replaced spans cover
  /// their `{type}` placeholder.
  std::vector<EntitySpan> spans;
};

/// Replaces each span whose type is allowed by `{type}`; everything else is copied verbatim.
/// Spans must be sorted and non-overlapping (std::invalid_argument otherwise).
MaskResult mask_entities_detailed(std::string_view utterance, const std::vector<EntitySpan>& spans,
                                  const std::set<std::string>& allowed_types);

std::string mask_entities(std::string_view utterance, const std::vector<EntitySpan>& spans,
                          const std::set<std::string>& allowed_types);

}  // namespace flowkit
