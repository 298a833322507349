#include "flowkit/skimmer.hpp"

#include <stdexcept>

namespace flowkit {

SkimmerRule SkimmerRule::make(std::vector<std::string> patterns, AttributeRef attribute,
                              std::variant<Value, CaptureRef> value) {
  if (patterns.empty()) throw std::invalid_argument("skimmer rule for " + attribute.str() + " has no patterns");
  SkimmerRule r;
  r.patterns = std::move(patterns);
  r.attribute = std::move(attribute);
  r.value = std::move(value);
  for (const auto& p : r.patterns) {
    try {
      r.compiled.emplace_back(p, boost::regex::perl | boost::regex::icase);
    } catch (const boost::regex_error& e) {
      throw std::invalid_argument("skimmer rule for " + r.attribute.str() + ": bad pattern '" + p + "': " + e.what());
    }
  }
  return r;
}

bool SkimmerRule::capture_is_valid() const {
  const auto* cap = std::get_if<CaptureRef>(&value);
  if (!cap) return true;
  if (compiled.empty()) return false;
  const auto& re = compiled.front();
  if (const auto* index = std::get_if<int>(&cap->group)) return *index >= 0 && static_cast<std::size_t>(*index) <= re.mark_count();
  const auto& name = std::get<std::string>(cap->group);
  const auto& src = patterns.front();
  for (const char* open : {"(?<", "(?P<", "(?'"}) {
    std::string needle = std::string(open) + name + (open[2] == '\'' ? "'" : ">");
    if (src.find(needle) != std::string::npos) return true;
  }
  return false;
}

std::vector<SkimmerWrite> skim(std::string_view utterance, const std::vector<SkimmerRule>& rules) {
  const std::string text(utterance);
  std::vector<SkimmerWrite> writes;
  for (const auto& rule : rules) {
    boost::smatch first;
    bool all = !rule.compiled.empty();
    for (std::size_t i = 0; all && i < rule.compiled.size(); ++i) {
      boost::smatch m;
      all = boost::regex_search(text, m, rule.compiled[i]);
      if (all && i == 0) first = m;
    }
    if (!all) continue;
    if (const auto* literal = std::get_if<Value>(&rule.value)) {
      writes.push_back({rule.attribute, *literal});
      continue;
    }
    const auto& cap = std::get<CaptureRef>(rule.value);
    const auto& sub = std::holds_alternative<int>(cap.group) ? first[std::get<int>(cap.group)]
                                                               : first[std::get<std::string>(cap.group)];
    writes.push_back({rule.attribute, sub.matched ? Value(sub.str()) : Value()});
  }
  return writes;
}

}  // namespace flowkit
