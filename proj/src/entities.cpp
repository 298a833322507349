#include "flowkit/entities.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

namespace flowkit {

std::string_view to_string(Normalizer n) {
  switch (n) {
    case Normalizer::None: return "none";
    case Normalizer::Integer: return "integer";
    case Normalizer::Decimal: return "decimal";
    case Normalizer::TimeOfDay: return "time-of-day";
    case Normalizer::Date: return "date";
    case Normalizer::Url: return "url";
    case Normalizer::Money: return "money";
  }
  return "none";
}

std::optional<Normalizer> parse_normalizer(std::string_view s) {
  for (auto n : {Normalizer::None, Normalizer::Integer, Normalizer::Decimal, Normalizer::TimeOfDay, Normalizer::Date,
                 Normalizer::Url, Normalizer::Money})
    if (to_string(n) == s) return n;
  return std::nullopt;
}

namespace {

constexpr const char* kMonths =
    "jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?|sep(?:t(?:ember)?)?|oct(?:ober)?|"
    "nov(?:ember)?|dec(?:ember)?";

constexpr const char* kNumberWords =
    "(?:twenty|thirty|forty|fifty|sixty|seventy|eighty|ninety)(?:[- ](?:one|two|three|four|five|six|seven|eight|nine))?"
    "|zero|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|thirteen|fourteen|fifteen|sixteen|"
    "seventeen|eighteen|nineteen";

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<std::string> group(const boost::smatch& m, const char* name) {
  const auto& sub = m[name];
  if (!sub.matched) return std::nullopt;
  return sub.str();
}

std::optional<std::int64_t> word_number(const std::string& text) {
  static const std::map<std::string, int> kUnits = {
      {"zero", 0},     {"one", 1},       {"two", 2},        {"three", 3},     {"four", 4},       {"five", 5},
      {"six", 6},      {"seven", 7},     {"eight", 8},      {"nine", 9},      {"ten", 10},       {"eleven", 11},
      {"twelve", 12},  {"thirteen", 13}, {"fourteen", 14},  {"fifteen", 15},  {"sixteen", 16},   {"seventeen", 17},
      {"eighteen", 18}, {"nineteen", 19}, {"twenty", 20},   {"thirty", 30},   {"forty", 40},     {"fifty", 50},
      {"sixty", 60},   {"seventy", 70},  {"eighty", 80},    {"ninety", 90}};
  std::string t = lower(text);
  std::replace(t.begin(), t.end(), '-', ' ');
  std::int64_t total = 0;
  std::size_t pos = 0;
  bool any = false;
  while (pos < t.size()) {
    auto sp = t.find(' ', pos);
    std::string word = t.substr(pos, sp == std::string::npos ? std::string::npos : sp - pos);
    pos = sp == std::string::npos ? t.size() : sp + 1;
    if (word.empty()) continue;
    auto it = kUnits.find(word);
    if (it == kUnits.end()) return std::nullopt;
    total += it->second;
    any = true;
  }
  if (!any) return std::nullopt;
  return total;
}

std::optional<std::int64_t> parse_integer(std::string text) {
  text.erase(std::remove(text.begin(), text.end(), ','), text.end());
  if (text.empty()) return std::nullopt;
  std::size_t i = (text[0] == '-' || text[0] == '+') ? 1 : 0;
  if (i == text.size() || !std::all_of(text.begin() + static_cast<long>(i), text.end(),
                                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    return word_number(text);
  try {
    return std::stoll(text);
  } catch (const std::out_of_range&) {
    return std::nullopt;
  }
}

int month_number(const std::string& name) {
  static const char* kNames[] = {"jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"};
  std::string l = lower(name);
  if (!l.empty() && std::isdigit(static_cast<unsigned char>(l[0]))) return std::stoi(l);
  for (int i = 0; i < 12; ++i)
    if (l.rfind(kNames[i], 0) == 0) return i + 1;
  return 0;
}

std::string currency_code(const std::string& raw) {
  std::string c = lower(raw);
  if (c == "$" || c.rfind("dollar", 0) == 0 || c == "usd") return "USD";
  if (c == "\xE2\x82\xAC" || c.rfind("euro", 0) == 0 || c == "eur") return "EUR";
  if (c == "\xC2\xA3" || c.rfind("pound", 0) == 0 || c == "gbp") return "GBP";
  if (c == "czk" || c.rfind("crown", 0) == 0 || c == "k\xC4\x8D") return "CZK";
  std::string up(raw);
  for (auto& ch : up) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return up;
}

struct Candidate {
  std::size_t start, end;
  std::size_t rule, pattern;
  boost::smatch match;
};

}  // namespace

const std::vector<std::string>& builtin_patterns(Normalizer n) {
  static const std::map<Normalizer, std::vector<std::string>> kPatterns = {
      {Normalizer::None, {}},
      {Normalizer::Integer,
       {R"(\b(?<value>\d{1,3}(?:,\d{3})+|\d+)\b)", std::string(R"(\b(?<value>)") + kNumberWords + R"()\b)"}},
      {Normalizer::Decimal, {R"((?<![\d.])(?<value>\d+(?:\.\d+)?)(?![\d.]))"}},
      {Normalizer::TimeOfDay,
       {R"(\b(?<hour>[01]?\d|2[0-3]):(?<minute>[0-5]\d)(?:\s*(?<ampm>[ap]\.?m\b\.?))?)",
        R"(\b(?<hour>1[0-2]|0?[1-9])\s*(?<ampm>[ap]\.?m\b\.?))", R"(\b(?<special>noon|midnight)\b)"}},
      {Normalizer::Date,
       {R"(\b(?<year>\d{4})-(?<month>\d{1,2})-(?<day>\d{1,2})\b)",
        std::string(R"(\b(?<month>)") + kMonths + R"()\.?\s+(?<day>\d{1,2})(?:st|nd|rd|th)?\b(?:,?\s+(?<year>\d{4})\b)?)",
        std::string(R"(\b(?<day>\d{1,2})(?:st|nd|rd|th)?\s+(?:of\s+)?(?<month>)") + kMonths +
            R"()\b(?:,?\s+(?<year>\d{4})\b)?)",
        R"(\b(?<relative>today|tomorrow|yesterday)\b)"}},
      {Normalizer::Url, {R"re(\b(?:https?://|www\.)[^\s]*[^\s.,!?;:)"'])re"}},
      {Normalizer::Money,
       {std::string(R"((?<currency>\$|)") + "\xE2\x82\xAC|\xC2\xA3" + R"()\s?(?<amount>\d+(?:[.,]\d{1,2})?))",
        R"(\b(?<amount>\d+(?:\.\d{1,2})?)\s?(?<currency>dollars?|usd|euros?|eur|pounds?|gbp|czk|crowns?)\b)"}},
  };
  return kPatterns.at(n);
}

EntityRule EntityRule::make(std::string type_name, std::vector<std::string> patterns, Normalizer normalizer) {
  EntityRule r;
  r.type_name = std::move(type_name);
  r.normalizer = normalizer;
  r.uses_builtin_patterns = patterns.empty();
  r.patterns = std::move(patterns);
  const auto& source = r.uses_builtin_patterns ? builtin_patterns(normalizer) : r.patterns;
  for (const auto& p : source) {
    try {
      r.compiled.emplace_back(p, boost::regex::perl | boost::regex::icase);
    } catch (const boost::regex_error& e) {
      throw std::invalid_argument("entity type '" + r.type_name + "': bad pattern '" + p + "': " + e.what());
    }
  }
  return r;
}

nlohmann::json normalize_entity(Normalizer n, const boost::smatch& m) {
  const std::string surface = m.str();
  switch (n) {
    case Normalizer::None:
    case Normalizer::Url:
      return surface;
    case Normalizer::Integer: {
      auto v = parse_integer(group(m, "value").value_or(surface));
      if (v) return *v;
      return nullptr;
    }
    case Normalizer::Decimal: {
      std::string text = group(m, "value").value_or(surface);
      text.erase(std::remove(text.begin(), text.end(), ','), text.end());
      try {
        return std::stod(text);
      } catch (const std::exception&) {
        return nullptr;
      }
    }
    case Normalizer::TimeOfDay: {
      if (auto special = group(m, "special")) return {{"hour", lower(*special) == "noon" ? 12 : 0}, {"minute", 0}};
      auto hour_text = group(m, "hour");
      if (!hour_text) return nullptr;
      int hour = std::stoi(*hour_text);
      int minute = group(m, "minute") ? std::stoi(*group(m, "minute")) : 0;
      if (auto ampm = group(m, "ampm")) {
        bool pm = std::tolower(static_cast<unsigned char>((*ampm)[0])) == 'p';
        if (pm && hour < 12) hour += 12;
        if (!pm && hour == 12) hour = 0;
      }
      return {{"hour", hour}, {"minute", minute}};
    }
    case Normalizer::Date: {
      if (auto rel = group(m, "relative")) {
        std::string r = lower(*rel);
        return {{"relativeDays", r == "today" ? 0 : (r == "tomorrow" ? 1 : -1)}};
      }
      nlohmann::json out = nlohmann::json::object();
      if (auto y = group(m, "year")) out["year"] = std::stoi(*y);
      if (auto mo = group(m, "month")) out["month"] = month_number(*mo);
      if (auto d = group(m, "day")) out["day"] = std::stoi(*d);
      return out;
    }
    case Normalizer::Money: {
      auto amount = group(m, "amount");
      if (!amount) return nullptr;
      std::string a = *amount;
      std::replace(a.begin(), a.end(), ',', '.');
      return {{"amount", std::stod(a)}, {"currency", currency_code(group(m, "currency").value_or(""))}};
    }
  }
  return surface;
}

std::vector<EntitySpan> recognize_entities(std::string_view utterance, const std::vector<EntityRule>& rules) {
  const std::string text(utterance);
  std::vector<Candidate> candidates;
  for (std::size_t r = 0; r < rules.size(); ++r) {
    for (std::size_t p = 0; p < rules[r].compiled.size(); ++p) {
      for (boost::sregex_iterator it(text.begin(), text.end(), rules[r].compiled[p]), end; it != end; ++it) {
        const auto& m = *it;
        if (m.length() == 0) continue;
        auto start = static_cast<std::size_t>(m.position());
        candidates.push_back({start, start + static_cast<std::size_t>(m.length()), r, p, m});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.end != b.end) return a.end > b.end;
    if (a.rule != b.rule) return a.rule < b.rule;
    return a.pattern < b.pattern;
  });
  std::vector<EntitySpan> spans;
  std::size_t covered = 0;
  for (const auto& c : candidates) {
    if (c.start < covered) continue;
    const auto& rule = rules[c.rule];
    spans.push_back({c.start, c.end, text.substr(c.start, c.end - c.start), rule.type_name,
                     normalize_entity(rule.normalizer, c.match)});
    covered = c.end;
  }
  return spans;
}

MaskResult mask_entities_detailed(std::string_view utterance, const std::vector<EntitySpan>& spans,
                                  const std::set<std::string>& allowed_types) {
  MaskResult out;
  std::size_t cursor = 0;
  for (const auto& s : spans) {
    if (s.start < cursor || s.end <= s.start || s.end > utterance.size())
      throw std::invalid_argument("entity spans must be sorted, non-empty, non-overlapping and inside the utterance");
    out.text.append(utterance.substr(cursor, s.start - cursor));
    EntitySpan moved = s;
    moved.start = out.text.size();
    if (allowed_types.count(s.type_name)) {
      moved.surface = "{" + s.type_name + "}";
      out.text += moved.surface;
    } else {
      out.text.append(utterance.substr(s.start, s.end - s.start));
    }
    moved.end = out.text.size();
    out.spans.push_back(std::move(moved));
    cursor = s.end;
  }
  out.text.append(utterance.substr(cursor));
  return out;
}

std::string mask_entities(std::string_view utterance, const std::vector<EntitySpan>& spans,
                          const std::set<std::string>& allowed_types) {
  return mask_entities_detailed(utterance, spans, allowed_types).text;
}

nlohmann::json to_json(const EntitySpan& s) {
  return {{"start", s.start}, {"end", s.end}, {"surface", s.surface}, {"type", s.type_name}, {"normalized", s.normalized}};
}

EntitySpan entity_span_from_json(const nlohmann::json& j) {
  return {j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>(), j.at("surface").get<std::string>(),
          j.at("type").get<std::string>(), j.value("normalized", nlohmann::json())};
}

}  // namespace flowkit
