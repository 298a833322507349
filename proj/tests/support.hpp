#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "flowkit/bundle_io.hpp"
#include "flowkit/condition.hpp"
#include "flowkit/metrics.hpp"
#include "flowkit/time_util.hpp"

namespace testing {

inline std::string data_path(const std::string& name) { return std::string(FLOWKIT_TEST_DATA) + "/" + name; }
inline std::string golden_path(const std::string& name) { return std::string(FLOWKIT_GOLDEN_DIR) + "/" + name; }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline flowkit::DialogueBundle load(const std::string& name) { return flowkit::load_bundle_file(data_path(name)); }

class MapView : public flowkit::AttributeView {
 public:
  std::map<flowkit::AttributeRef, flowkit::Value> values;

  flowkit::Value get(const flowkit::AttributeRef& ref) const override {
    auto it = values.find(ref);
    return it == values.end() ? flowkit::Value{} : it->second;
  }
  void set(const std::string& ref, flowkit::Value v) { values[*flowkit::parse_attribute_ref(ref)] = std::move(v); }
};

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::mt19937_64 gen{std::random_device{}()};
    path = std::filesystem::temp_directory_path() / ("flowkit-test-" + std::to_string(gen()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

/// Clock that advances by `step` ms on each reading.
inline flowkit::Clock stepping_clock(std::int64_t start, std::int64_t step = 1) {
  auto t = std::make_shared<std::int64_t>(start);
  return [t, step] {
    std::int64_t now = *t;
    *t += step;
    return now;
  };
}

/// Deterministic id sequence "s1", "s2", ...
inline std::function<std::string()> counting_ids(std::string prefix = "s") {
  auto n = std::make_shared<int>(0);
  return [n, prefix] { return prefix + std::to_string(++*n); };
}

// Reference embedding computed from first principles: sparse map of hashed
// word and trigram counts, normalized, compared with a plain dot product.
namespace oracle {

using Sparse = std::map<std::size_t, double>;

inline std::uint64_t fnv(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::vector<std::string> words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (c >= 0x80 || std::isalnum(c)) {
      cur += static_cast<char>(c >= 0x80 ? c : std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline Sparse embed(const std::string& text, std::size_t dim = 1024) {
  Sparse v;
  for (const auto& w : words(text)) {
    v[fnv("w:" + w) % dim] += 1.0;
    if (w.size() >= 3)
      for (std::size_t i = 0; i + 3 <= w.size(); ++i) v[fnv("c:" + w.substr(i, 3)) % dim] += 1.0;
  }
  double n = 0;
  for (auto& [_, x] : v) n += x * x;
  n = std::sqrt(n);
  for (auto& [_, x] : v) x /= n;
  return v;
}

inline double cosine(const Sparse& a, const Sparse& b) {
  if (a.empty() || b.empty()) return 0.0;
  double dot = 0, na = 0, nb = 0;
  for (auto& [i, x] : a) {
    na += x * x;
    auto it = b.find(i);
    if (it != b.end()) dot += x * it->second;
  }
  for (auto& [_, x] : b) nb += x * x;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Exhaustive argmax over pool positions: enumerate eligible candidates, find
/// the maximum score, return the first position attaining it; -1 when nothing
/// is eligible.
inline int select(const std::vector<bool>& eligible, const std::vector<std::size_t>& scores) {
  std::optional<std::size_t> top;
  for (std::size_t i = 0; i < eligible.size(); ++i)
    if (eligible[i]) top = std::max(top.value_or(0), scores[i]);
  if (!top) return -1;
  for (std::size_t i = 0; i < eligible.size(); ++i)
    if (eligible[i] && scores[i] == *top) return static_cast<int>(i);
  return -1;
}

}  // namespace oracle

// Seven sessions over three client tags and two applications, spanning two
// ISO weeks and a midnight crossing. Expected counts in the tests are tallied
// by hand from this table.
namespace fixtures {

enum class T { In, Ood, Silence };

inline flowkit::TurnRecord turn(const std::string& sid, int index, std::int64_t ts, std::optional<T> kind) {
  flowkit::TurnRecord r;
  r.session_id = sid;
  r.turn_index = index;
  r.timestamp_ms = ts;
  if (kind && *kind != T::Silence) {
    flowkit::RoutingDecision d;
    d.scope = *kind == T::Ood ? flowkit::RoutingScope::OutOfDomain : flowkit::RoutingScope::Local;
    if (*kind == T::In) d.chosen_intent = "main/x";
    r.routing = d;
  }
  return r;
}

inline std::vector<flowkit::SessionData> metrics_sessions() {
  struct Row {
    const char* id;
    const char* user;
    const char* client;
    const char* app;
    const char* start;
    std::vector<T> turns;
  };
  const std::vector<Row> rows = {
      {"s1", "alice", "web", "a", "2024-05-06T09:10:00Z", {T::Ood, T::In, T::In}},
      {"s2", "bob", "web", "a", "2024-05-06T09:40:00Z", {T::In, T::Silence}},
      {"s3", "alice", "android", "b", "2024-05-06T10:05:00Z", {T::Ood, T::Ood}},
      {"s4", "carol", "web", "b", "2024-05-07T08:00:00Z", {T::In, T::In, T::In, T::Ood}},
      {"s5", "bob", "alexa", "a", "2024-05-07T23:59:00Z", {T::In}},
      {"s6", "alice", "android", "a", "2024-05-12T12:00:00Z", {T::In}},
      {"s7", "dave", "alexa", "b", "2024-05-13T00:30:00Z", {T::Ood, T::In}},
  };
  std::vector<flowkit::SessionData> out;
  for (const auto& row : rows) {
    flowkit::SessionData d;
    d.meta.session_id = row.id;
    d.meta.user_id = row.user;
    d.meta.client_tag = row.client;
    d.meta.app_id = row.app;
    d.meta.community = "default";
    d.meta.started_at_ms = *flowkit::parse_time(row.start);
    d.turns.push_back(turn(row.id, 0, d.meta.started_at_ms, std::nullopt));
    for (std::size_t i = 0; i < row.turns.size(); ++i)
      d.turns.push_back(turn(row.id, static_cast<int>(i + 1), d.meta.started_at_ms + 60'000 * static_cast<std::int64_t>(i + 1),
                             row.turns[i]));
    d.meta.ended_at_ms = d.turns.back().timestamp_ms;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace fixtures
}  // namespace testing
