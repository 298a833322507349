#include "flowkit/store.hpp"

#include <algorithm>
#include <fstream>

#include "flowkit/time_util.hpp"

namespace flowkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json meta_json(const SessionMeta& m) {
  return {{"event", "start"},     {"session_id", m.session_id}, {"app_id", m.app_id},
          {"user_id", m.user_id}, {"community", m.community},   {"client", m.client_tag},
          {"at", m.started_at_ms}};
}

SessionMeta meta_from_json(const json& j) {
  SessionMeta m;
  m.session_id = j.at("session_id").get<std::string>();
  m.app_id = j.at("app_id").get<std::string>();
  m.user_id = j.at("user_id").get<std::string>();
  m.community = j.at("community").get<std::string>();
  m.client_tag = j.at("client").get<std::string>();
  m.started_at_ms = j.at("at").get<std::int64_t>();
  return m;
}

}  // namespace

Store::Store(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(*dir_);
  replay();
}

void Store::append_line(const std::string& file, const json& j) {
  if (!dir_) return;
  std::ofstream out(*dir_ / file, std::ios::app | std::ios::binary);
  if (!out) throw StoreError("cannot append to " + (*dir_ / file).string());
  out << j.dump() << '\n';
  out.flush();
  if (!out) throw StoreError("write failed for " + (*dir_ / file).string());
}

void Store::apply_start(const SessionMeta& meta) {
  if (sessions_.count(meta.session_id)) throw StoreError("session " + meta.session_id + " already exists");
  sessions_[meta.session_id] = Entry{meta, {}};
  order_.push_back(meta.session_id);
}

void Store::apply_end(const std::string& id, std::int64_t at, bool error) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session " + id);
  it->second.meta.ended_at_ms = at;
  it->second.meta.ended_with_error = error;
}

void Store::apply_turn(const TurnRecord& record) {
  auto it = sessions_.find(record.session_id);
  if (it == sessions_.end()) throw NotFoundError("unknown session " + record.session_id);
  auto& turns = it->second.turns;
  const auto expected = static_cast<int>(turns.size());
  if (record.turn_index < expected)
    throw StoreError("duplicate turn " + std::to_string(record.turn_index) + " for session " + record.session_id);
  if (record.turn_index > expected)
    throw StoreError("turn " + std::to_string(record.turn_index) + " skips index " + std::to_string(expected) +
                     " for session " + record.session_id);
  turns.push_back(record);
}

void Store::replay() {
  std::vector<fs::path> session_files, turn_files;
  for (const auto& entry : fs::directory_iterator(*dir_)) {
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() != ".ndjson") continue;
    if (name.rfind("sessions-", 0) == 0) session_files.push_back(entry.path());
    if (name.rfind("turns-", 0) == 0) turn_files.push_back(entry.path());
  }
  std::sort(session_files.begin(), session_files.end());
  std::sort(turn_files.begin(), turn_files.end());

  auto each_line = [](const fs::path& p, auto&& fn) {
    std::ifstream in(p, std::ios::binary);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        fn(json::parse(line));
      } catch (const std::exception& e) {
        throw StoreError(p.string() + ":" + std::to_string(n) + ": " + e.what());
      }
    }
  };
  std::vector<std::pair<std::string, json>> ends;
  for (const auto& p : session_files)
    each_line(p, [&](const json& j) {
      if (j.at("event") == "start")
        apply_start(meta_from_json(j));
      else
        ends.emplace_back(j.at("session_id").get<std::string>(), j);
    });
  for (const auto& [id, j] : ends) apply_end(id, j.at("at").get<std::int64_t>(), j.value("error", false));

  std::vector<TurnRecord> turns;
  for (const auto& p : turn_files) each_line(p, [&](const json& j) { turns.push_back(turn_record_from_json(j)); });
  std::stable_sort(turns.begin(), turns.end(),
                   [](const TurnRecord& a, const TurnRecord& b) { return a.turn_index < b.turn_index; });
  for (const auto& t : turns) apply_turn(t);

  if (fs::exists(*dir_ / "attributes.ndjson"))
    each_line(*dir_ / "attributes.ndjson", [&](const json& j) {
      auto scope = parse_scope(j.at("scope").get<std::string>());
      if (!scope) throw StoreError("bad scope");
      attributes_[{*scope, j.at("key").get<std::string>()}][j.at("name").get<std::string>()] =
          value_from_json(j.at("value"));
    });
}

void Store::begin_session(const SessionMeta& meta) {
  std::lock_guard lock(mu_);
  apply_start(meta);
  append_line("sessions-" + format_date(meta.started_at_ms) + ".ndjson", meta_json(meta));
}

void Store::end_session(const std::string& session_id, std::int64_t ended_at_ms, bool with_error) {
  std::lock_guard lock(mu_);
  apply_end(session_id, ended_at_ms, with_error);
  append_line("sessions-" + format_date(ended_at_ms) + ".ndjson",
              {{"event", "end"}, {"session_id", session_id}, {"at", ended_at_ms}, {"error", with_error}});
}

void Store::append_turn(const TurnRecord& record) {
  std::lock_guard lock(mu_);
  apply_turn(record);
  append_line("turns-" + format_date(record.timestamp_ms) + ".ndjson", to_json(record));
}

std::vector<TurnRecord> Store::transcript(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError("unknown session " + session_id);
  return it->second.turns;
}

std::optional<SessionMeta> Store::session(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second.meta;
}

std::vector<SessionMeta> Store::sessions() const {
  std::lock_guard lock(mu_);
  std::vector<SessionMeta> out;
  for (const auto& id : order_) out.push_back(sessions_.at(id).meta);
  return out;
}

void Store::record_attribute(Scope scope, const std::string& key, const std::string& name, const Value& value,
                             std::int64_t at_ms) {
  if (scope != Scope::User && scope != Scope::Community)
    throw std::invalid_argument("only user and community attributes are persisted");
  std::lock_guard lock(mu_);
  attributes_[{scope, key}][name] = value;
  append_line("attributes.ndjson", {{"scope", std::string(to_string(scope))},
                                    {"key", key},
                                    {"name", name},
                                    {"value", to_json(value)},
                                    {"at", at_ms}});
}

std::map<std::string, Value> Store::list_attributes(Scope scope, const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = attributes_.find({scope, key});
  return it == attributes_.end() ? std::map<std::string, Value>{} : it->second;
}

void Store::load_into(SharedAttributes& shared) const {
  std::lock_guard lock(mu_);
  for (const auto& [k, table] : attributes_)
    for (const auto& [name, value] : table) shared.set(k.first, k.second, name, value);
}

}  // namespace flowkit
