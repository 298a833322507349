#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowkit/attributes.hpp"
#include "flowkit/turn_record.hpp"

namespace flowkit {

struct SessionMeta {
  std::string session_id;
  std::string app_id;
  std::string user_id;
  std::string community;
  std::string client_tag;
  std::int64_t started_at_ms = 0;
  std::optional<std::int64_t> ended_at_ms;
  bool ended_with_error = false;
};

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Sessions, their turn records and persistent (user/community) attribute
/// writes. With a directory, every event is appended to day-partitioned NDJSON
/// files and the index is rebuilt from them on construction; without one the
/// store lives in memory only.
class Store {
 public:
  Store() = default;
  explicit Store(std::filesystem::path dir);

  void begin_session(const SessionMeta& meta);
  void end_session(const std::string& session_id, std::int64_t ended_at_ms, bool with_error);
  /// Indices must arrive in order starting at 0. Throws NotFoundError for an
  /// unknown session and StoreError for a duplicate or skipped index.
  void append_turn(const TurnRecord& record);

  std::vector<TurnRecord> transcript(const std::string& session_id) const;
  std::optional<SessionMeta> session(const std::string& session_id) const;
  std::vector<SessionMeta> sessions() const;

  void record_attribute(Scope scope, const std::string& key, const std::string& name, const Value& value,
                        std::int64_t at_ms);
  std::map<std::string, Value> list_attributes(Scope scope, const std::string& key) const;
  /// Replays every recorded user/community value into `shared`.
  void load_into(SharedAttributes& shared) const;

  const std::optional<std::filesystem::path>& directory() const { return dir_; }

 private:
  struct Entry {
    SessionMeta meta;
    std::vector<TurnRecord> turns;
  };

  void append_line(const std::string& file, const nlohmann::json& j);
  void replay();
  void apply_start(const SessionMeta& meta);
  void apply_end(const std::string& id, std::int64_t at, bool error);
  void apply_turn(const TurnRecord& record);

  mutable std::mutex mu_;
  std::optional<std::filesystem::path> dir_;
  std::map<std::string, Entry> sessions_;
  std::vector<std::string> order_;
  std::map<std::pair<Scope, std::string>, std::map<std::string, Value>> attributes_;
};

}  // namespace flowkit
