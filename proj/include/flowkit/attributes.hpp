#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowkit/condition.hpp"
#include "flowkit/dialogue.hpp"
#include "flowkit/value.hpp"

namespace flowkit {

struct AttributeChange {
  Scope scope = Scope::Session;
  std::string name;
  Value old_value;
  Value new_value;

  friend bool operator==(const AttributeChange&, const AttributeChange&) = default;
};

nlohmann::json to_json(const AttributeChange& c);
AttributeChange attribute_change_from_json(const nlohmann::json& j);

class UndeclaredAttributeError : public std::runtime_error {
 public:
  explicit UndeclaredAttributeError(const AttributeRef& ref)
      : std::runtime_error("attribute " + ref.str() + " is not declared") {}
};

/// User and Community attributes, shared by every session of an application
/// process. Each write is atomic per key.
class SharedAttributes {
 public:
  using Table = std::map<std::string, Value>;

  /// `key` is the user id for Scope::User and the community namespace for Scope::Community.
  std::optional<Value> get(Scope scope, const std::string& key, const std::string& name) const;
  /// Returns the previous value, if any.
  std::optional<Value> set(Scope scope, const std::string& key, const std::string& name, Value value);
  Table table(Scope scope, const std::string& key) const;

 private:
  std::map<std::string, Table>& tables(Scope scope);
  const std::map<std::string, Table>& tables(Scope scope) const;

  mutable std::mutex mu_;
  std::map<std::string, Table> user_;
  std::map<std::string, Table> community_;
};

/// Turn and Session values owned by one session.
struct SessionAttributeState {
  std::map<std::string, Value> turn;
  std::map<std::string, Value> session;
};

/// Resolves reads across the four scopes (stored value, then declared default,
/// then null) and records every write as an AttributeChange.
class SessionAttributes final : public AttributeView {
 public:
  SessionAttributes(const std::map<AttributeRef, AttributeDecl>& catalog, SessionAttributeState& state,
                    SharedAttributes& shared, std::string user_id, std::string community);

  Value get(const AttributeRef& ref) const override;
  /// Throws UndeclaredAttributeError for a reference missing from the catalog.
  void set(const AttributeRef& ref, Value value);

  const std::vector<AttributeChange>& changes() const { return changes_; }
  void clear_changes() { changes_.clear(); }

 private:
  std::optional<Value> stored(const AttributeRef& ref) const;

  const std::map<AttributeRef, AttributeDecl>& catalog_;
  SessionAttributeState& state_;
  SharedAttributes& shared_;
  std::string user_id_;
  std::string community_;
  std::vector<AttributeChange> changes_;
};

}  // namespace flowkit
