#include "flowkit/attributes.hpp"

namespace flowkit {

nlohmann::json to_json(const AttributeChange& c) {
  return {{"scope", std::string(to_string(c.scope))},
          {"name", c.name},
          {"old", to_json(c.old_value)},
          {"new", to_json(c.new_value)}};
}

AttributeChange attribute_change_from_json(const nlohmann::json& j) {
  AttributeChange c;
  auto scope = parse_scope(j.at("scope").get<std::string>());
  if (!scope) throw std::invalid_argument("bad attribute scope");
  c.scope = *scope;
  c.name = j.at("name").get<std::string>();
  c.old_value = value_from_json(j.at("old"));
  c.new_value = value_from_json(j.at("new"));
  return c;
}

std::map<std::string, SharedAttributes::Table>& SharedAttributes::tables(Scope scope) {
  if (scope == Scope::User) return user_;
  if (scope == Scope::Community) return community_;
  throw std::invalid_argument("only user and community attributes are shared");
}

const std::map<std::string, SharedAttributes::Table>& SharedAttributes::tables(Scope scope) const {
  return const_cast<SharedAttributes*>(this)->tables(scope);
}

std::optional<Value> SharedAttributes::get(Scope scope, const std::string& key, const std::string& name) const {
  std::lock_guard lock(mu_);
  const auto& t = tables(scope);
  auto it = t.find(key);
  if (it == t.end()) return std::nullopt;
  auto v = it->second.find(name);
  if (v == it->second.end()) return std::nullopt;
  return v->second;
}

std::optional<Value> SharedAttributes::set(Scope scope, const std::string& key, const std::string& name, Value value) {
  std::lock_guard lock(mu_);
  auto& slot = tables(scope)[key];
  std::optional<Value> old;
  if (auto it = slot.find(name); it != slot.end()) old = it->second;
  slot[name] = std::move(value);
  return old;
}

SharedAttributes::Table SharedAttributes::table(Scope scope, const std::string& key) const {
  std::lock_guard lock(mu_);
  const auto& t = tables(scope);
  auto it = t.find(key);
  return it == t.end() ? Table{} : it->second;
}

SessionAttributes::SessionAttributes(const std::map<AttributeRef, AttributeDecl>& catalog, SessionAttributeState& state,
                                     SharedAttributes& shared, std::string user_id, std::string community)
    : catalog_(catalog), state_(state), shared_(shared), user_id_(std::move(user_id)), community_(std::move(community)) {}

std::optional<Value> SessionAttributes::stored(const AttributeRef& ref) const {
  const std::map<std::string, Value>* m = nullptr;
  switch (ref.scope) {
    case Scope::Turn: m = &state_.turn; break;
    case Scope::Session: m = &state_.session; break;
    case Scope::User: return shared_.get(Scope::User, user_id_, ref.name);
    case Scope::Community: return shared_.get(Scope::Community, community_, ref.name);
  }
  auto it = m->find(ref.name);
  if (it == m->end()) return std::nullopt;
  return it->second;
}

Value SessionAttributes::get(const AttributeRef& ref) const {
  if (auto v = stored(ref)) return *v;
  auto it = catalog_.find(ref);
  return it == catalog_.end() ? Value{} : it->second.default_value;
}

void SessionAttributes::set(const AttributeRef& ref, Value value) {
  if (!catalog_.count(ref)) throw UndeclaredAttributeError(ref);
  Value old = get(ref);
  switch (ref.scope) {
    case Scope::Turn: state_.turn[ref.name] = value; break;
    case Scope::Session: state_.session[ref.name] = value; break;
    case Scope::User: shared_.set(Scope::User, user_id_, ref.name, value); break;
    case Scope::Community: shared_.set(Scope::Community, community_, ref.name, value); break;
  }
  changes_.push_back({ref.scope, ref.name, std::move(old), std::move(value)});
}

}  // namespace flowkit
