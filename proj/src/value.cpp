#include "flowkit/value.hpp"

#include <cctype>
#include <stdexcept>

namespace flowkit {

std::string_view Value::type_name() const {
  switch (data_.index()) {
    case 0: return "null";
    case 1: return "boolean";
    case 2: return "integer";
    case 3: return "decimal";
    default: return "string";
  }
}

std::string Value::to_display() const {
  if (is_null()) return {};
  if (is_bool()) return as_bool() ? "true" : "false";
  if (is_int()) return std::to_string(as_int());
  if (is_decimal()) return nlohmann::json(as_decimal()).dump();
  return as_string();
}

nlohmann::json to_json(const Value& v) {
  if (v.is_null()) return nullptr;
  if (v.is_bool()) return v.as_bool();
  if (v.is_int()) return v.as_int();
  if (v.is_decimal()) return v.as_decimal();
  return v.as_string();
}

Value value_from_json(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::null: return {};
    case nlohmann::json::value_t::boolean: return j.get<bool>();
    case nlohmann::json::value_t::number_integer:
    case nlohmann::json::value_t::number_unsigned: return j.get<std::int64_t>();
    case nlohmann::json::value_t::number_float: return j.get<double>();
    case nlohmann::json::value_t::string: return j.get<std::string>();
    default: throw std::invalid_argument("attribute values must be scalars, got " + std::string(j.type_name()));
  }
}

std::string_view to_string(Scope s) {
  switch (s) {
    case Scope::Turn: return "turn";
    case Scope::Session: return "session";
    case Scope::User: return "user";
    case Scope::Community: return "community";
  }
  return "session";
}

std::optional<Scope> parse_scope(std::string_view s) {
  if (s == "turn") return Scope::Turn;
  if (s == "session") return Scope::Session;
  if (s == "user") return Scope::User;
  if (s == "community") return Scope::Community;
  return std::nullopt;
}

std::string AttributeRef::str() const { return std::string(to_string(scope)) + "." + name; }

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

std::optional<AttributeRef> parse_attribute_ref(std::string_view text) {
  auto dot = text.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  auto scope = parse_scope(text.substr(0, dot));
  auto name = text.substr(dot + 1);
  if (!scope || !is_identifier(name)) return std::nullopt;
  return AttributeRef{*scope, std::string(name)};
}

}  // namespace flowkit
