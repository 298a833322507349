#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

namespace flowkit {

/// Dynamically typed attribute value: null, boolean, integer, decimal or string.
class Value {
 public:
  using Storage = std::variant<std::monostate, bool, std::int64_t, double, std::string>;

  Value() = default;
  Value(std::nullptr_t) {}
  Value(bool b) : data_(b) {}
  Value(int i) : data_(static_cast<std::int64_t>(i)) {}
  Value(std::int64_t i) : data_(i) {}
  Value(double d) : data_(d) {}
  Value(std::string s) : data_(std::move(s)) {}
  Value(const char* s) : data_(std::string(s)) {}

  bool is_null() const { return std::holds_alternative<std::monostate>(data_); }
  bool is_bool() const { return std::holds_alternative<bool>(data_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(data_); }
  bool is_decimal() const { return std::holds_alternative<double>(data_); }
  bool is_number() const { return is_int() || is_decimal(); }
  bool is_string() const { return std::holds_alternative<std::string>(data_); }

  bool as_bool() const { return std::get<bool>(data_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(data_); }
  double as_decimal() const { return std::get<double>(data_); }
  double as_number() const { return is_int() ? static_cast<double>(as_int()) : as_decimal(); }
  const std::string& as_string() const { return std::get<std::string>(data_); }

  const Storage& storage() const { return data_; }

  // "null", "boolean", "integer", "decimal" or "string".
  std::string_view type_name() const;

  // Text used when the value fills a response slot. Null renders empty.
  std::string to_display() const;

  friend bool operator==(const Value& a, const Value& b) { return a.data_ == b.data_; }

 private:
  Storage data_;
};

nlohmann::json to_json(const Value& v);
/// Objects and arrays are rejected with std::invalid_argument.
Value value_from_json(const nlohmann::json& j);

enum class Scope { Turn, Session, User, Community };

std::string_view to_string(Scope s);
std::optional<Scope> parse_scope(std::string_view s);

/// `scope.name` reference to an attribute.
struct AttributeRef {
  Scope scope = Scope::Session;
  std::string name;

  std::string str() const;
  friend bool operator==(const AttributeRef&, const AttributeRef&) = default;
  friend auto operator<=>(const AttributeRef&, const AttributeRef&) = default;
};

/// Parses "session.favMovie". Returns nullopt on a malformed reference.
std::optional<AttributeRef> parse_attribute_ref(std::string_view text);

bool is_identifier(std::string_view s);

}  // namespace flowkit
