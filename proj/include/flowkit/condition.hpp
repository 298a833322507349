#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "flowkit/value.hpp"

namespace flowkit {

// Condition / assignment expression language.
//
//   expr  := or
//   or    := and (("||" | "or") and)*
//   and   := unary (("&&" | "and") unary)*
//   unary := ("!" | "not") unary | cmp
//   cmp   := sum (COP sum)?            COP := == != < <= > >=
//   sum   := term (("+" | "-") term)*
//   term  := literal | ref | call | "(" expr ")"
//   ref   := SCOPE "." IDENT           SCOPE := turn | session | user | community
//
// Built-ins: defined(x), contains(haystack, needle), len(x).

class ConditionParseError : public std::runtime_error {
 public:
  ConditionParseError(std::size_t position, const std::string& message);
  /// 1-based column of the offending token; end of input is length + 1.
  std::size_t position() const { return position_; }
  const std::string& detail() const { return detail_; }

 private:
  std::size_t position_;
  std::string detail_;
};

class EvalError : public std::runtime_error {
 public:
  enum class Kind { TypeMismatch, UnknownBuiltin, Arity };
  EvalError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class BinaryOp { Or, And, Eq, Ne, Lt, Le, Gt, Ge, Add, Sub };

std::string_view to_string(BinaryOp op);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct LiteralExpr {
  Value value;
};
struct RefExpr {
  AttributeRef ref;
};
struct NotExpr {
  ExprPtr operand;
};
struct BinaryExpr {
  BinaryOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};
struct CallExpr {
  std::string name;
  std::vector<ExprPtr> args;
};

struct Expr {
  std::variant<LiteralExpr, RefExpr, NotExpr, BinaryExpr, CallExpr> node;
  std::size_t position = 1;
};

/// Structural equality, ignoring source positions.
bool same_structure(const Expr& a, const Expr& b);

/// Resolves attribute references during evaluation. Missing values read as null.
class AttributeView {
 public:
  virtual ~AttributeView() = default;
  virtual Value get(const AttributeRef& ref) const = 0;
};

/// A parsed expression together with its source text.
class ConditionExpr {
 public:
  ConditionExpr() = default;
  ConditionExpr(std::string source, ExprPtr root) : source_(std::move(source)), root_(std::move(root)) {}

  const std::string& source() const { return source_; }
  const Expr& root() const { return *root_; }
  bool empty() const { return !root_; }

  /// Every attribute referenced anywhere in the tree.
  std::vector<AttributeRef> references() const;
  /// Names of every call in the tree.
  std::vector<std::string> calls() const;

  /// True when the expression is the bare literal `true`.
  bool is_literal_true() const;

 private:
  std::string source_;
  ExprPtr root_;
};

ConditionExpr parse_condition(std::string_view text);

Value eval_condition(const Expr& expr, const AttributeView& ctx);
inline Value eval_condition(const ConditionExpr& expr, const AttributeView& ctx) {
  return eval_condition(expr.root(), ctx);
}

/// Evaluates and requires a boolean result.
bool eval_guard(const ConditionExpr& expr, const AttributeView& ctx);

/// Canonical, fully parenthesized rendering; re-parses to the same structure.
std::string to_source(const Expr& expr);

bool is_builtin(std::string_view name);

}  // namespace flowkit
