#include "flowkit/condition.hpp"

#include <cctype>
#include <charconv>
#include <functional>

namespace flowkit {

ConditionParseError::ConditionParseError(std::size_t position, const std::string& message)
    : std::runtime_error("condition parse error at position " + std::to_string(position) + ": " + message),
      position_(position),
      detail_(message) {}

std::string_view to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or: return "||";
    case BinaryOp::And: return "&&";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
  }
  return "?";
}

bool is_builtin(std::string_view name) { return name == "defined" || name == "contains" || name == "len"; }

namespace {

enum class Tok { Int, Decimal, String, Ident, Op, LParen, RParen, Comma, Dot, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;  // 1-based
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto at = [&](std::size_t k) { return k < src.size() ? src[k] : '\0'; };
  while (i < src.size()) {
    char c = src[i];
    std::size_t pos = i + 1;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (std::isdigit(static_cast<unsigned char>(at(j)))) ++j;
      bool decimal = false;
      if (at(j) == '.' && std::isdigit(static_cast<unsigned char>(at(j + 1)))) {
        decimal = true;
        ++j;
        while (std::isdigit(static_cast<unsigned char>(at(j)))) ++j;
      }
      if (at(j) == 'e' || at(j) == 'E') {
        std::size_t k = j + 1;
        if (at(k) == '+' || at(k) == '-') ++k;
        if (std::isdigit(static_cast<unsigned char>(at(k)))) {
          decimal = true;
          j = k;
          while (std::isdigit(static_cast<unsigned char>(at(j)))) ++j;
        }
      }
      out.push_back({decimal ? Tok::Decimal : Tok::Int, std::string(src.substr(i, j - i)), pos});
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (std::isalnum(static_cast<unsigned char>(at(j))) || at(j) == '_') ++j;
      out.push_back({Tok::Ident, std::string(src.substr(i, j - i)), pos});
      i = j;
      continue;
    }
    if (c == '"') {
      std::string text;
      std::size_t j = i + 1;
      for (;;) {
        if (j >= src.size()) throw ConditionParseError(pos, "unterminated string literal");
        char d = src[j];
        if (d == '"') break;
        if (d == '\\') {
          char e = at(j + 1);
          switch (e) {
            case '"': text += '"'; break;
            case '\\': text += '\\'; break;
            case 'n': text += '\n'; break;
            case 't': text += '\t'; break;
            default: throw ConditionParseError(j + 1, "invalid escape sequence");
          }
          j += 2;
          continue;
        }
        text += d;
        ++j;
      }
      out.push_back({Tok::String, std::move(text), pos});
      i = j + 1;
      continue;
    }
    std::string_view two = src.substr(i, 2);
    if (two == "==" || two == "!=" || two == "<=" || two == ">=" || two == "&&" || two == "||") {
      out.push_back({Tok::Op, std::string(two), pos});
      i += 2;
      continue;
    }
    switch (c) {
      case '<': case '>': case '!': case '+': case '-':
        out.push_back({Tok::Op, std::string(1, c), pos});
        break;
      case '(': out.push_back({Tok::LParen, "(", pos}); break;
      case ')': out.push_back({Tok::RParen, ")", pos}); break;
      case ',': out.push_back({Tok::Comma, ",", pos}); break;
      case '.': out.push_back({Tok::Dot, ".", pos}); break;
      default: throw ConditionParseError(pos, std::string("unexpected character '") + c + "'");
    }
    ++i;
  }
  out.push_back({Tok::End, "", src.size() + 1});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  ExprPtr parse() {
    auto e = parse_or();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(i_ + ahead, toks_.size() - 1)];
  }
  const Token& next() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }
  [[noreturn]] void fail(const std::string& msg) const {
    if (peek().kind == Tok::End) throw ConditionParseError(peek().pos, "unexpected end of input, " + msg);
    throw ConditionParseError(peek().pos, msg);
  }
  bool is_op(std::string_view op) const { return peek().kind == Tok::Op && peek().text == op; }
  bool is_word(std::string_view w) const { return peek().kind == Tok::Ident && peek().text == w; }

  static ExprPtr make(std::size_t pos, decltype(Expr::node) node) {
    auto e = std::make_shared<Expr>();
    e->node = std::move(node);
    e->position = pos;
    return e;
  }

  ExprPtr parse_or() {
    auto lhs = parse_and();
    while (is_op("||") || is_word("or")) {
      auto pos = next().pos;
      lhs = make(pos, BinaryExpr{BinaryOp::Or, lhs, parse_and()});
    }
    return lhs;
  }

  ExprPtr parse_and() {
    auto lhs = parse_unary();
    while (is_op("&&") || is_word("and")) {
      auto pos = next().pos;
      lhs = make(pos, BinaryExpr{BinaryOp::And, lhs, parse_unary()});
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (is_op("!") || is_word("not")) {
      auto pos = next().pos;
      return make(pos, NotExpr{parse_unary()});
    }
    return parse_cmp();
  }

  ExprPtr parse_cmp() {
    auto lhs = parse_sum();
    static constexpr std::pair<std::string_view, BinaryOp> kOps[] = {
        {"==", BinaryOp::Eq}, {"!=", BinaryOp::Ne}, {"<", BinaryOp::Lt},
        {"<=", BinaryOp::Le}, {">", BinaryOp::Gt}, {">=", BinaryOp::Ge}};
    for (auto [text, op] : kOps) {
      if (is_op(text)) {
        auto pos = next().pos;
        return make(pos, BinaryExpr{op, lhs, parse_sum()});
      }
    }
    return lhs;
  }

  ExprPtr parse_sum() {
    auto lhs = parse_term();
    while (is_op("+") || is_op("-")) {
      const Token& t = next();
      lhs = make(t.pos, BinaryExpr{t.text == "+" ? BinaryOp::Add : BinaryOp::Sub, lhs, parse_term()});
    }
    return lhs;
  }

  ExprPtr parse_number(const Token& t, bool negative) {
    std::string text = (negative ? "-" : "") + t.text;
    if (t.kind == Tok::Int) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc()) throw ConditionParseError(t.pos, "integer literal out of range");
      return make(t.pos, LiteralExpr{Value(v)});
    }
    return make(t.pos, LiteralExpr{Value(std::stod(text))});
  }

  ExprPtr parse_term() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Int:
      case Tok::Decimal:
        next();
        return parse_number(t, false);
      case Tok::String:
        next();
        return make(t.pos, LiteralExpr{Value(t.text)});
      case Tok::LParen: {
        next();
        auto e = parse_or();
        if (peek().kind != Tok::RParen) fail("expected ')'");
        next();
        return e;
      }
      case Tok::Op:
        if (t.text == "-" && (peek(1).kind == Tok::Int || peek(1).kind == Tok::Decimal)) {
          next();
          const Token& num = next();
          auto e = parse_number(num, true);
          std::const_pointer_cast<Expr>(e)->position = t.pos;
          return e;
        }
        fail("expected expression");
      case Tok::Ident:
        return parse_ident();
      default:
        fail("expected expression");
    }
  }

  ExprPtr parse_ident() {
    const Token& t = next();
    if (t.text == "true") return make(t.pos, LiteralExpr{Value(true)});
    if (t.text == "false") return make(t.pos, LiteralExpr{Value(false)});
    if (t.text == "null") return make(t.pos, LiteralExpr{Value()});
    if (auto scope = parse_scope(t.text)) {
      if (peek().kind != Tok::Dot) fail("expected '.' after scope '" + t.text + "'");
      next();
      if (peek().kind != Tok::Ident) fail("expected attribute name");
      const Token& name = next();
      return make(t.pos, RefExpr{AttributeRef{*scope, name.text}});
    }
    if (peek().kind == Tok::LParen) {
      next();
      CallExpr call{t.text, {}};
      if (peek().kind != Tok::RParen) {
        call.args.push_back(parse_or());
        while (peek().kind == Tok::Comma) {
          next();
          call.args.push_back(parse_or());
        }
      }
      if (peek().kind != Tok::RParen) fail("expected ')' to close call");
      next();
      return make(t.pos, std::move(call));
    }
    throw ConditionParseError(t.pos, "unknown identifier '" + t.text + "'");
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

void walk(const Expr& e, const std::function<void(const Expr&)>& fn) {
  fn(e);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, NotExpr>) {
          walk(*n.operand, fn);
        } else if constexpr (std::is_same_v<T, BinaryExpr>) {
          walk(*n.lhs, fn);
          walk(*n.rhs, fn);
        } else if constexpr (std::is_same_v<T, CallExpr>) {
          for (const auto& a : n.args) walk(*a, fn);
        }
      },
      e.node);
}

[[noreturn]] void mismatch(std::string_view what, const Value& a, const Value& b) {
  throw EvalError(EvalError::Kind::TypeMismatch, "type mismatch: cannot apply " + std::string(what) + " to " +
                                                     std::string(a.type_name()) + " and " + std::string(b.type_name()));
}

bool require_bool(const Value& v, std::string_view what) {
  if (!v.is_bool())
    throw EvalError(EvalError::Kind::TypeMismatch,
                    "type mismatch: " + std::string(what) + " needs a boolean, got " + std::string(v.type_name()));
  return v.as_bool();
}

bool values_equal(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return a.is_null() && b.is_null();
  if (a.is_number() && b.is_number()) {
    if (a.is_int() && b.is_int()) return a.as_int() == b.as_int();
    return a.as_number() == b.as_number();
  }
  if (a.storage().index() != b.storage().index()) mismatch("==", a, b);
  return a == b;
}

int compare_ordered(const Value& a, const Value& b, std::string_view op) {
  if (a.is_number() && b.is_number()) {
    if (a.is_int() && b.is_int()) return a.as_int() < b.as_int() ? -1 : (a.as_int() > b.as_int() ? 1 : 0);
    double x = a.as_number(), y = b.as_number();
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  if (a.is_string() && b.is_string()) return a.as_string().compare(b.as_string()) < 0 ? -1 : (a.as_string() == b.as_string() ? 0 : 1);
  mismatch(op, a, b);
}

std::int64_t utf8_length(const std::string& s) {
  std::int64_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

Value eval_call(const CallExpr& call, const AttributeView& ctx) {
  auto arity = [&](std::size_t n) {
    if (call.args.size() != n)
      throw EvalError(EvalError::Kind::Arity, call.name + "() takes " + std::to_string(n) + " argument(s), got " +
                                                  std::to_string(call.args.size()));
  };
  if (call.name == "defined") {
    arity(1);
    return !eval_condition(*call.args[0], ctx).is_null();
  }
  if (call.name == "contains") {
    arity(2);
    Value h = eval_condition(*call.args[0], ctx);
    Value n = eval_condition(*call.args[1], ctx);
    if (!h.is_string() || !n.is_string()) mismatch("contains()", h, n);
    return h.as_string().find(n.as_string()) != std::string::npos;
  }
  if (call.name == "len") {
    arity(1);
    Value v = eval_condition(*call.args[0], ctx);
    if (!v.is_string())
      throw EvalError(EvalError::Kind::TypeMismatch, "type mismatch: len() needs a string, got " + std::string(v.type_name()));
    return utf8_length(v.as_string());
  }
  throw EvalError(EvalError::Kind::UnknownBuiltin, "unknown built-in '" + call.name + "'");
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

}  // namespace

ConditionExpr parse_condition(std::string_view text) {
  Parser p(lex(text));
  return ConditionExpr(std::string(text), p.parse());
}

std::vector<AttributeRef> ConditionExpr::references() const {
  std::vector<AttributeRef> out;
  if (!root_) return out;
  walk(*root_, [&](const Expr& e) {
    if (auto* r = std::get_if<RefExpr>(&e.node)) out.push_back(r->ref);
  });
  return out;
}

std::vector<std::string> ConditionExpr::calls() const {
  std::vector<std::string> out;
  if (!root_) return out;
  walk(*root_, [&](const Expr& e) {
    if (auto* c = std::get_if<CallExpr>(&e.node)) out.push_back(c->name);
  });
  return out;
}

bool ConditionExpr::is_literal_true() const {
  if (!root_) return false;
  auto* lit = std::get_if<LiteralExpr>(&root_->node);
  return lit && lit->value == Value(true);
}

Value eval_condition(const Expr& expr, const AttributeView& ctx) {
  return std::visit(
      [&](const auto& n) -> Value {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, LiteralExpr>) {
          return n.value;
        } else if constexpr (std::is_same_v<T, RefExpr>) {
          return ctx.get(n.ref);
        } else if constexpr (std::is_same_v<T, NotExpr>) {
          return !require_bool(eval_condition(*n.operand, ctx), "'!'");
        } else if constexpr (std::is_same_v<T, CallExpr>) {
          return eval_call(n, ctx);
        } else {
          if (n.op == BinaryOp::Or) {
            if (require_bool(eval_condition(*n.lhs, ctx), "'||'")) return true;
            return require_bool(eval_condition(*n.rhs, ctx), "'||'");
          }
          if (n.op == BinaryOp::And) {
            if (!require_bool(eval_condition(*n.lhs, ctx), "'&&'")) return false;
            return require_bool(eval_condition(*n.rhs, ctx), "'&&'");
          }
          Value a = eval_condition(*n.lhs, ctx);
          Value b = eval_condition(*n.rhs, ctx);
          switch (n.op) {
            case BinaryOp::Eq: return values_equal(a, b);
            case BinaryOp::Ne: return !values_equal(a, b);
            case BinaryOp::Lt: return compare_ordered(a, b, "<") < 0;
            case BinaryOp::Le: return compare_ordered(a, b, "<=") <= 0;
            case BinaryOp::Gt: return compare_ordered(a, b, ">") > 0;
            case BinaryOp::Ge: return compare_ordered(a, b, ">=") >= 0;
            case BinaryOp::Add:
              if (a.is_int() && b.is_int()) return a.as_int() + b.as_int();
              if (a.is_number() && b.is_number()) return a.as_number() + b.as_number();
              if (a.is_string() && b.is_string()) return a.as_string() + b.as_string();
              mismatch("+", a, b);
            case BinaryOp::Sub:
              if (a.is_int() && b.is_int()) return a.as_int() - b.as_int();
              if (a.is_number() && b.is_number()) return a.as_number() - b.as_number();
              mismatch("-", a, b);
            default: break;
          }
          return {};
        }
      },
      expr.node);
}

bool eval_guard(const ConditionExpr& expr, const AttributeView& ctx) {
  return require_bool(eval_condition(expr, ctx), "a guard");
}

std::string to_source(const Expr& expr) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, LiteralExpr>) {
          if (n.value.is_string()) return quote(n.value.as_string());
          if (n.value.is_null()) return "null";
          return n.value.to_display();
        } else if constexpr (std::is_same_v<T, RefExpr>) {
          return n.ref.str();
        } else if constexpr (std::is_same_v<T, NotExpr>) {
          return "(!" + to_source(*n.operand) + ")";
        } else if constexpr (std::is_same_v<T, CallExpr>) {
          std::string s = n.name + "(";
          for (std::size_t i = 0; i < n.args.size(); ++i) s += (i ? ", " : "") + to_source(*n.args[i]);
          return s + ")";
        } else {
          return "(" + to_source(*n.lhs) + " " + std::string(to_string(n.op)) + " " + to_source(*n.rhs) + ")";
        }
      },
      expr.node);
}

bool same_structure(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, LiteralExpr>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, RefExpr>) {
          return x.ref == y.ref;
        } else if constexpr (std::is_same_v<T, NotExpr>) {
          return same_structure(*x.operand, *y.operand);
        } else if constexpr (std::is_same_v<T, CallExpr>) {
          if (x.name != y.name || x.args.size() != y.args.size()) return false;
          for (std::size_t i = 0; i < x.args.size(); ++i)
            if (!same_structure(*x.args[i], *y.args[i])) return false;
          return true;
        } else {
          return x.op == y.op && same_structure(*x.lhs, *y.lhs) && same_structure(*x.rhs, *y.rhs);
        }
      },
      a.node);
}

}  // namespace flowkit
