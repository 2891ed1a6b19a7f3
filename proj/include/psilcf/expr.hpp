#pragma once

// Single-variable arithmetic expressions.
//
// Grammar (whitespace ignored between tokens):
//
//   expr    ::= term { ("+" | "-") term }
//   term    ::= unary { ("*" | "/") unary }
//   unary   ::= "-" unary | power
//   power   ::= primary [ "^" unary ]          (right associative)
//   primary ::= number | "x" | "e" | "pi" | "(" expr ")"
//             | func "(" expr ")" | ("min" | "max") "(" expr "," expr ")"
//   func    ::= "exp" | "ln" | "log" | "sqrt" | "abs"
//
// "^" binds tighter than unary minus, so "-x^2" is -(x^2) and "x^-3" is
// x^(-3). There is no implicit multiplication.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace psilcf::expr {

enum class Kind { Constant, Variable, Add, Sub, Mul, Div, Pow, Exp, Ln, Sqrt, Abs, Min, Max };

constexpr int arity(Kind k) noexcept {
  switch (k) {
    case Kind::Constant:
    case Kind::Variable: return 0;
    case Kind::Exp:
    case Kind::Ln:
    case Kind::Sqrt:
    case Kind::Abs: return 1;
    default: return 2;
  }
}

constexpr std::string_view function_name(Kind k) noexcept {
  switch (k) {
    case Kind::Exp: return "exp";
    case Kind::Ln: return "ln";
    case Kind::Sqrt: return "sqrt";
    case Kind::Abs: return "abs";
    case Kind::Min: return "min";
    case Kind::Max: return "max";
    default: return "";
  }
}

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset, std::string expected)
      : std::runtime_error(what + " at offset " + std::to_string(offset) +
                           (expected.empty() ? "" : " (expected " + expected + ")")),
        offset_(offset), expected_(std::move(expected)) {}
  std::size_t offset() const noexcept { return offset_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::string expected_;
};

class DomainError : public std::domain_error {
 public:
  DomainError(const std::string& what, std::string subexpr)
      : std::domain_error(what + " in '" + subexpr + "'"), subexpr_(std::move(subexpr)) {}
  const std::string& subexpression() const noexcept { return subexpr_; }

 private:
  std::string subexpr_;
};

class Node;
using NodePtr = std::shared_ptr<const Node>;

/// Immutable AST node. Children are shared, so copies are cheap.
class Node {
 public:
  Node(Kind kind, std::vector<NodePtr> children, double value = 0.0)
      : kind_(kind), children_(std::move(children)), value_(value) {
    if (static_cast<int>(children_.size()) != arity(kind_))
      throw std::invalid_argument("expression node arity mismatch");
  }

  Kind kind() const noexcept { return kind_; }
  const std::vector<NodePtr>& children() const noexcept { return children_; }
  const Node& child(std::size_t i) const { return *children_.at(i); }
  double value() const noexcept { return value_; }

 private:
  Kind kind_;
  std::vector<NodePtr> children_;
  double value_;
};

inline NodePtr constant(double v) { return std::make_shared<const Node>(Kind::Constant, std::vector<NodePtr>{}, v); }
inline NodePtr variable() { return std::make_shared<const Node>(Kind::Variable, std::vector<NodePtr>{}); }
inline NodePtr unary(Kind k, NodePtr a) { return std::make_shared<const Node>(k, std::vector<NodePtr>{std::move(a)}); }
inline NodePtr binary(Kind k, NodePtr a, NodePtr b) {
  return std::make_shared<const Node>(k, std::vector<NodePtr>{std::move(a), std::move(b)});
}

// ---------------------------------------------------------------------------
// Printing. Output is fully parenthesised and uses shortest round-trip
// formatting for constants, so parse(print(a)) evaluates bit-identically.

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

inline void print_to(const Node& n, std::string& out) {
  switch (n.kind()) {
    case Kind::Constant: {
      const double v = n.value();
      if (!std::isfinite(v)) throw std::invalid_argument("cannot print non-finite constant");
      if (std::signbit(v)) {
        out += "(-" + format_double(-v) + ")";
      } else {
        out += format_double(v);
      }
      return;
    }
    case Kind::Variable: out += "x"; return;
    case Kind::Add:
    case Kind::Sub:
    case Kind::Mul:
    case Kind::Div:
    case Kind::Pow: {
      static constexpr char ops[] = {'+', '-', '*', '/', '^'};
      const char op = ops[static_cast<int>(n.kind()) - static_cast<int>(Kind::Add)];
      out += '(';
      print_to(n.child(0), out);
      out += op;
      print_to(n.child(1), out);
      out += ')';
      return;
    }
    default: {
      out += function_name(n.kind());
      out += '(';
      print_to(n.child(0), out);
      if (arity(n.kind()) == 2) {
        out += ',';
        print_to(n.child(1), out);
      }
      out += ')';
      return;
    }
  }
}

inline std::string print(const Node& n) {
  std::string s;
  print_to(n, s);
  return s;
}

// ---------------------------------------------------------------------------
// Parser: recursive descent over the grammar above.

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse_all() {
    skip_ws();
    if (pos_ == text_.size()) throw ParseError("empty expression", pos_, "an expression");
    auto e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("unexpected character '" + std::string(1, text_[pos_]) + "'", pos_,
                                               "operator or end of input");
    return e;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      throw ParseError(pos_ < text_.size() ? "unexpected character '" + std::string(1, text_[pos_]) + "'"
                                           : std::string("unexpected end of input"),
                       pos_, "'" + std::string(1, c) + "'");
    }
  }

  NodePtr parse_expr() {
    auto lhs = parse_term();
    for (;;) {
      if (accept('+')) lhs = binary(Kind::Add, lhs, parse_term());
      else if (accept('-')) lhs = binary(Kind::Sub, lhs, parse_term());
      else return lhs;
    }
  }

  NodePtr parse_term() {
    auto lhs = parse_unary();
    for (;;) {
      if (accept('*')) lhs = binary(Kind::Mul, lhs, parse_unary());
      else if (accept('/')) lhs = binary(Kind::Div, lhs, parse_unary());
      else return lhs;
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) {
      auto operand = parse_unary();
      // Fold negated literals so printed negative constants round-trip.
      if (operand->kind() == Kind::Constant) return constant(-operand->value());
      return binary(Kind::Mul, constant(-1.0), operand);
    }
    return parse_power();
  }

  NodePtr parse_power() {
    auto base = parse_primary();
    if (accept('^')) return binary(Kind::Pow, base, parse_unary());
    return base;
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    std::size_t end = pos_;
    while (end < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[end])) || text_[end] == '.')) ++end;
    if (end < text_.size() && (text_[end] == 'e' || text_[end] == 'E')) {
      std::size_t k = end + 1;
      if (k < text_.size() && (text_[k] == '+' || text_[k] == '-')) ++k;
      if (k < text_.size() && std::isdigit(static_cast<unsigned char>(text_[k]))) {
        end = k;
        while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) ++end;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + end, v);
    if (ec != std::errc{} || ptr != text_.data() + end) throw ParseError("malformed number", start, "a number");
    pos_ = end;
    return constant(v);
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_, "number, 'x', function or '('");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (c == '(') {
      ++pos_;
      auto e = parse_expr();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
      const std::string_view id = text_.substr(start, pos_ - start);
      if (id == "x") return variable();
      if (id == "e") return constant(std::numbers::e);
      if (id == "pi") return constant(std::numbers::pi);
      Kind k;
      if (id == "exp") k = Kind::Exp;
      else if (id == "ln" || id == "log") k = Kind::Ln;
      else if (id == "sqrt") k = Kind::Sqrt;
      else if (id == "abs") k = Kind::Abs;
      else if (id == "min") k = Kind::Min;
      else if (id == "max") k = Kind::Max;
      else throw ParseError("unknown identifier '" + std::string(id) + "'", start,
                            "x, e, pi, exp, ln, log, sqrt, abs, min or max");
      expect('(');
      auto a = parse_expr();
      if (arity(k) == 2) {
        expect(',');
        auto b = parse_expr();
        expect(')');
        return binary(k, a, b);
      }
      expect(')');
      return unary(k, a);
    }
    throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_, "number, 'x', function or '('");
  }
};

inline bool is_integer(double v) { return std::isfinite(v) && std::floor(v) == v; }

}  // namespace detail

/// Parsed expression. Value type; the underlying tree is shared and immutable.
class Ast {
 public:
  Ast() = default;
  explicit Ast(NodePtr root) : root_(std::move(root)) {
    if (!root_) throw std::invalid_argument("null expression");
  }
  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const noexcept { return root_; }
  bool empty() const noexcept { return !root_; }

 private:
  NodePtr root_;
};

inline Ast parse(std::string_view text) { return Ast(detail::Parser(text).parse_all()); }
inline std::string print(const Ast& a) { return print(a.root()); }

// ---------------------------------------------------------------------------
// Plain IEEE evaluation.

inline double evaluate(const Node& n, double x) {
  switch (n.kind()) {
    case Kind::Constant: return n.value();
    case Kind::Variable: return x;
    case Kind::Add: return evaluate(n.child(0), x) + evaluate(n.child(1), x);
    case Kind::Sub: return evaluate(n.child(0), x) - evaluate(n.child(1), x);
    case Kind::Mul: return evaluate(n.child(0), x) * evaluate(n.child(1), x);
    case Kind::Div: {
      const double a = evaluate(n.child(0), x);
      const double b = evaluate(n.child(1), x);
      if (b == 0.0) throw DomainError("division by zero", print(n));
      return a / b;
    }
    case Kind::Pow: {
      const double a = evaluate(n.child(0), x);
      const double b = evaluate(n.child(1), x);
      if (a < 0.0 && !detail::is_integer(b)) throw DomainError("negative base with non-integer exponent", print(n));
      if (a == 0.0 && b < 0.0) throw DomainError("division by zero", print(n));
      return std::pow(a, b);
    }
    case Kind::Exp: return std::exp(evaluate(n.child(0), x));
    case Kind::Ln: {
      const double a = evaluate(n.child(0), x);
      if (!(a > 0.0)) throw DomainError("logarithm of non-positive value", print(n));
      return std::log(a);
    }
    case Kind::Sqrt: {
      const double a = evaluate(n.child(0), x);
      if (a < 0.0) throw DomainError("square root of negative value", print(n));
      return std::sqrt(a);
    }
    case Kind::Abs: return std::fabs(evaluate(n.child(0), x));
    case Kind::Min: return std::fmin(evaluate(n.child(0), x), evaluate(n.child(1), x));
    case Kind::Max: return std::fmax(evaluate(n.child(0), x), evaluate(n.child(1), x));
  }
  throw std::logic_error("unreachable expression kind");
}

inline double evaluate(const Ast& a, double x) { return evaluate(a.root(), x); }

// ---------------------------------------------------------------------------
// Sign/log-magnitude evaluation. Values like exp(-x) or exp(sqrt(x)) at
// x = 1e10 under/overflow as doubles but are representable here, and the
// argument itself may be supplied as a logarithm (x = e^u for large u).

struct SignedLog {
  int sign = 0;                                               // -1, 0, +1
  double log_abs = -std::numeric_limits<double>::infinity();  // ln|value|

  static SignedLog from_double(double v) {
    if (v == 0.0) return {};
    return {v > 0.0 ? 1 : -1, std::log(std::fabs(v))};
  }
  static SignedLog from_log(double log_abs) {
    if (log_abs == -std::numeric_limits<double>::infinity()) return {};
    return {1, log_abs};
  }
  double to_double() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
  SignedLog negated() const { return {-sign, log_abs}; }
};

namespace detail {

inline SignedLog add_signed(SignedLog a, SignedLog b) {
  if (a.sign == 0) return b;
  if (b.sign == 0) return a;
  if (a.log_abs < b.log_abs) std::swap(a, b);
  const double d = b.log_abs - a.log_abs;  // <= 0
  if (a.sign == b.sign) return {a.sign, a.log_abs + std::log1p(std::exp(d))};
  if (d == 0.0) return {};
  return {a.sign, a.log_abs + std::log1p(-std::exp(d))};
}

inline bool less_signed(const SignedLog& a, const SignedLog& b) {
  if (a.sign != b.sign) return a.sign < b.sign;
  if (a.sign == 0) return false;
  return a.sign > 0 ? a.log_abs < b.log_abs : a.log_abs > b.log_abs;
}

}  // namespace detail

inline SignedLog evaluate_signed(const Node& n, SignedLog x) {
  switch (n.kind()) {
    case Kind::Constant: return SignedLog::from_double(n.value());
    case Kind::Variable: return x;
    case Kind::Add: return detail::add_signed(evaluate_signed(n.child(0), x), evaluate_signed(n.child(1), x));
    case Kind::Sub:
      return detail::add_signed(evaluate_signed(n.child(0), x), evaluate_signed(n.child(1), x).negated());
    case Kind::Mul: {
      const auto a = evaluate_signed(n.child(0), x);
      const auto b = evaluate_signed(n.child(1), x);
      if (a.sign == 0 || b.sign == 0) return {};
      return {a.sign * b.sign, a.log_abs + b.log_abs};
    }
    case Kind::Div: {
      const auto a = evaluate_signed(n.child(0), x);
      const auto b = evaluate_signed(n.child(1), x);
      if (b.sign == 0) throw DomainError("division by zero", print(n));
      if (a.sign == 0) return {};
      return {a.sign * b.sign, a.log_abs - b.log_abs};
    }
    case Kind::Pow: {
      const auto a = evaluate_signed(n.child(0), x);
      const double b = n.child(1).kind() == Kind::Constant ? n.child(1).value()
                                                           : evaluate_signed(n.child(1), x).to_double();
      if (a.sign == 0) {
        if (b > 0.0) return {};
        if (b == 0.0) return {1, 0.0};
        throw DomainError("division by zero", print(n));
      }
      if (b == 0.0) return {1, 0.0};
      if (a.sign < 0) {
        if (!detail::is_integer(b)) throw DomainError("negative base with non-integer exponent", print(n));
        const int s = std::fmod(b, 2.0) == 0.0 ? 1 : -1;
        return {s, b * a.log_abs};
      }
      return {1, b * a.log_abs};
    }
    case Kind::Exp: return SignedLog::from_log(evaluate_signed(n.child(0), x).to_double());
    case Kind::Ln: {
      const auto a = evaluate_signed(n.child(0), x);
      if (a.sign <= 0) throw DomainError("logarithm of non-positive value", print(n));
      return SignedLog::from_double(a.log_abs);
    }
    case Kind::Sqrt: {
      const auto a = evaluate_signed(n.child(0), x);
      if (a.sign < 0) throw DomainError("square root of negative value", print(n));
      if (a.sign == 0) return {};
      return {1, 0.5 * a.log_abs};
    }
    case Kind::Abs: {
      auto a = evaluate_signed(n.child(0), x);
      if (a.sign != 0) a.sign = 1;
      return a;
    }
    case Kind::Min: {
      const auto a = evaluate_signed(n.child(0), x);
      const auto b = evaluate_signed(n.child(1), x);
      return detail::less_signed(b, a) ? b : a;
    }
    case Kind::Max: {
      const auto a = evaluate_signed(n.child(0), x);
      const auto b = evaluate_signed(n.child(1), x);
      return detail::less_signed(a, b) ? b : a;
    }
  }
  throw std::logic_error("unreachable expression kind");
}

inline SignedLog evaluate_signed(const Ast& a, SignedLog x) { return evaluate_signed(a.root(), x); }

/// ln of a strictly positive expression value at x.
inline double evaluate_log(const Ast& a, double x) {
  const auto r = evaluate_signed(a.root(), SignedLog::from_double(x));
  if (r.sign <= 0) throw DomainError("expression is not positive at x = " + format_double(x), print(a));
  return r.log_abs;
}

/// Value of the expression at x = e^u, without forming e^u.
inline double evaluate_at_exp(const Ast& a, double u) {
  return evaluate_signed(a.root(), SignedLog::from_log(u)).to_double();
}

}  // namespace psilcf::expr
