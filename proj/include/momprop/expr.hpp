#pragma once

#include <charconv>
#include <cstdio>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "momprop/errors.hpp"
#include "momprop/value_ops.hpp"

namespace momprop {

enum class UnaryOp { negate, sin, cos, exp, log, sqrt, tanh };
enum class BinaryOp { add, sub, mul, div, pow };

struct ExprNode;
using ExprNodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  struct Constant {
    double value;
  };
  struct Variable {
    int index;  // 1-based, as written: x1, x2, ...
  };
  struct Unary {
    UnaryOp op;
    ExprNodePtr arg;
  };
  struct Binary {
    BinaryOp op;
    ExprNodePtr lhs;
    ExprNodePtr rhs;
  };
  std::variant<Constant, Variable, Unary, Binary> node;
};

namespace detail {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

struct FunctionEntry {
  std::string_view name;
  UnaryOp op;
};

inline constexpr FunctionEntry kFunctions[] = {
    {"sin", UnaryOp::sin}, {"cos", UnaryOp::cos},   {"exp", UnaryOp::exp},
    {"log", UnaryOp::log}, {"sqrt", UnaryOp::sqrt}, {"tanh", UnaryOp::tanh},
};

inline std::string format17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace detail

/// A parsed scalar expression in the variables x1..xn. Trees are immutable
/// after parsing and safe to share across threads; parse() is the only way
/// to build one.
class Expression {
public:
  static Expression parse(std::string_view source);

  /// Number of variables: the highest index referenced (0 for constants).
  int arity() const noexcept { return arity_; }

  const ExprNode& root() const noexcept { return *root_; }

  /// Serialize with minimal parentheses; parsing the result reproduces the
  /// tree exactly.
  std::string to_string() const;

private:
  Expression(ExprNodePtr root, int arity) : root_(std::move(root)), arity_(arity) {}

  ExprNodePtr root_;
  int arity_ = 0;
};

namespace detail {

// ---- lexer ----------------------------------------------------------------

enum class TokKind { number, ident, plus, minus, star, slash, caret, lparen, rparen, end };

struct Token {
  TokKind kind = TokKind::end;
  std::size_t offset = 0;
  std::string_view text;
  double value = 0.0;  // for number tokens
};

class Lexer {
public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& current() const noexcept { return tok_; }

  void advance() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
                                  src_[pos_] == '\r')) {
      ++pos_;
    }
    tok_.offset = pos_;
    if (pos_ >= src_.size()) {
      tok_ = Token{TokKind::end, pos_, {}, 0.0};
      return;
    }
    const char c = src_[pos_];
    switch (c) {
      case '+': single(TokKind::plus); return;
      case '-': single(TokKind::minus); return;
      case '*': single(TokKind::star); return;
      case '/': single(TokKind::slash); return;
      case '^': single(TokKind::caret); return;
      case '(': single(TokKind::lparen); return;
      case ')': single(TokKind::rparen); return;
      default: break;
    }
    if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
      lex_number();
      return;
    }
    if (is_alpha(c)) {
      std::size_t end = pos_;
      while (end < src_.size() && (is_alpha(src_[end]) || is_digit(src_[end]))) ++end;
      tok_ = Token{TokKind::ident, pos_, src_.substr(pos_, end - pos_), 0.0};
      pos_ = end;
      return;
    }
    throw ParseError("unexpected character '" + std::string(1, c) + "' at byte " +
                         std::to_string(pos_),
                     pos_, {"number", "variable", "function", "operator", "'('", "')'"});
  }

private:
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

  void single(TokKind k) {
    tok_ = Token{k, pos_, src_.substr(pos_, 1), 0.0};
    ++pos_;
  }

  void lex_number() {
    const std::size_t start = pos_;
    std::size_t end = pos_;
    while (end < src_.size() && is_digit(src_[end])) ++end;
    if (end < src_.size() && src_[end] == '.') {
      ++end;
      while (end < src_.size() && is_digit(src_[end])) ++end;
    }
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t e = end + 1;
      if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
      if (e < src_.size() && is_digit(src_[e])) {
        while (e < src_.size() && is_digit(src_[e])) ++e;
        end = e;
      }
    }
    const std::string_view text = src_.substr(start, end - start);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec == std::errc::result_out_of_range) {
      throw ParseError("number literal out of range at byte " + std::to_string(start), start,
                       {"number"});
    }
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
      throw ParseError("invalid number literal at byte " + std::to_string(start), start,
                       {"number"});
    }
    tok_ = Token{TokKind::number, start, text, value};
    pos_ = end;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token tok_;
};

// ---- parser ---------------------------------------------------------------
//
//   expr   := term (("+" | "-") term)*
//   term   := factor (("*" | "/") factor)*
//   factor := "-" factor | power
//   power  := atom ("^" factor)?
//   atom   := number | variable | func "(" expr ")" | "(" expr ")"

class Parser {
public:
  explicit Parser(std::string_view src) : lex_(src) {}

  ExprNodePtr parse_all(int& arity) {
    ExprNodePtr e = parse_expr();
    if (lex_.current().kind != TokKind::end) {
      throw ParseError("unexpected trailing input at byte " + std::to_string(lex_.current().offset),
                       lex_.current().offset, {"end of input", "operator"});
    }
    arity = arity_;
    return e;
  }

private:
  static constexpr int kMaxDepth = 5000;

  ExprNodePtr parse_expr() {
    DepthGuard guard(this);
    ExprNodePtr lhs = parse_term();
    for (;;) {
      const TokKind k = lex_.current().kind;
      if (k != TokKind::plus && k != TokKind::minus) return lhs;
      lex_.advance();
      ExprNodePtr rhs = parse_term();
      lhs = make(ExprNode::Binary{k == TokKind::plus ? BinaryOp::add : BinaryOp::sub,
                                  std::move(lhs), std::move(rhs)});
    }
  }

  ExprNodePtr parse_term() {
    DepthGuard guard(this);
    ExprNodePtr lhs = parse_factor();
    for (;;) {
      const TokKind k = lex_.current().kind;
      if (k != TokKind::star && k != TokKind::slash) return lhs;
      lex_.advance();
      ExprNodePtr rhs = parse_factor();
      lhs = make(ExprNode::Binary{k == TokKind::star ? BinaryOp::mul : BinaryOp::div,
                                  std::move(lhs), std::move(rhs)});
    }
  }

  ExprNodePtr parse_factor() {
    DepthGuard guard(this);
    if (lex_.current().kind == TokKind::minus) {
      lex_.advance();
      return make(ExprNode::Unary{UnaryOp::negate, parse_factor()});
    }
    return parse_power();
  }

  ExprNodePtr parse_power() {
    DepthGuard guard(this);
    ExprNodePtr base = parse_atom();
    if (lex_.current().kind == TokKind::caret) {
      lex_.advance();
      // right-associative: the exponent is a full factor
      return make(ExprNode::Binary{BinaryOp::pow, std::move(base), parse_factor()});
    }
    return base;
  }

  ExprNodePtr parse_atom() {
    DepthGuard guard(this);
    const Token tok = lex_.current();
    switch (tok.kind) {
      case TokKind::number: {
        lex_.advance();
        return make(ExprNode::Constant{tok.value});
      }
      case TokKind::lparen: {
        lex_.advance();
        ExprNodePtr inner = parse_expr();
        expect(TokKind::rparen, "')'");
        return inner;
      }
      case TokKind::ident:
        return parse_ident(tok);
      default:
        throw ParseError("unexpected token at byte " + std::to_string(tok.offset), tok.offset,
                         {"number", "variable", "function", "'('", "'-'"});
    }
  }

  ExprNodePtr parse_ident(const Token& tok) {
    const std::string_view text = tok.text;
    if (text.size() >= 2 && text[0] == 'x' && all_digits(text.substr(1))) {
      long long index = 0;
      const auto [ptr, ec] =
          std::from_chars(text.data() + 1, text.data() + text.size(), index);
      (void)ptr;
      if (ec != std::errc{} || index > 1000000) {
        throw ParseError("variable index out of range at byte " + std::to_string(tok.offset),
                         tok.offset, {"variable index between 1 and 1000000"});
      }
      if (index == 0) {
        throw ParseError("variable index must be at least 1 (variables are x1, x2, ...) at byte " +
                             std::to_string(tok.offset),
                         tok.offset, {"variable index >= 1"});
      }
      lex_.advance();
      arity_ = std::max(arity_, static_cast<int>(index));
      return make(ExprNode::Variable{static_cast<int>(index)});
    }
    for (const auto& f : kFunctions) {
      if (text == f.name) {
        lex_.advance();
        expect(TokKind::lparen, "'('");
        ExprNodePtr arg = parse_expr();
        expect(TokKind::rparen, "')'");
        return make(ExprNode::Unary{f.op, std::move(arg)});
      }
    }
    throw ParseError("unknown function '" + std::string(text) + "' at byte " +
                         std::to_string(tok.offset),
                     tok.offset, {"sin", "cos", "exp", "log", "sqrt", "tanh", "variable"});
  }

  void expect(TokKind k, const char* shown) {
    if (lex_.current().kind != k) {
      throw ParseError(std::string("expected ") + shown + " at byte " +
                           std::to_string(lex_.current().offset),
                       lex_.current().offset, {shown});
    }
    lex_.advance();
  }

  static bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
      if (c < '0' || c > '9') return false;
    return true;
  }

  template <class NodeAlt>
  static ExprNodePtr make(NodeAlt&& alt) {
    return std::make_shared<const ExprNode>(ExprNode{std::forward<NodeAlt>(alt)});
  }

  struct DepthGuard {
    explicit DepthGuard(Parser* p) : parser(p) {
      if (++parser->depth_ > kMaxDepth) {
        throw ParseError("expression nested too deeply", parser->lex_.current().offset,
                         {"shallower expression"});
      }
    }
    ~DepthGuard() { --parser->depth_; }
    Parser* parser;
  };

  Lexer lex_;
  int arity_ = 0;
  int depth_ = 0;
};

// ---- printer ----------------------------------------------------------------

// Precedence levels used by the minimal-parenthesis printer. `pow` binds
// tighter than unary minus, matching the grammar.
inline int node_precedence(const ExprNode& n) {
  return std::visit(
      Overloaded{
          [](const ExprNode::Constant& c) { return c.value < 0.0 ? 3 : 5; },
          [](const ExprNode::Variable&) { return 5; },
          [](const ExprNode::Unary& u) { return u.op == UnaryOp::negate ? 3 : 5; },
          [](const ExprNode::Binary& b) {
            switch (b.op) {
              case BinaryOp::add:
              case BinaryOp::sub: return 1;
              case BinaryOp::mul:
              case BinaryOp::div: return 2;
              case BinaryOp::pow: return 4;
            }
            return 0;
          },
      },
      n.node);
}

inline std::string_view unary_name(UnaryOp op) {
  switch (op) {
    case UnaryOp::negate: return "-";
    case UnaryOp::sin: return "sin";
    case UnaryOp::cos: return "cos";
    case UnaryOp::exp: return "exp";
    case UnaryOp::log: return "log";
    case UnaryOp::sqrt: return "sqrt";
    case UnaryOp::tanh: return "tanh";
  }
  return "?";
}

inline void print_node(std::string& out, const ExprNode& n, int min_prec) {
  const int prec = node_precedence(n);
  const bool wrap = prec < min_prec;
  if (wrap) out += '(';
  std::visit(
      Overloaded{
          [&](const ExprNode::Constant& c) {
            if (c.value < 0.0) {
              out += '-';
              out += format17(-c.value);
            } else {
              out += format17(c.value);
            }
          },
          [&](const ExprNode::Variable& v) {
            out += 'x';
            out += std::to_string(v.index);
          },
          [&](const ExprNode::Unary& u) {
            if (u.op == UnaryOp::negate) {
              out += '-';
              print_node(out, *u.arg, 3);
            } else {
              out += unary_name(u.op);
              out += '(';
              print_node(out, *u.arg, 0);
              out += ')';
            }
          },
          [&](const ExprNode::Binary& b) {
            switch (b.op) {
              case BinaryOp::add:
                print_node(out, *b.lhs, 1);
                out += " + ";
                print_node(out, *b.rhs, 2);
                break;
              case BinaryOp::sub:
                print_node(out, *b.lhs, 1);
                out += " - ";
                print_node(out, *b.rhs, 2);
                break;
              case BinaryOp::mul:
                print_node(out, *b.lhs, 2);
                out += '*';
                print_node(out, *b.rhs, 3);
                break;
              case BinaryOp::div:
                print_node(out, *b.lhs, 2);
                out += '/';
                print_node(out, *b.rhs, 3);
                break;
              case BinaryOp::pow:
                print_node(out, *b.lhs, 5);
                out += '^';
                print_node(out, *b.rhs, 3);
                break;
            }
          },
      },
      n.node);
  if (wrap) out += ')';
}

// ---- generic evaluation -----------------------------------------------------

// Works for any scalar type with ev_* overloads (double, Dual, HyperDual).
template <class T>
T eval_node(const ExprNode& n, std::span<const T> point) {
  return std::visit(
      Overloaded{
          [&](const ExprNode::Constant& c) { return T(c.value); },
          [&](const ExprNode::Variable& v) { return point[static_cast<std::size_t>(v.index) - 1]; },
          [&](const ExprNode::Unary& u) {
            T a = eval_node(*u.arg, point);
            switch (u.op) {
              case UnaryOp::negate: return ev_neg(a);
              case UnaryOp::sin: return ev_sin(a);
              case UnaryOp::cos: return ev_cos(a);
              case UnaryOp::exp: return ev_exp(a);
              case UnaryOp::log: return ev_log(a);
              case UnaryOp::sqrt: return ev_sqrt(a);
              case UnaryOp::tanh: return ev_tanh(a);
            }
            return a;  // unreachable
          },
          [&](const ExprNode::Binary& b) {
            T lhs = eval_node(*b.lhs, point);
            T rhs = eval_node(*b.rhs, point);
            switch (b.op) {
              case BinaryOp::add: return ev_add(lhs, rhs);
              case BinaryOp::sub: return ev_sub(lhs, rhs);
              case BinaryOp::mul: return ev_mul(lhs, rhs);
              case BinaryOp::div: return ev_div(lhs, rhs);
              case BinaryOp::pow: return ev_pow(lhs, rhs);
            }
            return lhs;  // unreachable
          },
      },
      n.node);
}

inline bool nodes_equal(const ExprNode& a, const ExprNode& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      Overloaded{
          [&](const ExprNode::Constant& ca) {
            return ca.value == std::get<ExprNode::Constant>(b.node).value;
          },
          [&](const ExprNode::Variable& va) {
            return va.index == std::get<ExprNode::Variable>(b.node).index;
          },
          [&](const ExprNode::Unary& ua) {
            const auto& ub = std::get<ExprNode::Unary>(b.node);
            return ua.op == ub.op && nodes_equal(*ua.arg, *ub.arg);
          },
          [&](const ExprNode::Binary& ba) {
            const auto& bb = std::get<ExprNode::Binary>(b.node);
            return ba.op == bb.op && nodes_equal(*ba.lhs, *bb.lhs) && nodes_equal(*ba.rhs, *bb.rhs);
          },
      },
      a.node);
}

}  // namespace detail

inline Expression Expression::parse(std::string_view source) {
  detail::Parser parser(source);
  int arity = 0;
  ExprNodePtr root = parser.parse_all(arity);
  return Expression(std::move(root), arity);
}

inline std::string Expression::to_string() const {
  std::string out;
  detail::print_node(out, *root_, 0);
  return out;
}

/// Structural identity of two parsed trees (same shapes, operators, indices,
/// bit-equal constants).
inline bool structurally_equal(const Expression& a, const Expression& b) {
  return detail::nodes_equal(a.root(), b.root());
}

/// Evaluate over any scalar type carrying ev_* overloads.
template <class T>
T evaluate_with(const Expression& f, std::span<const T> point) {
  if (point.size() < static_cast<std::size_t>(f.arity())) {
    throw DimensionMismatch("evaluate: point has " + std::to_string(point.size()) +
                            " coordinates but the expression references x" +
                            std::to_string(f.arity()));
  }
  return detail::eval_node<T>(f.root(), point);
}

/// Evaluate f at a point of plain doubles. Any domain violation or
/// non-finite intermediate raises DomainError.
inline double evaluate(const Expression& f, std::span<const double> point) {
  for (double x : point) {
    if (!std::isfinite(x)) throw DomainError("evaluate: non-finite input coordinate");
  }
  return evaluate_with<double>(f, point);
}

}  // namespace momprop
