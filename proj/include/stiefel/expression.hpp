#pragma once

// Scalar expressions in the entries u[i,j] of an n x p matrix (1-based).
//
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := base ("^" integer)?
//   base   := number | "u[" int "," int "]" | func "(" expr ")"
//           | "(" expr ")" | "-" base
//   func   := "sin" | "cos" | "exp" | "log" | "sqrt"
//
// Note that "-" binds to the base, so "-u[1,1]^2" is (-u[1,1])^2.

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stiefel/error.hpp"
#include "stiefel/hyperdual.hpp"

namespace stiefel {

enum class Op { Constant, Variable, Neg, Sin, Cos, Exp, Log, Sqrt, Sum, Mul, Div, Pow };

struct ExprNode {
  Op op = Op::Constant;
  double value = 0.0;  // Constant
  int row = 0;         // Variable, 1-based
  int col = 0;         // Variable, 1-based
  int exponent = 0;    // Pow
  std::vector<ExprNode> args;
  int line = 1;
  int column = 1;
};

namespace detail {

inline double primal(double x) { return x; }
template <typename T>
double primal(const HyperDual<T>& x) {
  return primal(x.a);
}

template <typename T>
inline constexpr bool kIsDifferentiated = !std::is_same_v<T, double>;

inline const char* op_name(Op op) {
  switch (op) {
    case Op::Constant: return "const";
    case Op::Variable: return "var";
    case Op::Neg: return "neg";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Sum: return "sum";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Pow: return "pow";
  }
  return "?";
}

inline std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline void write_prefix(std::ostream& os, const ExprNode& node) {
  switch (node.op) {
    case Op::Constant:
      os << format_number(node.value);
      return;
    case Op::Variable:
      os << "var(" << node.row << ',' << node.col << ')';
      return;
    case Op::Pow:
      os << "pow(";
      write_prefix(os, node.args[0]);
      os << ',' << node.exponent << ')';
      return;
    default:
      os << op_name(node.op) << '(';
      for (std::size_t i = 0; i < node.args.size(); ++i) {
        if (i) os << ',';
        write_prefix(os, node.args[i]);
      }
      os << ')';
  }
}

inline std::string locate(const ExprNode& node) {
  return std::string(op_name(node.op)) + " node (line " + std::to_string(node.line) +
         ", column " + std::to_string(node.column) + ")";
}

template <typename T, typename VarFn>
T evaluate_node(const ExprNode& node, const VarFn& var) {
  using std::cos, std::exp, std::log, std::sin, std::sqrt;
  switch (node.op) {
    case Op::Constant:
      return T(node.value);
    case Op::Variable:
      return var(node.row - 1, node.col - 1);
    case Op::Neg:
      return -evaluate_node<T>(node.args[0], var);
    case Op::Sin:
      return sin(evaluate_node<T>(node.args[0], var));
    case Op::Cos:
      return cos(evaluate_node<T>(node.args[0], var));
    case Op::Exp: {
      T r = exp(evaluate_node<T>(node.args[0], var));
      if (!std::isfinite(primal(r))) throw DomainError("exp overflow", locate(node));
      return r;
    }
    case Op::Log: {
      T x = evaluate_node<T>(node.args[0], var);
      if (!(primal(x) > 0.0)) throw DomainError("log of non-positive value", locate(node));
      return log(x);
    }
    case Op::Sqrt: {
      T x = evaluate_node<T>(node.args[0], var);
      const double px = primal(x);
      if (px < 0.0 || (kIsDifferentiated<T> && px == 0.0) || std::isnan(px)) {
        throw DomainError(px < 0.0 ? "sqrt of negative value"
                                   : "sqrt is not differentiable at zero",
                          locate(node));
      }
      return sqrt(x);
    }
    case Op::Sum: {
      T acc = evaluate_node<T>(node.args[0], var);
      for (std::size_t i = 1; i < node.args.size(); ++i) acc += evaluate_node<T>(node.args[i], var);
      return acc;
    }
    case Op::Mul:
      return evaluate_node<T>(node.args[0], var) * evaluate_node<T>(node.args[1], var);
    case Op::Div: {
      T num = evaluate_node<T>(node.args[0], var);
      T den = evaluate_node<T>(node.args[1], var);
      if (primal(den) == 0.0) throw DomainError("division by zero", locate(node));
      return num / den;
    }
    case Op::Pow: {
      T x = evaluate_node<T>(node.args[0], var);
      if (node.exponent < 0 && primal(x) == 0.0) {
        throw DomainError("negative power of zero", locate(node));
      }
      if constexpr (kIsDifferentiated<T>) {
        return pow(x, node.exponent);
      } else {
        return std::pow(x, node.exponent);
      }
    }
  }
  throw std::logic_error("unknown expression node");
}

inline void collect_variables(const ExprNode& node, std::set<std::pair<int, int>>& out) {
  if (node.op == Op::Variable) out.emplace(node.row, node.col);
  for (const auto& a : node.args) collect_variables(a, out);
}

class Parser {
 public:
  Parser(std::string_view src, int n, int p) : src_(src), n_(n), p_(p) {}

  ExprNode parse() {
    ExprNode e = expr();
    skip_ws();
    if (pos_ < src_.size()) fail(std::string("unexpected '") + src_[pos_] + "'");
    return e;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
  int n_;
  int p_;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, column_); }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
  }

  bool peek(char ch) {
    skip_ws();
    return pos_ < src_.size() && src_[pos_] == ch;
  }

  void expect(char ch) {
    if (!peek(ch)) {
      fail(std::string("expected '") + ch + "'" +
           (pos_ < src_.size() ? std::string(", found '") + src_[pos_] + "'"
                               : std::string(", found end of input")));
    }
    advance();
  }

  ExprNode make(Op op) const {
    ExprNode node;
    node.op = op;
    node.line = line_;
    node.column = column_;
    return node;
  }

  ExprNode expr() {
    skip_ws();
    ExprNode sum = make(Op::Sum);
    sum.args.push_back(term());
    while (true) {
      if (peek('+')) {
        advance();
        sum.args.push_back(term());
      } else if (peek('-')) {
        ExprNode neg = make(Op::Neg);
        advance();
        neg.args.push_back(term());
        sum.args.push_back(std::move(neg));
      } else {
        break;
      }
    }
    if (sum.args.size() == 1) return std::move(sum.args.front());
    return sum;
  }

  ExprNode term() {
    ExprNode lhs = factor();
    while (true) {
      Op op;
      if (peek('*')) {
        op = Op::Mul;
      } else if (peek('/')) {
        op = Op::Div;
      } else {
        break;
      }
      ExprNode bin = make(op);
      advance();
      bin.args.push_back(std::move(lhs));
      bin.args.push_back(factor());
      lhs = std::move(bin);
    }
    return lhs;
  }

  ExprNode factor() {
    ExprNode b = base();
    if (peek('^')) {
      ExprNode pw = make(Op::Pow);
      advance();
      pw.exponent = integer_exponent();
      pw.args.push_back(std::move(b));
      return pw;
    }
    return b;
  }

  int integer_exponent() {
    skip_ws();
    bool negative = false;
    if (pos_ < src_.size() && (src_[pos_] == '-' || src_[pos_] == '+')) {
      negative = src_[pos_] == '-';
      advance();
      skip_ws();
    }
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    if (start == pos_) fail("exponent must be an integer constant");
    if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E')) {
      fail("exponent must be an integer constant");
    }
    const std::string digits(src_.substr(start, pos_ - start));
    if (digits.size() > 6) fail("exponent too large");
    const int k = std::stoi(digits);
    return negative ? -k : k;
  }

  int index_literal() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    if (start == pos_) fail("expected an integer index");
    const std::string digits(src_.substr(start, pos_ - start));
    if (digits.size() > 6) fail("index too large");
    return std::stoi(digits);
  }

  ExprNode number() {
    ExprNode node = make(Op::Constant);
    const std::size_t start = pos_;
    auto digits = [&] {
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    };
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      advance();
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
      const std::size_t exp_start = pos_;
      digits();
      if (exp_start == pos_) fail("malformed number exponent");
    }
    const std::string text(src_.substr(start, pos_ - start));
    if (text == ".") fail("malformed number");
    node.value = std::strtod(text.c_str(), nullptr);
    if (!std::isfinite(node.value)) fail("number out of range");
    return node;
  }

  ExprNode base() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char ch = src_[pos_];
    if (ch == '-') {
      ExprNode neg = make(Op::Neg);
      advance();
      neg.args.push_back(base());
      return neg;
    }
    if (ch == '(') {
      advance();
      ExprNode inner = expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(ch))) {
      ExprNode node = make(Op::Constant);
      const std::size_t start = pos_;
      while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) advance();
      const std::string name(src_.substr(start, pos_ - start));
      if (name == "u") {
        node.op = Op::Variable;
        expect('[');
        const int line = line_, column = column_;
        node.row = index_literal();
        expect(',');
        node.col = index_literal();
        expect(']');
        if (node.row < 1 || node.row > n_ || node.col < 1 || node.col > p_) {
          throw ParseError("index u[" + std::to_string(node.row) + "," +
                               std::to_string(node.col) + "] out of range for shape " +
                               std::to_string(n_) + "x" + std::to_string(p_),
                           line, column);
        }
        return node;
      }
      if (name == "sin") node.op = Op::Sin;
      else if (name == "cos") node.op = Op::Cos;
      else if (name == "exp") node.op = Op::Exp;
      else if (name == "log") node.op = Op::Log;
      else if (name == "sqrt") node.op = Op::Sqrt;
      else fail("unknown identifier '" + name + "'");
      expect('(');
      node.args.push_back(expr());
      expect(')');
      return node;
    }
    fail(std::string("unexpected '") + ch + "'");
  }
};

}  // namespace detail

/// Parsed expression bound to a matrix shape.
class ExpressionAst {
 public:
  ExpressionAst(ExprNode root, int n, int p, std::string source)
      : root_(std::move(root)), n_(n), p_(p), source_(std::move(source)) {
    detail::collect_variables(root_, vars_);
  }

  const ExprNode& root() const { return root_; }
  int n() const { return n_; }
  int p() const { return p_; }
  const std::string& source() const { return source_; }

  /// Variables that occur, as 1-based (row, col) pairs in sorted order.
  const std::set<std::pair<int, int>>& variables() const { return vars_; }

  /// `var(i, j)` receives 0-based indices and returns the scalar for u[i+1, j+1].
  template <typename T, typename VarFn>
  T evaluate(const VarFn& var) const {
    return detail::evaluate_node<T>(root_, var);
  }

  /// Prefix form, e.g. sum(pow(var(1,1),2),sin(var(2,1))).
  std::string to_prefix() const {
    std::ostringstream os;
    detail::write_prefix(os, root_);
    return os.str();
  }

 private:
  ExprNode root_;
  int n_;
  int p_;
  std::string source_;
  std::set<std::pair<int, int>> vars_;
};

inline ExpressionAst parse_expression(std::string_view source, int n, int p) {
  if (n < 1 || p < 1) throw InputError("parse_expression: shape must be positive");
  detail::Parser parser(source, n, p);
  return ExpressionAst(parser.parse(), n, p, std::string(source));
}

}  // namespace stiefel
