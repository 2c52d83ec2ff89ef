#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ppdiv/error.hpp"

namespace ppdiv {

/// Small arithmetic expression language used for smooth densities and mark
/// kernels in model files, e.g. "1 + exp(-x)" or "if(x <= 1, 2, 1)".
///
/// Supports + - * / ^, comparisons (yielding 1 or 0), the constants pi, e and
/// inf, and the functions exp log log1p expm1 sqrt abs sin cos tan pow min
/// max if. Variables are bound positionally at compile time.
class Expression {
 public:
  Expression() = default;

  Expression(std::string source, std::vector<std::string> variables)
      : source_(std::move(source)), variables_(std::move(variables)) {
    Parser p{source_, variables_, 0};
    root_ = p.parse_comparison();
    p.skip_ws();
    if (p.pos != source_.size()) p.error("unexpected trailing input");
  }

  double operator()(std::span<const double> args) const {
    if (!root_) fail(ErrorCode::InvalidArgument, "empty expression");
    return root_->eval(args);
  }
  double operator()(double x) const { return (*this)(std::span<const double>(&x, 1)); }

  const std::string& source() const noexcept { return source_; }
  bool empty() const noexcept { return root_ == nullptr; }

 private:
  struct Node {
    enum class Kind { Number, Variable, Unary, Binary, Call } kind = Kind::Number;
    double number = 0.0;
    std::size_t variable = 0;
    std::string op;
    std::vector<std::shared_ptr<const Node>> args;

    double eval(std::span<const double> vars) const {
      switch (kind) {
        case Kind::Number: return number;
        case Kind::Variable:
          if (variable >= vars.size()) fail(ErrorCode::InvalidArgument, "expression variable not bound");
          return vars[variable];
        case Kind::Unary: return -args[0]->eval(vars);
        case Kind::Binary: {
          const double a = args[0]->eval(vars), b = args[1]->eval(vars);
          if (op == "+") return a + b;
          if (op == "-") return a - b;
          if (op == "*") return a * b;
          if (op == "/") return a / b;
          if (op == "^") return std::pow(a, b);
          if (op == "<") return a < b;
          if (op == "<=") return a <= b;
          if (op == ">") return a > b;
          if (op == ">=") return a >= b;
          if (op == "==") return a == b;
          if (op == "!=") return a != b;
          break;
        }
        case Kind::Call: {
          if (op == "if") return args[0]->eval(vars) != 0.0 ? args[1]->eval(vars) : args[2]->eval(vars);
          const double a = args[0]->eval(vars);
          if (op == "exp") return std::exp(a);
          if (op == "log") return std::log(a);
          if (op == "log1p") return std::log1p(a);
          if (op == "expm1") return std::expm1(a);
          if (op == "sqrt") return std::sqrt(a);
          if (op == "abs") return std::abs(a);
          if (op == "sin") return std::sin(a);
          if (op == "cos") return std::cos(a);
          if (op == "tan") return std::tan(a);
          const double b = args[1]->eval(vars);
          if (op == "pow") return std::pow(a, b);
          if (op == "min") return std::min(a, b);
          if (op == "max") return std::max(a, b);
          break;
        }
      }
      fail(ErrorCode::InvalidArgument, "unknown operator " + op);
    }
  };

  static std::shared_ptr<Node> make_node(Node::Kind kind) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    return n;
  }
  using NodePtr = std::shared_ptr<const Node>;

  struct Parser {
    const std::string& src;
    const std::vector<std::string>& vars;
    std::size_t pos;

    [[noreturn]] void error(const std::string& msg) const {
      fail(ErrorCode::ParseError, "expression '" + src + "' at offset " + std::to_string(pos) + ": " + msg);
    }
    void skip_ws() {
      while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }
    bool accept(std::string_view tok) {
      skip_ws();
      if (src.compare(pos, tok.size(), tok) == 0) {
        pos += tok.size();
        return true;
      }
      return false;
    }
    static NodePtr binary(std::string op, NodePtr a, NodePtr b) {
      auto n = make_node(Node::Kind::Binary);
      n->op = std::move(op);
      n->args = {std::move(a), std::move(b)};
      return n;
    }

    NodePtr parse_comparison() {
      auto lhs = parse_additive();
      for (std::string_view op : {"<=", ">=", "==", "!=", "<", ">"}) {
        if (accept(op)) return binary(std::string(op), lhs, parse_additive());
      }
      return lhs;
    }
    NodePtr parse_additive() {
      auto lhs = parse_term();
      for (;;) {
        if (accept("+")) lhs = binary("+", lhs, parse_term());
        else if (accept("-")) lhs = binary("-", lhs, parse_term());
        else return lhs;
      }
    }
    NodePtr parse_term() {
      auto lhs = parse_unary();
      for (;;) {
        if (accept("*")) lhs = binary("*", lhs, parse_unary());
        else if (accept("/")) lhs = binary("/", lhs, parse_unary());
        else return lhs;
      }
    }
    NodePtr parse_unary() {
      if (accept("-")) {
        auto n = make_node(Node::Kind::Unary);
        n->args = {parse_unary()};
        return n;
      }
      if (accept("+")) return parse_unary();
      return parse_power();
    }
    NodePtr parse_power() {
      auto base = parse_primary();
      if (accept("^")) return binary("^", base, parse_unary());
      return base;
    }
    NodePtr parse_primary() {
      skip_ws();
      if (pos >= src.size()) error("unexpected end of input");
      if (accept("(")) {
        auto inner = parse_comparison();
        if (!accept(")")) error("expected ')'");
        return inner;
      }
      const char c = src[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* begin = src.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) error("bad number");
        pos += static_cast<std::size_t>(end - begin);
        auto n = make_node(Node::Kind::Number);
        n->number = v;
        return n;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        const std::size_t start = pos;
        while (pos < src.size() && (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_')) ++pos;
        const std::string name = src.substr(start, pos - start);
        if (accept("(")) return parse_call(name);
        for (std::size_t i = 0; i < vars.size(); ++i) {
          if (vars[i] == name) {
            auto n = make_node(Node::Kind::Variable);
            n->variable = i;
            return n;
          }
        }
        auto n = make_node(Node::Kind::Number);
        if (name == "pi") n->number = std::numbers::pi;
        else if (name == "e") n->number = std::numbers::e;
        else if (name == "inf") n->number = INFINITY;
        else error("unknown identifier '" + name + "'");
        return n;
      }
      error(std::string("unexpected character '") + c + "'");
    }
    NodePtr parse_call(const std::string& name) {
      std::size_t arity = 0;
      if (name == "if") arity = 3;
      else if (name == "pow" || name == "min" || name == "max") arity = 2;
      else if (name == "exp" || name == "log" || name == "log1p" || name == "expm1" || name == "sqrt" ||
               name == "abs" || name == "sin" || name == "cos" || name == "tan")
        arity = 1;
      else error("unknown function '" + name + "'");
      auto n = make_node(Node::Kind::Call);
      n->op = name;
      for (std::size_t i = 0; i < arity; ++i) {
        if (i > 0 && !accept(",")) error("expected ',' in call to " + name);
        n->args.push_back(parse_comparison());
      }
      if (!accept(")")) error("expected ')' after arguments of " + name);
      return n;
    }
  };

  std::string source_;
  std::vector<std::string> variables_;
  NodePtr root_;
};

}  // namespace ppdiv
