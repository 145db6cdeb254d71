#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <vector>

namespace obstakl {

/**
 * Minimal arithmetic expressions for config files: numbers, the variables
 * t, x, y, z, the four operators, unary minus, exp, sin, max(a,b) and the
 * half-open interval indicator ind(v, lo, hi) = 1 when lo <= v < hi.
 * Deliberately no user functions and no state, so a config line is a
 * complete, reproducible description of the data it names.
 */
struct EvalContext {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

enum : unsigned {
  kVarT = 1u,
  kVarX = 2u,
  kVarY = 4u,
  kVarZ = 8u,
};

struct ExprParseResult;

class Expr {
 public:
  double eval(const EvalContext& c) const { return eval_node(root_, c); }
  unsigned vars() const { return varmask_; }
  const std::string& source() const { return source_; }
  bool valid() const { return !nodes_.empty(); }

 private:
  enum class Kind { number, variable, add, sub, mul, div, neg, fn_exp, fn_sin, fn_max, fn_ind };
  struct Node {
    Kind kind;
    double value = 0.0;  // number
    int var = 0;         // 0..3 -> t,x,y,z
    int a = -1, b = -1, c = -1;
  };

  double eval_node(int i, const EvalContext& ctx) const {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    switch (n.kind) {
      case Kind::number:
        return n.value;
      case Kind::variable:
        switch (n.var) {
          case 0: return ctx.t;
          case 1: return ctx.x;
          case 2: return ctx.y;
          default: return ctx.z;
        }
      case Kind::add: return eval_node(n.a, ctx) + eval_node(n.b, ctx);
      case Kind::sub: return eval_node(n.a, ctx) - eval_node(n.b, ctx);
      case Kind::mul: return eval_node(n.a, ctx) * eval_node(n.b, ctx);
      case Kind::div: return eval_node(n.a, ctx) / eval_node(n.b, ctx);
      case Kind::neg: return -eval_node(n.a, ctx);
      case Kind::fn_exp: return std::exp(eval_node(n.a, ctx));
      case Kind::fn_sin: return std::sin(eval_node(n.a, ctx));
      case Kind::fn_max: return std::max(eval_node(n.a, ctx), eval_node(n.b, ctx));
      case Kind::fn_ind: {
        double v = eval_node(n.a, ctx);
        return eval_node(n.b, ctx) <= v && v < eval_node(n.c, ctx) ? 1.0 : 0.0;
      }
    }
    return 0.0;
  }

  std::vector<Node> nodes_;
  int root_ = -1;
  unsigned varmask_ = 0;
  std::string source_;

  friend struct ExprParser;
  friend ExprParseResult parse_expression(const std::string& text);
};

struct ExprParseResult {
  bool ok = false;
  std::string message;
  std::size_t pos = 0;  // offset into the source where parsing stopped
  Expr expr;
};

struct ExprParser {
  const std::string& s;
  std::size_t i = 0;
  Expr out;
  std::string error;

  explicit ExprParser(const std::string& text) : s(text) {}

  void skip() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }

  bool fail(const std::string& msg) {
    if (error.empty()) error = msg;
    return false;
  }

  int push(Expr::Node n) {
    out.nodes_.push_back(n);
    return static_cast<int>(out.nodes_.size()) - 1;
  }

  bool parse_expr(int& node) {
    if (!parse_term(node)) return false;
    for (;;) {
      skip();
      if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
        char op = s[i++];
        int rhs = -1;
        if (!parse_term(rhs)) return false;
        Expr::Node n;
        n.kind = op == '+' ? Expr::Kind::add : Expr::Kind::sub;
        n.a = node;
        n.b = rhs;
        node = push(n);
      } else {
        return true;
      }
    }
  }

  bool parse_term(int& node) {
    if (!parse_unary(node)) return false;
    for (;;) {
      skip();
      if (i < s.size() && (s[i] == '*' || s[i] == '/')) {
        char op = s[i++];
        int rhs = -1;
        if (!parse_unary(rhs)) return false;
        Expr::Node n;
        n.kind = op == '*' ? Expr::Kind::mul : Expr::Kind::div;
        n.a = node;
        n.b = rhs;
        node = push(n);
      } else {
        return true;
      }
    }
  }

  bool parse_unary(int& node) {
    skip();
    if (i < s.size() && s[i] == '-') {
      ++i;
      int inner = -1;
      if (!parse_unary(inner)) return false;
      Expr::Node n;
      n.kind = Expr::Kind::neg;
      n.a = inner;
      node = push(n);
      return true;
    }
    return parse_primary(node);
  }

  bool parse_args(int count, int args[3], const std::string& name) {
    skip();
    if (i >= s.size() || s[i] != '(') return fail(name + " expects an argument list");
    ++i;
    for (int k = 0; k < count; ++k) {
      if (!parse_expr(args[k])) return false;
      skip();
      if (k + 1 < count) {
        if (i >= s.size() || s[i] != ',')
          return fail(name + " expects " + std::to_string(count) + " arguments");
        ++i;
      }
    }
    skip();
    if (i >= s.size() || s[i] != ')') return fail("missing ')' after " + name);
    ++i;
    return true;
  }

  bool parse_primary(int& node) {
    skip();
    if (i >= s.size()) return fail("unexpected end of expression");
    char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s.c_str() + i;
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      if (end == begin) return fail("malformed number");
      i += static_cast<std::size_t>(end - begin);
      Expr::Node n;
      n.kind = Expr::Kind::number;
      n.value = v;
      node = push(n);
      return true;
    }
    if (c == '(') {
      ++i;
      if (!parse_expr(node)) return false;
      skip();
      if (i >= s.size() || s[i] != ')') return fail("missing ')'");
      ++i;
      return true;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j]))) ++j;
      std::string name = s.substr(i, j - i);
      i = j;
      if (name.size() == 1 && (name[0] == 't' || name[0] == 'x' || name[0] == 'y' ||
                               name[0] == 'z')) {
        Expr::Node n;
        n.kind = Expr::Kind::variable;
        n.var = name[0] == 't' ? 0 : name[0] == 'x' ? 1 : name[0] == 'y' ? 2 : 3;
        out.varmask_ |= 1u << n.var;
        node = push(n);
        return true;
      }
      int args[3] = {-1, -1, -1};
      if (name == "exp" || name == "sin") {
        if (!parse_args(1, args, name)) return false;
        Expr::Node n;
        n.kind = name == "exp" ? Expr::Kind::fn_exp : Expr::Kind::fn_sin;
        n.a = args[0];
        node = push(n);
        return true;
      }
      if (name == "max") {
        if (!parse_args(2, args, name)) return false;
        Expr::Node n;
        n.kind = Expr::Kind::fn_max;
        n.a = args[0];
        n.b = args[1];
        node = push(n);
        return true;
      }
      if (name == "ind") {
        if (!parse_args(3, args, name)) return false;
        Expr::Node n;
        n.kind = Expr::Kind::fn_ind;
        n.a = args[0];
        n.b = args[1];
        n.c = args[2];
        node = push(n);
        return true;
      }
      return fail("unknown name '" + name + "'");
    }
    return fail(std::string("unexpected character '") + c + "'");
  }
};

inline ExprParseResult parse_expression(const std::string& text) {
  ExprParseResult r;
  ExprParser p(text);
  int root = -1;
  bool ok = p.parse_expr(root);
  p.skip();
  if (ok && p.i < text.size()) {
    ok = false;
    p.error = "trailing input";
  }
  r.pos = p.i;
  if (!ok) {
    r.message = p.error.empty() ? "parse error" : p.error;
    return r;
  }
  p.out.root_ = root;
  p.out.source_ = text;
  r.ok = true;
  r.expr = std::move(p.out);
  return r;
}

}  // namespace obstakl
