#include "qgeom/expression.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <functional>
#include <unordered_map>

#include "lexer.hpp"
#include "qgeom/errors.hpp"

namespace qgeom::expr {

struct Expression::Node {
  Op op = Op::Const;
  double value = 0.0;
  std::size_t var = 0;
  int k = 0;
  std::shared_ptr<const Node> a, b;
};

namespace {

bool is_const(const Expression& e, double v) { return e.is_constant() && e.constant_value() == v; }

double ipow(double x, int k) {
  if (k < 0) return 1.0 / ipow(x, -k);
  double r = 1.0;
  double base = x;
  while (k) {
    if (k & 1) r *= base;
    base *= base;
    k >>= 1;
  }
  return r;
}

}  // namespace

Expression::Expression() {
  static const auto zero = std::make_shared<const Node>();
  node_ = zero;
}

Expression Expression::constant(double value) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = value;
  return Expression(std::move(n));
}

Expression Expression::variable(std::size_t index) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->var = index;
  return Expression(std::move(n));
}

Expression Expression::make(Op op, Expression a, Expression b, int k) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(a.node_);
  n->b = std::move(b.node_);
  n->k = k;
  return Expression(std::move(n));
}

Op Expression::op() const { return node_->op; }
double Expression::constant_value() const { return node_->value; }
std::size_t Expression::variable_index() const { return node_->var; }
int Expression::exponent() const { return node_->k; }
Expression Expression::lhs() const { return Expression(node_->a); }
Expression Expression::rhs() const { return Expression(node_->b); }

Expression operator+(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() + b.constant_value());
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return Expression::make(Op::Add, a, b);
}

Expression operator-(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() - b.constant_value());
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return -b;
  if (a.id() == b.id()) return Expression::constant(0.0);
  return Expression::make(Op::Sub, a, b);
}

Expression operator*(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() * b.constant_value());
  if (is_const(a, 0.0) || is_const(b, 0.0)) return Expression::constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  if (is_const(a, -1.0)) return -b;
  if (is_const(b, -1.0)) return -a;
  return Expression::make(Op::Mul, a, b);
}

Expression operator/(const Expression& a, const Expression& b) {
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() / b.constant_value());
  if (is_const(a, 0.0)) return Expression::constant(0.0);
  if (is_const(b, 1.0)) return a;
  return Expression::make(Op::Div, a, b);
}

Expression operator-(const Expression& a) {
  if (a.is_constant()) return Expression::constant(-a.constant_value());
  if (a.op() == Op::Neg) return a.lhs();
  return Expression::make(Op::Neg, a);
}

Expression pow(const Expression& a, int k) {
  if (k == 0) return Expression::constant(1.0);
  if (k == 1) return a;
  if (a.is_constant()) return Expression::constant(ipow(a.constant_value(), k));
  return Expression::make(Op::Pow, a, Expression(), k);
}

Expression sin(const Expression& a) {
  if (a.is_constant()) return Expression::constant(std::sin(a.constant_value()));
  return Expression::make(Op::Sin, a);
}

Expression cos(const Expression& a) {
  if (a.is_constant()) return Expression::constant(std::cos(a.constant_value()));
  return Expression::make(Op::Cos, a);
}

Expression operator+(const Expression& a, double b) { return a + Expression::constant(b); }
Expression operator*(double a, const Expression& b) { return Expression::constant(a) * b; }

Expression Expression::derivative(std::size_t var) const {
  // Memoized over shared subtrees; derivative trees reuse the original nodes.
  std::unordered_map<const void*, Expression> memo;
  std::function<Expression(const Expression&)> d = [&](const Expression& e) -> Expression {
    if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
    Expression r;
    switch (e.op()) {
      case Op::Const: r = constant(0.0); break;
      case Op::Var: r = constant(e.variable_index() == var ? 1.0 : 0.0); break;
      case Op::Add: r = d(e.lhs()) + d(e.rhs()); break;
      case Op::Sub: r = d(e.lhs()) - d(e.rhs()); break;
      case Op::Mul: r = d(e.lhs()) * e.rhs() + e.lhs() * d(e.rhs()); break;
      case Op::Div: {
        const Expression da = d(e.lhs());
        const Expression db = d(e.rhs());
        if (is_const(db, 0.0)) {
          r = da / e.rhs();
        } else {
          r = (da * e.rhs() - e.lhs() * db) / pow(e.rhs(), 2);
        }
        break;
      }
      case Op::Neg: r = -d(e.lhs()); break;
      case Op::Pow: {
        const int k = e.exponent();
        r = constant(static_cast<double>(k)) * pow(e.lhs(), k - 1) * d(e.lhs());
        break;
      }
      case Op::Sin: r = cos(e.lhs()) * d(e.lhs()); break;
      case Op::Cos: r = -(sin(e.lhs()) * d(e.lhs())); break;
    }
    memo.emplace(e.id(), r);
    return r;
  };
  return d(*this);
}

double Expression::evaluate(std::span<const double> vars) const {
  switch (op()) {
    case Op::Const: return node_->value;
    case Op::Var:
      if (node_->var >= vars.size()) throw DomainError("evaluate: variable index out of range");
      return vars[node_->var];
    case Op::Add: return lhs().evaluate(vars) + rhs().evaluate(vars);
    case Op::Sub: return lhs().evaluate(vars) - rhs().evaluate(vars);
    case Op::Mul: return lhs().evaluate(vars) * rhs().evaluate(vars);
    case Op::Div: return lhs().evaluate(vars) / rhs().evaluate(vars);
    case Op::Neg: return -lhs().evaluate(vars);
    case Op::Pow: return ipow(lhs().evaluate(vars), exponent());
    case Op::Sin: return std::sin(lhs().evaluate(vars));
    case Op::Cos: return std::cos(lhs().evaluate(vars));
  }
  return 0.0;
}

std::set<std::size_t> Expression::variables() const {
  std::set<std::size_t> out;
  std::set<const void*> seen;
  std::function<void(const Expression&)> walk = [&](const Expression& e) {
    if (!seen.insert(e.id()).second) return;
    switch (e.op()) {
      case Op::Const: return;
      case Op::Var: out.insert(e.variable_index()); return;
      case Op::Add: case Op::Sub: case Op::Mul: case Op::Div:
        walk(e.lhs());
        walk(e.rhs());
        return;
      default: walk(e.lhs()); return;
    }
  };
  walk(*this);
  return out;
}

bool Expression::depends_on(std::size_t var) const { return variables().count(var) != 0; }

Expression Expression::substitute(const std::map<std::size_t, Expression>& replacement) const {
  std::unordered_map<const void*, Expression> memo;
  std::function<Expression(const Expression&)> s = [&](const Expression& e) -> Expression {
    if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
    Expression r;
    switch (e.op()) {
      case Op::Const: r = e; break;
      case Op::Var: {
        auto it = replacement.find(e.variable_index());
        r = it == replacement.end() ? e : it->second;
        break;
      }
      case Op::Add: r = s(e.lhs()) + s(e.rhs()); break;
      case Op::Sub: r = s(e.lhs()) - s(e.rhs()); break;
      case Op::Mul: r = s(e.lhs()) * s(e.rhs()); break;
      case Op::Div: r = s(e.lhs()) / s(e.rhs()); break;
      case Op::Neg: r = -s(e.lhs()); break;
      case Op::Pow: r = pow(s(e.lhs()), e.exponent()); break;
      case Op::Sin: r = sin(s(e.lhs())); break;
      case Op::Cos: r = cos(s(e.lhs())); break;
    }
    memo.emplace(e.id(), r);
    return r;
  };
  return s(*this);
}

std::vector<Expression> gradient(const Expression& e, std::span<const std::size_t> vars) {
  std::vector<Expression> out;
  out.reserve(vars.size());
  for (auto v : vars) out.push_back(e.derivative(v));
  return out;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string format_number(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

int precedence(Op op) {
  switch (op) {
    case Op::Add: case Op::Sub: return 1;
    case Op::Mul: case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
  }
}

}  // namespace

std::string to_string(const Expression& e, std::span<const std::string> names) {
  auto wrap = [&](const Expression& child, int min_prec) {
    std::string s = to_string(child, names);
    const bool negative_literal = child.is_constant() && child.constant_value() < 0;
    return (precedence(child.op()) < min_prec || negative_literal) ? "(" + s + ")" : s;
  };
  switch (e.op()) {
    case Op::Const: return format_number(e.constant_value());
    case Op::Var:
      return e.variable_index() < names.size() ? names[e.variable_index()] : "v" + std::to_string(e.variable_index());
    case Op::Add: return wrap(e.lhs(), 1) + " + " + wrap(e.rhs(), 1);
    case Op::Sub: return wrap(e.lhs(), 1) + " - " + wrap(e.rhs(), 2);
    case Op::Mul: return wrap(e.lhs(), 2) + "*" + wrap(e.rhs(), 3);
    case Op::Div: return wrap(e.lhs(), 2) + "/" + wrap(e.rhs(), 3);
    case Op::Neg: return "-" + wrap(e.lhs(), 3);
    case Op::Pow: {
      const int k = e.exponent();
      return wrap(e.lhs(), 5) + "^" + (k < 0 ? "(" + std::to_string(k) + ")" : std::to_string(k));
    }
    case Op::Sin: return "sin(" + to_string(e.lhs(), names) + ")";
    case Op::Cos: return "cos(" + to_string(e.lhs(), names) + ")";
  }
  return {};
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class ExpressionParser {
 public:
  ExpressionParser(std::string_view text, std::span<const std::string> names)
      : tokens_(detail::tokenize(text)), names_(names) {}

  Expression parse() {
    if (peek().kind == K::End) throw ParseError("empty expression");
    Expression e = sum();
    if (peek().kind != K::End) fail("unexpected token '" + peek().text + "'");
    return e;
  }

 private:
  using K = detail::TokenKind;

  const detail::Token& peek() const { return tokens_[pos_]; }
  const detail::Token& next() { return tokens_[pos_++]; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg + " at offset " + std::to_string(peek().offset));
  }

  Expression sum() {
    Expression acc = unary();
    while (peek().kind == K::Plus || peek().kind == K::Minus) {
      const bool minus = next().kind == K::Minus;
      Expression t = unary();
      acc = minus ? acc - t : acc + t;
    }
    return acc;
  }

  Expression unary() {
    if (peek().kind == K::Minus) {
      next();
      return -unary();
    }
    if (peek().kind == K::Plus) {
      next();
      return unary();
    }
    return product();
  }

  Expression product() {
    Expression acc = power();
    while (peek().kind == K::Star || peek().kind == K::Slash) {
      const bool div = next().kind == K::Slash;
      Expression f = factor_operand();
      acc = div ? acc / f : acc * f;
    }
    return acc;
  }

  // Operand after * or /, which may carry its own sign (x*-y).
  Expression factor_operand() {
    if (peek().kind == K::Minus) {
      next();
      return -factor_operand();
    }
    return power();
  }

  Expression power() {
    Expression base = atom();
    if (peek().kind != K::Caret) return base;
    next();
    int sign = 1;
    bool paren = false;
    if (peek().kind == K::LParen) {
      next();
      paren = true;
    }
    if (peek().kind == K::Minus) {
      next();
      sign = -1;
    }
    if (peek().kind != K::Number || peek().text.find_first_not_of("0123456789") != std::string::npos) {
      fail("exponent must be an integer");
    }
    const int k = sign * std::stoi(next().text);
    if (paren) {
      if (peek().kind != K::RParen) fail("expected ')'");
      next();
    }
    return pow(base, k);
  }

  Expression atom() {
    const auto tok = peek();
    switch (tok.kind) {
      case K::Number: {
        next();
        double v = 0.0;
        auto res = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.text.data() + tok.text.size()) {
          fail("invalid number '" + tok.text + "'");
        }
        return Expression::constant(v);
      }
      case K::Identifier: {
        next();
        if (tok.text == "sin" || tok.text == "cos") {
          if (peek().kind != K::LParen) fail("expected '(' after " + tok.text);
          next();
          Expression arg = sum();
          if (peek().kind != K::RParen) fail("expected ')'");
          next();
          return tok.text == "sin" ? sin(arg) : cos(arg);
        }
        for (std::size_t i = 0; i < names_.size(); ++i) {
          if (names_[i] == tok.text) return Expression::variable(i);
        }
        throw ParseError("unknown identifier '" + tok.text + "'");
      }
      case K::LParen: {
        next();
        Expression e = sum();
        if (peek().kind != K::RParen) fail("expected ')'");
        next();
        return e;
      }
      default:
        fail(tok.kind == K::End ? "unexpected end of expression" : "unexpected token '" + tok.text + "'");
    }
  }

  std::vector<detail::Token> tokens_;
  std::span<const std::string> names_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression parse_expression(std::string_view text, std::span<const std::string> names) {
  return ExpressionParser(text, names).parse();
}

// ---------------------------------------------------------------------------
// Tape

namespace {

struct InstrKey {
  Op op;
  std::uint32_t a, b;
  int k;
  std::uint64_t bits;
  bool operator==(const InstrKey&) const = default;
};

struct InstrKeyHash {
  std::size_t operator()(const InstrKey& key) const {
    std::size_t h = static_cast<std::size_t>(key.op);
    auto mix = [&](std::uint64_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
    mix(key.a);
    mix(key.b);
    mix(static_cast<std::uint64_t>(key.k));
    mix(key.bits);
    return h;
  }
};

}  // namespace

Tape::Tape(std::span<const Expression> outputs) {
  std::unordered_map<const void*, std::uint32_t> by_node;
  std::unordered_map<InstrKey, std::uint32_t, InstrKeyHash> by_key;

  std::function<std::uint32_t(const Expression&)> emit = [&](const Expression& e) -> std::uint32_t {
    if (auto it = by_node.find(e.id()); it != by_node.end()) return it->second;
    Instr ins;
    ins.op = e.op();
    InstrKey key{e.op(), 0, 0, 0, 0};
    switch (e.op()) {
      case Op::Const:
        ins.value = e.constant_value();
        std::memcpy(&key.bits, &ins.value, sizeof(double));
        break;
      case Op::Var:
        ins.var = e.variable_index();
        key.bits = ins.var;
        break;
      case Op::Add: case Op::Sub: case Op::Mul: case Op::Div:
        ins.a = key.a = emit(e.lhs());
        ins.b = key.b = emit(e.rhs());
        break;
      case Op::Pow:
        ins.a = key.a = emit(e.lhs());
        ins.k = key.k = e.exponent();
        break;
      default:
        ins.a = key.a = emit(e.lhs());
        break;
    }
    std::uint32_t slot;
    if (auto it = by_key.find(key); it != by_key.end()) {
      slot = it->second;
    } else {
      slot = static_cast<std::uint32_t>(code_.size());
      code_.push_back(ins);
      by_key.emplace(key, slot);
    }
    by_node.emplace(e.id(), slot);
    return slot;
  };

  for (const auto& e : outputs) outputs_.push_back(emit(e));
}

void Tape::evaluate(std::span<const double> vars, std::span<double> out, std::vector<double>& scratch) const {
  scratch.resize(code_.size());
  double* r = scratch.data();
  for (std::size_t i = 0; i < code_.size(); ++i) {
    const Instr& ins = code_[i];
    switch (ins.op) {
      case Op::Const: r[i] = ins.value; break;
      case Op::Var: r[i] = vars[ins.var]; break;
      case Op::Add: r[i] = r[ins.a] + r[ins.b]; break;
      case Op::Sub: r[i] = r[ins.a] - r[ins.b]; break;
      case Op::Mul: r[i] = r[ins.a] * r[ins.b]; break;
      case Op::Div: r[i] = r[ins.a] / r[ins.b]; break;
      case Op::Neg: r[i] = -r[ins.a]; break;
      case Op::Pow: r[i] = ipow(r[ins.a], ins.k); break;
      case Op::Sin: r[i] = std::sin(r[ins.a]); break;
      case Op::Cos: r[i] = std::cos(r[ins.a]); break;
    }
  }
  for (std::size_t o = 0; o < outputs_.size(); ++o) out[o] = r[outputs_[o]];
}

}  // namespace qgeom::expr
