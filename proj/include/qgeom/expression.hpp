#pragma once

// Differentiable expression trees over numbered variables. Used for the
// Hamiltonians, Lagrangians and port matrices of the numeric integrators.

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qgeom::expr {

enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos };

class Expression {
 public:
  /// The constant 0.
  Expression();

  static Expression constant(double value);
  static Expression variable(std::size_t index);

  Op op() const;
  bool is_constant() const { return op() == Op::Const; }
  /// Valid for Const nodes.
  double constant_value() const;
  /// Valid for Var nodes.
  std::size_t variable_index() const;
  /// Valid for Pow nodes.
  int exponent() const;
  Expression lhs() const;
  Expression rhs() const;

  Expression derivative(std::size_t var) const;
  double evaluate(std::span<const double> vars) const;
  std::set<std::size_t> variables() const;
  bool depends_on(std::size_t var) const;
  Expression substitute(const std::map<std::size_t, Expression>& replacement) const;

  /// Identity of the underlying node (shared subtrees compare equal).
  const void* id() const { return node_.get(); }

  friend Expression operator+(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a, const Expression& b);
  friend Expression operator*(const Expression& a, const Expression& b);
  friend Expression operator/(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a);
  friend Expression pow(const Expression& a, int k);
  friend Expression sin(const Expression& a);
  friend Expression cos(const Expression& a);

  Expression& operator+=(const Expression& b) { return *this = *this + b; }
  Expression& operator-=(const Expression& b) { return *this = *this - b; }
  Expression& operator*=(const Expression& b) { return *this = *this * b; }

 private:
  struct Node;
  explicit Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Expression make(Op op, Expression a, Expression b = Expression(), int k = 0);

  std::shared_ptr<const Node> node_;
};

Expression operator+(const Expression& a, double b);
Expression operator*(double a, const Expression& b);

std::vector<Expression> gradient(const Expression& e, std::span<const std::size_t> vars);

std::string to_string(const Expression& e, std::span<const std::string> names);

/// Grammar: numbers (integer, decimal, scientific), identifiers from `names`,
/// + - * / ^ (integer exponent), unary minus, sin(...), cos(...), parentheses.
Expression parse_expression(std::string_view text, std::span<const std::string> names);

/// Flattened evaluation program for a batch of expressions with common
/// subexpressions shared. Immutable; scratch storage is supplied by the caller.
class Tape {
 public:
  explicit Tape(std::span<const Expression> outputs);

  std::size_t output_count() const { return outputs_.size(); }
  std::size_t instruction_count() const { return code_.size(); }

  void evaluate(std::span<const double> vars, std::span<double> out, std::vector<double>& scratch) const;

 private:
  struct Instr {
    Op op;
    std::uint32_t a = 0, b = 0;
    int k = 0;
    double value = 0.0;
    std::size_t var = 0;
  };
  std::vector<Instr> code_;
  std::vector<std::uint32_t> outputs_;
};

}  // namespace qgeom::expr
