#pragma once

// Time-steppers for Hamiltonian, constrained Lagrangian and port-Hamiltonian
// systems, plus the per-sample diagnostics used to judge structure preservation.
//
// Variable numbering inside expressions:
//   CanonicalHamiltonian   q1..qn -> 0..n-1, p1..pn -> n..2n-1
//   ConstrainedLagrangian  q1..qn -> 0..n-1, v1..vn -> n..2n-1
//   PortHamiltonian        x1..xn -> 0..n-1, t -> n

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qgeom/expression.hpp"

namespace qgeom::integrators {

using expr::Expression;

std::vector<std::string> hamiltonian_variable_names(std::size_t n);
std::vector<std::string> lagrangian_variable_names(std::size_t n);
std::vector<std::string> port_variable_names(std::size_t n);

class CanonicalHamiltonian {
 public:
  CanonicalHamiltonian(std::size_t n, Expression hamiltonian);

  std::size_t dimension() const { return n_; }
  const Expression& hamiltonian() const { return h_; }
  /// dH/dq free of p and dH/dp free of q.
  bool separable() const;

 private:
  std::size_t n_;
  Expression h_;
};

/// Lagrangian L(q, v) with linear velocity constraints omega^a(q) . v = 0.
class ConstrainedLagrangian {
 public:
  /// `constraints[a][i]` is the coefficient of dq^i in omega^a; depends on q only.
  ConstrainedLagrangian(std::size_t n, Expression lagrangian, std::vector<std::vector<Expression>> constraints = {});

  std::size_t dimension() const { return n_; }
  std::size_t constraint_count() const { return omega_.size(); }
  const Expression& lagrangian() const { return l_; }
  const std::vector<std::vector<Expression>>& constraints() const { return omega_; }

 private:
  std::size_t n_;
  Expression l_;
  std::vector<std::vector<Expression>> omega_;
};

/// x' = (J(x) - R(x)) dH/dx + g(x) f(t)
class PortHamiltonian {
 public:
  struct Entry {
    std::size_t i, j;
    Expression value;
  };

  /// `j_upper`: entries with i < j (J^{ji} = -J^{ij}); `r_upper`: entries with i <= j.
  /// `g` is n x k, `f` has k entries depending on t only.
  PortHamiltonian(std::size_t n, Expression hamiltonian, std::vector<Entry> j_upper, std::vector<Entry> r_upper,
                  std::vector<std::vector<Expression>> g, std::vector<Expression> f);

  std::size_t dimension() const { return n_; }
  std::size_t input_count() const { return f_.size(); }
  const Expression& hamiltonian() const { return h_; }
  Expression J(std::size_t i, std::size_t j) const;
  Expression R(std::size_t i, std::size_t j) const;
  const Expression& g(std::size_t i, std::size_t k) const { return g_.at(i).at(k); }
  const Expression& f(std::size_t k) const { return f_.at(k); }

  /// (J - R) dH/dx + g f as expressions over (x, t).
  std::vector<Expression> vector_field() const;
  /// -dH^T R dH + dH^T g f, the power supplied minus dissipated.
  Expression supplied_power() const;

 private:
  std::size_t n_;
  Expression h_;
  std::vector<Expression> j_;  // dense n x n, antisymmetric
  std::vector<Expression> r_;  // dense n x n, symmetric
  std::vector<std::vector<Expression>> g_;
  std::vector<Expression> f_;
};

using MechSystem = std::variant<CanonicalHamiltonian, ConstrainedLagrangian, PortHamiltonian>;

/// `second` holds p (Hamiltonian), v (Lagrangian) or is empty (port: x lives in q).
struct State {
  double t = 0.0;
  std::vector<double> q;
  std::vector<double> second;
  std::vector<double> lambda;
};

struct NewtonOptions {
  double tolerance = 1e-12;
  int max_iterations = 50;
  int max_halvings = 8;
};

State step_explicit_euler(const CanonicalHamiltonian& sys, const State& s, double h);
State step_symplectic_euler(const CanonicalHamiltonian& sys, const State& s, double h);
State step_verlet(const CanonicalHamiltonian& sys, const State& s, double h);

/// First-order implicit Lagrange-Dirac step:
///   q+ = q + h v+,  p+ = p + h (dL/dq(q, v+) + lambda . omega(q)),
///   p+ = dL/dv(q+, v+),  omega(q+) . v+ = 0.
State step_dirac1(const ConstrainedLagrangian& sys, const State& s, double h);

/// Euler baselines on the constrained system in phase space with the multiplier
/// taken from the continuous constraint-force formula at the current state.
State step_explicit_euler(const ConstrainedLagrangian& sys, const State& s, double h);
State step_symplectic_euler(const ConstrainedLagrangian& sys, const State& s, double h);

/// Implicit midpoint on x' = (J - R) dH/dx + g f(t), input sampled at t + h/2.
State step_port_hamiltonian(const PortHamiltonian& sys, const State& s, double h);

enum class Method { ExplicitEuler, SymplecticEuler, Verlet, Dirac1, ImplicitMidpoint };

std::string to_string(Method m);
std::optional<Method> parse_method(std::string_view name);
bool compatible(const MechSystem& sys, Method m);

enum class SystemKind { Hamiltonian, Lagrangian, Port };

SystemKind kind_of(const MechSystem& sys);
std::size_t dimension_of(const MechSystem& sys);

struct Sample {
  State state;
  double energy = 0.0;
  std::optional<double> constraint_residual;
  std::optional<double> power_residual;
};

struct TrajectoryRecord {
  SystemKind kind = SystemKind::Hamiltonian;
  std::size_t dimension = 0;
  std::vector<Sample> samples;
};

/// Number of steps of size h that fit in [0, T], tolerant to rounding in T/h.
std::size_t step_count(double h, double T);

/// Steps from s0 to T, keeping every `stride`-th state. Step failures abort with
/// a SolverError carrying the failing step index.
TrajectoryRecord simulate(const MechSystem& sys, Method method, const State& s0, double h, double T,
                          std::size_t stride = 1);

/// Per-interval defect (H(x_{k+1}) - H(x_k))/dt - P(x_mid, t_mid), P the supplied power.
std::vector<double> power_balance_residual(const PortHamiltonian& sys, const TrajectoryRecord& rec);

/// H for Hamiltonian and port systems; v . dL/dv - L for Lagrangian ones.
double energy(const MechSystem& sys, const State& s);
/// max_a |omega^a(q) . v|; 0 without constraints.
double constraint_residual(const ConstrainedLagrangian& sys, const State& s);
/// dL/dv at the state.
std::vector<double> momentum(const ConstrainedLagrangian& sys, const State& s);

}  // namespace qgeom::integrators
