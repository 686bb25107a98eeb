#include "qgeom/integrators.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "newton.hpp"
#include "qgeom/errors.hpp"

namespace qgeom::integrators {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Systems

namespace {

std::vector<std::string> numbered(std::string_view prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= n; ++i) out.push_back(std::string(prefix) + std::to_string(i));
  return out;
}

void require_vars_below(const Expression& e, std::size_t limit, const std::string& what) {
  for (auto v : e.variables()) {
    if (v >= limit) throw DomainError(what + " depends on a variable it may not use");
  }
}

}  // namespace

std::vector<std::string> hamiltonian_variable_names(std::size_t n) {
  auto q = numbered("q", n);
  auto p = numbered("p", n);
  q.insert(q.end(), p.begin(), p.end());
  return q;
}

std::vector<std::string> lagrangian_variable_names(std::size_t n) {
  auto q = numbered("q", n);
  auto v = numbered("v", n);
  q.insert(q.end(), v.begin(), v.end());
  return q;
}

std::vector<std::string> port_variable_names(std::size_t n) {
  auto x = numbered("x", n);
  x.push_back("t");
  return x;
}

CanonicalHamiltonian::CanonicalHamiltonian(std::size_t n, Expression hamiltonian) : n_(n), h_(std::move(hamiltonian)) {
  if (n == 0) throw DomainError("system dimension must be positive");
  require_vars_below(h_, 2 * n, "H");
}

bool CanonicalHamiltonian::separable() const {
  for (std::size_t i = 0; i < n_; ++i) {
    const auto hq = h_.derivative(i).variables();
    const auto hp = h_.derivative(n_ + i).variables();
    if (std::any_of(hq.begin(), hq.end(), [&](auto v) { return v >= n_; })) return false;
    if (std::any_of(hp.begin(), hp.end(), [&](auto v) { return v < n_; })) return false;
  }
  return true;
}

ConstrainedLagrangian::ConstrainedLagrangian(std::size_t n, Expression lagrangian,
                                             std::vector<std::vector<Expression>> constraints)
    : n_(n), l_(std::move(lagrangian)), omega_(std::move(constraints)) {
  if (n == 0) throw DomainError("system dimension must be positive");
  require_vars_below(l_, 2 * n, "L");
  if (omega_.size() > n) throw DomainError("more constraints than degrees of freedom");
  for (const auto& w : omega_) {
    if (w.size() != n) throw DomainError("constraint one-form needs one coefficient per coordinate");
    for (const auto& c : w) require_vars_below(c, n, "constraint coefficient");
  }
}

PortHamiltonian::PortHamiltonian(std::size_t n, Expression hamiltonian, std::vector<Entry> j_upper,
                                 std::vector<Entry> r_upper, std::vector<std::vector<Expression>> g,
                                 std::vector<Expression> f)
    : n_(n), h_(std::move(hamiltonian)), j_(n * n), r_(n * n), g_(std::move(g)), f_(std::move(f)) {
  if (n == 0) throw DomainError("system dimension must be positive");
  require_vars_below(h_, n, "H");
  for (auto& e : j_upper) {
    if (e.i >= e.j || e.j >= n) throw DomainError("J entries must satisfy i < j < n");
    require_vars_below(e.value, n, "J");
    j_[e.i * n + e.j] = e.value;
    j_[e.j * n + e.i] = -e.value;
  }
  for (auto& e : r_upper) {
    if (e.i > e.j || e.j >= n) throw DomainError("R entries must satisfy i <= j < n");
    require_vars_below(e.value, n, "R");
    r_[e.i * n + e.j] = e.value;
    r_[e.j * n + e.i] = e.value;
  }
  if (g_.empty()) g_.assign(n, std::vector<Expression>(f_.size()));
  if (g_.size() != n) throw DomainError("g must have n rows");
  for (const auto& row : g_) {
    if (row.size() != f_.size()) throw DomainError("g must have one column per input");
    for (const auto& e : row) require_vars_below(e, n, "g");
  }
  for (const auto& e : f_) {
    for (auto v : e.variables()) {
      if (v != n) throw DomainError("inputs f may depend on t only");
    }
  }
}

Expression PortHamiltonian::J(std::size_t i, std::size_t j) const { return j_.at(i * n_ + j); }
Expression PortHamiltonian::R(std::size_t i, std::size_t j) const { return r_.at(i * n_ + j); }

std::vector<Expression> PortHamiltonian::vector_field() const {
  std::vector<Expression> grad;
  for (std::size_t i = 0; i < n_; ++i) grad.push_back(h_.derivative(i));
  std::vector<Expression> out;
  for (std::size_t i = 0; i < n_; ++i) {
    Expression acc;
    for (std::size_t j = 0; j < n_; ++j) acc += (j_[i * n_ + j] - r_[i * n_ + j]) * grad[j];
    for (std::size_t k = 0; k < f_.size(); ++k) acc += g_[i][k] * f_[k];
    out.push_back(acc);
  }
  return out;
}

Expression PortHamiltonian::supplied_power() const {
  std::vector<Expression> grad;
  for (std::size_t i = 0; i < n_; ++i) grad.push_back(h_.derivative(i));
  Expression acc;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) acc -= grad[i] * r_[i * n_ + j] * grad[j];
    for (std::size_t k = 0; k < f_.size(); ++k) acc += grad[i] * g_[i][k] * f_[k];
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Compiled models

namespace {

class HamiltonianModel {
 public:
  explicit HamiltonianModel(const CanonicalHamiltonian& sys) : n_(sys.dimension()), tape_(outputs(sys)) {
    separable_ = sys.separable();
    const auto& h = sys.hamiltonian();
    for (std::size_t i = 0; i < n_ && !force_implicit_; ++i) {
      for (auto v : h.derivative(i).variables()) force_implicit_ = force_implicit_ || v >= n_;
    }
    out_.resize(tape_.output_count());
  }

  void eval(std::span<const double> q, std::span<const double> p) {
    vars_.assign(q.begin(), q.end());
    vars_.insert(vars_.end(), p.begin(), p.end());
    tape_.evaluate(vars_, out_, scratch_);
  }

  double H() const { return out_[0]; }
  double Hq(std::size_t i) const { return out_[1 + i]; }
  double Hp(std::size_t i) const { return out_[1 + n_ + i]; }
  double Hqp(std::size_t i, std::size_t j) const { return out_[1 + 2 * n_ + i * n_ + j]; }
  std::size_t n() const { return n_; }
  bool separable() const { return separable_; }
  /// dH/dq depends on p, so the symplectic Euler momentum update is implicit.
  bool implicit_momentum() const { return force_implicit_; }

 private:
  static std::vector<Expression> outputs(const CanonicalHamiltonian& sys) {
    const std::size_t n = sys.dimension();
    const auto& h = sys.hamiltonian();
    std::vector<Expression> out{h};
    std::vector<Expression> hq;
    for (std::size_t i = 0; i < n; ++i) hq.push_back(h.derivative(i));
    out.insert(out.end(), hq.begin(), hq.end());
    for (std::size_t i = 0; i < n; ++i) out.push_back(h.derivative(n + i));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) out.push_back(hq[i].derivative(n + j));
    }
    return out;
  }

  std::size_t n_;
  expr::Tape tape_;
  bool separable_ = false;
  bool force_implicit_ = false;
  std::vector<double> vars_, out_, scratch_;
};

class LagrangianModel {
 public:
  explicit LagrangianModel(const ConstrainedLagrangian& sys)
      : n_(sys.dimension()), m_(sys.constraint_count()), tape_(outputs(sys)) {
    out_.resize(tape_.output_count());
  }

  void eval(std::span<const double> q, std::span<const double> v) {
    vars_.assign(q.begin(), q.end());
    vars_.insert(vars_.end(), v.begin(), v.end());
    tape_.evaluate(vars_, out_, scratch_);
  }

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  double L() const { return out_[0]; }
  double Lq(std::size_t i) const { return out_[1 + i]; }
  double P(std::size_t i) const { return out_[1 + n_ + i]; }
  /// d^2 L / dv_i dv_j
  double Pv(std::size_t i, std::size_t j) const { return out_[1 + 2 * n_ + i * n_ + j]; }
  /// d^2 L / dv_i dq_j
  double Pq(std::size_t i, std::size_t j) const { return out_[1 + 2 * n_ + n_ * n_ + i * n_ + j]; }
  double omega(std::size_t a, std::size_t i) const { return out_[1 + 2 * n_ + 2 * n_ * n_ + a * n_ + i]; }
  /// d omega^a_i / dq_j
  double domega(std::size_t a, std::size_t i, std::size_t j) const {
    return out_[1 + 2 * n_ + 2 * n_ * n_ + m_ * n_ + (a * n_ + i) * n_ + j];
  }

  VectorXd momentum() const {
    VectorXd p(n_);
    for (std::size_t i = 0; i < n_; ++i) p[i] = P(i);
    return p;
  }
  MatrixXd mass() const {
    MatrixXd M(n_, n_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) M(i, j) = Pv(i, j);
    return M;
  }
  MatrixXd omega_matrix() const {
    MatrixXd W(m_, n_);
    for (std::size_t a = 0; a < m_; ++a)
      for (std::size_t i = 0; i < n_; ++i) W(a, i) = omega(a, i);
    return W;
  }
  double energy(std::span<const double> v) const {
    double e = -L();
    for (std::size_t i = 0; i < n_; ++i) e += v[i] * P(i);
    return e;
  }
  double constraint_residual(std::span<const double> v) const {
    double worst = 0.0;
    for (std::size_t a = 0; a < m_; ++a) {
      double c = 0.0;
      for (std::size_t i = 0; i < n_; ++i) c += omega(a, i) * v[i];
      worst = std::max(worst, std::abs(c));
    }
    return worst;
  }

 private:
  static std::vector<Expression> outputs(const ConstrainedLagrangian& sys) {
    const std::size_t n = sys.dimension();
    const auto& l = sys.lagrangian();
    std::vector<Expression> out{l};
    std::vector<Expression> p;
    for (std::size_t i = 0; i < n; ++i) out.push_back(l.derivative(i));
    for (std::size_t i = 0; i < n; ++i) p.push_back(l.derivative(n + i));
    out.insert(out.end(), p.begin(), p.end());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out.push_back(p[i].derivative(n + j));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out.push_back(p[i].derivative(j));
    for (const auto& w : sys.constraints())
      for (const auto& c : w) out.push_back(c);
    for (const auto& w : sys.constraints())
      for (const auto& c : w)
        for (std::size_t j = 0; j < n; ++j) out.push_back(c.derivative(j));
    return out;
  }

  std::size_t n_, m_;
  expr::Tape tape_;
  std::vector<double> vars_, out_, scratch_;
};

class PortModel {
 public:
  explicit PortModel(const PortHamiltonian& sys) : n_(sys.dimension()), tape_(outputs(sys)) {
    out_.resize(tape_.output_count());
  }

  void eval(std::span<const double> x, double t) {
    vars_.assign(x.begin(), x.end());
    vars_.push_back(t);
    tape_.evaluate(vars_, out_, scratch_);
  }

  double H() const { return out_[0]; }
  double F(std::size_t i) const { return out_[1 + i]; }
  double dF(std::size_t i, std::size_t j) const { return out_[1 + n_ + i * n_ + j]; }
  double power() const { return out_[1 + n_ + n_ * n_]; }
  double R(std::size_t i, std::size_t j) const { return out_[2 + n_ + n_ * n_ + i * n_ + j]; }
  std::size_t n() const { return n_; }

 private:
  static std::vector<Expression> outputs(const PortHamiltonian& sys) {
    const std::size_t n = sys.dimension();
    std::vector<Expression> out{sys.hamiltonian()};
    const auto f = sys.vector_field();
    out.insert(out.end(), f.begin(), f.end());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out.push_back(f[i].derivative(j));
    out.push_back(sys.supplied_power());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out.push_back(sys.R(i, j));
    return out;
  }

  std::size_t n_;
  expr::Tape tape_;
  std::vector<double> vars_, out_, scratch_;
};

void require_shape(const State& s, std::size_t nq, std::size_t nsecond, const char* what) {
  if (s.q.size() != nq || s.second.size() != nsecond) {
    throw DomainError(std::string(what) + ": state dimensions do not match the system");
  }
}

void require_finite(const State& s) {
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(s.q) || !finite(s.second) || !finite(s.lambda)) throw SolverError("step produced a non-finite state");
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// ---- Hamiltonian steppers --------------------------------------------------

State explicit_euler(HamiltonianModel& model, const State& s, double h) {
  const std::size_t n = model.n();
  model.eval(s.q, s.second);
  State out{s.t + h, s.q, s.second, {}};
  for (std::size_t i = 0; i < n; ++i) {
    out.q[i] += h * model.Hp(i);
    out.second[i] -= h * model.Hq(i);
  }
  return out;
}

State symplectic_euler(HamiltonianModel& model, const State& s, double h) {
  const std::size_t n = model.n();
  State out{s.t + h, s.q, s.second, {}};
  if (!model.implicit_momentum()) {
    model.eval(s.q, s.second);
    for (std::size_t i = 0; i < n; ++i) out.second[i] -= h * model.Hq(i);
  } else {
    VectorXd z = Eigen::Map<const VectorXd>(s.second.data(), n);
    auto fn = [&](const VectorXd& p1, VectorXd& r, MatrixXd* jac) {
      model.eval(s.q, std::span<const double>(p1.data(), n));
      for (std::size_t i = 0; i < n; ++i) r[i] = p1[i] - s.second[i] + h * model.Hq(i);
      if (jac) {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) (*jac)(i, j) = (i == j ? 1.0 : 0.0) + h * model.Hqp(i, j);
      }
    };
    detail::newton_solve(z, fn, NewtonOptions{}, "symplectic Euler");
    out.second = to_std(z);
  }
  model.eval(s.q, out.second);
  for (std::size_t i = 0; i < n; ++i) out.q[i] += h * model.Hp(i);
  return out;
}

State verlet(HamiltonianModel& model, const State& s, double h) {
  if (!model.separable()) throw DomainError("Verlet requires a separable Hamiltonian H = T(p) + V(q)");
  const std::size_t n = model.n();
  State out{s.t + h, s.q, s.second, {}};
  model.eval(out.q, out.second);
  for (std::size_t i = 0; i < n; ++i) out.second[i] -= 0.5 * h * model.Hq(i);
  model.eval(out.q, out.second);
  for (std::size_t i = 0; i < n; ++i) out.q[i] += h * model.Hp(i);
  model.eval(out.q, out.second);
  for (std::size_t i = 0; i < n; ++i) out.second[i] -= 0.5 * h * model.Hq(i);
  return out;
}

// ---- Constrained Lagrangian steppers ----------------------------------------

std::vector<double> initial_multipliers(const State& s, std::size_t m) {
  if (s.lambda.size() == m) return s.lambda;
  return std::vector<double>(m, 0.0);
}

State dirac1(LagrangianModel& model, const State& s, double h) {
  const std::size_t n = model.n();
  const std::size_t m = model.m();
  if (h == 0.0) return s;

  model.eval(s.q, s.second);
  const VectorXd p0 = model.momentum();
  const MatrixXd omega0 = model.omega_matrix();

  VectorXd z(n + m);
  for (std::size_t i = 0; i < n; ++i) z[i] = s.second[i];
  const auto lam0 = initial_multipliers(s, m);
  for (std::size_t a = 0; a < m; ++a) z[n + a] = lam0[a];

  std::vector<double> q1(n);
  // Unknowns z = (v+, lambda); q+ = q + h v+ is eliminated.
  auto fn = [&](const VectorXd& zz, VectorXd& r, MatrixXd* jac) {
    std::span<const double> v1(zz.data(), n);
    for (std::size_t i = 0; i < n; ++i) q1[i] = s.q[i] + h * v1[i];

    // Legendre transform and constraint at (q+, v+)
    model.eval(q1, v1);
    for (std::size_t i = 0; i < n; ++i) r[i] = model.P(i) - p0[i];
    for (std::size_t a = 0; a < m; ++a) {
      double c = 0.0;
      for (std::size_t i = 0; i < n; ++i) c += model.omega(a, i) * v1[i];
      r[n + a] = c;
    }
    if (jac) {
      jac->setZero();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) (*jac)(i, j) = model.Pv(i, j) + h * model.Pq(i, j);
      for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t j = 0; j < n; ++j) {
          double d = model.omega(a, j);
          for (std::size_t i = 0; i < n; ++i) d += h * model.domega(a, i, j) * v1[i];
          (*jac)(n + a, j) = d;
        }
      }
    }

    // Force term at (q, v+)
    model.eval(s.q, v1);
    for (std::size_t i = 0; i < n; ++i) {
      double force = model.Lq(i);
      for (std::size_t a = 0; a < m; ++a) force += zz[n + a] * omega0(a, i);
      r[i] -= h * force;
    }
    if (jac) {
      for (std::size_t i = 0; i < n; ++i) {
        // d(Lq_i)/dv_j = d^2L/dq_i dv_j = Pq(j, i)
        for (std::size_t j = 0; j < n; ++j) (*jac)(i, j) -= h * model.Pq(j, i);
        for (std::size_t a = 0; a < m; ++a) (*jac)(i, n + a) = -h * omega0(a, i);
      }
    }
  };
  detail::newton_solve(z, fn, NewtonOptions{}, "Dirac-1");

  State out;
  out.t = s.t + h;
  out.second.assign(z.data(), z.data() + n);
  out.q.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.q[i] = s.q[i] + h * out.second[i];
  out.lambda.assign(z.data() + n, z.data() + n + m);
  return out;
}

// Multiplier keeping d/dt (omega(q) . v) = 0 along the continuous flow, given a
// model evaluated at (q, v).
VectorXd constraint_multiplier(const LagrangianModel& model, std::span<const double> v) {
  const std::size_t n = model.n();
  const std::size_t m = model.m();
  if (m == 0) return VectorXd(0);
  const MatrixXd M = model.mass();
  const MatrixXd W = model.omega_matrix();
  VectorXd free_force(n);
  for (std::size_t i = 0; i < n; ++i) {
    double f = model.Lq(i);
    for (std::size_t j = 0; j < n; ++j) f -= model.Pq(i, j) * v[j];
    free_force[i] = f;
  }
  Eigen::PartialPivLU<MatrixXd> lu(M);
  const VectorXd acc_free = lu.solve(free_force);
  const MatrixXd minv_wt = lu.solve(W.transpose());
  VectorXd rhs(m);
  for (std::size_t a = 0; a < m; ++a) {
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) quad += model.domega(a, i, j) * v[j] * v[i];
    rhs[a] = -(quad + W.row(a).dot(acc_free));
  }
  const VectorXd lambda = (W * minv_wt).partialPivLu().solve(rhs);
  if (!lambda.allFinite()) throw SolverError("constraint multiplier is not defined (singular constraint mass)");
  return lambda;
}

// v with dL/dv(q, v) = p, starting from `guess`.
std::vector<double> inverse_legendre(LagrangianModel& model, std::span<const double> q, const VectorXd& p,
                                     std::span<const double> guess) {
  const std::size_t n = model.n();
  VectorXd z = Eigen::Map<const VectorXd>(guess.data(), n);
  auto fn = [&](const VectorXd& v, VectorXd& r, MatrixXd* jac) {
    model.eval(q, std::span<const double>(v.data(), n));
    for (std::size_t i = 0; i < n; ++i) r[i] = model.P(i) - p[i];
    if (jac) *jac = model.mass();
  };
  detail::newton_solve(z, fn, NewtonOptions{}, "inverse Legendre transform");
  return to_std(z);
}

State constrained_explicit_euler(LagrangianModel& model, const State& s, double h) {
  const std::size_t n = model.n();
  if (h == 0.0) return s;
  model.eval(s.q, s.second);
  const VectorXd lambda = constraint_multiplier(model, s.second);
  VectorXd p1 = model.momentum();
  for (std::size_t i = 0; i < n; ++i) {
    double force = model.Lq(i);
    for (std::size_t a = 0; a < model.m(); ++a) force += lambda[a] * model.omega(a, i);
    p1[i] += h * force;
  }
  State out;
  out.t = s.t + h;
  out.q = s.q;
  for (std::size_t i = 0; i < n; ++i) out.q[i] += h * s.second[i];
  out.second = inverse_legendre(model, out.q, p1, s.second);
  out.lambda = to_std(lambda);
  return out;
}

State constrained_symplectic_euler(LagrangianModel& model, const State& s, double h) {
  const std::size_t n = model.n();
  const std::size_t m = model.m();
  if (h == 0.0) return s;
  model.eval(s.q, s.second);
  const VectorXd lambda = constraint_multiplier(model, s.second);
  const VectorXd p0 = model.momentum();
  VectorXd constraint_force = VectorXd::Zero(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < m; ++a) constraint_force[i] += lambda[a] * model.omega(a, i);

  // p+ = p + h (dL/dq(q, v+) + lambda . omega(q)), p+ = dL/dv(q, v+)
  VectorXd z = Eigen::Map<const VectorXd>(s.second.data(), n);
  auto fn = [&](const VectorXd& v1, VectorXd& r, MatrixXd* jac) {
    model.eval(s.q, std::span<const double>(v1.data(), n));
    for (std::size_t i = 0; i < n; ++i) r[i] = model.P(i) - p0[i] - h * (model.Lq(i) + constraint_force[i]);
    if (jac) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) (*jac)(i, j) = model.Pv(i, j) - h * model.Pq(j, i);
    }
  };
  detail::newton_solve(z, fn, NewtonOptions{}, "symplectic Euler (constrained)");
  model.eval(s.q, std::span<const double>(z.data(), n));
  const VectorXd p1 = model.momentum();
  State out;
  out.t = s.t + h;
  out.q = s.q;
  for (std::size_t i = 0; i < n; ++i) out.q[i] += h * z[i];
  // The state carries (q+, p+); its velocity is the one matching p+ at q+.
  out.second = inverse_legendre(model, out.q, p1, std::span<const double>(z.data(), n));
  out.lambda = to_std(lambda);
  return out;
}

// ---- Port-Hamiltonian -------------------------------------------------------

State implicit_midpoint(PortModel& model, const State& s, double h) {
  const std::size_t n = model.n();
  if (h == 0.0) return s;
  const double t_mid = s.t + 0.5 * h;
  std::vector<double> mid(n);
  VectorXd z = Eigen::Map<const VectorXd>(s.q.data(), n);
  auto fn = [&](const VectorXd& x1, VectorXd& r, MatrixXd* jac) {
    for (std::size_t i = 0; i < n; ++i) mid[i] = 0.5 * (s.q[i] + x1[i]);
    model.eval(mid, t_mid);
    for (std::size_t i = 0; i < n; ++i) r[i] = x1[i] - s.q[i] - h * model.F(i);
    if (jac) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) (*jac)(i, j) = (i == j ? 1.0 : 0.0) - 0.5 * h * model.dF(i, j);
    }
  };
  detail::newton_solve(z, fn, NewtonOptions{}, "implicit midpoint");
  State out;
  out.t = s.t + h;
  out.q = to_std(z);
  return out;
}

double power_defect(PortModel& model, const State& a, const State& b) {
  const std::size_t n = model.n();
  const double dt = b.t - a.t;
  model.eval(a.q, a.t);
  const double h0 = model.H();
  model.eval(b.q, b.t);
  const double h1 = model.H();
  std::vector<double> mid(n);
  for (std::size_t i = 0; i < n; ++i) mid[i] = 0.5 * (a.q[i] + b.q[i]);
  model.eval(mid, 0.5 * (a.t + b.t));
  return (h1 - h0) / dt - model.power();
}

void check_port_dissipation(PortModel& model, const State& s) {
  const std::size_t n = model.n();
  model.eval(s.q, s.t);
  MatrixXd r(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) r(i, j) = model.R(i, j);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(r);
  if (eig.eigenvalues().minCoeff() < -1e-12) throw DomainError("R is not positive semidefinite at the initial state");
}

void check_constraint_rank(LagrangianModel& model, const State& s) {
  if (model.m() == 0) return;
  model.eval(s.q, s.second);
  Eigen::FullPivLU<MatrixXd> lu(model.omega_matrix());
  if (static_cast<std::size_t>(lu.rank()) != model.m()) {
    throw DomainError("constraint one-forms are linearly dependent at the initial state");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Public steppers

State step_explicit_euler(const CanonicalHamiltonian& sys, const State& s, double h) {
  require_shape(s, sys.dimension(), sys.dimension(), "explicit Euler");
  HamiltonianModel model(sys);
  State out = explicit_euler(model, s, h);
  require_finite(out);
  return out;
}

State step_symplectic_euler(const CanonicalHamiltonian& sys, const State& s, double h) {
  require_shape(s, sys.dimension(), sys.dimension(), "symplectic Euler");
  HamiltonianModel model(sys);
  State out = symplectic_euler(model, s, h);
  require_finite(out);
  return out;
}

State step_verlet(const CanonicalHamiltonian& sys, const State& s, double h) {
  require_shape(s, sys.dimension(), sys.dimension(), "Verlet");
  HamiltonianModel model(sys);
  State out = verlet(model, s, h);
  require_finite(out);
  return out;
}

State step_dirac1(const ConstrainedLagrangian& sys, const State& s, double h) {
  require_shape(s, sys.dimension(), sys.dimension(), "Dirac-1");
  LagrangianModel model(sys);
  State out = dirac1(model, s, h);
  require_finite(out);
  return out;
}

State step_explicit_euler(const ConstrainedLagrangian& sys, const State& s, double h) {
  require_shape(s, sys.dimension(), sys.dimension(), "explicit Euler");
  LagrangianModel model(sys);
  State out = constrained_explicit_euler(model, s, h);
  require_finite(out);
  return out;
}

State step_symplectic_euler(const ConstrainedLagrangian& sys, const State& s, double h) {
  require_shape(s, sys.dimension(), sys.dimension(), "symplectic Euler");
  LagrangianModel model(sys);
  State out = constrained_symplectic_euler(model, s, h);
  require_finite(out);
  return out;
}

State step_port_hamiltonian(const PortHamiltonian& sys, const State& s, double h) {
  require_shape(s, sys.dimension(), 0, "implicit midpoint");
  PortModel model(sys);
  State out = implicit_midpoint(model, s, h);
  require_finite(out);
  return out;
}

// ---------------------------------------------------------------------------
// Methods and simulation

std::string to_string(Method m) {
  switch (m) {
    case Method::ExplicitEuler: return "explicit-euler";
    case Method::SymplecticEuler: return "symplectic-euler";
    case Method::Verlet: return "verlet";
    case Method::Dirac1: return "dirac1";
    case Method::ImplicitMidpoint: return "midpoint";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (auto m : {Method::ExplicitEuler, Method::SymplecticEuler, Method::Verlet, Method::Dirac1,
                 Method::ImplicitMidpoint}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

SystemKind kind_of(const MechSystem& sys) {
  switch (sys.index()) {
    case 0: return SystemKind::Hamiltonian;
    case 1: return SystemKind::Lagrangian;
    default: return SystemKind::Port;
  }
}

std::size_t dimension_of(const MechSystem& sys) {
  return std::visit([](const auto& s) { return s.dimension(); }, sys);
}

bool compatible(const MechSystem& sys, Method m) {
  switch (kind_of(sys)) {
    case SystemKind::Hamiltonian:
      return m == Method::ExplicitEuler || m == Method::SymplecticEuler || m == Method::Verlet;
    case SystemKind::Lagrangian:
      return m == Method::ExplicitEuler || m == Method::SymplecticEuler || m == Method::Dirac1;
    case SystemKind::Port: return m == Method::ImplicitMidpoint;
  }
  return false;
}

std::size_t step_count(double h, double T) {
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("step size must be positive");
  if (!(T >= 0.0) || !std::isfinite(T)) throw DomainError("horizon must be non-negative");
  const double ratio = T / h;
  return static_cast<std::size_t>(std::floor(ratio + 1e-9 * std::max(1.0, ratio)));
}

TrajectoryRecord simulate(const MechSystem& sys, Method method, const State& s0, double h, double T,
                          std::size_t stride) {
  if (!compatible(sys, method)) {
    throw DomainError("method " + to_string(method) + " does not apply to this kind of system");
  }
  if (stride == 0) throw DomainError("stride must be positive");
  const std::size_t steps = step_count(h, T);

  TrajectoryRecord rec;
  rec.kind = kind_of(sys);
  rec.dimension = dimension_of(sys);
  rec.samples.reserve(steps / stride + 1);

  auto run = [&](auto&& model, auto&& step, auto&& diagnose) {
    State s = s0;
    rec.samples.push_back(diagnose(model, s, nullptr));
    for (std::size_t k = 1; k <= steps; ++k) {
      State next;
      try {
        next = step(model, s, h);
        require_finite(next);
      } catch (const SolverError& e) {
        throw SolverError("step " + std::to_string(k) + ": " + e.what(), k);
      }
      next.t = s0.t + static_cast<double>(k) * h;
      if (k % stride == 0) rec.samples.push_back(diagnose(model, next, &s));
      s = std::move(next);
    }
  };

  switch (rec.kind) {
    case SystemKind::Hamiltonian: {
      const auto& ham = std::get<CanonicalHamiltonian>(sys);
      require_shape(s0, ham.dimension(), ham.dimension(), "simulate");
      HamiltonianModel model(ham);
      auto diagnose = [](HamiltonianModel& m, const State& s, const State*) {
        m.eval(s.q, s.second);
        return Sample{s, m.H(), std::nullopt, std::nullopt};
      };
      if (method == Method::ExplicitEuler) run(model, explicit_euler, diagnose);
      else if (method == Method::SymplecticEuler) run(model, symplectic_euler, diagnose);
      else run(model, verlet, diagnose);
      break;
    }
    case SystemKind::Lagrangian: {
      const auto& lag = std::get<ConstrainedLagrangian>(sys);
      require_shape(s0, lag.dimension(), lag.dimension(), "simulate");
      LagrangianModel model(lag);
      check_constraint_rank(model, s0);
      auto diagnose = [](LagrangianModel& m, const State& s, const State*) {
        m.eval(s.q, s.second);
        return Sample{s, m.energy(s.second), m.constraint_residual(s.second), std::nullopt};
      };
      if (method == Method::ExplicitEuler) run(model, constrained_explicit_euler, diagnose);
      else if (method == Method::SymplecticEuler) run(model, constrained_symplectic_euler, diagnose);
      else run(model, dirac1, diagnose);
      break;
    }
    case SystemKind::Port: {
      const auto& port = std::get<PortHamiltonian>(sys);
      require_shape(s0, port.dimension(), 0, "simulate");
      PortModel model(port);
      check_port_dissipation(model, s0);
      // The power column holds the defect of the last step before each sample.
      State previous;
      auto step = [&](PortModel& m, const State& s, double hh) {
        previous = s;
        return implicit_midpoint(m, s, hh);
      };
      auto diagnose = [&](PortModel& m, const State& s, const State* prev) {
        std::optional<double> defect;
        if (prev) defect = power_defect(m, previous, s);
        m.eval(s.q, s.t);
        return Sample{s, m.H(), std::nullopt, defect};
      };
      run(model, step, diagnose);
      break;
    }
  }
  return rec;
}

std::vector<double> power_balance_residual(const PortHamiltonian& sys, const TrajectoryRecord& rec) {
  if (rec.kind != SystemKind::Port || rec.dimension != sys.dimension()) {
    throw DomainError("power balance needs a port-Hamiltonian record of matching dimension");
  }
  PortModel model(sys);
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < rec.samples.size(); ++k) {
    out.push_back(power_defect(model, rec.samples[k].state, rec.samples[k + 1].state));
  }
  return out;
}

double energy(const MechSystem& sys, const State& s) {
  switch (kind_of(sys)) {
    case SystemKind::Hamiltonian: {
      HamiltonianModel m(std::get<CanonicalHamiltonian>(sys));
      m.eval(s.q, s.second);
      return m.H();
    }
    case SystemKind::Lagrangian: {
      LagrangianModel m(std::get<ConstrainedLagrangian>(sys));
      m.eval(s.q, s.second);
      return m.energy(s.second);
    }
    case SystemKind::Port: {
      PortModel m(std::get<PortHamiltonian>(sys));
      m.eval(s.q, s.t);
      return m.H();
    }
  }
  return 0.0;
}

double constraint_residual(const ConstrainedLagrangian& sys, const State& s) {
  LagrangianModel m(sys);
  m.eval(s.q, s.second);
  return m.constraint_residual(s.second);
}

std::vector<double> momentum(const ConstrainedLagrangian& sys, const State& s) {
  LagrangianModel m(sys);
  m.eval(s.q, s.second);
  return to_std(m.momentum());
}

}  // namespace qgeom::integrators
