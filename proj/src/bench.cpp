#include "qgeom/bench.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "qgeom/errors.hpp"

namespace qgeom::bench {

using integrators::Expression;
using integrators::Method;
using integrators::Sample;

void SleighParams::validate() const {
  if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("sleigh mass m must be positive");
  if (!(I > 0.0) || !std::isfinite(I)) throw DomainError("sleigh inertia I must be positive");
  if (!(a >= 0.0) || !std::isfinite(a)) throw DomainError("sleigh offset a must be nonnegative");
}

namespace {

Expression var(std::size_t i) { return Expression::variable(i); }
Expression num(double x) { return Expression::constant(x); }

// (x, y, th, vx, vy, om) -> 0..5
Expression sleigh_lagrangian(const SleighParams& p) {
  const Expression th = var(2), vx = var(3), vy = var(4), om = var(5);
  const Expression bracket = pow(vx, 2) + pow(vy, 2) + num(p.I / p.m + p.a * p.a) * pow(om, 2) -
                             num(2.0 * p.a) * sin(th) * vx * om + num(2.0 * p.a) * cos(th) * vy * om;
  return num(p.m / 2.0) * bracket;
}

}  // namespace

ConstrainedLagrangian sleigh_system(const SleighParams& p) {
  p.validate();
  const Expression th = var(2);
  return ConstrainedLagrangian(3, sleigh_lagrangian(p), {{sin(th), -cos(th), Expression()}});
}

State default_sleigh_state() { return State{0.0, {0.0, 0.0, 0.0}, {1.0, 0.0, 1.0}, {}}; }

// Reduced coordinates: (x, y, th, v, om) -> 0..4. Velocities in the constraint
// distribution are qdot = S(q) u with S = [[cos th, 0], [sin th, 0], [0, 1]].
std::vector<Expression> sleigh_reduced_rhs(const SleighParams& p) {
  p.validate();
  const std::size_t n = 3, k = 2;
  const Expression L = sleigh_lagrangian(p);
  const Expression th = var(2), v = var(3), om = var(4);
  const std::array<Expression, 3> qdot{v * cos(th), v * sin(th), om};

  std::map<std::size_t, Expression> to_reduced;
  for (std::size_t i = 0; i < n; ++i) to_reduced[n + i] = qdot[i];
  auto reduce = [&](const Expression& e) { return e.substitute(to_reduced); };

  // S_ik = d qdot_i / d u_k;  (Sdot u)_i = sum_j d qdot_i / d q_j * qdot_j
  std::array<std::array<Expression, 2>, 3> S;
  std::array<Expression, 3> sdot_u;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) S[i][c] = qdot[i].derivative(n + c);
    for (std::size_t j = 0; j < n; ++j) sdot_u[i] += qdot[i].derivative(j) * qdot[j];
  }

  std::array<std::array<Expression, 3>, 3> M;
  std::array<Expression, 3> force;
  for (std::size_t i = 0; i < n; ++i) {
    const Expression Pi = L.derivative(n + i);
    Expression f = reduce(L.derivative(i));
    for (std::size_t j = 0; j < n; ++j) {
      M[i][j] = reduce(Pi.derivative(n + j));
      f -= reduce(Pi.derivative(j)) * qdot[j];
    }
    force[i] = f;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) force[i] -= M[i][j] * sdot_u[j];

  // S^T M S u' = S^T force, solved by Cramer's rule.
  std::array<std::array<Expression, 2>, 2> A;
  std::array<Expression, 2> b;
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t i = 0; i < n; ++i) b[r] += S[i][r] * force[i];
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) A[r][c] += S[i][r] * M[i][j] * S[j][c];
  }
  const Expression det = A[0][0] * A[1][1] - A[0][1] * A[1][0];
  return {(b[0] * A[1][1] - A[0][1] * b[1]) / det, (A[0][0] * b[1] - A[1][0] * b[0]) / det};
}

TrajectoryRecord sleigh_reference(const SleighParams& p, const State& s0, double h_ref, double T,
                                  std::size_t stride) {
  p.validate();
  if (s0.q.size() != 3 || s0.second.size() != 3) throw DomainError("sleigh state must have three coordinates");
  if (stride == 0) throw DomainError("stride must be positive");
  const double th0 = s0.q[2];
  const double vx0 = s0.second[0], vy0 = s0.second[1];
  const double slip = std::sin(th0) * vx0 - std::cos(th0) * vy0;
  if (std::abs(slip) > 1e-12 * (1.0 + std::hypot(vx0, vy0))) {
    throw DomainError("initial state violates the sleigh constraint");
  }
  const std::size_t steps = integrators::step_count(h_ref, T);

  const Expression th = var(2), v = var(3), om = var(4);
  const auto rhs = sleigh_reduced_rhs(p);
  const std::vector<Expression> field{v * cos(th), v * sin(th), om, rhs[0], rhs[1]};
  const expr::Tape flow(field);

  // Energy and slip in original variables (q, qdot).
  const ConstrainedLagrangian sys = sleigh_system(p);
  const Expression& L = sys.lagrangian();
  Expression E = -L;
  for (std::size_t i = 0; i < 3; ++i) E += var(3 + i) * L.derivative(3 + i);
  Expression constraint;
  for (std::size_t i = 0; i < 3; ++i) constraint += sys.constraints()[0][i] * var(3 + i);
  const std::vector<Expression> diag_exprs{E, constraint};
  const expr::Tape diag(diag_exprs);

  std::vector<double> scratch, out(5), dout(2);
  auto sample_at = [&](double t, const std::array<double, 5>& y) {
    flow.evaluate(y, out, scratch);
    State s{t, {y[0], y[1], y[2]}, {out[0], out[1], out[2]}, {}};
    const std::array<double, 6> qv{y[0], y[1], y[2], out[0], out[1], out[2]};
    diag.evaluate(qv, dout, scratch);
    return Sample{std::move(s), dout[0], std::abs(dout[1]), std::nullopt};
  };

  std::array<double, 5> y{s0.q[0], s0.q[1], s0.q[2], vx0 * std::cos(th0) + vy0 * std::sin(th0), s0.second[2]};
  std::array<double, 5> k1, k2, k3, k4, tmp;
  auto f = [&](const std::array<double, 5>& at, std::array<double, 5>& dy) { flow.evaluate(at, dy, scratch); };

  TrajectoryRecord rec;
  rec.kind = integrators::SystemKind::Lagrangian;
  rec.dimension = 3;
  rec.samples.push_back(sample_at(s0.t, y));
  for (std::size_t step = 1; step <= steps; ++step) {
    f(y, k1);
    for (int i = 0; i < 5; ++i) tmp[i] = y[i] + 0.5 * h_ref * k1[i];
    f(tmp, k2);
    for (int i = 0; i < 5; ++i) tmp[i] = y[i] + 0.5 * h_ref * k2[i];
    f(tmp, k3);
    for (int i = 0; i < 5; ++i) tmp[i] = y[i] + h_ref * k3[i];
    f(tmp, k4);
    for (int i = 0; i < 5; ++i) y[i] += h_ref / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (step % stride == 0) rec.samples.push_back(sample_at(s0.t + static_cast<double>(step) * h_ref, y));
  }
  return rec;
}

double reference_convergence_slope(const SleighParams& p, const State& s0, double h, double T) {
  std::array<std::vector<double>, 3> ends;
  for (int r = 0; r < 3; ++r) {
    const double hr = h / std::pow(2.0, r);
    const auto rec = sleigh_reference(p, s0, hr, T, integrators::step_count(hr, T));
    const auto& s = rec.samples.back().state;
    ends[r] = {s.q[0], s.q[1], s.q[2], s.second[0], s.second[1], s.second[2]};
  }
  double d1 = 0.0, d2 = 0.0;
  for (std::size_t i = 0; i < ends[0].size(); ++i) {
    d1 = std::max(d1, std::abs(ends[0][i] - ends[1][i]));
    d2 = std::max(d2, std::abs(ends[1][i] - ends[2][i]));
  }
  return std::log2(d1 / d2);
}

double ErrorTable::at(std::string_view method, std::string_view column) const {
  const auto col = std::find(columns.begin(), columns.end(), column);
  if (col == columns.end()) throw std::out_of_range("no column " + std::string(column));
  for (const auto& row : rows) {
    if (row.method == method) return row.values.at(static_cast<std::size_t>(col - columns.begin()));
  }
  throw std::out_of_range("no row " + std::string(method));
}

namespace {

constexpr std::array<Method, 3> kSleighMethods{Method::ExplicitEuler, Method::SymplecticEuler, Method::Dirac1};

double max_energy_deviation(const TrajectoryRecord& rec) {
  double worst = 0.0;
  const double e0 = rec.samples.front().energy;
  for (const auto& s : rec.samples) worst = std::max(worst, std::abs(s.energy - e0));
  return worst;
}

}  // namespace

std::vector<TrajectoryRecord> sleigh_benchmark_trajectories(const SleighParams& p, const State& s0, double h,
                                                            double T) {
  const integrators::MechSystem sys = sleigh_system(p);
  std::vector<TrajectoryRecord> out;
  for (auto m : kSleighMethods) out.push_back(integrators::simulate(sys, m, s0, h, T));
  return out;
}

ErrorTable run_sleigh_benchmark(const SleighParams& p, const State& s0, double h, double T) {
  const auto runs = sleigh_benchmark_trajectories(p, s0, h, T);
  // The reference covers exactly the steps the methods took.
  const std::size_t steps = integrators::step_count(h, T);
  const double h_ref = h / 100.0;
  const auto ref = sleigh_reference(p, s0, h_ref, static_cast<double>(steps) * h, 100 * std::max<std::size_t>(steps, 1));
  const State& end_ref = ref.samples.back().state;

  ErrorTable table;
  table.columns = {"error_x", "error_y", "error_theta", "constraint_residual", "energy_deviation"};
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& rec = runs[r];
    const State& end = rec.samples.back().state;
    double residual = 0.0;
    for (const auto& s : rec.samples) residual = std::max(residual, s.constraint_residual.value_or(0.0));
    table.rows.push_back({integrators::to_string(kSleighMethods[r]),
                          {std::abs(end.q[0] - end_ref.q[0]), std::abs(end.q[1] - end_ref.q[1]),
                           std::abs(end.q[2] - end_ref.q[2]), residual, max_energy_deviation(rec)}});
  }
  return table;
}

integrators::CanonicalHamiltonian oscillator_system() {
  return integrators::CanonicalHamiltonian(1, num(0.5) * (pow(var(0), 2) + pow(var(1), 2)));
}

ErrorTable oscillator_drift_study(double h, double T) {
  if (!(h > 0.0)) throw DomainError("step size must be positive");
  const integrators::MechSystem sys = oscillator_system();
  const State s0{0.0, {1.0}, {0.0}, {}};
  ErrorTable table;
  table.columns = {"error_q", "error_p", "max_energy_drift", "final_energy_drift"};
  for (auto m : {Method::ExplicitEuler, Method::SymplecticEuler, Method::Verlet}) {
    const auto rec = integrators::simulate(sys, m, s0, h, T);
    const auto& last = rec.samples.back();
    const double t = last.state.t;
    table.rows.push_back({integrators::to_string(m),
                          {std::abs(last.state.q[0] - std::cos(t)), std::abs(last.state.second[0] + std::sin(t)),
                           max_energy_deviation(rec), std::abs(last.energy - rec.samples.front().energy)}});
  }
  return table;
}

}  // namespace qgeom::bench
