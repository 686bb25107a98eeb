#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qgeom/bench.hpp"
#include "qgeom/errors.hpp"
#include "qgeom/integrators.hpp"

using namespace qgeom;
using namespace qgeom::integrators;

namespace {

CanonicalHamiltonian hamiltonian(std::size_t n, const char* text) {
  return CanonicalHamiltonian(n, expr::parse_expression(text, hamiltonian_variable_names(n)));
}

const CanonicalHamiltonian kOscillator = hamiltonian(1, "(p1^2 + q1^2)/2");

State hstate(std::vector<double> q, std::vector<double> p) { return State{0.0, std::move(q), std::move(p), {}}; }

double oscillator_energy(const State& s) { return 0.5 * (s.q[0] * s.q[0] + s.second[0] * s.second[0]); }

ConstrainedLagrangian lagrangian(std::size_t n, const char* L, std::vector<std::vector<const char*>> forms = {}) {
  const auto names = lagrangian_variable_names(n);
  std::vector<std::vector<Expression>> omega;
  for (const auto& row : forms) {
    std::vector<Expression> r;
    for (const char* c : row) r.push_back(expr::parse_expression(c, names));
    omega.push_back(r);
  }
  return ConstrainedLagrangian(n, expr::parse_expression(L, names), omega);
}

PortHamiltonian port(std::size_t n, const char* H, std::vector<std::tuple<int, int, const char*>> J,
                     std::vector<std::tuple<int, int, const char*>> R, std::vector<std::vector<const char*>> g = {},
                     std::vector<const char*> f = {}) {
  const auto names = port_variable_names(n);
  auto P = [&](const char* t) { return expr::parse_expression(t, names); };
  std::vector<PortHamiltonian::Entry> j, r;
  for (auto [a, b, t] : J) j.push_back({std::size_t(a), std::size_t(b), P(t)});
  for (auto [a, b, t] : R) r.push_back({std::size_t(a), std::size_t(b), P(t)});
  std::vector<std::vector<Expression>> gg(n);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (const char* t : g[i]) gg[i].push_back(P(t));
  std::vector<Expression> ff;
  for (const char* t : f) ff.push_back(P(t));
  return PortHamiltonian(n, P(H), j, r, gg, ff);
}

State xstate(std::vector<double> x) { return State{0.0, std::move(x), {}, {}}; }

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("explicit Euler examples") {
  const auto s = step_explicit_euler(kOscillator, hstate({1.0}, {0.0}), 0.1);
  CHECK(s.q[0] == 1.0);
  CHECK(s.second[0] == doctest::Approx(-0.1).epsilon(1e-15));

  const auto free = hamiltonian(2, "(p1^2 + p2^2)/2");
  const auto f = step_explicit_euler(free, hstate({0.5, -1.0}, {2.0, 3.0}), 0.25);
  CHECK(f.q == std::vector<double>{1.0, -0.25});
  CHECK(f.second == std::vector<double>{2.0, 3.0});

  State cur = hstate({1.0}, {0.0});
  double last = oscillator_energy(cur);
  bool monotone = true;
  for (int k = 0; k < 10000; ++k) {
    cur = step_explicit_euler(kOscillator, cur, 0.01);
    const double e = oscillator_energy(cur);
    monotone = monotone && e > last;
    last = e;
  }
  CHECK(monotone);
}

TEST_CASE("symplectic Euler examples") {
  const auto s = step_symplectic_euler(kOscillator, hstate({1.0}, {0.0}), 0.1);
  CHECK(s.second[0] == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(s.q[0] == doctest::Approx(0.99).epsilon(1e-15));

  const auto id = step_symplectic_euler(kOscillator, hstate({0.3}, {-0.7}), 0.0);
  CHECK(id.q[0] == 0.3);
  CHECK(id.second[0] == -0.7);

  State cur = hstate({1.0}, {0.0});
  const double e0 = oscillator_energy(cur);
  double early = 0.0, overall = 0.0;
  for (int k = 1; k <= 100000; ++k) {
    cur = step_symplectic_euler(kOscillator, cur, 0.01);
    const double d = std::abs(oscillator_energy(cur) - e0);
    if (k <= 100) early = std::max(early, d);
    overall = std::max(overall, d);
  }
  CHECK(overall < 10 * early);
  CHECK(overall < 5 * 0.01);
}

TEST_CASE("symplectic Euler on a nonseparable Hamiltonian solves the implicit stage") {
  const auto sys = hamiltonian(1, "p1^2*(1 + q1^2)/2");
  const State s = hstate({0.4}, {1.1});
  const double h = 0.05;
  const auto out = step_symplectic_euler(sys, s, h);
  // p+ = p - h q (p+)^2, q+ = q + h (1 + q^2) p+
  const double p1 = out.second[0];
  CHECK(p1 - (s.second[0] - h * s.q[0] * p1 * p1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(out.q[0] == doctest::Approx(s.q[0] + h * (1 + s.q[0] * s.q[0]) * p1).epsilon(1e-14));
}

TEST_CASE("Verlet examples") {
  const double T = 1.0;
  auto endpoint_error = [&](double h) {
    State cur = hstate({1.0}, {0.0});
    const auto steps = step_count(h, T);
    for (std::size_t k = 0; k < steps; ++k) cur = step_verlet(kOscillator, cur, h);
    return std::hypot(cur.q[0] - std::cos(T), cur.second[0] + std::sin(T));
  };
  const double ratio = endpoint_error(0.01) / endpoint_error(0.005);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.05));

  const auto free = hamiltonian(1, "p1^2/2");
  const auto f = step_verlet(free, hstate({0.25}, {-2.0}), 0.5);
  CHECK(f.q[0] == -0.75);
  CHECK(f.second[0] == -2.0);

  const auto pendulum = hamiltonian(1, "p1^2/2 - cos(q1)");
  const State s = hstate({0.7}, {0.3});
  const auto back = step_verlet(pendulum, step_verlet(pendulum, s, 0.1), -0.1);
  CHECK(max_abs_diff(back.q, s.q) <= 1e-12);
  CHECK(max_abs_diff(back.second, s.second) <= 1e-12);

  CHECK_THROWS_AS(step_verlet(hamiltonian(1, "p1^2*q1^2/2"), s, 0.1), DomainError);
}

TEST_CASE("Dirac-1 free particle with a constraint") {
  const auto sys = lagrangian(2, "(v1^2 + v2^2)/2", {{"0", "1"}});
  const State s{0.0, {0.0, 0.0}, {1.0, 0.0}, {}};
  const auto out = step_dirac1(sys, s, 0.1);
  CHECK(out.q[0] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(std::abs(out.q[1]) <= 1e-14);
  CHECK(constraint_residual(sys, out) <= 1e-14);

  const auto id = step_dirac1(sys, s, 0.0);
  CHECK(max_abs_diff(id.q, s.q) <= 1e-14);
  CHECK(max_abs_diff(id.second, s.second) <= 1e-14);
}

TEST_CASE("Dirac-1 without constraints is symplectic Euler") {
  const auto lag = lagrangian(2, "(v1^2 + v2^2)/2 - (q1^2 + 4*q2^2)/2 - q1*q2");
  const auto ham = hamiltonian(2, "(p1^2 + p2^2)/2 + (q1^2 + 4*q2^2)/2 + q1*q2");
  State a{0.0, {0.3, -0.2}, {0.5, 0.1}, {}};
  State b = hstate(a.q, a.second);
  for (int k = 0; k < 200; ++k) {
    a = step_dirac1(lag, a, 0.05);
    b = step_symplectic_euler(ham, b, 0.05);
  }
  CHECK(max_abs_diff(a.q, b.q) <= 1e-12);
  // v = p for this Lagrangian
  CHECK(max_abs_diff(a.second, b.second) <= 1e-12);
}

TEST_CASE("Dirac-1 sleigh step matches an independent root-find") {
  const bench::SleighParams P{};
  const auto sys = bench::sleigh_system(P);
  const State s = bench::default_sleigh_state();
  const double h = 1e-3;
  const double m = P.m, a = P.a, I = P.I;

  // Hand-derived partials of the sleigh Lagrangian.
  auto Lv = [&](const Eigen::Vector3d& q, const Eigen::Vector3d& v) {
    const double c = std::cos(q[2]), sn = std::sin(q[2]);
    return Eigen::Vector3d(m * (v[0] - a * sn * v[2]), m * (v[1] + a * c * v[2]),
                           (I + m * a * a) * v[2] - m * a * sn * v[0] + m * a * c * v[1]);
  };
  auto Lq = [&](const Eigen::Vector3d& q, const Eigen::Vector3d& v) {
    const double c = std::cos(q[2]), sn = std::sin(q[2]);
    return Eigen::Vector3d(0.0, 0.0, -m * a * v[2] * (c * v[0] + sn * v[1]));
  };
  auto omega = [](const Eigen::Vector3d& q) { return Eigen::Vector3d(std::sin(q[2]), -std::cos(q[2]), 0.0); };

  const Eigen::Vector3d q0(s.q[0], s.q[1], s.q[2]);
  const Eigen::Vector3d v0(s.second[0], s.second[1], s.second[2]);
  const Eigen::Vector3d p0 = Lv(q0, v0);
  auto residual = [&](const Eigen::Vector4d& z) {
    const Eigen::Vector3d v = z.head<3>();
    const Eigen::Vector3d q1 = q0 + h * v;
    Eigen::Vector4d r;
    r.head<3>() = Lv(q1, v) - p0 - h * (Lq(q0, v) + z[3] * omega(q0));
    r[3] = omega(q1).dot(v);
    return r;
  };
  Eigen::Vector4d z(v0[0], v0[1], v0[2], 0.0);
  for (int it = 0; it < 30; ++it) {
    Eigen::Matrix4d Jac;
    for (int j = 0; j < 4; ++j) {
      Eigen::Vector4d e = Eigen::Vector4d::Zero();
      e[j] = 1e-7;
      Jac.col(j) = (residual(z + e) - residual(z - e)) / 2e-7;
    }
    z -= Jac.fullPivLu().solve(residual(z));
  }
  REQUIRE(residual(z).cwiseAbs().maxCoeff() <= 1e-14);

  const auto out = step_dirac1(sys, s, h);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(out.second[std::size_t(i)] - z[i]) <= 1e-10);
    CHECK(std::abs(out.q[std::size_t(i)] - (q0[i] + h * z[i])) <= 1e-10);
  }
  REQUIRE(out.lambda.size() == 1);
  CHECK(std::abs(out.lambda[0] - z[3]) <= 1e-10);
}

TEST_CASE("constrained Euler baselines drift off the constraint, Dirac-1 does not") {
  const auto sys = bench::sleigh_system({});
  const auto s0 = bench::default_sleigh_state();
  const auto dirac = simulate(sys, Method::Dirac1, s0, 1e-3, 2.0);
  const auto euler = simulate(sys, Method::ExplicitEuler, s0, 1e-3, 2.0);
  double dmax = 0.0, emax = 0.0;
  for (const auto& smp : dirac.samples) dmax = std::max(dmax, *smp.constraint_residual);
  for (const auto& smp : euler.samples) emax = std::max(emax, *smp.constraint_residual);
  CHECK(dmax <= 1e-10);
  CHECK(emax > 1e-6);
}

TEST_CASE("implicit midpoint examples") {
  const auto conservative = port(2, "(x1^2 + 3*x2^2)/2", {{0, 1, "2"}}, {});
  State cur = xstate({1.0, 0.5});
  const double h0 = 0.5 * (1.0 + 3 * 0.25);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    cur = step_port_hamiltonian(conservative, cur, 0.05);
    worst = std::max(worst, std::abs(0.5 * (cur.q[0] * cur.q[0] + 3 * cur.q[1] * cur.q[1]) - h0));
  }
  CHECK(worst <= 1e-10);

  const auto decay = port(1, "x1^2/2", {}, {{0, 0, "1"}});
  cur = xstate({1.0});
  bool monotone = true;
  for (int k = 0; k < 500; ++k) {
    const auto next = step_port_hamiltonian(decay, cur, 0.01);
    monotone = monotone && std::abs(next.q[0]) < std::abs(cur.q[0]);
    cur = next;
  }
  CHECK(monotone);
  CHECK(cur.q[0] == doctest::Approx(std::pow((1 - 0.005) / (1 + 0.005), 500)).epsilon(1e-12));

  const auto dissipative = port(2, "x1^2/2 + x1^4/4 + x2^2/2", {{0, 1, "1"}}, {{1, 1, "1/2 + x1^2"}, {0, 0, "x2^2/4"}});
  cur = xstate({1.2, -0.4});
  bool passive = true;
  for (int k = 0; k < 2000; ++k) {
    const auto next = step_port_hamiltonian(dissipative, cur, 0.01);
    passive = passive && energy(dissipative, next) <= energy(dissipative, cur) + 1e-10;
    cur = next;
  }
  CHECK(passive);

  const auto forced = port(2, "x1^2/2 + x1^4/4 + x2^2/2", {{0, 1, "1"}}, {}, {{"0"}, {"1"}}, {"cos(t)"});
  const State s{0.3, {0.2, 0.7}, {}, {}};
  auto fwd = step_port_hamiltonian(forced, s, 0.1);
  CHECK(fwd.t == doctest::Approx(0.4));
  const auto back = step_port_hamiltonian(forced, fwd, -0.1);
  CHECK(max_abs_diff(back.q, s.q) <= 1e-10);
}

TEST_CASE("simulate bookkeeping") {
  const State s0 = hstate({1.0}, {0.0});
  const auto zero = simulate(kOscillator, Method::Verlet, s0, 0.1, 0.0);
  REQUIRE(zero.samples.size() == 1);
  CHECK(zero.samples[0].state.q == s0.q);
  CHECK(zero.samples[0].energy == 0.5);
  CHECK_FALSE(zero.samples[0].constraint_residual);

  CHECK(step_count(0.1, 1.0) == 10);
  CHECK(step_count(1e-3, 10.0) == 10000);
  CHECK(step_count(0.3, 1.0) == 3);
  const auto rec = simulate(kOscillator, Method::SymplecticEuler, s0, 0.01, 1.0, 7);
  CHECK(rec.samples.size() == 100 / 7 + 1);
  for (std::size_t k = 1; k < rec.samples.size(); ++k) CHECK(rec.samples[k].state.t > rec.samples[k - 1].state.t);
  CHECK(rec.samples[1].state.t == doctest::Approx(0.07));

  const auto again = simulate(kOscillator, Method::SymplecticEuler, s0, 0.01, 1.0, 7);
  for (std::size_t k = 0; k < rec.samples.size(); ++k) {
    CHECK(rec.samples[k].state.q == again.samples[k].state.q);
    CHECK(rec.samples[k].state.second == again.samples[k].state.second);
  }
}

TEST_CASE("simulate: symplectic Euler orbit stays in an annulus of width O(h)") {
  for (double h : {0.02, 0.01}) {
    const auto rec = simulate(kOscillator, Method::SymplecticEuler, hstate({1.0}, {0.0}), h, 2 * std::numbers::pi * 100);
    double rmin = 1e9, rmax = 0.0;
    for (const auto& smp : rec.samples) {
      const double r = std::hypot(smp.state.q[0], smp.state.second[0]);
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
    }
    CHECK(rmax - rmin <= h);
    CHECK(rmax - rmin >= h / 10);
  }
}

TEST_CASE("simulate: sleigh with Dirac-1 keeps the constraint") {
  const auto rec = simulate(bench::sleigh_system({}), Method::Dirac1, bench::default_sleigh_state(), 1e-3, 10.0, 10);
  double worst = 0.0;
  for (const auto& smp : rec.samples) worst = std::max(worst, *smp.constraint_residual);
  CHECK(worst <= 1e-10);
  CHECK(rec.samples.size() == 1001);
}

TEST_CASE("simulate reports the failing step") {
  const auto sys = hamiltonian(1, "p1^2/2 + q1^-1");
  try {
    simulate(sys, Method::ExplicitEuler, hstate({1.0}, {-2.0}), 0.5, 5.0);
    FAIL("expected a solver error");
  } catch (const SolverError& e) {
    CHECK(e.step() == 2);
    CHECK(std::string(e.what()).find("step 2") == 0);
  }
}

TEST_CASE("validation") {
  const State s0 = hstate({1.0}, {0.0});
  CHECK_THROWS_AS(simulate(kOscillator, Method::Dirac1, s0, 0.1, 1.0), DomainError);
  CHECK_THROWS_AS(simulate(kOscillator, Method::Verlet, s0, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(simulate(kOscillator, Method::Verlet, s0, 0.1, -1.0), DomainError);
  CHECK_THROWS_AS(simulate(kOscillator, Method::Verlet, s0, 0.1, 1.0, 0), DomainError);
  CHECK_THROWS_AS(simulate(kOscillator, Method::Verlet, hstate({1.0, 2.0}, {0.0}), 0.1, 1.0), DomainError);
  CHECK_THROWS_AS(hamiltonian(0, "1"), DomainError);
  CHECK_THROWS_AS(lagrangian(1, "v1^2/2", {{"v1"}}), DomainError);
  CHECK_THROWS_AS(lagrangian(1, "v1^2/2", {{"1", "0"}}), DomainError);
  CHECK_THROWS_AS(port(2, "x1^2", {{1, 0, "1"}}, {}), DomainError);
  CHECK_THROWS_AS(port(1, "x1^2", {}, {}, {{"1"}}, {"x1"}), DomainError);
  CHECK_THROWS_AS(simulate(port(1, "x1^2/2", {}, {{0, 0, "-1"}}), Method::ImplicitMidpoint, xstate({1.0}), 0.1, 1.0),
                  DomainError);
  CHECK_THROWS_AS(simulate(lagrangian(2, "(v1^2 + v2^2)/2", {{"1", "0"}, {"2", "0"}}), Method::Dirac1,
                           State{0.0, {0.0, 0.0}, {0.0, 0.0}, {}}, 0.1, 1.0),
                  DomainError);
  CHECK(parse_method("dirac1") == Method::Dirac1);
  CHECK_FALSE(parse_method("rk4"));
  for (auto m : {Method::ExplicitEuler, Method::SymplecticEuler, Method::Verlet, Method::Dirac1, Method::ImplicitMidpoint})
    CHECK(parse_method(to_string(m)) == m);
}

TEST_CASE("power balance residual") {
  const auto conservative = port(2, "(x1^2 + x2^2)/2", {{0, 1, "1"}}, {});
  const auto rec = simulate(conservative, Method::ImplicitMidpoint, xstate({1.0, 0.0}), 0.01, 5.0);
  const auto res = power_balance_residual(conservative, rec);
  CHECK(res.size() == rec.samples.size() - 1);
  for (double r : res) CHECK(std::abs(r) <= 1e-10);
  CHECK_FALSE(rec.samples[0].power_residual);
  REQUIRE(rec.samples[1].power_residual);
  CHECK(*rec.samples[1].power_residual == doctest::Approx(res[0]));

  const auto decay = port(1, "x1^2/2", {}, {{0, 0, "1"}});
  const auto drec = simulate(decay, Method::ImplicitMidpoint, xstate({1.0}), 1e-3, 2.0);
  for (double r : power_balance_residual(decay, drec)) CHECK(std::abs(r) <= 1e-8);

  // non-quadratic H: the defect is O(h^2)
  const auto duffing = port(2, "x1^2/2 + x1^4/4 + x2^2/2", {{0, 1, "1"}}, {{1, 1, "1/2"}}, {{"0"}, {"1"}}, {"cos(t)"});
  auto worst = [&](double h) {
    const auto r = power_balance_residual(duffing, simulate(duffing, Method::ImplicitMidpoint, xstate({1.0, 0.0}), h, 2.0));
    double w = 0.0;
    for (double x : r) w = std::max(w, std::abs(x));
    return w;
  };
  const double slope = std::log2(worst(0.02) / worst(0.01));
  CHECK(slope >= 1.7);
  CHECK(slope <= 2.3);

  CHECK_THROWS_AS(power_balance_residual(duffing, simulate(kOscillator, Method::Verlet, hstate({1.0}, {0.0}), 0.1, 1.0)),
                  DomainError);
}
