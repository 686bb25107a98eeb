#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "qgeom/bench.hpp"
#include "qgeom/errors.hpp"
#include "qgeom/expression.hpp"

using namespace qgeom;
using namespace qgeom::expr;

namespace {

const std::vector<std::string> kNames{"q", "p", "t"};

Expression E(const char* text) { return parse_expression(text, kNames); }

}  // namespace

TEST_CASE("derivative examples") {
  const std::vector<double> at3{3.0, 0.0, 0.0};
  CHECK(E("q^2").derivative(0).evaluate(at3) == doctest::Approx(6.0).epsilon(1e-15));
  const std::vector<double> at0{0.0, 0.0, 0.0};
  CHECK(E("sin(q)").derivative(0).evaluate(at0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(E("cos(q)").derivative(0).evaluate(at0) == doctest::Approx(0.0));
  CHECK(E("q*p").derivative(2).is_constant());
  CHECK(E("q*p").derivative(2).constant_value() == 0.0);
  const std::vector<double> x{2.0, 5.0, 0.0};
  CHECK(E("q/p").derivative(1).evaluate(x) == doctest::Approx(-2.0 / 25.0));
  CHECK(E("q^-1").derivative(0).evaluate(x) == doctest::Approx(-0.25));
}

TEST_CASE("parse and evaluate") {
  const std::vector<double> x{2.0, -1.5, 0.25};
  CHECK(E("1 + 2*3").evaluate(x) == 7.0);
  CHECK(E("-q^2").evaluate(x) == -4.0);
  CHECK(E("2^3").evaluate(x) == 8.0);
  CHECK(E("(q + p)*t").evaluate(x) == doctest::Approx(0.125));
  CHECK(E("1.5e-1*q").evaluate(x) == doctest::Approx(0.3));
  CHECK(E("sin(t)^2 + cos(t)^2").evaluate(x) == doctest::Approx(1.0));
  CHECK(E("q - p - t").evaluate(x) == doctest::Approx(3.25));
  CHECK(E("q/p/t").evaluate(x) == doctest::Approx(2.0 / -1.5 / 0.25));
  CHECK(E("q*p").variables() == std::set<std::size_t>{0, 1});
  CHECK(E("q*p").depends_on(1));
  CHECK_FALSE(E("q*p").depends_on(2));
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(E("q +"), ParseError);
  CHECK_THROWS_AS(E("r"), ParseError);
  CHECK_THROWS_AS(E("(q"), ParseError);
  CHECK_THROWS_AS(E("q^1.5"), ParseError);
  CHECK_THROWS_AS(E("tan(q)"), ParseError);
  CHECK_THROWS_AS(E(""), ParseError);
  CHECK_THROWS_AS(E("q p"), ParseError);
  CHECK_THROWS_AS(E("q^2^2"), ParseError);
}

TEST_CASE("to_string round trips through the parser") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const char* samples[] = {"q^2*sin(p) - 3/t", "-(q - p)*(t + 1)", "cos(q*p)^3 + 0.125", "q/(p/t)", "-q^-2"};
  for (const char* text : samples) {
    const auto e = E(text);
    const auto back = parse_expression(to_string(e, kNames), kNames);
    for (int k = 0; k < 20; ++k) {
      const std::vector<double> x{u(rng), u(rng), 0.5 + std::abs(u(rng))};
      CHECK(back.evaluate(x) == doctest::Approx(e.evaluate(x)).epsilon(1e-14));
    }
  }
}

TEST_CASE("substitute") {
  const auto e = E("q^2 + p");
  const auto s = e.substitute({{0, E("sin(t)")}, {1, Expression::constant(3.0)}});
  const std::vector<double> x{0.0, 0.0, 0.7};
  CHECK(s.evaluate(x) == doctest::Approx(std::sin(0.7) * std::sin(0.7) + 3.0));
  CHECK_FALSE(s.depends_on(0));
}

TEST_CASE("sleigh Lagrangian gradient matches central differences") {
  const auto sys = bench::sleigh_system({});
  const auto& L = sys.lagrangian();
  const std::vector<std::size_t> vars{0, 1, 2, 3, 4, 5};
  const auto grad = gradient(L, vars);
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const double eps = 1e-5;
  for (int k = 0; k < 100; ++k) {
    std::vector<double> x(6);
    for (auto& xi : x) xi = u(rng);
    for (std::size_t i = 0; i < 6; ++i) {
      auto xp = x, xm = x;
      xp[i] += eps;
      xm[i] -= eps;
      const double fd = (L.evaluate(xp) - L.evaluate(xm)) / (2 * eps);
      CHECK(grad[i].evaluate(x) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("sleigh Lagrangian matches the closed form") {
  const bench::SleighParams p{2.0, 0.3, 0.5};
  const auto L = bench::sleigh_system(p).lagrangian();
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 50; ++k) {
    const std::vector<double> x{u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
    const double th = x[2], vx = x[3], vy = x[4], om = x[5];
    // kinetic energy of the centre of mass plus rotation
    const double cx = vx - p.a * std::sin(th) * om;
    const double cy = vy + p.a * std::cos(th) * om;
    const double expected = 0.5 * p.m * (cx * cx + cy * cy) + 0.5 * p.I * om * om;
    CHECK(L.evaluate(x) == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("tape matches tree evaluation") {
  const auto sys = bench::sleigh_system({});
  const std::vector<std::size_t> vars{0, 1, 2, 3, 4, 5};
  auto outputs = gradient(sys.lagrangian(), vars);
  outputs.push_back(sys.lagrangian());
  for (const auto& row : sys.constraints())
    for (const auto& c : row) outputs.push_back(c);
  const Tape tape(outputs);
  CHECK(tape.output_count() == outputs.size());

  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> scratch, out(outputs.size());
  for (int k = 0; k < 100; ++k) {
    std::vector<double> x(6);
    for (auto& xi : x) xi = u(rng);
    tape.evaluate(x, out, scratch);
    for (std::size_t i = 0; i < outputs.size(); ++i) CHECK(out[i] == doctest::Approx(outputs[i].evaluate(x)).epsilon(1e-14));
  }
}

TEST_CASE("tape shares common subexpressions") {
  const auto s = E("sin(q*p)");
  const std::vector<Expression> outs{s * s, s + E("t"), s};
  const Tape tape(outs);
  // q, p, q*p, sin, s*s, t, s+t
  CHECK(tape.instruction_count() <= 7);
}
