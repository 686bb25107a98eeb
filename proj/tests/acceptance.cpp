// Acceptance suite: one PASS/FAIL line per criterion.
//
// Exit status is 0 when every criterion passes. With --expect-fail ids, exit
// status is 0 exactly when the failing set equals the listed ids.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qgeom/bench.hpp"
#include "qgeom/dirac.hpp"
#include "qgeom/graded.hpp"
#include "qgeom/integrators.hpp"
#include "support/random_algebra.hpp"

using namespace qgeom;
using qgeom::testing::uniform;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;
  std::function<Outcome()> run;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

int sign(int a, int b) { return (a * b) % 2 == 0 ? 1 : -1; }

// 1. Q_pi^2 = 0 iff the Jacobi residual vanishes.
Outcome symbolic_bridge() {
  using namespace graded;
  std::mt19937_64 rng(101);
  std::vector<BivectorSpec> cases;
  for (int k = 0; k < 50; ++k) cases.push_back(qgeom::testing::random_bivector(std::size_t(uniform(rng, 2, 4)), 2, rng));
  const auto b3 = euclidean_base(3);
  auto x = [&](const char* t) { return parse_polynomial(b3, t); };
  cases.push_back(BivectorSpec(b3, {{{0, 1}, x("x3")}, {{0, 2}, x("-x2")}, {{1, 2}, x("x1")}}));
  cases.push_back(BivectorSpec(b3, {{{0, 1}, x("1")}, {{0, 2}, x("2")}, {{1, 2}, x("-3")}}));

  int agree = 0, poisson = 0;
  for (const auto& pi : cases) {
    bool jacobi_zero = true;
    for (const auto& e : jacobi_residual(pi)) jacobi_zero = jacobi_zero && e.residual.is_zero();
    const bool q = is_q_structure(bivector_to_q(pi).field).is_q;
    agree += q == jacobi_zero;
    poisson += jacobi_zero;
  }
  const int total = static_cast<int>(cases.size());
  return {agree == total, std::to_string(agree) + "/" + std::to_string(total) + " agree, " + std::to_string(poisson) +
                              " Poisson"};
}

// 2. De Rham differential is a Q-structure; d o d = 0 on random forms.
Outcome de_rham_nilpotency() {
  int q_ok = 0;
  for (std::size_t d = 1; d <= 5; ++d) q_ok += graded::is_q_structure(graded::de_rham_q(d).field).is_q;
  std::mt19937_64 rng(102);
  int dd_ok = 0;
  for (int k = 0; k < 200; ++k) {
    const int n = uniform(rng, 1, 4);
    const auto space = dirac::FormSpace::euclidean(std::size_t(n));
    const auto alpha = qgeom::testing::random_form(space, uniform(rng, 0, std::min(n, 3)), rng);
    dd_ok += dirac::exterior_derivative(space, dirac::exterior_derivative(space, alpha)).is_zero();
  }
  return {q_ok == 5 && dd_ok == 200, "Q for d=1..5: " + std::to_string(q_ok) + "/5, d^2=0: " + std::to_string(dd_ok) + "/200"};
}

// 3. Dirac certification examples.
Outcome dirac_certification() {
  using namespace dirac;
  const bool dxdy = integrability_check(parse_dirac_spec("[base] 3 x y z\n[form]\n1 2 = 1\n")).dirac;
  const auto xdydz = integrability_check(parse_dirac_spec("[base] 3 x y z\n[form]\n2 3 = x\n"));
  const FormSpace xyz({"x", "y", "z"});
  const bool witness_ok = !xdydz.dirac && xdydz.witness && *xdydz.witness == xyz.parse("dx*dy*dz");
  const auto contact_spec = parse_dirac_spec("[base] 3 x y z\n[distribution]\nc: dz - y*dx\n");
  const bool contact = isotropy_and_rank_check(contact_spec).almost_dirac && !integrability_check(contact_spec).dirac;
  const bool sleigh =
      isotropy_and_rank_check(
          parse_dirac_spec("[base] 3 x y th\ntrigpair c s th\n[distribution]\nslip: s*dx - c*dy\n"))
          .almost_dirac;
  std::ostringstream os;
  os << "dx^dy Dirac=" << dxdy << ", x dy^dz witness=" << witness_ok << ", contact almost-only=" << contact
     << ", sleigh almost-Dirac=" << sleigh;
  return {dxdy && witness_ok && contact && sleigh, os.str()};
}

// 4. Bounded symplectic energy error vs explicit Euler growth.
Outcome energy_drift() {
  constexpr double h = 0.01;
  constexpr std::size_t steps = 100000;
  constexpr double kGrowthSlack = 1.05;  // "non-growing": late max within 5% of the early max
  const integrators::MechSystem sys = bench::oscillator_system();
  const integrators::State s0{0.0, {1.0}, {0.0}, {}};
  const double T = h * steps;
  const auto se = integrators::simulate(sys, integrators::Method::SymplecticEuler, s0, h, T);
  const auto ee = integrators::simulate(sys, integrators::Method::ExplicitEuler, s0, h, T);
  const double e0 = se.samples.front().energy;
  const std::size_t early_end = se.samples.size() / 10;
  double early = 0.0, late = 0.0;
  for (std::size_t k = 0; k < se.samples.size(); ++k) {
    const double d = std::abs(se.samples[k].energy - e0);
    (k < early_end ? early : late) = std::max(k < early_end ? early : late, d);
  }
  const double se_max = std::max(early, late);
  const double ee_final = std::abs(ee.samples.back().energy - e0);
  const bool bounded = se_max < 5 * h;
  const bool non_growing = late <= kGrowthSlack * early;
  const bool contrast = ee_final > 100 * se_max;
  return {bounded && non_growing && contrast, "symplectic max|dH|=" + fmt(se_max) + " (< " + fmt(5 * h) +
                                                  "), late/early=" + fmt(late / early) + ", explicit final|dH|=" +
                                                  fmt(ee_final)};
}

// 5. Sleigh benchmark pattern.
Outcome sleigh_pattern() {
  const auto table = bench::run_sleigh_benchmark({}, bench::default_sleigh_state(), 1e-3, 10.0);
  const double dirac_res = table.at("dirac1", "constraint_residual");
  const bool a = dirac_res <= 1e-10 && table.at("explicit-euler", "constraint_residual") > 1e-4 &&
                 table.at("symplectic-euler", "constraint_residual") > 1e-4;
  const double ratio = table.at("dirac1", "error_theta") / table.at("explicit-euler", "error_theta");
  const bool b = ratio <= 0.1;
  double lo = 1e300, hi = 0.0;
  for (const auto& row : table.rows) {
    const double e = table.at(row.method, "energy_deviation");
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  const bool c = hi <= 10 * lo;
  std::ostringstream os;
  os << "(a) " << (a ? "ok" : "no") << " dirac1 residual=" << fmt(dirac_res)
     << " euler=" << fmt(table.at("explicit-euler", "constraint_residual")) << "/"
     << fmt(table.at("symplectic-euler", "constraint_residual")) << "; (b) " << (b ? "ok" : "no")
     << " theta error ratio dirac1/explicit=" << fmt(ratio) << " (needs <= 0.1); (c) " << (c ? "ok" : "no")
     << " energy spread=" << fmt(hi / lo);
  return {a && b && c, os.str()};
}

// 6. Reference solution order and the a = 0 circle.
Outcome reference_convergence() {
  const double slope = bench::reference_convergence_slope({}, bench::default_sleigh_state(), 0.1, 10.0);
  const double v = 1.3, w = 0.8;
  const integrators::State s0{0.0, {0.0, 0.0, 0.0}, {v, 0.0, w}, {}};
  const auto rec = bench::sleigh_reference({1.0, 0.0, 1.0}, s0, 1e-3, 10.0, 10);
  double err = 0.0;
  for (const auto& smp : rec.samples) {
    const double t = smp.state.t;
    err = std::max({err, std::abs(smp.state.q[0] - v / w * std::sin(w * t)),
                    std::abs(smp.state.q[1] - v / w * (1 - std::cos(w * t))), std::abs(smp.state.q[2] - w * t)});
  }
  return {slope >= 3.7 && slope <= 4.3 && err <= 1e-8, "Richardson slope=" + fmt(slope) + ", circle error=" + fmt(err)};
}

// 7. Port-Hamiltonian power balance.
Outcome power_balance() {
  using namespace integrators;
  const auto names = port_variable_names(2);
  auto P = [&](const char* t) { return expr::parse_expression(t, names); };
  auto make = [&](const char* f) {
    return PortHamiltonian(2, P("x1^2/2 + x1^4/4 + x2^2/2"), {{0, 1, P("1")}}, {{1, 1, P("1/2")}}, {{P("0")}, {P("1")}},
                           {P(f)});
  };
  const auto forced = make("cos(t)");
  const State s0{0.0, {1.0, 0.0}, {}, {}};
  auto worst = [&](double h) {
    double w = 0.0;
    for (double r : power_balance_residual(forced, simulate(forced, Method::ImplicitMidpoint, s0, h, 5.0)))
      w = std::max(w, std::abs(r));
    return w;
  };
  const double slope = std::log2(worst(0.02) / worst(0.01));

  const auto unforced = make("0");
  const auto rec = simulate(unforced, Method::ImplicitMidpoint, s0, 0.01, 10.0);
  bool non_increasing = true;
  for (std::size_t k = 1; k < rec.samples.size(); ++k)
    non_increasing = non_increasing && rec.samples[k].energy <= rec.samples[k - 1].energy + 1e-12;
  return {slope >= 1.7 && slope <= 2.3 && non_increasing,
          "defect slope=" + fmt(slope) + ", H non-increasing at f=0: " + (non_increasing ? "yes" : "no")};
}

// 8. Poisson preservation through the cotangent lift.
Outcome poisson_preservation() {
  using namespace graded;
  const auto base = euclidean_base(2);
  const BivectorSpec sympl(base, {{{0, 1}, GradedPolynomial::constant(base, 1)}});
  auto x = [&](const char* t) { return parse_polynomial(base, t); };
  const auto rotation = poisson_preservation_check({x("x2"), x("-x1")}, sympl);
  const auto scaling = poisson_preservation_check({x("x1"), x("0")}, sympl);
  const bool ok = rotation.preserved && !scaling.preserved && !scaling.witness.empty();
  std::string detail = std::string("rotation commutator zero: ") + (rotation.preserved ? "yes" : "no");
  if (!scaling.witness.empty())
    detail += ", scaling witness " + scaling.witness.front().first + ": " + to_string(scaling.witness.front().second);
  return {ok, detail};
}

// 9. Randomized algebraic property suites.
Outcome property_suites() {
  using namespace graded;
  std::mt19937_64 rng(109);
  int cases = 0, failures = 0;
  auto tally = [&](bool ok) {
    ++cases;
    failures += !ok;
  };
  for (int k = 0; k < 300; ++k) {
    const auto ctx = qgeom::testing::random_context(rng);
    const int a = uniform(rng, 0, 3), b = uniform(rng, 0, 3);
    const auto f = qgeom::testing::random_homogeneous(ctx, a, rng);
    const auto g = qgeom::testing::random_homogeneous(ctx, b, rng);
    tally((f * g - sign(a, b) * (g * f)).is_zero());
  }
  for (int k = 0; k < 300; ++k) {
    const auto ctx = qgeom::testing::random_context(rng);
    const int dv = uniform(rng, -1, 1), a = uniform(rng, 0, 3);
    const auto v = qgeom::testing::random_field(ctx, dv, rng);
    const auto f = qgeom::testing::random_homogeneous(ctx, a, rng);
    const auto g = qgeom::testing::random_homogeneous(ctx, uniform(rng, 0, 3), rng);
    tally(apply_vector_field(v, f * g) == apply_vector_field(v, f) * g + sign(dv, a) * (f * apply_vector_field(v, g)));
  }
  for (int k = 0; k < 200; ++k) {
    const auto ctx = qgeom::testing::random_context(rng);
    const int du = uniform(rng, -1, 1), dv = uniform(rng, -1, 1), dw = uniform(rng, -1, 1);
    const auto u = qgeom::testing::random_field(ctx, du, rng);
    const auto v = qgeom::testing::random_field(ctx, dv, rng);
    const auto w = qgeom::testing::random_field(ctx, dw, rng);
    const auto lhs = commutator(u, commutator(v, w));
    const auto r1 = commutator(commutator(u, v), w);
    const auto r2 = commutator(v, commutator(u, w));
    bool ok = true;
    for (std::size_t i = 0; i < ctx.size(); ++i)
      ok = ok && lhs.component(i) == r1.component(i) + sign(du, dv) * r2.component(i);
    tally(ok);
  }
  for (int k = 0; k < 200; ++k) {
    const auto space = dirac::FormSpace::euclidean(std::size_t(uniform(rng, 1, 4)));
    const auto a = qgeom::testing::random_section(space, rng);
    const auto b = qgeom::testing::random_section(space, rng);
    tally(dirac::pairing(space, a, b) == dirac::pairing(space, b, a));
  }
  for (int k = 0; k < 200; ++k) {
    const auto space = dirac::FormSpace::euclidean(std::size_t(uniform(rng, 1, 4)));
    const auto zero = dirac::DifferentialForm::zero(space, 1);
    const auto u = dirac::make_section(space, qgeom::testing::random_vector(space, rng), zero);
    const auto v = dirac::make_section(space, qgeom::testing::random_vector(space, rng), zero);
    tally(dirac::courant_dorfman_bracket(space, u, v).form.is_zero());
  }
  return {failures == 0 && cases >= 1000, std::to_string(cases - failures) + "/" + std::to_string(cases) + " cases hold"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> expect_fail;
  app.add_option("--expect-fail", expect_fail, "Criteria known to fail; exit 0 iff exactly these fail");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "symbolic bridge", 30, symbolic_bridge},
      {2, "de Rham nilpotency", 10, de_rham_nilpotency},
      {3, "Dirac certification", 10, dirac_certification},
      {4, "energy-drift pattern", 10, energy_drift},
      {5, "sleigh benchmark pattern", 60, sleigh_pattern},
      {6, "reference convergence", 30, reference_convergence},
      {7, "port-Hamiltonian power balance", 10, power_balance},
      {8, "Poisson preservation", 5, poisson_preservation},
      {9, "property suites", 60, property_suites},
  };

  std::set<int> failed;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.time_limit_s;
    const bool pass = out.pass && in_time;
    if (!pass) failed.insert(c.id);
    std::printf("%s %d %s: %s [%.2f s / %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), out.detail.c_str(),
                secs, c.time_limit_s, in_time ? "" : ", too slow");
  }
  std::fflush(stdout);

  const std::set<int> expected(expect_fail.begin(), expect_fail.end());
  return failed == expected ? 0 : 1;
}
