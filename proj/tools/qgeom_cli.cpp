// qgeom: structure checks, simulations and benchmarks from the command line.
//
// Exit status: 0 success, 2 failed structure check, 1 usage or input error.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qgeom/bench.hpp"
#include "qgeom/dirac.hpp"
#include "qgeom/errors.hpp"
#include "qgeom/graded.hpp"
#include "qgeom/io.hpp"

namespace {

using namespace qgeom;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kCheckFailed = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Writes to --out when given, standard output otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

struct CheckQArgs {
  std::string context_file, field_file, out;
};

int run_check_q(const CheckQArgs& a) {
  const auto ctx = graded::parse_context(read_file(a.context_file));
  const auto field = graded::parse_vector_field(ctx, read_file(a.field_file));
  const auto verdict = graded::is_q_structure(field);
  Sink sink(a.out);
  auto& os = sink.stream();
  if (verdict.is_q) {
    os << "Q-structure: yes\n";
    return kOk;
  }
  os << "Q-structure: no (" << verdict.reason << ")\n";
  if (verdict.witness_coordinate && verdict.witness) {
    os << "witness: 1/2[Q,Q](" << ctx.coordinate(*verdict.witness_coordinate).name
       << ") = " << graded::to_string(*verdict.witness) << "\n";
  }
  return kCheckFailed;
}

struct CheckDiracArgs {
  std::string spec_file, out;
  std::size_t samples = dirac::CheckOptions{}.samples;
  std::uint64_t seed = dirac::CheckOptions{}.seed;
};

int run_check_dirac(const CheckDiracArgs& a) {
  const auto spec = dirac::parse_dirac_spec(read_file(a.spec_file));
  const dirac::CheckOptions opts{a.samples, a.seed};
  Sink sink(a.out);
  auto& os = sink.stream();
  const auto iso = dirac::isotropy_and_rank_check(spec, opts);
  if (!iso.almost_dirac) {
    os << "almost-Dirac: no (" << iso.reason << ")\n";
    if (iso.pair) os << "pair: " << iso.pair->first + 1 << " " << iso.pair->second + 1 << "\n";
    if (iso.witness) os << "witness: " << graded::to_string(*iso.witness) << "\n";
    return kCheckFailed;
  }
  os << "almost-Dirac: yes\n";
  const auto integ = dirac::integrability_check(spec, opts);
  if (!integ.dirac) {
    os << "Dirac: no (" << integ.reason << ")\n";
    if (integ.witness) os << "witness: " << graded::to_string(*integ.witness) << "\n";
    return kCheckFailed;
  }
  os << "Dirac: yes\n";
  return kOk;
}

struct SimulateArgs {
  std::string system_file, method, out;
  double h = 1e-3;
  double T = 1.0;
  std::size_t stride = 1;
};

int run_simulate(const SimulateArgs& a) {
  const auto loaded = io::load_system(a.system_file);
  const auto method = integrators::parse_method(a.method);
  if (!method) throw DomainError("unknown method '" + a.method + "'");
  const auto rec = integrators::simulate(loaded.system, *method, loaded.initial, a.h, a.T, a.stride);
  Sink sink(a.out);
  io::write_trajectory_csv(sink.stream(), rec);
  return kOk;
}

void write_trajectory_file(const std::string& path, const integrators::TrajectoryRecord& rec) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  io::write_trajectory_csv(out, rec);
}

struct BenchSleighArgs {
  bench::SleighParams params;
  double h = 1e-3;
  double T = 10.0;
  std::string out, trajectories;
};

int run_bench_sleigh(const BenchSleighArgs& a) {
  const auto s0 = bench::default_sleigh_state();
  const auto table = bench::run_sleigh_benchmark(a.params, s0, a.h, a.T);
  Sink sink(a.out);
  io::write_error_table_csv(sink.stream(), table);
  if (!a.trajectories.empty()) {
    const auto runs = bench::sleigh_benchmark_trajectories(a.params, s0, a.h, a.T);
    for (std::size_t r = 0; r < runs.size(); ++r) {
      write_trajectory_file(a.trajectories + table.rows[r].method + ".csv", runs[r]);
    }
  }
  return kOk;
}

struct BenchOscillatorArgs {
  double h = 0.01;
  double T = 1000.0;
  std::string out, trajectories;
};

int run_bench_oscillator(const BenchOscillatorArgs& a) {
  const auto table = bench::oscillator_drift_study(a.h, a.T);
  Sink sink(a.out);
  io::write_error_table_csv(sink.stream(), table);
  if (!a.trajectories.empty()) {
    const integrators::MechSystem sys = bench::oscillator_system();
    const integrators::State s0{0.0, {1.0}, {0.0}, {}};
    for (const auto& row : table.rows) {
      const auto rec = integrators::simulate(sys, *integrators::parse_method(row.method), s0, a.h, a.T);
      write_trajectory_file(a.trajectories + row.method + ".csv", rec);
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graded-geometry structure checks and structure-preserving integrators"};
  // `--h` is the step size, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  CheckQArgs check_q;
  auto* cq = app.add_subcommand("check-q", "Decide whether a vector field is a Q-structure");
  cq->add_option("context", check_q.context_file, "Context file: one 'name degree' per line")->required()->check(CLI::ExistingFile);
  cq->add_option("field", check_q.field_file, "Field file: 'name = polynomial' lines")->required()->check(CLI::ExistingFile);
  cq->add_option("--out", check_q.out, "Write the verdict here instead of standard output");

  CheckDiracArgs check_dirac;
  auto* cd = app.add_subcommand("check-dirac", "Certify an almost-Dirac or Dirac structure");
  cd->add_option("spec", check_dirac.spec_file, "Dirac spec file")->required()->check(CLI::ExistingFile);
  cd->add_option("--out", check_dirac.out, "Write the verdict here instead of standard output");
  cd->add_option("--samples", check_dirac.samples, "Rational sample points for the rank check");
  cd->add_option("--seed", check_dirac.seed, "Seed for the sample points");

  SimulateArgs sim;
  auto* sm = app.add_subcommand("simulate", "Integrate a system file and emit the trajectory CSV");
  sm->add_option("system", sim.system_file, "System file")->required()->check(CLI::ExistingFile);
  sm->add_option("--method", sim.method,
                 "explicit-euler | symplectic-euler | verlet | dirac1 | midpoint")
      ->required();
  sm->add_option("--h", sim.h, "Step size")->check(CLI::PositiveNumber);
  sm->add_option("--T", sim.T, "Final time (relative to t0)")->check(CLI::NonNegativeNumber);
  sm->add_option("--stride", sim.stride, "Keep every stride-th sample")->check(CLI::PositiveNumber);
  sm->add_option("--out", sim.out, "Trajectory CSV path (standard output if empty)");

  BenchSleighArgs sleigh;
  auto* bs = app.add_subcommand("bench-sleigh", "Chaplygin sleigh: Euler variants vs Dirac-1 against a reference");
  bs->add_option("--m", sleigh.params.m, "Mass");
  bs->add_option("--a", sleigh.params.a, "Contact point to centre of mass distance");
  bs->add_option("--I", sleigh.params.I, "Moment of inertia about the centre of mass");
  bs->add_option("--h", sleigh.h, "Step size")->check(CLI::PositiveNumber);
  bs->add_option("--T", sleigh.T, "Final time")->check(CLI::NonNegativeNumber);
  bs->add_option("--out", sleigh.out, "Error table CSV path (standard output if empty)");
  bs->add_option("--trajectories", sleigh.trajectories,
                 "If set, also write <prefix><method>.csv per-step diagnostics");

  BenchOscillatorArgs osc;
  auto* bo = app.add_subcommand("bench-oscillator", "Energy drift of Euler, symplectic Euler and Verlet on H=(p^2+q^2)/2");
  bo->add_option("--h", osc.h, "Step size")->check(CLI::PositiveNumber);
  bo->add_option("--T", osc.T, "Final time")->check(CLI::NonNegativeNumber);
  bo->add_option("--out", osc.out, "Error table CSV path (standard output if empty)");
  bo->add_option("--trajectories", osc.trajectories,
                 "If set, also write <prefix><method>.csv per-step diagnostics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*cq) return run_check_q(check_q);
    if (*cd) return run_check_dirac(check_dirac);
    if (*sm) return run_simulate(sim);
    if (*bs) return run_bench_sleigh(sleigh);
    if (*bo) return run_bench_oscillator(osc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
