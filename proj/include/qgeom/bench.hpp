#pragma once

// Chaplygin sleigh benchmark and the harmonic-oscillator energy-drift study.

#include <string>
#include <string_view>
#include <vector>

#include "qgeom/integrators.hpp"

namespace qgeom::bench {

using integrators::ConstrainedLagrangian;
using integrators::State;
using integrators::TrajectoryRecord;

struct SleighParams {
  double m = 1.0;
  double a = 0.1;
  double I = 1.0;

  /// Throws DomainError unless m > 0, I > 0, a >= 0.
  void validate() const;
};

/// L = m/2 (x'^2 + y'^2 + (I/m + a^2) th'^2 - 2a sin(th) x' th' + 2a cos(th) y' th')
/// with the no-side-slip one-form sin(th) dx - cos(th) dy. Coordinates (x, y, th).
ConstrainedLagrangian sleigh_system(const SleighParams& p);

/// (x, y, th) = 0 with velocities (1, 0, 1).
State default_sleigh_state();

/// Integrates the reduced variables (v, omega) with classical RK4 and recovers
/// (x, y, th) by integrating (v cos th, v sin th, omega) alongside. The reduced
/// right-hand side is derived symbolically from L by projecting the
/// Euler-Lagrange equations onto the constraint distribution.
/// Samples are kept every `stride` steps.
TrajectoryRecord sleigh_reference(const SleighParams& p, const State& s0, double h_ref, double T,
                                  std::size_t stride = 1);

/// Reduced right-hand side (v', omega') as expressions in (x, y, th, v, omega).
std::vector<integrators::Expression> sleigh_reduced_rhs(const SleighParams& p);

/// log2 of successive endpoint differences of sleigh_reference at h, h/2, h/4.
double reference_convergence_slope(const SleighParams& p, const State& s0, double h, double T);

struct ErrorRow {
  std::string method;
  std::vector<double> values;
};

/// Rows keyed by method, one value per column; all values nonnegative.
struct ErrorTable {
  std::vector<std::string> columns;
  std::vector<ErrorRow> rows;

  /// Throws std::out_of_range for an unknown method or column.
  double at(std::string_view method, std::string_view column) const;
};

/// Columns: error_x, error_y, error_theta, constraint_residual, energy_deviation.
/// Rows: explicit-euler, symplectic-euler, dirac1. The reference runs at h/100.
ErrorTable run_sleigh_benchmark(const SleighParams& p, const State& s0, double h, double T);

/// Per-method trajectories behind run_sleigh_benchmark, in row order.
std::vector<TrajectoryRecord> sleigh_benchmark_trajectories(const SleighParams& p, const State& s0, double h,
                                                            double T);

/// H = (p^2 + q^2)/2 from (q, p) = (1, 0).
integrators::CanonicalHamiltonian oscillator_system();

/// Columns: error_q, error_p (vs the exact flow), max_energy_drift, final_energy_drift.
/// Rows: explicit-euler, symplectic-euler, verlet.
ErrorTable oscillator_drift_study(double h, double T);

}  // namespace qgeom::bench
