#pragma once

// System spec files and CSV emission for trajectories and error tables.
//
// System file:
//   [hamiltonian] n=1          [lagrangian] n=3              [port] n=2
//   H = (p1^2 + q1^2)/2        L = ...                       H = ...
//   q0 = 1                     constraint: sin(q3)*dq1 - ... J 1 2 = 1
//   p0 = 0                     q0 = 0, 0, 0                  R 2 2 = 1/2
//                              v0 = 1, 0, 1                  g 2 1 = 1
//                                                            f 1 = cos(t)
//                                                            x0 = 1, 0
// Indices are 1-based. `t0 = ...` optionally sets the start time.

#include <iosfwd>
#include <string>
#include <string_view>

#include "qgeom/bench.hpp"
#include "qgeom/integrators.hpp"

namespace qgeom::io {

struct LoadedSystem {
  integrators::MechSystem system;
  integrators::State initial;
};

/// Throws ParseError on malformed input, DomainError on structurally invalid systems.
LoadedSystem parse_system(std::string_view text);
LoadedSystem load_system(const std::string& path);

/// 17 significant digits, locale independent.
std::string format_number(double x);

/// Header t,q1..qn,p1..pn|v1..vn,energy,constraint_residual,power_residual
/// (port systems use x1..xn and no second block). Inapplicable cells are empty.
void write_trajectory_csv(std::ostream& os, const integrators::TrajectoryRecord& rec);
integrators::TrajectoryRecord read_trajectory_csv(std::istream& is);

/// Header method,<columns...>
void write_error_table_csv(std::ostream& os, const bench::ErrorTable& table);
bench::ErrorTable read_error_table_csv(std::istream& is);

}  // namespace qgeom::io
