#pragma once

#include <Eigen/Dense>

#include "qgeom/errors.hpp"
#include "qgeom/integrators.hpp"

namespace qgeom::detail {

/// Damped Newton on F(z) = 0. `fn(z, F, J)` fills F and, when J is non-null,
/// the Jacobian. Steps are halved until the max-norm residual decreases.
/// Returns the iteration count; throws SolverError on failure.
template <class Fn>
int newton_solve(Eigen::VectorXd& z, Fn&& fn, const integrators::NewtonOptions& opts, const char* what) {
  const Eigen::Index n = z.size();
  Eigen::VectorXd r(n), r_try(n), z_try(n);
  Eigen::MatrixXd jac(n, n);
  fn(z, r, &jac);
  for (int iter = 0; iter <= opts.max_iterations; ++iter) {
    if (!r.allFinite()) throw SolverError(std::string(what) + ": non-finite residual");
    const double norm = r.lpNorm<Eigen::Infinity>();
    if (norm <= opts.tolerance) return iter;
    if (iter == opts.max_iterations) break;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
    const Eigen::VectorXd delta = lu.solve(r);
    if (!delta.allFinite()) throw SolverError(std::string(what) + ": singular Jacobian");
    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k <= opts.max_halvings; ++k) {
      z_try = z - alpha * delta;
      fn(z_try, r_try, nullptr);
      if (r_try.allFinite() && r_try.lpNorm<Eigen::Infinity>() < norm) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted && !r_try.allFinite()) throw SolverError(std::string(what) + ": damped step left the domain");
    z = z_try;
    fn(z, r, &jac);
  }
  throw SolverError(std::string(what) + ": Newton did not converge in " + std::to_string(opts.max_iterations) +
                    " iterations (residual " + std::to_string(r.lpNorm<Eigen::Infinity>()) + ")");
}

}  // namespace qgeom::detail
