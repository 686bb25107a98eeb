#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qgeom {

/// Malformed expression, context file or spec file.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Operands built over different graded contexts.
class ContextMismatch : public std::invalid_argument {
 public:
  explicit ContextMismatch(const std::string& what) : std::invalid_argument(what) {}
};

/// Structurally invalid input (bad dimensions, degrees, parameters).
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// Nonlinear solve did not converge, or a step produced non-finite values.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what, std::size_t step = 0)
      : std::runtime_error(what), step_(step) {}

  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

}  // namespace qgeom
