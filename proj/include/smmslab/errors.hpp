#pragma once

#include <stdexcept>
#include <string>

namespace smmslab {

struct error : std::runtime_error {
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Domain construction rejected (bad node counts, extents, dimension).
struct invalid_domain_error : error {
  using error::error;
};

// Input data violates a structural precondition (e.g. m = 0 with phi != 0).
struct invalid_input_error : error {
  using error::error;
};

// A field that must be strictly positive is not.
struct positivity_error : error {
  using error::error;
};

// Linear or eigen solver failed to converge; message carries diagnostics.
struct solver_failure_error : error {
  using error::error;
};

// A mathematical hypothesis required by the operation does not hold.
struct hypothesis_violation_error : error {
  using error::error;
};

// Sub/supersolution construction failed after the scale search.
struct construction_failure_error : error {
  using error::error;
};

// Flow step lost positivity; advises a smaller dt.
struct step_size_error : error {
  using error::error;
};

// Flow boundary closure left a residual above tolerance.
struct boundary_closure_error : error {
  using error::error;
};

// A solver invariant (bracket ordering, monotonicity) was violated.
struct invariant_violation_error : error {
  using error::error;
};

// Iteration budget exhausted without meeting the tolerance.
struct nonconvergence_error : error {
  using error::error;
};

}  // namespace smmslab
