#pragma once

#include <cmath>
#include <cstdio>
#include <utility>
#include <vector>

#include "smmslab/collocation.hpp"
#include "smmslab/errors.hpp"
#include "smmslab/linalg.hpp"
#include "smmslab/smms.hpp"

namespace smmslab {

struct NewtonReport {
  Field w;
  int iterations = 0;
  double residual = 0.0;
};

// Damped Newton iteration on the collocated conformal-factor equations.  The
// rows are the exact derivative of the discrete residual map, so convergence
// is quadratic near a solution; the step is halved until the residual norm
// drops and the iterate stays positive.
inline NewtonReport newton_solve(const SmmsBackground& bg, Field w, double tol = 1e-9,
                                 int max_iter = 60) {
  const int nn = bg.node_count();
  if (static_cast<int>(w.size()) != nn)
    throw invalid_input_error("newton_solve: field size mismatch");
  for (double x : w)
    if (!(x > 0.0)) throw positivity_error("newton_solve: start must be positive");

  const DiscreteDomain& d = bg.domain;
  auto flat = [&](const ResidualPair& r) {
    Vec f(nn, 0.0);
    for (int i = 0; i < nn; ++i)
      if (!d.on_boundary[i]) f[i] = -r.interior[i];
    for (std::size_t k = 0; k < r.boundary.size(); ++k)
      f[d.boundary_nodes[k]] = -r.boundary[k];
    return f;
  };

  ResidualPair r = yamabe_residual(bg, w);
  double rn = residual_norm(bg, r);
  for (int it = 0; it < max_iter; ++it) {
    if (rn <= tol) return {std::move(w), it, rn};
    CollocationSolver jac(nn, yamabe_jacobian_rows(bg, w));
    const Vec step = jac.solve(flat(r));
    double damp = 1.0;
    bool accepted = false;
    for (int half = 0; half < 40 && !accepted; ++half, damp *= 0.5) {
      Field trial(nn);
      bool positive = true;
      for (int i = 0; i < nn && positive; ++i) {
        trial[i] = w[i] + damp * step[i];
        positive = trial[i] > 0.0;
      }
      if (!positive) continue;
      ResidualPair rt = yamabe_residual(bg, trial);
      const double rtn = residual_norm(bg, rt);
      if (rtn < rn * (1.0 - 1e-4 * damp) || rtn <= tol) {
        w = std::move(trial);
        r = std::move(rt);
        rn = rtn;
        accepted = true;
      }
    }
    if (!accepted) {
      char buf[120];
      std::snprintf(buf, sizeof buf,
                    "newton_solve: line search stalled at residual %.3e", rn);
      throw nonconvergence_error(buf);
    }
  }
  if (rn <= tol) return {std::move(w), max_iter, rn};
  char buf[120];
  std::snprintf(buf, sizeof buf, "newton_solve: residual %.3e after %d iterations", rn,
                max_iter);
  throw nonconvergence_error(buf);
}

}  // namespace smmslab
