#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "smmslab/collocation.hpp"
#include "smmslab/domain.hpp"
#include "smmslab/errors.hpp"
#include "smmslab/linalg.hpp"
#include "smmslab/smms.hpp"
#include "smmslab/spectral.hpp"

// Constructive solver for the deformed-curvature fixed point: a linear update
// map that is order preserving between a lower and an upper solution, plus
// the eigenfunction-based construction of that bracket.

namespace smmslab {

struct SolverConfig {
  double gamma = 0.0;  // interior zeroth-order coefficient of the update map
  double rho = 0.0;    // boundary zeroth-order coefficient (<= 0)
  bool auto_coefficients = true;  // derive gamma, rho from the background
  double epsilon = 0.25;          // starting lower-solution amplitude
  double delta = 0.25;            // starting upper-solution depression
  double tol = 1e-9;
  int max_iter = 5000;
};

// Smallest coefficients keeping the update map order preserving on [0, 1]:
// gamma must dominate the interior reaction slope, rho must stay below the
// scaled infimum of the boundary curvature (and is capped at zero so the
// boundary row stays coercive).
inline std::pair<double, double> choose_gamma_rho(const SmmsBackground& bg) {
  const double nm = bg.dim_n + bg.dim_m;
  const double bound = nm / (2.0 * (nm - 1.0)) * max_abs(bg.Rm);
  const double gamma = std::max(1.1 * bound, 0.1);
  double hmin = 0.0;
  for (double h : bg.Hm) hmin = std::min(hmin, h);
  return {gamma, std::min(0.0, hmin / (nm - 1.0))};
}

namespace detail {

inline void check_order_bounds(const SmmsBackground& bg, double gamma, double rho) {
  const double nm = bg.dim_n + bg.dim_m;
  const double gmin = nm / (2.0 * (nm - 1.0)) * max_abs(bg.Rm);
  if (!(gamma > 0.0) || gamma < gmin - 1e-12)
    throw invalid_input_error("update map: gamma below the order-preservation bound");
  double hmin = std::numeric_limits<double>::infinity();
  for (double h : bg.Hm) hmin = std::min(hmin, h);
  if (rho > std::min(0.0, hmin / (nm - 1.0)) + 1e-12)
    throw invalid_input_error("update map: rho above the order-preservation bound");
}

inline Vec update_rhs(const SmmsBackground& bg, double gamma, double rho, const Field& v) {
  const DiscreteDomain& d = bg.domain;
  const StructureConstants& cs = bg.cs;
  Vec rhs(d.node_count(), 0.0);
  for (int i = 0; i < d.node_count(); ++i) {
    if (d.on_boundary[i]) continue;
    const double vi = std::clamp(v[i], 0.0, 1.0);
    rhs[i] = gamma * vi - cs.kappa * bg.Rm[i] * (vi - std::pow(vi, cs.q_exp));
  }
  for (std::size_t k = 0; k < d.boundary_nodes.size(); ++k) {
    const double vb = std::clamp(v[d.boundary_nodes[k]], 0.0, 1.0);
    rhs[d.boundary_nodes[k]] =
        -rho * vb + 2.0 * cs.kappa * bg.Hm[k] * (std::pow(vb, cs.s_exp) - vb);
  }
  return rhs;
}

inline void check_unit_box(const Field& v, const char* who) {
  for (double x : v)
    if (!(x >= -1e-12) || !(x <= 1.0 + 1e-12))
      throw invalid_input_error(std::string(who) + ": iterate leaves [0, 1]");
}

}  // namespace detail

// One sweep of the order-preserving update map.
inline Field apply_T(const SmmsBackground& bg, const SolverConfig& cfg, const Field& v) {
  if (static_cast<int>(v.size()) != bg.node_count())
    throw invalid_input_error("apply_T: field size mismatch");
  double gamma = cfg.gamma, rho = cfg.rho;
  if (cfg.auto_coefficients) std::tie(gamma, rho) = choose_gamma_rho(bg);
  detail::check_order_bounds(bg, gamma, rho);
  detail::check_unit_box(v, "apply_T");
  CollocationSolver solver(bg.node_count(), robin_rows(bg, gamma, rho));
  return solver.solve(detail::update_rhs(bg, gamma, rho, v));
}

// First eigenpair of the collocated (strong-form) operators: interior rows of
// L (or the rescaled barred variant) at non-boundary nodes, boundary rows of
// B as algebraic constraints.  The eigenfunction then satisfies the same
// stencil identities that yamabe_residual evaluates, which makes the
// lower/upper-solution inequalities below hold with margins controlled by
// the eigenvalue instead of by discretization defects.
inline SpectralResult collocated_first_eigen(const SmmsBackground& bg, bool barred,
                                             double tol = 1e-8, int max_outer = 60) {
  const DiscreteDomain& d = bg.domain;
  const int nn = d.node_count();
  const double inv = 1.0 / (bg.dim_n + bg.dim_m - 1.0);

  std::vector<Triplet> rows;
  for (const Triplet& e : weighted_laplacian_matrix(bg))
    if (!d.on_boundary[e.r]) rows.push_back({e.r, e.c, barred ? -e.v : -bg.cs.c * e.v});
  for (int i = 0; i < nn; ++i)
    if (!d.on_boundary[i]) rows.push_back({i, i, barred ? -inv * bg.Rm[i] : bg.Rm[i]});
  for (std::size_t k = 0; k < d.boundary_nodes.size(); ++k) {
    append_normal_stencil(d, k, barred ? 1.0 : 0.5 * bg.cs.c, rows);
    const double hcoef = barred ? -inv * bg.Hm[k] : bg.Hm[k];
    rows.push_back({d.boundary_nodes[k], d.boundary_nodes[k], hcoef});
  }
  const CsrMatrix a = CsrMatrix::from_triplets(nn, rows);

  const SpectralResult weak = barred ? first_eigen_barLbarB(bg) : first_eigen_LB(bg);
  double gap = 0.05 * (1.0 + std::abs(weak.lambda1));
  int total_iters = 0;

  for (int attempt = 0; attempt < 4; ++attempt, gap *= 4.0) {
    const double sigma = weak.lambda1 - gap;
    std::vector<Triplet> shifted = rows;
    for (int i = 0; i < nn; ++i)
      if (!d.on_boundary[i]) shifted.push_back({i, i, -sigma});
    CollocationSolver solver(nn, shifted);

    Vec v(nn, 1.0);
    double rho = weak.lambda1;
    bool bad = false;
    for (int it = 1; it <= max_outer; ++it) {
      ++total_iters;
      Vec rhs(nn, 0.0);
      for (int i = 0; i < nn; ++i)
        if (!d.on_boundary[i]) rhs[i] = v[i];
      Vec y;
      try {
        y = solver.solve(rhs);
      } catch (const solver_failure_error&) {
        bad = true;
        break;
      }
      double mx = 0.0;
      for (double x : y)
        if (std::abs(x) > std::abs(mx)) mx = x;
      if (!(std::abs(mx) > 0.0) || !std::isfinite(mx)) {
        bad = true;
        break;
      }
      for (double& x : y) x /= mx;
      v = y;

      const Vec av = a.multiply(v);
      double num = 0.0, den = 0.0;
      for (int i = 0; i < nn; ++i)
        if (!d.on_boundary[i]) {
          num += v[i] * av[i];
          den += v[i] * v[i];
        }
      rho = num / den;
      double res = 0.0;
      for (int i = 0; i < nn; ++i)
        res = std::max(res, std::abs(av[i] - (d.on_boundary[i] ? 0.0 : rho * v[i])));
      if (!std::isfinite(res)) {
        bad = true;
        break;
      }
      if (res <= tol * (1.0 + std::abs(rho))) {
        SpectralResult out;
        out.lambda1 = rho;
        out.eigenfunction = v;
        out.iterations = total_iters;
        out.residual = res / (1.0 + std::abs(rho));
        return out;
      }
    }
    (void)bad;  // either path: retry with a safer (lower) shift
  }
  throw nonconvergence_error("collocated_first_eigen: inverse iteration did not converge");
}

struct LowerSolution {
  Field u;
  double epsilon;  // accepted amplitude
  double alpha;    // power applied to the eigenfunction
};

struct UpperSolution {
  Field u;
  double delta;  // accepted depression below 1
};

// Lower solution epsilon * phi1^alpha with alpha = 1 - epsilon^{2/k}, phi1
// the first collocated eigenfunction of (L, B) normalized to max 1.  The
// defining inequalities are verified a posteriori with the discrete
// operators; epsilon is halved until they hold.
inline LowerSolution build_lower_solution(const SmmsBackground& bg, double epsilon = 0.25) {
  if (!(epsilon > 0.0) || epsilon >= 1.0)
    throw invalid_input_error("build_lower_solution: epsilon must be in (0, 1)");
  const SpectralResult eig = collocated_first_eigen(bg, false);
  if (!(eig.lambda1 < 0.0))
    throw hypothesis_violation_error(
        "build_lower_solution: first eigenvalue of (L, B) is not negative");
  double fmin = std::numeric_limits<double>::infinity();
  for (double x : eig.eigenfunction) fmin = std::min(fmin, x);
  if (!(fmin > 0.0))
    throw construction_failure_error(
        "build_lower_solution: first eigenfunction is not strictly positive");

  const DiscreteDomain& d = bg.domain;
  const double bslack = 1e-11 * (1.0 + max_abs(bg.Hm));
  double worst_int = 0.0, worst_bd = 0.0;
  for (int tries = 0; tries < 20; ++tries, epsilon *= 0.5) {
    const double alpha = 1.0 - std::pow(epsilon, 2.0 / bg.cs.k);
    Field u(bg.node_count());
    for (int i = 0; i < bg.node_count(); ++i)
      u[i] = epsilon * std::pow(eig.eigenfunction[i], alpha);
    const ResidualPair r = yamabe_residual(bg, u);
    worst_int = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < bg.node_count(); ++i)
      if (!d.on_boundary[i]) worst_int = std::max(worst_int, r.interior[i]);
    worst_bd = -std::numeric_limits<double>::infinity();
    for (double x : r.boundary) worst_bd = std::max(worst_bd, x);
    if (worst_int < 0.0 && worst_bd <= bslack) return {u, epsilon, alpha};
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "build_lower_solution: inequalities failed down to epsilon = %.3e "
                "(worst interior %.3e, worst boundary %.3e)",
                epsilon * 2.0, worst_int, worst_bd);
  throw construction_failure_error(buf);
}

// Upper solution 1 - delta * f1 with f1 the first collocated eigenfunction of
// the barred pair normalized to max 1; delta is halved until the reversed
// inequalities hold.
inline UpperSolution build_upper_solution(const SmmsBackground& bg, double delta = 0.25) {
  if (!(delta > 0.0) || delta >= 1.0)
    throw invalid_input_error("build_upper_solution: delta must be in (0, 1)");
  const SpectralResult eig = collocated_first_eigen(bg, true);
  if (!(eig.lambda1 < 0.0))
    throw hypothesis_violation_error(
        "build_upper_solution: first eigenvalue of the barred pair is not negative");
  double fmin = std::numeric_limits<double>::infinity();
  for (double x : eig.eigenfunction) fmin = std::min(fmin, x);
  if (!(fmin > 0.0))
    throw construction_failure_error(
        "build_upper_solution: first eigenfunction is not strictly positive");

  const DiscreteDomain& d = bg.domain;
  const double bslack = 1e-11 * (1.0 + max_abs(bg.Hm));
  double worst_int = 0.0, worst_bd = 0.0;
  for (int tries = 0; tries < 20; ++tries, delta *= 0.5) {
    Field u(bg.node_count());
    for (int i = 0; i < bg.node_count(); ++i) u[i] = 1.0 - delta * eig.eigenfunction[i];
    const ResidualPair r = yamabe_residual(bg, u);
    worst_int = std::numeric_limits<double>::infinity();
    for (int i = 0; i < bg.node_count(); ++i)
      if (!d.on_boundary[i]) worst_int = std::min(worst_int, r.interior[i]);
    worst_bd = std::numeric_limits<double>::infinity();
    for (double x : r.boundary) worst_bd = std::min(worst_bd, x);
    if (worst_int > 0.0 && worst_bd >= -bslack) return {u, delta};
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "build_upper_solution: inequalities failed down to delta = %.3e "
                "(worst interior %.3e, worst boundary %.3e)",
                delta * 2.0, worst_int, worst_bd);
  throw construction_failure_error(buf);
}

struct MonotoneTrace {
  std::vector<double> max_change;
  std::vector<double> residuals;
  int iterations = 0;
  double final_residual = 0.0;
};

// Iterates the update map downward from the upper solution.  Each sweep must
// decrease componentwise and stay inside [lower, upper]; a violation beyond
// roundoff slack signals a discretization bug, not a data problem.
inline ConformalFactor monotone_iterate(const SmmsBackground& bg, const SolverConfig& cfg,
                                        const Field& lower, const Field& upper,
                                        MonotoneTrace* trace = nullptr) {
  const int nn = bg.node_count();
  if (static_cast<int>(lower.size()) != nn || static_cast<int>(upper.size()) != nn)
    throw invalid_input_error("monotone_iterate: bracket size mismatch");
  for (int i = 0; i < nn; ++i)
    if (lower[i] > upper[i])
      throw invalid_input_error("monotone_iterate: lower exceeds upper");

  double gamma = cfg.gamma, rho = cfg.rho;
  if (cfg.auto_coefficients) std::tie(gamma, rho) = choose_gamma_rho(bg);
  detail::check_order_bounds(bg, gamma, rho);
  CollocationSolver solver(nn, robin_rows(bg, gamma, rho));

  Field v = upper;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    detail::check_unit_box(v, "monotone_iterate");
    const Vec psi = solver.solve(detail::update_rhs(bg, gamma, rho, v));
    const double slack = 1e-12 * (1.0 + max_abs(v));
    double change = 0.0;
    for (int i = 0; i < nn; ++i) {
      if (psi[i] > v[i] + slack)
        throw invariant_violation_error("monotone_iterate: sweep is not decreasing");
      if (psi[i] < lower[i] - slack || psi[i] > upper[i] + slack)
        throw invariant_violation_error("monotone_iterate: sweep leaves the bracket");
      change = std::max(change, std::abs(psi[i] - v[i]));
    }
    v.assign(psi.begin(), psi.end());
    const double res = residual_norm(bg, yamabe_residual(bg, v));
    if (trace) {
      trace->max_change.push_back(change);
      trace->residuals.push_back(res);
      trace->iterations = it;
      trace->final_residual = res;
    }
    if (change <= cfg.tol && res <= cfg.tol) return ConformalFactor(v);
  }
  throw nonconvergence_error("monotone_iterate: update map did not converge");
}

struct SmallerMetricReport {
  ConformalFactor w;
  double lambda1_LB;
  double lambda1_bar;
  double residual;
  int iterations;
  double epsilon;  // accepted lower-solution amplitude
  double delta;    // accepted upper-solution depression
  double alpha;    // lower-solution power
};

// Certified search for a second, smaller conformal factor: verifies the
// nonpositive-boundary-curvature and negative-eigenvalue hypotheses (all
// failures reported together), builds the bracket, and iterates.  The result
// satisfies 0 < w < 1 strictly.
inline SmallerMetricReport find_smaller_metric(const SmmsBackground& bg,
                                               SolverConfig cfg = {}) {
  std::string complaints;
  double hmax = -std::numeric_limits<double>::infinity();
  for (double h : bg.Hm) hmax = std::max(hmax, h);
  if (bg.Hm.empty()) hmax = 0.0;
  if (hmax > 1e-13 * (1.0 + max_abs(bg.Hm)))
    complaints += "weighted boundary curvature is positive somewhere; ";
  const SpectralResult lb = first_eigen_LB(bg);
  if (!(lb.lambda1 < 0.0))
    complaints += "first eigenvalue of (L, B) is not negative; ";
  const SpectralResult bar = first_eigen_barLbarB(bg);
  if (!(bar.lambda1 < 0.0))
    complaints += "first eigenvalue of the barred pair is not negative; ";
  if (!complaints.empty()) {
    complaints.erase(complaints.size() - 2);
    throw hypothesis_violation_error("find_smaller_metric: " + complaints);
  }

  const LowerSolution lo = build_lower_solution(bg, cfg.epsilon);
  const UpperSolution up = build_upper_solution(bg, cfg.delta);
  for (int i = 0; i < bg.node_count(); ++i)
    if (lo.u[i] > up.u[i])
      throw construction_failure_error("find_smaller_metric: bracket is not ordered");

  MonotoneTrace trace;
  ConformalFactor w = monotone_iterate(bg, cfg, lo.u, up.u, &trace);
  for (double x : w.w)
    if (!(x < 1.0))
      throw invariant_violation_error("find_smaller_metric: solution reaches 1");
  return {std::move(w),   lb.lambda1, bar.lambda1, trace.final_residual,
          trace.iterations, lo.epsilon, up.delta,    lo.alpha};
}

}  // namespace smmslab
