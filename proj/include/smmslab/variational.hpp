#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "smmslab/domain.hpp"
#include "smmslab/errors.hpp"
#include "smmslab/linalg.hpp"
#include "smmslab/rng.hpp"
#include "smmslab/smms.hpp"
#include "smmslab/spectral.hpp"

namespace smmslab {

// ============================================================================
// Sharp trace constant and the extremal family on the flat half-space.
// ============================================================================

// log of Vol(S^d) = 2 pi^{(d+1)/2} / Gamma((d+1)/2); log-Gamma keeps the
// relative error near machine precision for all admissible (m, n).
inline double log_unit_sphere_area(double d) {
  return std::numbers::ln2 + 0.5 * (d + 1.0) * std::log(std::numbers::pi) -
         std::lgamma(0.5 * (d + 1.0));
}

// Best constant of the weighted trace inequality on the half-space:
//   lambda = (m+n-2)^2 * (Vol(S^{2m+n-1})^{1/(2m+n-1)} / (2(2m+n-2)))^{(2m+n-1)/(m+n-1)}
//            * (Gamma(2m+n-1) / (pi^m Gamma(m+n-1)))^{1/(m+n-1)}
inline double lambda_mn(double m, int n) {
  if (n < 3) throw invalid_input_error("lambda_mn: n must be >= 3");
  if (!(m >= 0.0)) throw invalid_input_error("lambda_mn: m must be >= 0");
  const double k = m + n - 2.0;
  const double d = 2.0 * m + n - 1.0;
  const double log_t2 = (d / (m + n - 1.0)) *
                        (log_unit_sphere_area(d) / d - std::log(2.0 * (2.0 * m + n - 2.0)));
  const double log_t3 = (std::lgamma(2.0 * m + n - 1.0) - m * std::log(std::numbers::pi) -
                         std::lgamma(m + n - 1.0)) /
                        (m + n - 1.0);
  return k * k * std::exp(log_t2 + log_t3);
}

// Evaluator of the extremal profile in the cylindrical reduction: at radius r
// from the concentration axis and height t above the trace hyperplane,
//   w(r, t) = (2 eps / ((eps + t)^2 + (r - x0)^2))^{(m+n-2)/2}.
struct GnsExtremal {
  double epsilon;
  double x0_offset;
  double exponent;  // (m+n-2)/2

  double operator()(double r, double t) const {
    const double rho = r - x0_offset;
    return std::pow(2.0 * epsilon / ((epsilon + t) * (epsilon + t) + rho * rho), exponent);
  }
};

inline GnsExtremal gns_extremal(double epsilon, double x0_offset, double m, int n) {
  if (!(epsilon > 0.0)) throw invalid_input_error("gns_extremal: epsilon must be positive");
  return GnsExtremal{epsilon, x0_offset, 0.5 * (m + n - 2.0)};
}

// Relative size of what truncating the half-space at radius/height R discards
// from the extremal's quotient integrals; from the far-field decay
// w ~ (2 eps)^{(m+n-2)/2} s^{-(m+n-2)} both p-integrals lose O((R/eps)^{-(n+2m-2)}).
inline double gns_truncation_tail(double m, int n, double epsilon, double radius) {
  if (!(epsilon > 0.0) || !(radius > 0.0))
    throw invalid_input_error("gns_truncation_tail: epsilon and radius must be positive");
  return std::pow(radius / epsilon, -(n + 2.0 * m - 2.0));
}

// ============================================================================
// Flat trace quotient on the truncated half-space,
//   (int |grad w|^2) (int |w|^p)^{m/(m+n-1)} / (bint |w|^p)^{(2m+n-2)/(m+n-1)},
// with p = 2(m+n-1)/(m+n-2) and plain Lebesgue measure.  Bounded below by
// lambda_mn in the continuum.
// ============================================================================

inline double trace_gns_quotient(const DiscreteDomain& d, const Field& w, double m, int n) {
  if (d.kind != DomainKind::halfspace_cylinder)
    throw invalid_input_error("trace_gns_quotient: needs a halfspace_cylinder domain");
  if (static_cast<int>(w.size()) != d.node_count())
    throw invalid_input_error("trace_gns_quotient: field size does not match domain");
  if (!(m >= 0.0) || n < 3) throw invalid_input_error("trace_gns_quotient: need m >= 0, n >= 3");
  const double p = 2.0 * (m + n - 1.0) / (m + n - 2.0);
  double dir = 0.0;
  for (const Face& f : d.faces) {
    const double s = (w[f.b] - w[f.a]) / f.h;
    dir += f.w * s * s;
  }
  double volp = 0.0;
  for (int i = 0; i < d.node_count(); ++i) volp += std::pow(std::abs(w[i]), p) * d.vol_w[i];
  double trp = 0.0;
  for (std::size_t k = 0; k < d.boundary_nodes.size(); ++k)
    trp += std::pow(std::abs(w[d.boundary_nodes[k]]), p) * d.bd_w[k];
  if (!(trp > 0.0)) throw invalid_input_error("trace_gns_quotient: trace of w vanishes");
  return dir * std::pow(volp, m / (m + n - 1.0)) /
         std::pow(trp, (2.0 * m + n - 2.0) / (m + n - 1.0));
}

// ============================================================================
// Weighted boundary-Yamabe quotient Q = A * B on a background.
//
//   A(w) = int (|grad w|^2 + kappa R w^2) e^{-phi} dV + 2 kappa bint H w^2 e^{-phi} dA
//   B(w) = (int |w|^p e^{-(m-1)/m phi} dV)^{m/(m+n-1)} / (bint |w|^p e^{-phi} dA)^{(2m+n-2)/(m+n-1)}
//
// The kappa = 1/c normalization makes A the squared-gradient energy of the
// conformal pair: on the flat half-space Q reduces to the trace quotient
// above, and at m = 0 it is the classical boundary Sobolev quotient, so the
// infimum is directly comparable against lambda_mn.  Q is invariant under
// w -> const * w; B(cw) = c^{-2} B(w).
// ============================================================================

// Matrix of the quadratic form: A(w) = w' K w.
inline CsrMatrix escobar_form_matrix(const SmmsBackground& bg) {
  const DiscreteDomain& d = bg.domain;
  const int nn = bg.node_count();
  std::vector<Triplet> t = assemble_weighted_stiffness(d, bg.exp_neg_phi);  // kappa * c = 1
  for (int i = 0; i < nn; ++i)
    t.push_back({i, i, bg.cs.kappa * bg.Rm[i] * bg.exp_neg_phi[i] * d.vol_w[i]});
  for (std::size_t k = 0; k < d.boundary_nodes.size(); ++k)
    t.push_back({d.boundary_nodes[k], d.boundary_nodes[k],
                 2.0 * bg.cs.kappa * bg.Hm[k] * bg.exp_neg_phi_b[k] * d.bd_w[k]});
  return CsrMatrix::from_triplets(nn, t);
}

inline double escobar_A(const SmmsBackground& bg, const Field& w) {
  const DiscreteDomain& d = bg.domain;
  if (static_cast<int>(w.size()) != d.node_count())
    throw invalid_input_error("escobar_A: field size does not match background");
  double a = 0.0;
  for (const Face& f : d.faces) {
    const double s = (w[f.b] - w[f.a]) / f.h;
    a += f.w * 0.5 * (bg.exp_neg_phi[f.a] + bg.exp_neg_phi[f.b]) * s * s;
  }
  for (int i = 0; i < d.node_count(); ++i)
    a += bg.cs.kappa * bg.Rm[i] * w[i] * w[i] * bg.exp_neg_phi[i] * d.vol_w[i];
  for (std::size_t k = 0; k < d.boundary_nodes.size(); ++k) {
    const double wb = w[d.boundary_nodes[k]];
    a += 2.0 * bg.cs.kappa * bg.Hm[k] * wb * wb * bg.exp_neg_phi_b[k] * d.bd_w[k];
  }
  return a;
}

namespace detail {

// p-integrals entering B: S over the boundary with weight e^{-phi}, V over the
// volume with weight e^{-(m-1)/m phi} (V = 1 when m = 0, where its exponent in
// B vanishes and phi = 0 anyway).
struct PNormData {
  double V = 1.0;
  double S = 0.0;
};

inline PNormData escobar_pnorms(const SmmsBackground& bg, const Field& w) {
  const DiscreteDomain& d = bg.domain;
  const double p = bg.cs.p_exp;
  PNormData out;
  if (bg.dim_m > 0.0) {
    const double phi_pow = (bg.dim_m - 1.0) / bg.dim_m;
    double v = 0.0;
    for (int i = 0; i < d.node_count(); ++i)
      v += std::pow(std::abs(w[i]), p) * std::pow(bg.exp_neg_phi[i], phi_pow) * d.vol_w[i];
    out.V = v;
  }
  for (std::size_t k = 0; k < d.boundary_nodes.size(); ++k)
    out.S += std::pow(std::abs(w[d.boundary_nodes[k]]), p) * bg.exp_neg_phi_b[k] * d.bd_w[k];
  if (!(out.S > 0.0)) throw invalid_input_error("escobar quotient: trace of w vanishes");
  return out;
}

}  // namespace detail

inline double escobar_B(const SmmsBackground& bg, const Field& w) {
  if (static_cast<int>(w.size()) != bg.node_count())
    throw invalid_input_error("escobar_B: field size does not match background");
  const detail::PNormData pn = detail::escobar_pnorms(bg, w);
  const double nm1 = bg.dim_n + bg.dim_m - 1.0;
  const double b = std::pow(pn.S, -(bg.dim_n + 2.0 * bg.dim_m - 2.0) / nm1);
  return bg.dim_m > 0.0 ? std::pow(pn.V, bg.dim_m / nm1) * b : b;
}

inline double escobar_quotient(const SmmsBackground& bg, const Field& w) {
  return escobar_A(bg, w) * escobar_B(bg, w);
}

// ============================================================================
// First variation.  With K the form matrix and a = m/(m+n-1),
// b = (2m+n-2)/(m+n-1),
//
//   dQ[psi] = B(w) (2 K w, psi) + Q(w) (a dV[psi]/V - b dS[psi]/S),
//
// so grad Q vanishes exactly at a discrete minimizer.  The stationarity
// condition scaled back to operator form reads
//
//   interior:  L w + (c/2) a p (Q/V) w^{p-1} e^{phi/m}            = 0
//   boundary:  B w - (c/4) b p (Q/S) w^{p-1}                      = 0
//
// and the residual fields below report the gradient in exactly these units
// (interior entries divided by 2 kappa B e^{-phi} vol, boundary entries by
// 4 kappa B e^{-phi} area), with the caller-supplied quotient value standing
// in for Q.
// ============================================================================

struct ElResidual {
  Field interior;       // zero at boundary nodes; their defect is in `boundary`
  BoundaryField boundary;
};

namespace detail {

// Exact gradient of Q at w, reusing a preassembled form matrix; quotient_value
// replaces Q(w) in the zeroth-order part so the caller can probe the
// optimality system at a prescribed level.
inline Vec escobar_gradient(const SmmsBackground& bg, const CsrMatrix& K, const Field& w,
                            double B_value, double quotient_value, const PNormData& pn) {
  const DiscreteDomain& d = bg.domain;
  const double p = bg.cs.p_exp;
  const double nm1 = bg.dim_n + bg.dim_m - 1.0;
  const double a = bg.dim_m / nm1;
  const double b = (bg.dim_n + 2.0 * bg.dim_m - 2.0) / nm1;
  Vec g = K.multiply(w);
  for (double& v : g) v *= 2.0 * B_value;
  if (bg.dim_m > 0.0) {
    const double phi_pow = (bg.dim_m - 1.0) / bg.dim_m;
    const double cv = quotient_value * a * p / pn.V;
    for (int i = 0; i < d.node_count(); ++i)
      g[i] += cv * std::pow(std::abs(w[i]), p - 2.0) * w[i] *
              std::pow(bg.exp_neg_phi[i], phi_pow) * d.vol_w[i];
  }
  const double cb = quotient_value * b * p / pn.S;
  for (std::size_t k = 0; k < d.boundary_nodes.size(); ++k) {
    const int nb = d.boundary_nodes[k];
    g[nb] -= cb * std::pow(std::abs(w[nb]), p - 2.0) * w[nb] * bg.exp_neg_phi_b[k] * d.bd_w[k];
  }
  return g;
}

inline ElResidual scale_gradient(const SmmsBackground& bg, const Vec& g, double B_value) {
  const DiscreteDomain& d = bg.domain;
  const Field mass_w = positive_mass_weights(d);
  ElResidual r;
  r.interior.assign(d.node_count(), 0.0);
  for (int i = 0; i < d.node_count(); ++i)
    if (!d.on_boundary[i])
      r.interior[i] = g[i] / (2.0 * bg.cs.kappa * B_value * bg.exp_neg_phi[i] * mass_w[i]);
  r.boundary.assign(d.boundary_nodes.size(), 0.0);
  for (std::size_t k = 0; k < d.boundary_nodes.size(); ++k) {
    const int nb = d.boundary_nodes[k];
    r.boundary[k] = g[nb] / (4.0 * bg.cs.kappa * B_value * bg.exp_neg_phi_b[k] * d.bd_w[k]);
  }
  return r;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

inline ElResidual el_residual(const SmmsBackground& bg, const Field& w, double quotient_value) {
  if (static_cast<int>(w.size()) != bg.node_count())
    throw invalid_input_error("el_residual: field size does not match background");
  require_positive(w, "el_residual");
  const CsrMatrix K = escobar_form_matrix(bg);
  const detail::PNormData pn = detail::escobar_pnorms(bg, w);
  const double B_value = escobar_B(bg, w);
  const Vec g = detail::escobar_gradient(bg, K, w, B_value, quotient_value, pn);
  return detail::scale_gradient(bg, g, B_value);
}

struct QuotientReport {
  double A_value = 0.0;
  double B_value = 0.0;
  double Q_value = 0.0;
  double el_interior_residual = 0.0;  // max norms
  double el_boundary_residual = 0.0;
  std::string trial_id;
};

inline QuotientReport quotient_report(const SmmsBackground& bg, const Field& w,
                                      std::string trial_id) {
  QuotientReport rep;
  rep.trial_id = std::move(trial_id);
  rep.A_value = escobar_A(bg, w);
  rep.B_value = escobar_B(bg, w);
  rep.Q_value = rep.A_value * rep.B_value;
  const ElResidual res = el_residual(bg, w, rep.Q_value);
  rep.el_interior_residual = detail::max_abs(res.interior);
  rep.el_boundary_residual = detail::max_abs(res.boundary);
  return rep;
}

// ============================================================================
// Constrained minimization of Q over {w > 0, B(w) = 1} by preconditioned
// projected gradient descent.  Scale invariance makes the B = 1 normalization
// free, so every accepted step renormalizes; descent directions are the
// gradient measured against the local volume + area weights, step sizes come
// from Armijo backtracking, and positivity is kept by a clip floor whose
// activity is tracked and must be clear at the solution.
// ============================================================================

struct MinimizeResult {
  ConformalFactor w_star;
  double Lambda_estimate = 0.0;
  QuotientReport report;
  int iterations = 0;
  bool converged = false;
  bool stalled = false;             // Armijo search failed before tol was met
  bool floor_was_active = false;    // positivity clip touched the final iterate
  std::vector<double> q_history;    // Q after each accepted step
};

inline MinimizeResult minimize_escobar(const SmmsBackground& bg, const ConformalFactor& init,
                                       double tol, int max_iter) {
  if (!(tol > 0.0)) throw invalid_input_error("minimize_escobar: tol must be positive");
  if (max_iter < 1) throw invalid_input_error("minimize_escobar: max_iter must be >= 1");
  if (static_cast<int>(init.w.size()) != bg.node_count())
    throw invalid_input_error("minimize_escobar: initial field does not match background");
  const DiscreteDomain& d = bg.domain;
  const int nn = bg.node_count();
  const double floor = 1e-12;
  const CsrMatrix K = escobar_form_matrix(bg);

  // Combined node measure: volume everywhere plus the area weight on the
  // trace, so boundary and interior gradient entries live on comparable
  // scales.
  Field metric = positive_mass_weights(d);
  for (int i = 0; i < nn; ++i) metric[i] *= bg.exp_neg_phi[i];
  for (std::size_t k = 0; k < d.boundary_nodes.size(); ++k)
    metric[d.boundary_nodes[k]] += bg.exp_neg_phi_b[k] * d.bd_w[k];

  // Descent directions are measured in the H^1 metric (weighted stiffness
  // plus the node measure), factored once; a plain mass metric stalls on
  // graded measures where near-axis nodes couple stiffly but weigh little.
  std::vector<Triplet> pt = assemble_weighted_stiffness(d, bg.exp_neg_phi);
  for (int i = 0; i < nn; ++i) pt.push_back({i, i, metric[i]});
  const int bw = detail::triplet_bandwidth(pt);
  BandedMatrix precond(nn, bw, bw);
  for (const Triplet& t : pt) precond.add(t.r, t.c, t.v);
  precond.factor();

  Field w = init.w;
  auto renormalize = [&](Field& u) { // B(cu) = c^{-2} B(u)
    const double c = std::sqrt(escobar_B(bg, u));
    for (double& x : u) x *= c;
  };
  renormalize(w);

  MinimizeResult out{ConformalFactor(w)};
  double q = escobar_quotient(bg, w);
  out.q_history.push_back(q);
  double step = 1.0;
  bool clipped_last = false;

  for (int it = 1; it <= max_iter; ++it) {
    out.iterations = it;
    const detail::PNormData pn = detail::escobar_pnorms(bg, w);
    const double B_value = escobar_B(bg, w);
    const Vec g = detail::escobar_gradient(bg, K, w, B_value, q, pn);
    const ElResidual res = detail::scale_gradient(bg, g, B_value);
    if (std::max(detail::max_abs(res.interior), detail::max_abs(res.boundary)) <= tol) {
      out.converged = true;
      break;
    }

    Field dir = precond.solve(g);
    double slope = 0.0;  // directional derivative of Q along dir
    for (int i = 0; i < nn; ++i) {
      dir[i] = -dir[i];
      slope += g[i] * dir[i];
    }

    bool accepted = false;
    bool clipped = false;
    double eta = std::min(step * 2.0, 4.0);
    for (int half = 0; half < 60; ++half, eta *= 0.5) {
      Field trial = w;
      bool clip = false;
      for (int i = 0; i < nn; ++i) {
        trial[i] += eta * dir[i];
        if (trial[i] < floor) {
          trial[i] = floor;
          clip = true;
        }
      }
      const double q_trial = escobar_quotient(bg, trial);
      if (q_trial <= q + 1e-4 * eta * slope) {
        renormalize(trial);
        w = std::move(trial);
        q = escobar_quotient(bg, w);
        step = eta;
        accepted = true;
        clipped = clip;
        break;
      }
    }
    if (!accepted) {
      out.stalled = true;
      break;
    }
    clipped_last = clipped;
    out.q_history.push_back(q);
  }

  out.w_star = ConformalFactor(w);
  out.Lambda_estimate = q;
  out.report = quotient_report(bg, w, "minimizer");
  double wmin = std::numeric_limits<double>::infinity();
  for (double x : w) wmin = std::min(wmin, x);
  out.floor_was_active = clipped_last || wmin <= 10.0 * floor;
  return out;
}

// ============================================================================
// Empirical lower bound on the additive constant of the perturbed trace
// inequality on a flat model domain: for each trial w the smallest C with
//
//   (bint |w|^p)^{(2m+n-2)/(m+n-1)} <= (int |w|^p)^{m/(m+n-1)} *
//       [ (1/lambda_mn + eps) int |grad w|^2 + C (int w^2 + bint w^2) ]
//
// and the certified estimate is the max over the family.
// ============================================================================

struct AubinTrial {
  std::string name;
  Field w;
};

struct AubinTrialResult {
  std::string name;
  double required_C = 0.0;
  double slack = 0.0;  // C_estimate - required_C
};

struct AubinReport {
  double C_estimate = 0.0;
  double epsilon = 0.0;
  double lambda = 0.0;
  std::vector<AubinTrialResult> trials;
};

// Versioned trial family (v1): the constant, extremal bubbles at four scales,
// and three fixed-seed smooth bumps; deterministic for reproducible estimates.
inline std::vector<AubinTrial> make_aubin_trial_family(const DiscreteDomain& d, double m, int n) {
  const int nn = d.node_count();
  std::vector<AubinTrial> fam;
  fam.push_back({"v1-const", Field(nn, 1.0)});
  for (double eps : {0.5, 1.0, 2.0, 4.0}) {
    const GnsExtremal bubble = gns_extremal(eps, 0.0, m, n);
    Field w(nn);
    for (int i = 0; i < nn; ++i) w[i] = bubble(d.coord_r(i), d.coord_t(i));
    fam.push_back({"v1-bubble-" + std::to_string(eps).substr(0, 3), std::move(w)});
  }
  Rng rng(20260814);
  for (int j = 0; j < 3; ++j) {
    Field w(nn);
    const double a1 = rng.uniform(0.2, 0.8), a2 = rng.uniform(0.05, 0.3);
    const double b1 = d.one_dimensional() ? 0.0 : rng.uniform(0.2, 0.8);
    for (int i = 0; i < nn; ++i) {
      const double x = d.coord_r(i) / d.extent_r;
      const double y = d.one_dimensional() ? 0.0 : d.coord_t(i) / d.extent_t;
      w[i] = 1.0 + a1 * std::cos(std::numbers::pi * x) + a2 * std::cos(2.0 * std::numbers::pi * x) +
             b1 * std::cos(std::numbers::pi * y);
    }
    fam.push_back({"v1-bump-" + std::to_string(j), std::move(w)});
  }
  return fam;
}

inline AubinReport estimate_aubin_constant(const DiscreteDomain& d, double m, int n,
                                           double epsilon,
                                           const std::vector<AubinTrial>& family) {
  if (!(epsilon > 0.0)) throw invalid_input_error("estimate_aubin_constant: epsilon must be positive");
  if (family.empty()) throw invalid_input_error("estimate_aubin_constant: empty trial family");
  AubinReport rep;
  rep.epsilon = epsilon;
  rep.lambda = lambda_mn(m, n);
  const double p = 2.0 * (m + n - 1.0) / (m + n - 2.0);
  const double a = m / (m + n - 1.0);
  const double b = (2.0 * m + n - 2.0) / (m + n - 1.0);
  rep.C_estimate = -std::numeric_limits<double>::infinity();
  for (const AubinTrial& trial : family) {
    const Field& w = trial.w;
    if (static_cast<int>(w.size()) != d.node_count())
      throw invalid_input_error("estimate_aubin_constant: trial '" + trial.name +
                                "' does not match domain");
    double dir = 0.0;
    for (const Face& f : d.faces) {
      const double s = (w[f.b] - w[f.a]) / f.h;
      dir += f.w * s * s;
    }
    double volp = 0.0, l2v = 0.0;
    for (int i = 0; i < d.node_count(); ++i) {
      volp += std::pow(std::abs(w[i]), p) * d.vol_w[i];
      l2v += w[i] * w[i] * d.vol_w[i];
    }
    double trp = 0.0, l2b = 0.0;
    for (std::size_t k = 0; k < d.boundary_nodes.size(); ++k) {
      const double wb = w[d.boundary_nodes[k]];
      trp += std::pow(std::abs(wb), p) * d.bd_w[k];
      l2b += wb * wb * d.bd_w[k];
    }
    if (!(l2v + l2b > 0.0))
      throw invalid_input_error("estimate_aubin_constant: trial '" + trial.name +
                                "' is identically zero");
    const double lhs = std::pow(trp, b) / (m > 0.0 ? std::pow(volp, a) : 1.0);
    const double required = (lhs - (1.0 / rep.lambda + epsilon) * dir) / (l2v + l2b);
    rep.trials.push_back({trial.name, required, 0.0});
    rep.C_estimate = std::max(rep.C_estimate, required);
  }
  for (AubinTrialResult& t : rep.trials) t.slack = rep.C_estimate - t.required_C;
  return rep;
}

}  // namespace smmslab
