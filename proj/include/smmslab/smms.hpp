#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "smmslab/domain.hpp"
#include "smmslab/errors.hpp"

namespace smmslab {

// Structure constants of an (n, m) weighted geometry.  All exponents and
// coefficients of the conformally covariant operators derive from
// k = n + m - 2.
struct StructureConstants {
  int n;
  double m;
  double k;         // n + m - 2
  double c;         // 4 (n + m - 1) / k
  double kappa;     // 1 / c
  double q_exp;     // (n + m + 2) / k   interior covariance exponent
  double s_exp;     // (n + m) / k       boundary covariance exponent
  double p_exp;     // 2 (n + m - 1) / k critical trace exponent
  double vol_exp;   // 2 (n + m) / k     conformal volume-density exponent
  double area_exp;  // 2 (n + m - 1) / k conformal area-density exponent
};

inline StructureConstants structure_constants(int n, double m) {
  if (n < 2) throw invalid_input_error("structure_constants: n must be >= 2");
  if (m < 0.0) throw invalid_input_error("structure_constants: m must be >= 0");
  StructureConstants s;
  s.n = n;
  s.m = m;
  s.k = n + m - 2.0;
  if (!(s.k > 0.0)) throw invalid_input_error("structure_constants: n + m - 2 must be positive");
  s.c = 4.0 * (n + m - 1.0) / s.k;
  s.kappa = 1.0 / s.c;
  s.q_exp = (n + m + 2.0) / s.k;
  s.s_exp = (n + m) / s.k;
  s.p_exp = 2.0 * (n + m - 1.0) / s.k;
  s.vol_exp = 2.0 * (n + m) / s.k;
  s.area_exp = 2.0 * (n + m - 1.0) / s.k;
  return s;
}

inline void require_positive(const Field& w, const char* what) {
  for (double v : w)
    if (!(v > 0.0)) throw positivity_error(std::string(what) + ": field must be positive");
}

// A conformal factor: strictly positive everywhere, checked on construction.
struct ConformalFactor {
  Field w;
  explicit ConformalFactor(Field values) : w(std::move(values)) {
    require_positive(w, "ConformalFactor");
  }
};

// ----------------------------------------------------------------------------
// A discretized smooth metric measure space with boundary: one of the model
// grids carrying a weight exponent phi0, a formal dimension pair (dim_n,
// dim_m), and user-supplied background curvature data R_g0 / H_g0 (zero /
// sphere value for the flat model geometries).  dim_m = 0 forces phi0 == 0;
// the measure is then Riemannian.
//
// dim_n may exceed the grid's own dimension: a halfspace_cylinder built with
// domain dim 2 is a flat Cartesian section of an ambient dim_n half-space on
// which all fields are constant along the suppressed directions, so the grid
// operators evaluate the ambient ones exactly.
// ----------------------------------------------------------------------------
struct SmmsBackground {
  DiscreteDomain domain;
  int dim_n;
  double dim_m;
  StructureConstants cs;
  Field phi0;
  Field R_g0;
  BoundaryField H_g0;

  Field exp_neg_phi;            // e^{-phi0} at nodes
  BoundaryField exp_neg_phi_b;  // e^{-phi0} at boundary nodes
  Field Rm;                     // cached weighted scalar curvature R^m_{phi0}
  BoundaryField Hm;             // cached weighted mean curvature H^m_{phi0}

  int node_count() const { return domain.node_count(); }
  int boundary_count() const { return static_cast<int>(domain.boundary_nodes.size()); }
};

// Mean curvature of the model geometry's trace boundary: n - 1 on the unit
// sphere (trace of the second fundamental form w.r.t. the outward normal),
// 0 on flat faces and on the interval surrogate.
inline BoundaryField default_boundary_mean_curvature(const DiscreteDomain& d) {
  BoundaryField out(d.boundary_nodes.size(), 0.0);
  if (d.kind == DomainKind::radial_ball) out[0] = d.dim_n - 1.0;
  return out;
}

// Weighted drift Laplacian lap_phi u = lap u - <grad phi0, grad u>.
inline Field weighted_laplacian(const SmmsBackground& bg, const Field& u) {
  Field out = laplacian(bg.domain, u);
  if (bg.dim_m == 0.0) return out;
  Field g = gradient_inner(bg.domain, bg.phi0, u);
  for (int i = 0; i < bg.node_count(); ++i) out[i] -= g[i];
  return out;
}

// ----------------------------------------------------------------------------
// Weighted curvatures of the background:
//
//   R^m_phi = R_g + 2 lap(phi) - ((m+1)/m) |grad phi|^2   (0 weight terms, m = 0)
//   H^m_phi = H_g - dphi/dnu
//
// The sign in H^m_phi is fixed by the conformal transformation law below:
// with phi-hat = phi - (2m/k) log w the pair (R, H) must transform through
// the covariant operators with conformal factor w, and under the outward
// trace convention for H_g that forces the minus sign (the opposite sign
// violates the law by O(1) whenever m > 0).
// ----------------------------------------------------------------------------
inline Field weighted_scalar_curvature(const SmmsBackground& bg) {
  const int nn = bg.node_count();
  Field out = bg.R_g0;
  if (bg.dim_m == 0.0) return out;
  Field lap = laplacian(bg.domain, bg.phi0);
  Field g2 = gradient_inner(bg.domain, bg.phi0, bg.phi0);
  const double coef = (bg.dim_m + 1.0) / bg.dim_m;
  for (int i = 0; i < nn; ++i) out[i] += 2.0 * lap[i] - coef * g2[i];
  return out;
}

inline BoundaryField weighted_mean_curvature(const SmmsBackground& bg) {
  BoundaryField out = bg.H_g0;
  if (bg.dim_m == 0.0) return out;
  BoundaryField dn = normal_derivative(bg.domain, bg.phi0);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= dn[k];
  return out;
}

inline SmmsBackground make_background(DiscreteDomain domain, Field phi0, Field R_g0,
                                      BoundaryField H_g0, int dim_n, double dim_m) {
  const int nn = domain.node_count();
  const std::size_t nb = domain.boundary_nodes.size();
  if (static_cast<int>(phi0.size()) != nn)
    throw invalid_input_error("make_background: phi0 size mismatch");
  if (static_cast<int>(R_g0.size()) != nn)
    throw invalid_input_error("make_background: R_g0 size mismatch");
  if (H_g0.size() != nb) throw invalid_input_error("make_background: H_g0 size mismatch");
  if (dim_n < 3) throw invalid_input_error("make_background: dim_n must be >= 3");
  if (dim_m == 0.0) {
    for (double v : phi0)
      if (v != 0.0)
        throw invalid_input_error("make_background: m = 0 requires phi0 identically zero");
  }
  SmmsBackground bg;
  bg.cs = structure_constants(dim_n, dim_m);
  bg.domain = std::move(domain);
  bg.dim_n = dim_n;
  bg.dim_m = dim_m;
  bg.phi0 = std::move(phi0);
  bg.R_g0 = std::move(R_g0);
  bg.H_g0 = std::move(H_g0);
  bg.exp_neg_phi.resize(nn);
  for (int i = 0; i < nn; ++i) bg.exp_neg_phi[i] = std::exp(-bg.phi0[i]);
  bg.exp_neg_phi_b = restrict_to_boundary(bg.domain, bg.exp_neg_phi);
  bg.Rm = weighted_scalar_curvature(bg);
  bg.Hm = weighted_mean_curvature(bg);
  return bg;
}

inline SmmsBackground make_background(DiscreteDomain domain, Field phi0, int dim_n,
                                      double dim_m) {
  Field R0(domain.node_count(), 0.0);
  BoundaryField H0 = default_boundary_mean_curvature(domain);
  return make_background(std::move(domain), std::move(phi0), std::move(R0), std::move(H0),
                         dim_n, dim_m);
}

inline SmmsBackground make_background(DiscreteDomain domain, Field phi0) {
  const int n = domain.dim_n;
  const double m = domain.dim_m;
  return make_background(std::move(domain), std::move(phi0), n, m);
}

inline SmmsBackground make_background(DiscreteDomain domain) {
  Field phi0(domain.node_count(), 0.0);
  return make_background(std::move(domain), std::move(phi0));
}

// ----------------------------------------------------------------------------
// Conformally covariant pair
//   L w = -c lap_phi w + R^m_phi w           (interior operator)
//   B w = (c/2) dnu w + H^m_phi w            (boundary operator)
// and its spectral-shifted companion
//   Lbar u = -lap_phi u - R^m_phi u / (n+m-1)
//   Bbar u = dnu u - H^m_phi u / (n+m-1).
// ----------------------------------------------------------------------------
inline Field apply_L(const SmmsBackground& bg, const Field& u) {
  Field out = weighted_laplacian(bg, u);
  for (int i = 0; i < bg.node_count(); ++i) out[i] = -bg.cs.c * out[i] + bg.Rm[i] * u[i];
  return out;
}

inline BoundaryField apply_B(const SmmsBackground& bg, const Field& u) {
  BoundaryField out = normal_derivative(bg.domain, u);
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = 0.5 * bg.cs.c * out[k] + bg.Hm[k] * u[bg.domain.boundary_nodes[k]];
  return out;
}

inline Field apply_Lbar(const SmmsBackground& bg, const Field& u) {
  Field out = weighted_laplacian(bg, u);
  const double inv = 1.0 / (bg.dim_n + bg.dim_m - 1.0);
  for (int i = 0; i < bg.node_count(); ++i) out[i] = -out[i] - inv * bg.Rm[i] * u[i];
  return out;
}

inline BoundaryField apply_Bbar(const SmmsBackground& bg, const Field& u) {
  BoundaryField out = normal_derivative(bg.domain, u);
  const double inv = 1.0 / (bg.dim_n + bg.dim_m - 1.0);
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] -= inv * bg.Hm[k] * u[bg.domain.boundary_nodes[k]];
  return out;
}

// ----------------------------------------------------------------------------
// Conformal change.  For a positive conformal factor w the deformed structure
// has weight phi_new = phi0 - (2m/k) log w and curvatures
//
//   R_new = w^{-q} L w,   H_new = w^{-s} B w,
//
// with the volume density picking up w^{2(n+m)/k} and the area density
// w^{2(n+m-1)/k}.
// ----------------------------------------------------------------------------
struct ConformalData {
  Field w;
  Field phi_new;
  Field R_new;
  BoundaryField H_new;
  Field vol_weight;           // multiplies e^{-phi0} dV
  BoundaryField area_weight;  // multiplies e^{-phi0} dA
};

inline ConformalData conformal_transform(const SmmsBackground& bg, const Field& w) {
  if (static_cast<int>(w.size()) != bg.node_count())
    throw invalid_input_error("conformal_transform: w size mismatch");
  require_positive(w, "conformal_transform");
  const StructureConstants& cs = bg.cs;
  const int nn = bg.node_count();
  ConformalData out;
  out.w = w;
  out.phi_new.resize(nn);
  out.vol_weight.resize(nn);
  const double logc = 2.0 * cs.m / cs.k;
  for (int i = 0; i < nn; ++i) {
    out.phi_new[i] = bg.phi0[i] - logc * std::log(w[i]);
    out.vol_weight[i] = std::pow(w[i], cs.vol_exp);
  }
  Field Lw = apply_L(bg, w);
  out.R_new.resize(nn);
  for (int i = 0; i < nn; ++i) out.R_new[i] = std::pow(w[i], -cs.q_exp) * Lw[i];
  BoundaryField Bw = apply_B(bg, w);
  out.H_new.resize(Bw.size());
  out.area_weight.resize(Bw.size());
  for (std::size_t k = 0; k < Bw.size(); ++k) {
    const double wb = w[bg.domain.boundary_nodes[k]];
    out.H_new[k] = std::pow(wb, -cs.s_exp) * Bw[k];
    out.area_weight[k] = std::pow(wb, cs.area_exp);
  }
  return out;
}

inline ConformalData conformal_transform(const SmmsBackground& bg, const ConformalFactor& w) {
  return conformal_transform(bg, w.w);
}

// Pointwise defect of the constant-curvature-preserving system
//   L w = R^m_{phi0} w^q in M,   B w = H^m_{phi0} w^s on the boundary
// (w == 1 solves it identically; solvers drive these residuals to zero).
struct ResidualPair {
  Field interior;
  BoundaryField boundary;
};

inline ResidualPair yamabe_residual(const SmmsBackground& bg, const Field& w) {
  if (static_cast<int>(w.size()) != bg.node_count())
    throw invalid_input_error("yamabe_residual: w size mismatch");
  require_positive(w, "yamabe_residual");
  ResidualPair out;
  out.interior = apply_L(bg, w);
  for (int i = 0; i < bg.node_count(); ++i)
    out.interior[i] -= bg.Rm[i] * std::pow(w[i], bg.cs.q_exp);
  out.boundary = apply_B(bg, w);
  for (std::size_t k = 0; k < out.boundary.size(); ++k)
    out.boundary[k] -=
        bg.Hm[k] * std::pow(w[bg.domain.boundary_nodes[k]], bg.cs.s_exp);
  return out;
}

inline ResidualPair yamabe_residual(const SmmsBackground& bg, const ConformalFactor& w) {
  return yamabe_residual(bg, w.w);
}

// Solver convergence metric: the interior equation is collocated away from
// the trace boundary (where the boundary equation replaces it), so the norm
// combines interior values at non-boundary nodes with the boundary values.
inline double residual_norm(const SmmsBackground& bg, const ResidualPair& r) {
  double s = 0.0;
  for (int i = 0; i < bg.node_count(); ++i)
    if (!bg.domain.on_boundary[i]) s = std::max(s, std::abs(r.interior[i]));
  for (double v : r.boundary) s = std::max(s, std::abs(v));
  return s;
}

// Curvatures of the deformed structure computed from its own weight: the
// conformal scalar-curvature law of the metric change g_new = w^{4/k} g plus
// the weighted terms evaluated with phi_new.  Independent of the covariant
// operators; cross-checks the transformation law to O(h^2).
struct CurvaturePair {
  Field R;
  BoundaryField H;
};

inline CurvaturePair deformed_curvatures_direct(const SmmsBackground& bg, const Field& w) {
  require_positive(w, "deformed_curvatures_direct");
  const StructureConstants& cs = bg.cs;
  const int nn = bg.node_count();
  // sigma = (2/k) log w so that g_new = e^{2 sigma} g.
  Field sigma(nn);
  for (int i = 0; i < nn; ++i) sigma[i] = (2.0 / cs.k) * std::log(w[i]);
  Field pnew(nn);
  for (int i = 0; i < nn; ++i) pnew[i] = bg.phi0[i] - cs.m * sigma[i];

  Field lap_s = laplacian(bg.domain, sigma);
  Field s2 = gradient_inner(bg.domain, sigma, sigma);
  Field lap_p = laplacian(bg.domain, pnew);
  Field p2 = gradient_inner(bg.domain, pnew, pnew);
  Field sp = gradient_inner(bg.domain, sigma, pnew);

  const double n = cs.n;
  Field R(nn);
  for (int i = 0; i < nn; ++i) {
    // scalar curvature of e^{2 sigma} g:
    //   e^{-2 sigma} (R_g - 2(n-1) lap sigma - (n-1)(n-2) |grad sigma|^2)
    const double Rg = bg.R_g0[i] - 2.0 * (n - 1.0) * lap_s[i] - (n - 1.0) * (n - 2.0) * s2[i];
    double Rw = 0.0;
    if (cs.m > 0.0) {
      // weighted terms of the deformed structure in the deformed metric:
      //   2 lap_new phi_new - ((m+1)/m) |grad_new phi_new|^2, with
      //   lap_new f = e^{-2 sigma} (lap f + (n-2) <grad sigma, grad f>).
      Rw = 2.0 * (lap_p[i] + (n - 2.0) * sp[i]) - (cs.m + 1.0) / cs.m * p2[i];
    }
    R[i] = std::exp(-2.0 * sigma[i]) * (Rg + Rw);
  }

  BoundaryField dn_s = normal_derivative(bg.domain, sigma);
  BoundaryField dn_p = normal_derivative(bg.domain, pnew);
  BoundaryField H(dn_s.size());
  for (std::size_t k = 0; k < dn_s.size(); ++k) {
    const int b = bg.domain.boundary_nodes[k];
    // H_new of e^{2 sigma} g: e^{-sigma} (H_g + (n-1) dnu sigma); weighted
    // part subtracts the deformed normal derivative of phi_new.
    H[k] = std::exp(-sigma[b]) * (bg.H_g0[k] + (n - 1.0) * dn_s[k] - dn_p[k]);
  }
  return {R, H};
}

// ----------------------------------------------------------------------------
// Total weighted measures.
// ----------------------------------------------------------------------------
inline double weighted_volume(const SmmsBackground& bg) {
  return integrate_volume(bg.domain, bg.exp_neg_phi);
}

inline double weighted_boundary_area(const SmmsBackground& bg) {
  return integrate_boundary(bg.domain, bg.exp_neg_phi_b);
}

}  // namespace smmslab
