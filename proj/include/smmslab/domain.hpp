#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "smmslab/errors.hpp"

namespace smmslab {

using Field = std::vector<double>;
using BoundaryField = std::vector<double>;

// Surface area of the unit d-sphere embedded in R^{d+1}.
inline double unit_sphere_area(double d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * (d + 1.0)) / std::tgamma(0.5 * (d + 1.0));
}

enum class DomainKind { interval, radial_ball, halfspace_cylinder };

inline std::string to_string(DomainKind k) {
  switch (k) {
    case DomainKind::interval: return "interval";
    case DomainKind::radial_ball: return "radial_ball";
    case DomainKind::halfspace_cylinder: return "halfspace_cylinder";
  }
  return "?";
}

// A face between two adjacent nodes, with the quadrature weight of the dual
// cell it crosses.  sum_f w_f ((u_b - u_a)/h_f)^2 approximates the Dirichlet
// integral of u against the domain's geometric measure.
struct Face {
  int a, b;
  double h;
  double w;
};

// Stencil for the second-order one-sided normal derivative at a boundary
// node: dnu u = (3 u_b - 4 u_{n1} + u_{n2}) / (2 h).
struct NormalStencil {
  int n1, n2;
  double h;
};

// ============================================================================
// Uniform tensor grids on the three model domains.
//
//   interval            [0, L], cross-section flat; measure density 1
//   radial_ball         unit ball in R^n, radial profile; density |S^{n-1}| r^{n-1}
//   halfspace_cylinder  [0, r_max] x [0, t_max] in R^n_+ = R^{n-1} x [0, inf),
//                       r = |x - x0| tangential, t normal; density
//                       |S^{n-2}| r^{n-2}.  With dim_n = 2 this degenerates to
//                       a flat Cartesian half-plane section (density 2).
//
// Only the trace boundary belongs to boundary_nodes (both interval ends, the
// sphere r = 1, the row t = 0).  Truncation faces of the cylinder carry a
// homogeneous Neumann closure; the ball/cylinder axis r = 0 uses the
// regularity stencil of smooth radial functions.  A dim_n = 2 section is
// treated as a plain Cartesian strip: one-sided stencils at both r-edges.
// ============================================================================
struct DiscreteDomain {
  DomainKind kind;
  int dim_n;
  double dim_m;

  int nr = 0, nt = 1;
  double hr = 0.0, ht = 0.0;
  double extent_r = 0.0, extent_t = 0.0;

  std::vector<double> rc;  // r (or x) coordinate per r-index
  std::vector<double> tc;  // t coordinate per t-index (cylinder only)

  std::vector<int> boundary_nodes;
  std::vector<char> on_boundary;       // per node
  std::vector<NormalStencil> normal_stencils;  // aligned with boundary_nodes

  std::vector<double> vol_w;  // per-node quadrature weight incl. density
  std::vector<double> bd_w;   // per-boundary-node quadrature weight
  std::vector<Face> faces;

  int node_count() const { return nr * nt; }
  int index(int i, int j) const { return j * nr + i; }
  bool one_dimensional() const { return nt == 1; }

  double coord_r(int node) const { return rc[node % nr]; }
  double coord_t(int node) const { return one_dimensional() ? 0.0 : tc[node / nr]; }
};

namespace detail {

inline double trap(int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; }

}  // namespace detail

inline DiscreteDomain build_interval_domain(int node_count, double length, int dim_n,
                                            double dim_m) {
  if (node_count < 3) throw invalid_domain_error("interval: need at least 3 nodes");
  if (!(length > 0.0)) throw invalid_domain_error("interval: length must be positive");
  if (dim_n < 3) throw invalid_domain_error("interval: dim_n must be >= 3");
  if (dim_m < 0.0) throw invalid_domain_error("interval: dim_m must be >= 0");
  DiscreteDomain d;
  d.kind = DomainKind::interval;
  d.dim_n = dim_n;
  d.dim_m = dim_m;
  d.nr = node_count;
  d.hr = length / (node_count - 1);
  d.extent_r = length;
  d.rc.resize(node_count);
  for (int i = 0; i < node_count; ++i) d.rc[i] = i * d.hr;
  d.on_boundary.assign(node_count, 0);
  d.on_boundary[0] = d.on_boundary[node_count - 1] = 1;
  d.boundary_nodes = {0, node_count - 1};
  d.normal_stencils = {{1, 2, d.hr}, {node_count - 2, node_count - 3, d.hr}};
  d.vol_w.resize(node_count);
  for (int i = 0; i < node_count; ++i) d.vol_w[i] = d.hr * detail::trap(i, node_count);
  d.bd_w = {1.0, 1.0};
  d.faces.reserve(node_count - 1);
  for (int i = 0; i + 1 < node_count; ++i) d.faces.push_back({i, i + 1, d.hr, d.hr});
  return d;
}

inline DiscreteDomain build_radial_ball_domain(int node_count, int dim_n, double dim_m) {
  if (node_count < 4) throw invalid_domain_error("radial_ball: need at least 4 nodes");
  if (dim_n < 3) throw invalid_domain_error("radial_ball: dim_n must be >= 3");
  if (dim_m < 0.0) throw invalid_domain_error("radial_ball: dim_m must be >= 0");
  DiscreteDomain d;
  d.kind = DomainKind::radial_ball;
  d.dim_n = dim_n;
  d.dim_m = dim_m;
  d.nr = node_count;
  d.hr = 1.0 / (node_count - 1);
  d.extent_r = 1.0;
  d.rc.resize(node_count);
  for (int i = 0; i < node_count; ++i) d.rc[i] = i * d.hr;
  d.on_boundary.assign(node_count, 0);
  d.on_boundary[node_count - 1] = 1;
  d.boundary_nodes = {node_count - 1};
  d.normal_stencils = {{node_count - 2, node_count - 3, d.hr}};
  const double area = unit_sphere_area(dim_n - 1);
  d.vol_w.resize(node_count);
  for (int i = 0; i < node_count; ++i)
    d.vol_w[i] = area * std::pow(d.rc[i], dim_n - 1) * d.hr * detail::trap(i, node_count);
  d.bd_w = {area};
  d.faces.reserve(node_count - 1);
  for (int i = 0; i + 1 < node_count; ++i) {
    const double rm = (i + 0.5) * d.hr;
    d.faces.push_back({i, i + 1, d.hr, area * std::pow(rm, dim_n - 1) * d.hr});
  }
  return d;
}

inline DiscreteDomain build_halfspace_cylinder_domain(int nr, int nt, double r_max,
                                                      double t_max, int dim_n, double dim_m) {
  if (nr < 4 || nt < 4) throw invalid_domain_error("halfspace_cylinder: need at least 4 nodes per axis");
  if (!(r_max > 0.0) || !(t_max > 0.0))
    throw invalid_domain_error("halfspace_cylinder: extents must be positive");
  if (dim_n < 2) throw invalid_domain_error("halfspace_cylinder: dim_n must be >= 2");
  if (dim_m < 0.0) throw invalid_domain_error("halfspace_cylinder: dim_m must be >= 0");
  DiscreteDomain d;
  d.kind = DomainKind::halfspace_cylinder;
  d.dim_n = dim_n;
  d.dim_m = dim_m;
  d.nr = nr;
  d.nt = nt;
  d.hr = r_max / (nr - 1);
  d.ht = t_max / (nt - 1);
  d.extent_r = r_max;
  d.extent_t = t_max;
  d.rc.resize(nr);
  for (int i = 0; i < nr; ++i) d.rc[i] = i * d.hr;
  d.tc.resize(nt);
  for (int j = 0; j < nt; ++j) d.tc[j] = j * d.ht;
  const int nn = nr * nt;
  d.on_boundary.assign(nn, 0);
  const double area = unit_sphere_area(dim_n - 2);
  auto rho = [&](double r) { return area * std::pow(r, dim_n - 2); };
  d.vol_w.resize(nn);
  for (int j = 0; j < nt; ++j)
    for (int i = 0; i < nr; ++i)
      d.vol_w[d.index(i, j)] =
          rho(d.rc[i]) * d.hr * detail::trap(i, nr) * d.ht * detail::trap(j, nt);
  d.boundary_nodes.reserve(nr);
  for (int i = 0; i < nr; ++i) {
    const int node = d.index(i, 0);
    d.on_boundary[node] = 1;
    d.boundary_nodes.push_back(node);
    d.normal_stencils.push_back({d.index(i, 1), d.index(i, 2), d.ht});
    d.bd_w.push_back(rho(d.rc[i]) * d.hr * detail::trap(i, nr));
  }
  for (int j = 0; j < nt; ++j)
    for (int i = 0; i + 1 < nr; ++i) {
      const double rm = (i + 0.5) * d.hr;
      d.faces.push_back({d.index(i, j), d.index(i + 1, j), d.hr,
                         rho(rm) * d.hr * d.ht * detail::trap(j, nt)});
    }
  for (int j = 0; j + 1 < nt; ++j)
    for (int i = 0; i < nr; ++i)
      d.faces.push_back({d.index(i, j), d.index(i, j + 1), d.ht,
                         rho(d.rc[i]) * d.hr * detail::trap(i, nr) * d.ht});
  return d;
}

namespace detail {

// d/ds of u along one grid line: central inside, 3-point one-sided at ends.
inline double line_deriv(const Field& u, int stride, int i, int n, double h, int base) {
  auto at = [&](int k) { return u[base + k * stride]; };
  if (i == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  if (i == n - 1) return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
  return (at(i + 1) - at(i - 1)) / (2.0 * h);
}

// d2/ds2 along one grid line: central inside, 4-point one-sided at ends
// (3-point when the line is that short).
inline double line_second(const Field& u, int stride, int i, int n, double h, int base) {
  auto at = [&](int k) { return u[base + k * stride]; };
  const double h2 = h * h;
  if (i == 0) {
    if (n >= 4) return (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / h2;
    return (at(0) - 2.0 * at(1) + at(2)) / h2;
  }
  if (i == n - 1) {
    if (n >= 4) return (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)) / h2;
    return (at(n - 1) - 2.0 * at(n - 2) + at(n - 3)) / h2;
  }
  return (at(i + 1) - 2.0 * at(i) + at(i - 1)) / h2;
}

}  // namespace detail

// First derivative along a coordinate axis (0 = r/x, 1 = t), one-sided at the
// grid edges.  On the ball/cylinder axis this evaluates the true radial
// derivative to O(h^2) for fields smooth in the ambient space.
inline Field axis_derivative(const DiscreteDomain& d, const Field& u, int axis) {
  Field g(d.node_count());
  if (axis == 0) {
    for (int j = 0; j < d.nt; ++j)
      for (int i = 0; i < d.nr; ++i)
        g[d.index(i, j)] = detail::line_deriv(u, 1, i, d.nr, d.hr, j * d.nr);
  } else {
    for (int i = 0; i < d.nr; ++i)
      for (int j = 0; j < d.nt; ++j)
        g[d.index(i, j)] = detail::line_deriv(u, d.nr, j, d.nt, d.ht, i);
  }
  return g;
}

// Second derivative along an axis, one-sided at the grid edges.
inline Field axis_second_derivative(const DiscreteDomain& d, const Field& u, int axis) {
  Field g(d.node_count());
  if (axis == 0) {
    for (int j = 0; j < d.nt; ++j)
      for (int i = 0; i < d.nr; ++i)
        g[d.index(i, j)] = detail::line_second(u, 1, i, d.nr, d.hr, j * d.nr);
  } else {
    for (int i = 0; i < d.nr; ++i)
      for (int j = 0; j < d.nt; ++j)
        g[d.index(i, j)] = detail::line_second(u, d.nr, j, d.nt, d.ht, i);
  }
  return g;
}

// Laplace-Beltrami operator of the model geometry in measure-weighted
// divergence form.  Interior nodes use the conservative stencil
// (rho u')' / rho; the r = 0 axis uses the regularity limit; truncation faces
// use the mirror (zero-flux) closure; trace-boundary nodes carry the
// one-sided operator value.
inline Field laplacian(const DiscreteDomain& d, const Field& u) {
  if (static_cast<int>(u.size()) != d.node_count())
    throw invalid_input_error("laplacian: field size mismatch");
  const int n = d.dim_n;
  Field out(d.node_count(), 0.0);

  if (d.kind == DomainKind::interval) {
    const double h2 = d.hr * d.hr;
    for (int i = 1; i + 1 < d.nr; ++i) out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) / h2;
    out[0] = detail::line_second(u, 1, 0, d.nr, d.hr, 0);
    out[d.nr - 1] = detail::line_second(u, 1, d.nr - 1, d.nr, d.hr, 0);
    return out;
  }

  if (d.kind == DomainKind::radial_ball) {
    const double h2 = d.hr * d.hr;
    out[0] = 2.0 * n * (u[1] - u[0]) / h2;
    for (int i = 1; i + 1 < d.nr; ++i) {
      const double rp = std::pow(d.rc[i] + 0.5 * d.hr, n - 1);
      const double rm = std::pow(d.rc[i] - 0.5 * d.hr, n - 1);
      out[i] = (rp * (u[i + 1] - u[i]) - rm * (u[i] - u[i - 1])) /
               (std::pow(d.rc[i], n - 1) * h2);
    }
    const int b = d.nr - 1;
    out[b] = detail::line_second(u, 1, b, d.nr, d.hr, 0) +
             (n - 1) / d.rc[b] * detail::line_deriv(u, 1, b, d.nr, d.hr, 0);
    return out;
  }

  // halfspace_cylinder: radial part with density r^{n-2} plus flat t part.
  const double hr2 = d.hr * d.hr, ht2 = d.ht * d.ht;
  for (int j = 0; j < d.nt; ++j) {
    const int base = j * d.nr;
    for (int i = 0; i < d.nr; ++i) {
      double lr;
      if (n == 2 && (i == 0 || i == d.nr - 1)) {
        // Flat Cartesian section: x-edges are plain grid edges, not an axis
        // or a symmetry plane.
        lr = detail::line_second(u, 1, i, d.nr, d.hr, base);
      } else if (i == 0) {
        lr = 2.0 * (n - 1) * (u[base + 1] - u[base]) / hr2;
      } else if (i == d.nr - 1) {
        const double rp = std::pow(d.rc[i] + 0.5 * d.hr, n - 2);
        const double rm = std::pow(d.rc[i] - 0.5 * d.hr, n - 2);
        lr = (rp + rm) * (u[base + i - 1] - u[base + i]) / (std::pow(d.rc[i], n - 2) * hr2);
      } else {
        const double rp = std::pow(d.rc[i] + 0.5 * d.hr, n - 2);
        const double rm = std::pow(d.rc[i] - 0.5 * d.hr, n - 2);
        lr = (rp * (u[base + i + 1] - u[base + i]) - rm * (u[base + i] - u[base + i - 1])) /
             (std::pow(d.rc[i], n - 2) * hr2);
      }
      double lt;
      if (j == 0) {
        lt = detail::line_second(u, d.nr, 0, d.nt, d.ht, i);
      } else if (j == d.nt - 1) {
        lt = 2.0 * (u[d.index(i, j - 1)] - u[d.index(i, j)]) / ht2;
      } else {
        lt = (u[d.index(i, j + 1)] - 2.0 * u[d.index(i, j)] + u[d.index(i, j - 1)]) / ht2;
      }
      out[d.index(i, j)] = lr + lt;
    }
  }
  return out;
}

// Pointwise <grad a, grad b> of the flat background metric.
inline Field gradient_inner(const DiscreteDomain& d, const Field& a, const Field& b) {
  Field ar = axis_derivative(d, a, 0);
  Field br = axis_derivative(d, b, 0);
  Field out(d.node_count());
  if (d.one_dimensional()) {
    for (int i = 0; i < d.node_count(); ++i) out[i] = ar[i] * br[i];
    return out;
  }
  Field at = axis_derivative(d, a, 1);
  Field bt = axis_derivative(d, b, 1);
  for (int i = 0; i < d.node_count(); ++i) out[i] = ar[i] * br[i] + at[i] * bt[i];
  return out;
}

// Outward normal derivative at the trace boundary, one boundary node per
// entry, ordered as domain.boundary_nodes.
inline BoundaryField normal_derivative(const DiscreteDomain& d, const Field& u) {
  if (static_cast<int>(u.size()) != d.node_count())
    throw invalid_input_error("normal_derivative: field size mismatch");
  BoundaryField out(d.boundary_nodes.size());
  for (std::size_t k = 0; k < d.boundary_nodes.size(); ++k) {
    const int b = d.boundary_nodes[k];
    const NormalStencil& s = d.normal_stencils[k];
    out[k] = (3.0 * u[b] - 4.0 * u[s.n1] + u[s.n2]) / (2.0 * s.h);
  }
  return out;
}

inline double integrate_volume(const DiscreteDomain& d, const Field& u) {
  double s = 0.0;
  for (int i = 0; i < d.node_count(); ++i) s += u[i] * d.vol_w[i];
  return s;
}

inline double integrate_volume(const DiscreteDomain& d, const Field& u, const Field& extra) {
  double s = 0.0;
  for (int i = 0; i < d.node_count(); ++i) s += u[i] * extra[i] * d.vol_w[i];
  return s;
}

// Volume weights patched to be strictly positive: axis nodes, whose trapezoid
// weight vanishes with the measure density, receive the mass of their dual
// half-cell instead.  Keeps assembled mass matrices positive definite while
// perturbing quadrature only at the O(h^n) level.
inline Field positive_mass_weights(const DiscreteDomain& d) {
  Field w = d.vol_w;
  if (d.kind == DomainKind::radial_ball) {
    const double area = unit_sphere_area(d.dim_n - 1);
    if (w[0] == 0.0) w[0] = area * std::pow(0.5 * d.hr, d.dim_n) / d.dim_n;
  } else if (d.kind == DomainKind::halfspace_cylinder && d.dim_n >= 3) {
    const double area = unit_sphere_area(d.dim_n - 2);
    const double cell = area * std::pow(0.5 * d.hr, d.dim_n - 1) / (d.dim_n - 1.0);
    for (int j = 0; j < d.nt; ++j) {
      const int node = d.index(0, j);
      if (w[node] == 0.0) w[node] = cell * d.ht * detail::trap(j, d.nt);
    }
  }
  return w;
}

inline BoundaryField restrict_to_boundary(const DiscreteDomain& d, const Field& u) {
  BoundaryField out(d.boundary_nodes.size());
  for (std::size_t k = 0; k < d.boundary_nodes.size(); ++k) out[k] = u[d.boundary_nodes[k]];
  return out;
}

inline double integrate_boundary(const DiscreteDomain& d, const BoundaryField& u) {
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += u[k] * d.bd_w[k];
  return s;
}

inline double integrate_boundary(const DiscreteDomain& d, const BoundaryField& u,
                                 const BoundaryField& extra) {
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += u[k] * extra[k] * d.bd_w[k];
  return s;
}

}  // namespace smmslab
