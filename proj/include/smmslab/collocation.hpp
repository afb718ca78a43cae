#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <vector>

#include "smmslab/domain.hpp"
#include "smmslab/errors.hpp"
#include "smmslab/linalg.hpp"
#include "smmslab/smms.hpp"

// Matrix forms of the pointwise operators in domain.hpp / smms.hpp.  Every
// emitter reproduces the corresponding stencil coefficient for coefficient,
// so an assembled matrix times a field equals the operator applied to it to
// machine precision (this is tested).

namespace smmslab {
namespace detail {

// Mirrors line_deriv.
template <class Sink>
inline void deriv_stencil(int i, int n, double h, Sink&& add) {
  if (i == 0) {
    add(0, -3.0 / (2.0 * h));
    add(1, 4.0 / (2.0 * h));
    add(2, -1.0 / (2.0 * h));
  } else if (i == n - 1) {
    add(n - 1, 3.0 / (2.0 * h));
    add(n - 2, -4.0 / (2.0 * h));
    add(n - 3, 1.0 / (2.0 * h));
  } else {
    add(i + 1, 1.0 / (2.0 * h));
    add(i - 1, -1.0 / (2.0 * h));
  }
}

// Mirrors line_second.
template <class Sink>
inline void second_stencil(int i, int n, double h, Sink&& add) {
  const double h2 = h * h;
  if (i == 0) {
    if (n >= 4) {
      add(0, 2.0 / h2);
      add(1, -5.0 / h2);
      add(2, 4.0 / h2);
      add(3, -1.0 / h2);
    } else {
      add(0, 1.0 / h2);
      add(1, -2.0 / h2);
      add(2, 1.0 / h2);
    }
  } else if (i == n - 1) {
    if (n >= 4) {
      add(n - 1, 2.0 / h2);
      add(n - 2, -5.0 / h2);
      add(n - 3, 4.0 / h2);
      add(n - 4, -1.0 / h2);
    } else {
      add(n - 1, 1.0 / h2);
      add(n - 2, -2.0 / h2);
      add(n - 3, 1.0 / h2);
    }
  } else {
    add(i - 1, 1.0 / h2);
    add(i, -2.0 / h2);
    add(i + 1, 1.0 / h2);
  }
}

}  // namespace detail

// Rows of the model Laplacian, stencil-identical to laplacian().
inline std::vector<Triplet> laplacian_matrix(const DiscreteDomain& d) {
  std::vector<Triplet> t;
  const int n = d.dim_n;

  if (d.kind == DomainKind::interval) {
    for (int i = 0; i < d.nr; ++i)
      detail::second_stencil(i, d.nr, d.hr,
                             [&](int k, double v) { t.push_back({i, k, v}); });
    return t;
  }

  if (d.kind == DomainKind::radial_ball) {
    const double h2 = d.hr * d.hr;
    t.push_back({0, 0, -2.0 * n / h2});
    t.push_back({0, 1, 2.0 * n / h2});
    for (int i = 1; i + 1 < d.nr; ++i) {
      const double rp = std::pow(d.rc[i] + 0.5 * d.hr, n - 1);
      const double rm = std::pow(d.rc[i] - 0.5 * d.hr, n - 1);
      const double den = std::pow(d.rc[i], n - 1) * h2;
      t.push_back({i, i + 1, rp / den});
      t.push_back({i, i, -(rp + rm) / den});
      t.push_back({i, i - 1, rm / den});
    }
    const int b = d.nr - 1;
    detail::second_stencil(b, d.nr, d.hr,
                           [&](int k, double v) { t.push_back({b, k, v}); });
    const double fac = (n - 1) / d.rc[b];
    detail::deriv_stencil(b, d.nr, d.hr,
                          [&](int k, double v) { t.push_back({b, k, fac * v}); });
    return t;
  }

  const double hr2 = d.hr * d.hr, ht2 = d.ht * d.ht;
  for (int j = 0; j < d.nt; ++j)
    for (int i = 0; i < d.nr; ++i) {
      const int node = d.index(i, j);
      if (n == 2 && (i == 0 || i == d.nr - 1)) {
        detail::second_stencil(
            i, d.nr, d.hr, [&](int k, double v) { t.push_back({node, d.index(k, j), v}); });
      } else if (i == 0) {
        t.push_back({node, node, -2.0 * (n - 1) / hr2});
        t.push_back({node, d.index(1, j), 2.0 * (n - 1) / hr2});
      } else if (i == d.nr - 1) {
        const double rp = std::pow(d.rc[i] + 0.5 * d.hr, n - 2);
        const double rm = std::pow(d.rc[i] - 0.5 * d.hr, n - 2);
        const double coef = (rp + rm) / (std::pow(d.rc[i], n - 2) * hr2);
        t.push_back({node, d.index(i - 1, j), coef});
        t.push_back({node, node, -coef});
      } else {
        const double rp = std::pow(d.rc[i] + 0.5 * d.hr, n - 2);
        const double rm = std::pow(d.rc[i] - 0.5 * d.hr, n - 2);
        const double den = std::pow(d.rc[i], n - 2) * hr2;
        t.push_back({node, d.index(i + 1, j), rp / den});
        t.push_back({node, node, -(rp + rm) / den});
        t.push_back({node, d.index(i - 1, j), rm / den});
      }
      if (j == 0) {
        detail::second_stencil(
            0, d.nt, d.ht, [&](int k, double v) { t.push_back({node, d.index(i, k), v}); });
      } else if (j == d.nt - 1) {
        t.push_back({node, d.index(i, j - 1), 2.0 / ht2});
        t.push_back({node, node, -2.0 / ht2});
      } else {
        t.push_back({node, d.index(i, j + 1), 1.0 / ht2});
        t.push_back({node, node, -2.0 / ht2});
        t.push_back({node, d.index(i, j - 1), 1.0 / ht2});
      }
    }
  return t;
}

// Rows of the measure-weighted Laplacian lap u - <grad phi0, grad u>,
// stencil-identical to weighted_laplacian().
inline std::vector<Triplet> weighted_laplacian_matrix(const SmmsBackground& bg) {
  const DiscreteDomain& d = bg.domain;
  std::vector<Triplet> t = laplacian_matrix(d);
  if (bg.dim_m == 0.0) return t;

  const Field pr = axis_derivative(d, bg.phi0, 0);
  for (int j = 0; j < d.nt; ++j)
    for (int i = 0; i < d.nr; ++i) {
      const int node = d.index(i, j);
      if (pr[node] == 0.0) continue;
      detail::deriv_stencil(i, d.nr, d.hr, [&](int k, double v) {
        t.push_back({node, d.index(k, j), -pr[node] * v});
      });
    }
  if (!d.one_dimensional()) {
    const Field pt = axis_derivative(d, bg.phi0, 1);
    for (int i = 0; i < d.nr; ++i)
      for (int j = 0; j < d.nt; ++j) {
        const int node = d.index(i, j);
        if (pt[node] == 0.0) continue;
        detail::deriv_stencil(j, d.nt, d.ht, [&](int k, double v) {
          t.push_back({node, d.index(i, k), -pt[node] * v});
        });
      }
  }
  return t;
}

// Appends the outward normal-derivative stencil of boundary node k, scaled.
inline void append_normal_stencil(const DiscreteDomain& d, std::size_t k, double scale,
                                  std::vector<Triplet>& t) {
  const int b = d.boundary_nodes[k];
  const NormalStencil& s = d.normal_stencils[k];
  t.push_back({b, b, scale * 3.0 / (2.0 * s.h)});
  t.push_back({b, s.n1, scale * -4.0 / (2.0 * s.h)});
  t.push_back({b, s.n2, scale * 1.0 / (2.0 * s.h)});
}

// Square collocation system with a cached direct factorization when the
// bandwidth is small (tensor grids in one variable) and diagonally
// preconditioned BiCGStab otherwise; the rows are not symmetric.
class CollocationSolver {
 public:
  CollocationSolver(int n, const std::vector<Triplet>& rows) : n_(n) {
    int bw = 0;
    for (const Triplet& e : rows) bw = std::max(bw, std::abs(e.r - e.c));
    if (bw <= 8) {
      banded_ = std::make_unique<BandedMatrix>(n, bw, bw);
      for (const Triplet& e : rows) banded_->add(e.r, e.c, e.v);
      banded_->factor();
    } else {
      csr_ = std::make_unique<CsrMatrix>(CsrMatrix::from_triplets(n, rows));
    }
  }

  Vec solve(const Vec& rhs) const {
    if (banded_) return banded_->solve(rhs);
    return solve_bicgstab(*csr_, rhs, 1e-12, 20 * n_ + 500);
  }

 private:
  int n_;
  mutable std::unique_ptr<BandedMatrix> banded_;
  std::unique_ptr<CsrMatrix> csr_;
};

// Rows of the linear part of the monotone update: trace-boundary nodes carry
// (dnu - rho), every other node (gamma - lap_phi0).
inline std::vector<Triplet> robin_rows(const SmmsBackground& bg, double gamma, double rho) {
  const DiscreteDomain& d = bg.domain;
  std::vector<Triplet> out;
  for (const Triplet& e : weighted_laplacian_matrix(bg))
    if (!d.on_boundary[e.r]) out.push_back({e.r, e.c, -e.v});
  for (int i = 0; i < d.node_count(); ++i)
    if (!d.on_boundary[i]) out.push_back({i, i, gamma});
  for (std::size_t k = 0; k < d.boundary_nodes.size(); ++k) {
    append_normal_stencil(d, k, 1.0, out);
    out.push_back({d.boundary_nodes[k], d.boundary_nodes[k], -rho});
  }
  return out;
}

// Rows of the conformal-factor equations linearized at w: interior rows are
// the derivative of Lw - R w^q, boundary rows of Bw - H w^s, under the same
// stencils as yamabe_residual.
inline std::vector<Triplet> yamabe_jacobian_rows(const SmmsBackground& bg, const Field& w) {
  const DiscreteDomain& d = bg.domain;
  const StructureConstants& cs = bg.cs;
  std::vector<Triplet> out;
  for (const Triplet& e : weighted_laplacian_matrix(bg))
    if (!d.on_boundary[e.r]) out.push_back({e.r, e.c, -cs.c * e.v});
  for (int i = 0; i < d.node_count(); ++i)
    if (!d.on_boundary[i])
      out.push_back(
          {i, i, bg.Rm[i] * (1.0 - cs.q_exp * std::pow(w[i], cs.q_exp - 1.0))});
  for (std::size_t k = 0; k < d.boundary_nodes.size(); ++k) {
    const int b = d.boundary_nodes[k];
    append_normal_stencil(d, k, 0.5 * cs.c, out);
    out.push_back({b, b, bg.Hm[k] * (1.0 - cs.s_exp * std::pow(w[b], cs.s_exp - 1.0))});
  }
  return out;
}

}  // namespace smmslab
