#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "smmslab/errors.hpp"

namespace smmslab {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double max_abs(const Vec& a) {
  double s = 0.0;
  for (double x : a) s = std::max(s, std::abs(x));
  return s;
}

// ============================================================================
// Banded matrix with partial pivoting (LAPACK-style band storage).
//
// A general n x n matrix with kl sub- and ku superdiagonals.  Storage uses
// kl extra rows so row interchanges during elimination stay in band.
// ============================================================================
class BandedMatrix {
 public:
  BandedMatrix(int n, int kl, int ku)
      : n_(n), kl_(kl), ku_(ku), rows_(2 * kl + ku + 1), a_(rows_ * n, 0.0) {}

  int size() const { return n_; }

  // Entry (i, j); valid for |i - j| within the band.
  double& at(int i, int j) { return a_[idx(i, j)]; }
  double at(int i, int j) const { return a_[idx(i, j)]; }

  void add(int i, int j, double v) { a_[idx(i, j)] += v; }

  bool in_band(int i, int j) const { return j - i <= ku_ && i - j <= kl_; }

  Vec multiply(const Vec& x) const {
    Vec y(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
      const int j0 = std::max(0, i - kl_);
      const int j1 = std::min(n_ - 1, i + ku_);
      double s = 0.0;
      for (int j = j0; j <= j1; ++j) s += at(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  // In-place LU factorization with partial pivoting.
  void factor() {
    if (factored_) return;
    piv_.resize(n_);
    // Work band gains kl superdiagonals from pivoting; a_ is laid out with
    // room: logical row index in storage for (i,j) is kl + ku + i - j.
    for (int k = 0; k < n_; ++k) {
      const int imax_limit = std::min(n_ - 1, k + kl_);
      int p = k;
      double vmax = std::abs(at_work(k, k));
      for (int i = k + 1; i <= imax_limit; ++i) {
        const double v = std::abs(at_work(i, k));
        if (v > vmax) {
          vmax = v;
          p = i;
        }
      }
      if (vmax == 0.0)
        throw solver_failure_error("banded LU: zero pivot at column " + std::to_string(k));
      piv_[k] = p;
      if (p != k) {
        const int j1 = std::min(n_ - 1, k + ku_ + kl_);
        for (int j = k; j <= j1; ++j) std::swap(at_work_ref(k, j), at_work_ref(p, j));
      }
      for (int i = k + 1; i <= imax_limit; ++i) {
        const double m = at_work(i, k) / at_work(k, k);
        at_work_ref(i, k) = m;
        const int j1 = std::min(n_ - 1, k + ku_ + kl_);
        for (int j = k + 1; j <= j1; ++j) at_work_ref(i, j) -= m * at_work(k, j);
      }
    }
    factored_ = true;
  }

  Vec solve(const Vec& b) {
    factor();
    Vec x = b;
    for (int k = 0; k < n_; ++k) {
      if (piv_[k] != k) std::swap(x[k], x[piv_[k]]);
      const int i1 = std::min(n_ - 1, k + kl_);
      for (int i = k + 1; i <= i1; ++i) x[i] -= at_work(i, k) * x[k];
    }
    for (int k = n_ - 1; k >= 0; --k) {
      const int j1 = std::min(n_ - 1, k + ku_ + kl_);
      for (int j = k + 1; j <= j1; ++j) x[k] -= at_work(k, j) * x[j];
      x[k] /= at_work(k, k);
    }
    return x;
  }

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(kl_ + ku_ + i - j) * n_ + j; }
  double at_work(int i, int j) const { return a_[idx(i, j)]; }
  double& at_work_ref(int i, int j) { return a_[idx(i, j)]; }

  int n_, kl_, ku_, rows_;
  Vec a_;
  std::vector<int> piv_;
  bool factored_ = false;
};

// ============================================================================
// Compressed sparse rows, assembled from coordinate triplets.
// ============================================================================
class CsrMatrix {
 public:
  struct Triplet {
    int r, c;
    double v;
  };

  CsrMatrix() = default;

  static CsrMatrix from_triplets(int n, std::vector<Triplet> t) {
    std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
      return a.r != b.r ? a.r < b.r : a.c < b.c;
    });
    CsrMatrix m;
    m.n_ = n;
    m.row_ptr_.assign(n + 1, 0);
    for (std::size_t k = 0; k < t.size();) {
      std::size_t k2 = k;
      double s = 0.0;
      while (k2 < t.size() && t[k2].r == t[k].r && t[k2].c == t[k].c) s += t[k2++].v;
      m.cols_.push_back(t[k].c);
      m.vals_.push_back(s);
      m.row_ptr_[t[k].r + 1]++;
      k = k2;
    }
    for (int r = 0; r < n; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
    return m;
  }

  int size() const { return n_; }

  Vec multiply(const Vec& x) const {
    Vec y(n_, 0.0);
    for (int r = 0; r < n_; ++r) {
      double s = 0.0;
      for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += vals_[k] * x[cols_[k]];
      y[r] = s;
    }
    return y;
  }

  double diagonal(int i) const {
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      if (cols_[k] == i) return vals_[k];
    return 0.0;
  }

  // Row-sum bound used for eigen shifts: min over i of
  // (a_ii - sum_{j != i} |a_ij|) / m_i with diagonal weights m.
  double gershgorin_lower(const Vec& m) const {
    double g = std::numeric_limits<double>::infinity();
    for (int r = 0; r < n_; ++r) {
      double d = 0.0, off = 0.0;
      for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
        if (cols_[k] == r)
          d += vals_[k];
        else
          off += std::abs(vals_[k]);
      }
      g = std::min(g, (d - off) / m[r]);
    }
    return g;
  }

 private:
  int n_ = 0;
  std::vector<int> row_ptr_;
  std::vector<int> cols_;
  Vec vals_;
};

using Triplet = CsrMatrix::Triplet;

struct IterativeReport {
  int iterations = 0;
  double residual = 0.0;
};

// Jacobi-preconditioned conjugate gradients for SPD systems.
inline Vec solve_cg(const CsrMatrix& a, const Vec& b, double rel_tol, int max_iter,
                    IterativeReport* report = nullptr) {
  const int n = a.size();
  Vec x(n, 0.0), r = b, z(n), p(n);
  Vec dinv(n);
  for (int i = 0; i < n; ++i) {
    const double d = a.diagonal(i);
    dinv[i] = d != 0.0 ? 1.0 / d : 1.0;
  }
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) return x;
  for (int i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
  p = z;
  double rz = dot(r, z);
  int it = 0;
  for (; it < max_iter; ++it) {
    const double rn = std::sqrt(dot(r, r));
    if (rn <= rel_tol * bnorm) break;
    Vec ap = a.multiply(p);
    const double alpha = rz / dot(p, ap);
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    for (int i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
    const double rz2 = dot(r, z);
    const double beta = rz2 / rz;
    rz = rz2;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  const double rn = std::sqrt(dot(r, r));
  if (report) {
    report->iterations = it;
    report->residual = rn / bnorm;
  }
  if (rn > rel_tol * bnorm * 10.0)
    throw solver_failure_error("cg: no convergence after " + std::to_string(max_iter) +
                               " iterations, relative residual " + std::to_string(rn / bnorm));
  return x;
}

// Jacobi-preconditioned BiCGStab for mildly nonsymmetric systems.
inline Vec solve_bicgstab(const CsrMatrix& a, const Vec& b, double rel_tol, int max_iter,
                          IterativeReport* report = nullptr) {
  const int n = a.size();
  Vec dinv(n);
  for (int i = 0; i < n; ++i) {
    const double d = a.diagonal(i);
    dinv[i] = d != 0.0 ? 1.0 / d : 1.0;
  }
  Vec x(n, 0.0), r = b;
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) return x;
  Vec r0 = r, p = r, v(n, 0.0);
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  double rho_prev = dot(r0, r);
  p = r;
  int it = 0;
  for (; it < max_iter; ++it) {
    if (std::sqrt(dot(r, r)) <= rel_tol * bnorm) break;
    Vec phat(n);
    for (int i = 0; i < n; ++i) phat[i] = dinv[i] * p[i];
    v = a.multiply(phat);
    alpha = rho_prev / dot(r0, v);
    Vec s(n);
    for (int i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    Vec shat(n);
    for (int i = 0; i < n; ++i) shat[i] = dinv[i] * s[i];
    Vec t = a.multiply(shat);
    const double tt = dot(t, t);
    omega = tt != 0.0 ? dot(t, s) / tt : 0.0;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * phat[i] + omega * shat[i];
      r[i] = s[i] - omega * t[i];
    }
    rho = dot(r0, r);
    const double beta = (rho / rho_prev) * (alpha / (omega != 0.0 ? omega : 1.0));
    rho_prev = rho;
    for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
  }
  const double rn = std::sqrt(dot(r, r));
  if (report) {
    report->iterations = it;
    report->residual = rn / bnorm;
  }
  if (rn > rel_tol * bnorm * 10.0)
    throw solver_failure_error("bicgstab: no convergence after " + std::to_string(max_iter) +
                               " iterations, relative residual " + std::to_string(rn / bnorm));
  return x;
}

}  // namespace smmslab
