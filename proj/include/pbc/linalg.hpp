#pragma once

#include <cassert>
#include <cmath>
#include <span>
#include <vector>

#include "pbc/autodiff.hpp"

namespace pbc::la {

using ad::dot;
using ad::scalar_like;
using ad::value_of;

// Dense row-major matrix over scalar S (double or ad::Value). Sizes here are
// small (tens), so everything is plain loops on top of fused dots.
template <class S>
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<S> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}

  S& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  const S& operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

  std::span<S> row(int i) { return {a.data() + static_cast<std::size_t>(i) * cols, static_cast<std::size_t>(cols)}; }
  std::span<const S> row(int i) const {
    return {a.data() + static_cast<std::size_t>(i) * cols, static_cast<std::size_t>(cols)};
  }
};

template <class S>
using Vector = std::vector<S>;

template <class S>
Matrix<S> zeros_like(const S& ex, int r, int c) {
  Matrix<S> m(r, c);
  for (auto& v : m.a) v = scalar_like(ex, 0.0);
  return m;
}

template <class S>
Matrix<S> identity_like(const S& ex, int n) {
  Matrix<S> m = zeros_like(ex, n, n);
  for (int i = 0; i < n; ++i) m(i, i) = scalar_like(ex, 1.0);
  return m;
}

template <class S>
Matrix<S> transpose(const Matrix<S>& m) {
  Matrix<S> t(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  return t;
}

// out = M x
template <class S>
void matvec(const Matrix<S>& m, std::span<const S> x, std::span<S> out) {
  assert(static_cast<int>(x.size()) == m.cols && static_cast<int>(out.size()) == m.rows);
  for (int i = 0; i < m.rows; ++i) out[i] = dot(m.row(i), x);
}

template <class S>
Vector<S> matvec(const Matrix<S>& m, std::span<const S> x) {
  Vector<S> out(static_cast<std::size_t>(m.rows));
  matvec(m, x, std::span<S>(out));
  return out;
}

template <class S>
Matrix<S> matmul(const Matrix<S>& a, const Matrix<S>& b) {
  assert(a.cols == b.rows);
  Matrix<S> bt = transpose(b);
  Matrix<S> c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.cols; ++j) c(i, j) = dot(a.row(i), bt.row(j));
  return c;
}

template <class S>
Matrix<S> add(const Matrix<S>& a, const Matrix<S>& b) {
  assert(a.rows == b.rows && a.cols == b.cols);
  Matrix<S> c(a.rows, a.cols);
  for (std::size_t i = 0; i < a.a.size(); ++i) c.a[i] = a.a[i] + b.a[i];
  return c;
}

template <class S>
Matrix<S> sub(const Matrix<S>& a, const Matrix<S>& b) {
  assert(a.rows == b.rows && a.cols == b.cols);
  Matrix<S> c(a.rows, a.cols);
  for (std::size_t i = 0; i < a.a.size(); ++i) c.a[i] = a.a[i] - b.a[i];
  return c;
}

template <class S>
Matrix<S> scale(const Matrix<S>& a, const S& s) {
  Matrix<S> c(a.rows, a.cols);
  for (std::size_t i = 0; i < a.a.size(); ++i) c.a[i] = a.a[i] * s;
  return c;
}

template <class S>
S frobenius_sq(const Matrix<S>& m) {
  return dot(std::span<const S>(m.a), std::span<const S>(m.a));
}

template <class S>
S trace(const Matrix<S>& m) {
  assert(m.rows == m.cols);
  S t = m(0, 0);
  for (int i = 1; i < m.rows; ++i) t = t + m(i, i);
  return t;
}

// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
template <class S>
Matrix<S> cholesky(const Matrix<S>& m) {
  assert(m.rows == m.cols);
  const int n = m.rows;
  Matrix<S> l = zeros_like(m(0, 0), n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      S s = m(i, j);
      if (j > 0) {
        std::span<const S> li(l.a.data() + static_cast<std::size_t>(i) * n, static_cast<std::size_t>(j));
        std::span<const S> lj(l.a.data() + static_cast<std::size_t>(j) * n, static_cast<std::size_t>(j));
        s = s - dot(li, lj);
      }
      if (i == j) {
        using std::sqrt;
        using ad::sqrt;
        l(i, j) = sqrt(s);
      } else {
        l(i, j) = s * ad::recip(l(j, j));
      }
    }
  }
  return l;
}

// Solve L y = b with L lower triangular.
template <class S>
Vector<S> solve_lower(const Matrix<S>& l, std::span<const S> b) {
  const int n = l.rows;
  Vector<S> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    S s = b[i];
    if (i > 0) {
      std::span<const S> li(l.a.data() + static_cast<std::size_t>(i) * n, static_cast<std::size_t>(i));
      std::span<const S> yi(y.data(), static_cast<std::size_t>(i));
      s = s - dot(li, yi);
    }
    y[static_cast<std::size_t>(i)] = s * ad::recip(l(i, i));
  }
  return y;
}

// Solve L^T y = b with L lower triangular.
template <class S>
Vector<S> solve_upper_t(const Matrix<S>& l, std::span<const S> b) {
  const int n = l.rows;
  Vector<S> y(static_cast<std::size_t>(n));
  for (int i = n - 1; i >= 0; --i) {
    S s = b[i];
    for (int k = i + 1; k < n; ++k) s = s - l(k, i) * y[static_cast<std::size_t>(k)];
    y[static_cast<std::size_t>(i)] = s * ad::recip(l(i, i));
  }
  return y;
}

// X = M^{-1} B for symmetric positive definite M given its Cholesky factor.
template <class S>
Matrix<S> chol_solve(const Matrix<S>& l, const Matrix<S>& b) {
  Matrix<S> x(b.rows, b.cols);
  Vector<S> col(static_cast<std::size_t>(b.rows));
  for (int j = 0; j < b.cols; ++j) {
    for (int i = 0; i < b.rows; ++i) col[static_cast<std::size_t>(i)] = b(i, j);
    Vector<S> y = solve_lower(l, std::span<const S>(col));
    Vector<S> z = solve_upper_t(l, std::span<const S>(y));
    for (int i = 0; i < b.rows; ++i) x(i, j) = z[static_cast<std::size_t>(i)];
  }
  return x;
}

// X = M^{-1} B via LU with partial pivoting. Pivot choice compares forward
// values only, so the result stays differentiable along the taken branch.
template <class S>
Matrix<S> lu_solve(Matrix<S> m, Matrix<S> b) {
  assert(m.rows == m.cols && m.rows == b.rows);
  const int n = m.rows;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::abs(value_of(m(k, k)));
    for (int i = k + 1; i < n; ++i) {
      const double v = std::abs(value_of(m(i, k)));
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
      for (int j = 0; j < b.cols; ++j) std::swap(b(k, j), b(piv, j));
    }
    const S inv_pivot = ad::recip(m(k, k));
    for (int i = k + 1; i < n; ++i) {
      const S f = m(i, k) * inv_pivot;
      for (int j = k + 1; j < n; ++j) m(i, j) = m(i, j) - f * m(k, j);
      for (int j = 0; j < b.cols; ++j) b(i, j) = b(i, j) - f * b(k, j);
    }
    for (int i = k + 1; i < n; ++i) m(i, k) = scalar_like(m(k, k), 0.0);
  }
  Matrix<S> x(n, b.cols);
  for (int j = 0; j < b.cols; ++j) {
    for (int i = n - 1; i >= 0; --i) {
      S s = b(i, j);
      for (int k = i + 1; k < n; ++k) s = s - m(i, k) * x(k, j);
      x(i, j) = s * ad::recip(m(i, i));
    }
  }
  return x;
}

// Largest singular value of a plain-double matrix, via Jacobi eigenvalue
// iteration on M^T M. Used for certificates, not in the training path.
inline double spectral_norm(const Matrix<double>& m) {
  const int n = m.cols;
  Matrix<double> g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < m.rows; ++k) s += m(k, i) * m(k, j);
      g(i, j) = s;
    }
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += g(p, q) * g(p, q);
    if (off < 1e-28) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (g(p, q) == 0.0) continue;
        const double theta = 0.5 * std::atan2(2.0 * g(p, q), g(q, q) - g(p, p));
        const double c = std::cos(theta), s = std::sin(theta);
        for (int k = 0; k < n; ++k) {
          const double gpk = g(p, k), gqk = g(q, k);
          g(p, k) = c * gpk - s * gqk;
          g(q, k) = s * gpk + c * gqk;
        }
        for (int k = 0; k < n; ++k) {
          const double gkp = g(k, p), gkq = g(k, q);
          g(k, p) = c * gkp - s * gkq;
          g(k, q) = s * gkp + c * gkq;
        }
      }
    }
  }
  double lmax = 0.0;
  for (int i = 0; i < n; ++i) lmax = std::max(lmax, g(i, i));
  return std::sqrt(std::max(0.0, lmax));
}

template <class S>
Matrix<double> to_double(const Matrix<S>& m) {
  Matrix<double> d(m.rows, m.cols);
  for (std::size_t i = 0; i < m.a.size(); ++i) d.a[i] = value_of(m.a[i]);
  return d;
}

}  // namespace pbc::la
