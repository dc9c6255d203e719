#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "relent/common.hpp"

namespace relent {

// Dense row-major matrix; everything here is desk-scale (alphabets of a few
// dozen symbols), so no sparsity or blocking.
template <class T>
struct Mat {
  int rows = 0, cols = 0;
  std::vector<T> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, T(0)) {}

  T& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  const T& operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
};

template <class T>
std::vector<T> mat_vec(const Mat<T>& m, const std::vector<T>& v) {
  std::vector<T> out(m.rows, T(0));
  for (int i = 0; i < m.rows; ++i) {
    T s(0);
    for (int j = 0; j < m.cols; ++j) s += m(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

template <class T>
std::vector<T> vec_mat(const std::vector<T>& v, const Mat<T>& m) {
  std::vector<T> out(m.cols, T(0));
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out[j] += v[i] * m(i, j);
  return out;
}

// Gaussian elimination with pivoting; works for double and exact rationals.
// Throws on (numerically) singular systems.
template <class T>
std::vector<T> solve_linear(Mat<T> m, std::vector<T> b) {
  const int n = m.rows;
  if (m.cols != n || static_cast<int>(b.size()) != n)
    throw numeric_error("solve_linear: shape mismatch");
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  auto absval = [](const T& x) {
    if constexpr (std::is_same_v<T, double>) return std::fabs(x);
    else return x < T(0) ? T(-x) : x;
  };
  for (int col = 0; col < n; ++col) {
    int piv = -1;
    auto best = T(0);
    for (int r = col; r < n; ++r) {
      auto v = absval(m(r, col));
      if (piv < 0 || v > best) { piv = r; best = v; }
    }
    if (!(best > T(0))) throw numeric_error("solve_linear: singular matrix");
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(m(col, j), m(piv, j));
      std::swap(b[col], b[piv]);
    }
    for (int r = col + 1; r < n; ++r) {
      if (m(r, col) == T(0)) continue;
      T f = m(r, col) / m(col, col);
      m(r, col) = T(0);
      for (int j = col + 1; j < n; ++j) m(r, j) -= f * m(col, j);
      b[r] -= f * b[col];
    }
  }
  std::vector<T> x(n, T(0));
  for (int i = n - 1; i >= 0; --i) {
    T s = b[i];
    for (int j = i + 1; j < n; ++j) s -= m(i, j) * x[j];
    x[i] = s / m(i, i);
  }
  return x;
}

// Stationary vector of a row-stochastic matrix with irreducible support:
// solves pi (P - I) = 0 with the normalization sum(pi) = 1 substituted for
// one equation. Exact when T is rational.
template <class T>
std::vector<T> stationary_vector(const Mat<T>& p) {
  const int n = p.rows;
  Mat<T> m(n, n);
  std::vector<T> b(n, T(0));
  // columns of (P^T - I), last equation replaced by sum = 1
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = p(j, i) - (i == j ? T(1) : T(0));
  for (int j = 0; j < n; ++j) m(n - 1, j) = T(1);
  b[n - 1] = T(1);
  return solve_linear(m, b);
}

}  // namespace relent
