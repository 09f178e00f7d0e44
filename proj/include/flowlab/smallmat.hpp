#pragma once

// Dense helpers for the 1..4 dimensional matrices that appear pointwise.

#include <algorithm>
#include <cmath>

namespace flowlab::smallmat {

using M4 = double[4][4];

// Inverse by Gauss-Jordan with partial pivoting; returns the determinant.
inline double invert(int n, const double a[4][4], double inv[4][4]) {
  double m[4][8];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      m[i][j] = a[i][j];
      m[i][n + j] = (i == j) ? 1.0 : 0.0;
    }
  double det = 1.0;
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[p][c])) p = r;
    if (p != c) {
      for (int j = 0; j < 2 * n; ++j) std::swap(m[p][j], m[c][j]);
      det = -det;
    }
    const double piv = m[c][c];
    det *= piv;
    for (int j = 0; j < 2 * n; ++j) m[c][j] /= piv;
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = m[r][c];
      if (f == 0.0) continue;
      for (int j = 0; j < 2 * n; ++j) m[r][j] -= f * m[c][j];
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) inv[i][j] = m[i][n + j];
  return det;
}

inline double det(int n, const double a[4][4]) {
  switch (n) {
    case 1: return a[0][0];
    case 2: return a[0][0] * a[1][1] - a[0][1] * a[1][0];
    case 3:
      return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
             a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
             a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    default: {
      double inv[4][4];
      return invert(n, a, inv);
    }
  }
}

// Cyclic Jacobi rotations on a symmetric matrix. On return `a` is destroyed,
// `w` holds eigenvalues ascending and column k of `v` the k-th eigenvector.
inline void jacobi_eigen(int n, double a[4][4], double w[4], double v[4][4]) {
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v[i][j] = (i == j) ? 1.0 : 0.0;
  for (int sweep = 0; sweep < 50; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (int i = 0; i < n; ++i) {
      diag += a[i][i] * a[i][i];
      for (int j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    }
    if (off <= 1e-30 * diag || off == 0.0) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
  }
  int idx[4] = {0, 1, 2, 3};
  std::sort(idx, idx + n, [&](int x, int y) { return a[x][x] < a[y][y]; });
  double vv[4][4];
  for (int k = 0; k < n; ++k) {
    w[k] = a[idx[k]][idx[k]];
    for (int i = 0; i < n; ++i) vv[i][k] = v[i][idx[k]];
  }
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) v[i][k] = vv[i][k];
}

inline double min_eigenvalue(int n, const double a[4][4]) {
  double c[4][4], w[4], v[4][4];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c[i][j] = a[i][j];
  jacobi_eigen(n, c, w, v);
  return w[0];
}

// Eigenvalues of g^{-1}h for symmetric h and positive definite g, ascending.
// Reduced to the symmetric matrix L^{-1} h L^{-T} with g = L L^T.
inline void generalized_eigenvalues(int n, const double h[4][4], const double g[4][4],
                                    double w[4]) {
  if (n == 1) {
    w[0] = h[0][0] / g[0][0];
    return;
  }
  double L[4][4] = {};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      double s = g[i][j];
      for (int k = 0; k < j; ++k) s -= L[i][k] * L[j][k];
      L[i][j] = (i == j) ? std::sqrt(s) : s / L[j][j];
    }
  double Li[4][4] = {};
  for (int i = 0; i < n; ++i) {
    Li[i][i] = 1.0 / L[i][i];
    for (int j = 0; j < i; ++j) {
      double s = 0.0;
      for (int k = j; k < i; ++k) s -= L[i][k] * Li[k][j];
      Li[i][j] = s / L[i][i];
    }
  }
  double tmp[4][4], s[4][4], v[4][4];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += Li[i][k] * h[k][j];
      tmp[i][j] = acc;
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += tmp[i][k] * Li[j][k];
      s[i][j] = acc;
    }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) s[i][j] = s[j][i] = 0.5 * (s[i][j] + s[j][i]);
  jacobi_eigen(n, s, w, v);
}

}  // namespace flowlab::smallmat
