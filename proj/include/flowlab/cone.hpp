#pragma once

// Elementary symmetric polynomials and Garding cones Γ_k ⊂ R^n.

namespace flowlab {

// Raw σ_k(κ_1..κ_n); σ_0 = 1, σ_k = 0 for k > n.
inline double sym_poly(int k, const double* kappa, int n) {
  double e[4] = {1.0, 0.0, 0.0, 0.0};
  for (int i = 0; i < n; ++i)
    for (int j = (i + 1 < 3 ? i + 1 : 3); j >= 1; --j) e[j] += kappa[i] * e[j - 1];
  return (k < 0 || k > 3) ? 0.0 : e[k];
}

// k = 0 is the full space, k = n the positive cone.
struct ConeSpec {
  int k = 0;
};

// Open cone: σ_1 > 0, …, σ_k > 0.
inline bool in_cone(const ConeSpec& cone, const double* kappa, int n) {
  for (int j = 1; j <= cone.k && j <= n; ++j)
    if (!(sym_poly(j, kappa, n) > 0.0)) return false;
  return true;
}

}  // namespace flowlab
