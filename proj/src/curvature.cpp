#include "flowlab/curvature.hpp"

#include <algorithm>
#include <cmath>

#include "flowlab/errors.hpp"
#include "flowlab/smallmat.hpp"

namespace flowlab {

int CurvatureSpec::order(int n) const {
  switch (kind) {
    case FKind::MeanH: return 1;
    case FKind::SymPoly: return k;
    case FKind::GaussK: return n;
  }
  return 1;
}

ConeSpec CurvatureSpec::cone(int n) const {
  switch (kind) {
    case FKind::MeanH: return ConeSpec{0};
    case FKind::SymPoly: return ConeSpec{k};
    case FKind::GaussK: return ConeSpec{n};
  }
  return ConeSpec{0};
}

double CurvatureSpec::Phi(double r, int n) const {
  const double d = order(n);
  switch (phi) {
    case PhiKind::Identity: return r;
    case PhiKind::Log: return std::log(r);
    case PhiKind::Power: return std::pow(r, 1.0 / d);
    case PhiKind::NegInvPower: return -std::pow(r, -1.0 / d);
    case PhiKind::NegInverse: return -1.0 / r;
  }
  return r;
}

double CurvatureSpec::dPhi(double r, int n) const {
  const double d = order(n);
  switch (phi) {
    case PhiKind::Identity: return 1.0;
    case PhiKind::Log: return 1.0 / r;
    case PhiKind::Power: return std::pow(r, 1.0 / d - 1.0) / d;
    case PhiKind::NegInvPower: return std::pow(r, -1.0 / d - 1.0) / d;
    case PhiKind::NegInverse: return 1.0 / (r * r);
  }
  return 1.0;
}

double CurvatureSpec::ddPhi(double r, int n) const {
  const double d = order(n);
  switch (phi) {
    case PhiKind::Identity: return 0.0;
    case PhiKind::Log: return -1.0 / (r * r);
    case PhiKind::Power: return (1.0 / d) * (1.0 / d - 1.0) * std::pow(r, 1.0 / d - 2.0);
    case PhiKind::NegInvPower: return -(1.0 / d) * (1.0 / d + 1.0) * std::pow(r, -1.0 / d - 2.0);
    case PhiKind::NegInverse: return -2.0 / (r * r * r);
  }
  return 0.0;
}

FKind parse_fkind(const std::string& s, int* k) {
  if (s == "H" || s == "mean") {
    *k = 1;
    return FKind::MeanH;
  }
  if (s == "K" || s == "gauss") return FKind::GaussK;
  if (s.size() >= 2 && s[0] == 'H') {
    try {
      std::size_t used = 0;
      const int order = std::stoi(s.substr(1), &used);
      if (used == s.size() - 1 && order >= 1 && order <= 3) {
        *k = order;
        return order == 1 ? FKind::MeanH : FKind::SymPoly;
      }
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("unknown curvature kind '" + s + "' (expected H, H2, H3 or K)");
}

PhiKind parse_phi(const std::string& s) {
  if (s == "identity") return PhiKind::Identity;
  if (s == "log") return PhiKind::Log;
  if (s == "power") return PhiKind::Power;
  if (s == "neg_inv_power") return PhiKind::NegInvPower;
  if (s == "neg_inverse") return PhiKind::NegInverse;
  throw ConfigError("unknown phi '" + s +
                    "' (expected identity, log, power, neg_inv_power or neg_inverse)");
}

std::string to_string(FKind kind, int k) {
  switch (kind) {
    case FKind::MeanH: return "H";
    case FKind::SymPoly: return "H" + std::to_string(k);
    case FKind::GaussK: return "K";
  }
  return "?";
}

std::string to_string(PhiKind phi) {
  switch (phi) {
    case PhiKind::Identity: return "identity";
    case PhiKind::Log: return "log";
    case PhiKind::Power: return "power";
    case PhiKind::NegInvPower: return "neg_inv_power";
    case PhiKind::NegInverse: return "neg_inverse";
  }
  return "?";
}

double eval_F_kappa(const CurvatureSpec& spec, const double* kappa, int n) {
  return sym_poly(spec.order(n), kappa, n);
}

void sym_poly_derivative(int k, int n, const double A[3][3], const double ginv[3][3],
                         double out[3][3]) {
  double F[3][3], next[3][3];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) F[i][j] = ginv[i][j];
  double trace = 0.0;
  for (int i = 0; i < n; ++i) trace += A[i][i];
  // σ_m of the eigenvalues of A through Newton's identities.
  double p[4] = {static_cast<double>(n), trace, 0.0, 0.0};
  double A2[3][3] = {};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) A2[i][j] += A[i][l] * A[l][j];
  for (int i = 0; i < n; ++i) {
    p[2] += A2[i][i];
    for (int l = 0; l < n; ++l) p[3] += A2[i][l] * A[l][i];
  }
  double e[4] = {1.0, p[1], 0.5 * (p[1] * p[1] - p[2]), 0.0};
  e[3] = (e[2] * p[1] - e[1] * p[2] + p[3]) / 3.0;
  for (int m = 1; m < k; ++m) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int l = 0; l < n; ++l) acc += F[j][l] * A[i][l];
        next[i][j] = e[m] * ginv[i][j] - acc;
      }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) F[i][j] = 0.5 * (next[i][j] + next[j][i]);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[i][j] = F[i][j];
}

void eval_point(const CurvatureSpec& spec, int n, const PointGeometry& q, std::size_t index,
                CurvatureValues& out, bool with_derivative) {
  const int k = spec.order(n);
  const double shift = spec.epsilon * q.H;
  for (int i = 0; i < n; ++i) out.kappa[i] = q.kappa[i] + shift;
  if (!in_cone(spec.cone(n), out.kappa, n))
    throw AdmissibilityError("principal curvatures leave the cone at point " + std::to_string(index),
                             index);
  out.F = sym_poly(k, out.kappa, n);
  if (spec.phi != PhiKind::Identity && !(out.F > 0.0))
    throw DomainError("curvature function must be positive for this phi (point " +
                      std::to_string(index) + ")");
  out.Phi = spec.Phi(out.F, n);
  out.dPhi = spec.dPhi(out.F, n);
  if (!with_derivative) return;
  double A[3][3];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A[i][j] = q.hmix[i][j] + (i == j ? shift : 0.0);
  sym_poly_derivative(k, n, A, q.ginv, out.Fij);
  if (spec.epsilon != 0.0) {
    double tr = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) tr += out.Fij[i][j] * q.g[i][j];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out.Fij[i][j] += spec.epsilon * tr * q.ginv[i][j];
  }
}

CurvatureField eval_F(const CurvatureSpec& spec, const HypersurfaceGeometry& geom) {
  CurvatureField f;
  f.F.resize(geom.pts.size());
  f.Phi.resize(geom.pts.size());
  CurvatureValues cv;
  for (std::size_t p = 0; p < geom.pts.size(); ++p) {
    eval_point(spec, geom.n, geom.pts[p], p, cv, false);
    f.F[p] = cv.F;
    f.Phi[p] = cv.Phi;
  }
  return f;
}

std::vector<std::array<double, 9>> eval_F_ij(const CurvatureSpec& spec,
                                             const HypersurfaceGeometry& geom) {
  std::vector<std::array<double, 9>> out(geom.pts.size());
  CurvatureValues cv;
  for (std::size_t p = 0; p < geom.pts.size(); ++p) {
    eval_point(spec, geom.n, geom.pts[p], p, cv, true);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out[p][i * 3 + j] = (i < geom.n && j < geom.n) ? cv.Fij[i][j] : 0.0;
  }
  return out;
}

ClassDReport check_class_D(const CurvatureSpec& spec, const AmbientModel& model,
                           const HypersurfaceGeometry& geom) {
  const int n = geom.n;
  const auto Fij = eval_F_ij(spec, geom);
  const IntrinsicChristoffel ic = intrinsic_christoffel(geom);
  const std::size_t np = geom.pts.size();
  // div[p][i] = ∂_j F^{ij}
  std::vector<std::array<double, 3>> div(np, {0.0, 0.0, 0.0});
  Field f(np), d;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      for (std::size_t p = 0; p < np; ++p) f[p] = Fij[p][i * 3 + j];
      grid_d1(geom.grid, f, d, j);
      for (std::size_t p = 0; p < np; ++p) div[p][i] += d[p];
    }
  ClassDReport r;
  for (std::size_t p = 0; p < np; ++p)
    for (int i = 0; i < n; ++i) {
      double acc = div[p][i];
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          acc += ic.at(p, i, j, k) * Fij[p][k * 3 + j] + ic.at(p, j, j, k) * Fij[p][i * 3 + k];
      r.residual = std::max(r.residual, std::abs(acc));
    }
  const int k = spec.order(n);
  r.qualifies = k == 1 || model.constant_curvature(nullptr) || (k == 2 && model.einstein());
  return r;
}

namespace {

// Eigenvalues of g^{-1}h and g-orthonormal eigenvectors (columns of E).
void frame_eigen(int n, const double h[3][3], const double g[3][3], double w[3], double E[3][3]) {
  double L[3][3] = {};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      double s = g[i][j];
      for (int k = 0; k < j; ++k) s -= L[i][k] * L[j][k];
      L[i][j] = (i == j) ? std::sqrt(s) : s / L[j][j];
    }
  double Li[3][3] = {};
  for (int i = 0; i < n; ++i) {
    Li[i][i] = 1.0 / L[i][i];
    for (int j = 0; j < i; ++j) {
      double s = 0.0;
      for (int k = j; k < i; ++k) s -= L[i][k] * Li[k][j];
      Li[i][j] = s / L[i][i];
    }
  }
  double S[4][4] = {}, V[4][4], W[4];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) acc += Li[i][a] * h[a][b] * Li[j][b];
      S[i][j] = acc;
    }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) S[i][j] = S[j][i] = 0.5 * (S[i][j] + S[j][i]);
  smallmat::jacobi_eigen(n, S, W, V);
  for (int a = 0; a < n; ++a) {
    w[a] = W[a];
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += Li[k][i] * V[k][a];
      E[i][a] = acc;
    }
  }
}

}  // namespace

RegularizedGeometry epsilon_regularize(const CurvatureSpec& spec,
                                       const HypersurfaceGeometry& geom, double eps) {
  const int n = geom.n;
  const int k = spec.order(n);
  RegularizedGeometry out;
  out.geom = geom;
  out.F.resize(geom.pts.size());
  out.Fij.resize(geom.pts.size());
  CurvatureSpec shifted = spec;
  shifted.epsilon = eps;
  CurvatureValues cv;
  for (std::size_t p = 0; p < geom.pts.size(); ++p) {
    const PointGeometry& q = geom.pts[p];
    eval_point(shifted, n, q, p, cv, true);
    out.F[p] = cv.F;
    PointGeometry& r = out.geom.pts[p];
    const double shift = eps * q.H;
    r.H = 0.0;
    for (int i = 0; i < n; ++i) {
      r.kappa[i] = cv.kappa[i];
      for (int j = 0; j < n; ++j) {
        r.h[i][j] = q.h[i][j] + shift * q.g[i][j];
        r.hmix[i][j] = q.hmix[i][j] + (i == j ? shift : 0.0);
      }
      r.H += r.hmix[i][i];
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out.Fij[p][i * 3 + j] = (i < n && j < n) ? cv.Fij[i][j] : 0.0;

    // Chain rule in the eigenframe of the shifted tensor: ∂F̃/∂h_ij =
    // Σ_a ∂F/∂κ_a(κ̃)(e_a^i e_a^j + ε g^{ij}).
    double w[3], E[3][3];
    frame_eigen(n, r.h, q.g, w, E);
    double dk[3], sum = 0.0;
    for (int a = 0; a < n; ++a) {
      double rest[3];
      int m = 0;
      for (int b = 0; b < n; ++b)
        if (b != a) rest[m++] = w[b];
      dk[a] = sym_poly(k - 1, rest, n - 1);
      sum += dk[a];
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = eps * sum * q.ginv[i][j];
        for (int a = 0; a < n; ++a) acc += dk[a] * E[i][a] * E[j][a];
        out.identity_residual = std::max(out.identity_residual, std::abs(acc - cv.Fij[i][j]));
      }
  }
  return out;
}

}  // namespace flowlab
