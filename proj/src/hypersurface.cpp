#include "flowlab/hypersurface.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "flowlab/errors.hpp"
#include "flowlab/smallmat.hpp"

namespace flowlab {

GraphState constant_state(const SpatialGrid& grid, double u0) {
  grid.validate();
  return GraphState{grid, make_field(grid, u0), 0.0};
}

GraphState random_band_limited(const SpatialGrid& grid, double u0, double amplitude, int kmax,
                               std::uint64_t seed) {
  grid.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  struct Mode {
    int m[3];
    double a, b;
  };
  std::vector<Mode> modes;
  double norm = 0.0;
  const int side = 2 * kmax + 1;
  int count = 1;
  for (int i = 0; i < grid.n; ++i) count *= side;
  for (int c = 0; c < count; ++c) {
    Mode md{{0, 0, 0}, 0.0, 0.0};
    int r = c;
    bool zero = true;
    for (int i = 0; i < grid.n; ++i) {
      md.m[i] = r % side - kmax;
      r /= side;
      zero = zero && md.m[i] == 0;
    }
    if (zero) continue;
    md.a = coef(rng);
    md.b = coef(rng);
    norm += std::abs(md.a) + std::abs(md.b);
    modes.push_back(md);
  }
  GraphState s = constant_state(grid, u0);
  const double k = 2.0 * std::numbers::pi / grid.L;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto x = grid.point(p);
    double acc = 0.0;
    for (const auto& md : modes) {
      double ph = 0.0;
      for (int i = 0; i < grid.n; ++i) ph += md.m[i] * x[i];
      acc += md.a * std::cos(k * ph) + md.b * std::sin(k * ph);
    }
    s.u[p] += amplitude * acc / norm;
  }
  return s;
}

STPoint PointGeometry::position(const SpatialGrid& grid, std::size_t idx) const {
  const auto x = grid.point(idx);
  return STPoint{u, x[0], x[1], x[2]};
}

void PointGeometry::tangent(int i, double out[4]) const {
  out[0] = Du[i];
  for (int k = 0; k < 3; ++k) out[k + 1] = (k == i) ? 1.0 : 0.0;
}

namespace {

// Γ̄^α_βγ x_i^β x_j^γ for x_i = (u_i, e_i).
double ambient_hessian_term(const Christoffel& G, int a, const double* Du, int i, int j) {
  return G.G[a][0][0] * Du[i] * Du[j] + G.G[a][0][j + 1] * Du[i] + G.G[a][i + 1][0] * Du[j] +
         G.G[a][i + 1][j + 1];
}

}  // namespace

void compute_geometry(const AmbientModel& model, const GraphState& state,
                      HypersurfaceGeometry& out) {
  const SpatialGrid& grid = state.grid;
  grid.validate();
  const int n = grid.n;
  if (n != model.n()) throw DomainError("grid dimension does not match the model");
  if (state.u.size() != grid.size()) throw DomainError("state size does not match its grid");
  const int sigma = model.sigma();
  const std::size_t np = grid.size();

  out.grid = grid;
  out.n = n;
  out.sigma = sigma;
  out.t = state.t;
  out.pts.resize(np);

  Field d, tmp;
  for (int a = 0; a < n; ++a) {
    grid_d1(grid, state.u, d, a);
    for (std::size_t p = 0; p < np; ++p) out.pts[p].Du[a] = d[p];
    for (int b = a; b < n; ++b) {
      grid_d11(grid, state.u, d, a, b, tmp);
      for (std::size_t p = 0; p < np; ++p) out.pts[p].D2u[a][b] = out.pts[p].D2u[b][a] = d[p];
    }
  }

  LocalData ld;
  for (std::size_t p = 0; p < np; ++p) {
    PointGeometry& q = out.pts[p];
    q.u = state.u[p];
    const STPoint x = q.position(grid, p);
    model.check_domain(x);
    model.local(x, ld);

    double s[4][4] = {}, si[4][4] = {};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s[i][j] = ld.sig[i][j];
    smallmat::invert(n, s, si);
    double uup[3] = {};
    double grad2 = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) uup[i] += si[i][j] * q.Du[j];
      grad2 += q.Du[i] * uup[i];
    }
    if (sigma < 0 && grad2 > 1.0 - kSpacelikeMargin)
      throw GeometryError("spacelikeness lost at point " + std::to_string(p) +
                              " (|Du|^2 = " + std::to_string(grad2) + ")",
                          p, grad2);

    q.psi = ld.psi;
    const double ep = std::exp(ld.psi), e2 = ep * ep;
    q.v = std::sqrt(1.0 + sigma * grad2);
    q.v_tilde = 1.0 / q.v;

    double g4[4][4] = {}, gi4[4][4] = {};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g4[i][j] = q.g[i][j] = e2 * (sigma * q.Du[i] * q.Du[j] + s[i][j]);
    const double detg = smallmat::invert(n, g4, gi4);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) q.ginv[i][j] = gi4[i][j];
    q.sqrt_g = std::sqrt(detg);

    q.nu[0] = sigma / (ep * q.v);
    q.nu_low[0] = ep / q.v;
    for (int i = 0; i < n; ++i) {
      q.nu[i + 1] = -uup[i] / (ep * q.v);
      q.nu_low[i + 1] = -ep * q.Du[i] / q.v;
    }
    for (int i = n; i < 3; ++i) q.nu[i + 1] = q.nu_low[i + 1] = 0.0;

    const Christoffel G = christoffel_from_local(n, sigma, ld);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double acc = q.nu_low[0] * (q.D2u[i][j] + ambient_hessian_term(G, 0, q.Du, i, j));
        for (int k = 0; k < n; ++k)
          acc += q.nu_low[k + 1] * ambient_hessian_term(G, k + 1, q.Du, i, j);
        q.h[i][j] = q.h[j][i] = -acc;
      }
    q.H = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k) acc += q.ginv[i][k] * q.h[k][j];
        q.hmix[i][j] = acc;
      }
      q.H += q.hmix[i][i];
    }
    double h4[4][4] = {}, w[4];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) h4[i][j] = q.h[i][j];
    smallmat::generalized_eigenvalues(n, h4, g4, w);
    for (int i = 0; i < n; ++i) q.kappa[i] = w[i];
  }
}

HypersurfaceGeometry compute_geometry(const AmbientModel& model, const GraphState& state) {
  HypersurfaceGeometry g;
  compute_geometry(model, state, g);
  return g;
}

double volume(const HypersurfaceGeometry& geom) {
  double s = 0.0;
  for (const auto& q : geom.pts) s += q.sqrt_g;
  return s * geom.grid.cell_volume();
}

IntrinsicChristoffel intrinsic_christoffel(const HypersurfaceGeometry& geom) {
  const SpatialGrid& grid = geom.grid;
  const int n = geom.n;
  const std::size_t np = grid.size();
  // dg[k][i][j] = ∂_k g_ij
  std::vector<std::array<double, 27>> dg(np);
  Field f(np), d;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      for (std::size_t p = 0; p < np; ++p) f[p] = geom.pts[p].g[i][j];
      for (int k = 0; k < n; ++k) {
        grid_d1(grid, f, d, k);
        for (std::size_t p = 0; p < np; ++p) dg[p][k * 9 + i * 3 + j] = dg[p][k * 9 + j * 3 + i] = d[p];
      }
    }
  IntrinsicChristoffel out;
  out.G.assign(np, {});
  for (std::size_t p = 0; p < np; ++p) {
    const auto& q = geom.pts[p];
    const auto& D = dg[p];
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          double acc = 0.0;
          for (int l = 0; l < n; ++l)
            acc += q.ginv[k][l] * (D[i * 9 + j * 3 + l] + D[j * 9 + i * 3 + l] - D[l * 9 + i * 3 + j]);
          out.G[p][k * 9 + i * 3 + j] = out.G[p][k * 9 + j * 3 + i] = 0.5 * acc;
        }
  }
  return out;
}

StructureResiduals check_gauss_codazzi(const AmbientModel& model, const GraphState& state) {
  const HypersurfaceGeometry geom = compute_geometry(model, state);
  const SpatialGrid& grid = geom.grid;
  const int n = geom.n, D = n + 1, sigma = geom.sigma;
  const std::size_t np = grid.size();
  const IntrinsicChristoffel ic = intrinsic_christoffel(geom);

  // Stencil derivatives: dG[p][c][k][i][j] = ∂_c Γ^k_ij, dh = ∂_c h_ij, dnu = ∂_c ν^α.
  std::vector<std::array<double, 81>> dG(np);
  std::vector<std::array<double, 27>> dh(np);
  std::vector<std::array<double, 12>> dnu(np);
  Field f(np), d;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        for (std::size_t p = 0; p < np; ++p) f[p] = ic.at(p, k, i, j);
        for (int c = 0; c < n; ++c) {
          grid_d1(grid, f, d, c);
          for (std::size_t p = 0; p < np; ++p)
            dG[p][c * 27 + k * 9 + i * 3 + j] = dG[p][c * 27 + k * 9 + j * 3 + i] = d[p];
        }
      }
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      for (std::size_t p = 0; p < np; ++p) f[p] = geom.pts[p].h[i][j];
      for (int c = 0; c < n; ++c) {
        grid_d1(grid, f, d, c);
        for (std::size_t p = 0; p < np; ++p) dh[p][c * 9 + i * 3 + j] = dh[p][c * 9 + j * 3 + i] = d[p];
      }
    }
  for (int a = 0; a < D; ++a) {
    for (std::size_t p = 0; p < np; ++p) f[p] = geom.pts[p].nu[a];
    for (int c = 0; c < n; ++c) {
      grid_d1(grid, f, d, c);
      for (std::size_t p = 0; p < np; ++p) dnu[p][c * 4 + a] = d[p];
    }
  }

  StructureResiduals res;
  for (std::size_t p = 0; p < np; ++p) {
    const auto& q = geom.pts[p];
    const STPoint x = q.position(grid, p);
    const CurvatureTensors amb = riemann_at(model, x);
    const auto& Rb = amb.riemann;
    const auto& Gb = amb.christoffel.G;
    double X[3][4];
    for (int i = 0; i < n; ++i) q.tangent(i, X[i]);
    auto G = [&](int k, int i, int j) { return ic.at(p, k, i, j); };

    // R̄ contracted with (A, B, C, E), each a vector in R^{n+1}.
    auto Rbar = [&](const double* A, const double* B, const double* C, const double* E) {
      double acc = 0.0;
      for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b) {
          const double ab = A[a] * B[b];
          if (ab == 0.0) continue;
          for (int c = 0; c < D; ++c)
            for (int e = 0; e < D; ++e) acc += Rb[a][b][c][e] * ab * C[c] * E[e];
        }
      return acc;
    };

    // Gauss.
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            double R = 0.0;
            for (int m = 0; m < n; ++m) {
              double Rm = dG[p][k * 27 + m * 9 + l * 3 + j] - dG[p][l * 27 + m * 9 + k * 3 + j];
              for (int e = 0; e < n; ++e) Rm += G(m, k, e) * G(e, l, j) - G(m, l, e) * G(e, k, j);
              R += q.g[i][m] * Rm;
            }
            const double rhs = sigma * (q.h[i][k] * q.h[j][l] - q.h[i][l] * q.h[j][k]) +
                               Rbar(X[i], X[j], X[k], X[l]);
            res.gauss = std::max(res.gauss, std::abs(R - rhs));
          }

    // Codazzi.
    auto hcov = [&](int i, int j, int k) {
      double r = dh[p][k * 9 + i * 3 + j];
      for (int m = 0; m < n; ++m) r -= G(m, k, i) * q.h[m][j] + G(m, k, j) * q.h[i][m];
      return r;
    };
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const double lhs = hcov(i, j, k) - hcov(i, k, j);
          res.codazzi = std::max(res.codazzi, std::abs(lhs - Rbar(q.nu, X[i], X[j], X[k])));
        }

    // Weingarten.
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < D; ++a) {
        double lhs = dnu[p][i * 4 + a];
        for (int b = 0; b < D; ++b)
          for (int c = 0; c < D; ++c) lhs += Gb[a][b][c] * q.nu[b] * X[i][c];
        double rhs = 0.0;
        for (int k = 0; k < n; ++k) rhs += q.hmix[k][i] * X[k][a];
        res.weingarten = std::max(res.weingarten, std::abs(lhs - rhs));
      }
  }
  return res;
}

AdmissibilityReport admissibility(const HypersurfaceGeometry& geom, const ConeSpec& cone) {
  AdmissibilityReport r;
  r.inside.resize(geom.pts.size());
  for (std::size_t p = 0; p < geom.pts.size(); ++p) {
    const bool in = in_cone(cone, geom.pts[p].kappa, geom.n);
    r.inside[p] = in ? 1 : 0;
    if (!in && r.all) {
      r.all = false;
      r.first_violation = p;
    }
  }
  return r;
}

VTildeBound v_tilde_bound_estimate(const AmbientModel& model, const GraphState& state,
                                   double kappa0) {
  const SpatialGrid& grid = state.grid;
  grid.validate();
  const int n = grid.n, D = n + 1, sigma = model.sigma();
  VTildeBound b;
  std::vector<Field> du(n);
  for (int a = 0; a < n; ++a) grid_d1(grid, state.u, du[a], a);
  LocalData ld;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto x = grid.point(p);
    const STPoint pt{state.u[p], x[0], x[1], x[2]};
    model.check_domain(pt);
    model.local(pt, ld);
    double s[4][4] = {}, si[4][4] = {};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s[i][j] = ld.sig[i][j];
    smallmat::invert(n, s, si);
    double grad2 = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) grad2 += si[i][j] * du[i][p] * du[j][p];
    b.max_grad2 = std::max(b.max_grad2, grad2);
    const double v2 = 1.0 + sigma * grad2;
    const double vt = v2 > 0.0 ? 1.0 / std::sqrt(v2) : std::numeric_limits<double>::infinity();
    b.max_v_tilde = std::max(b.max_v_tilde, vt);
    const Christoffel G = christoffel_from_local(n, sigma, ld);
    for (int a = 0; a < D; ++a)
      for (int c = 0; c < D; ++c)
        for (int e = 0; e < D; ++e) b.christoffel_sup = std::max(b.christoffel_sup, std::abs(G.G[a][c][e]));
  }
  if (sigma > 0) b.max_v_tilde = std::min(b.max_v_tilde, 1.0);
  b.flagged = sigma < 0 && b.max_grad2 > 1.0 - kSpacelikeMargin;
  if (b.flagged) {
    b.applicable = false;
    return b;
  }
  const HypersurfaceGeometry geom = compute_geometry(model, state);
  for (const auto& q : geom.pts)
    if (q.kappa[0] < kappa0) {
      b.applicable = false;
      break;
    }
  return b;
}

}  // namespace flowlab
