#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "flowlab/ambient.hpp"
#include "flowlab/errors.hpp"

using namespace flowlab;

namespace {

ModelPtr de_sitter(int n) {
  ModelParams p;
  p.label = "de_sitter_conformal";
  p.n = n;
  p.period = 2.0 * std::numbers::pi;
  return make_model(p);
}

ModelPtr rw(int n, double p_exp, double c0 = 1.0) {
  ModelParams p;
  p.label = "robertson_walker";
  p.n = n;
  p.p = p_exp;
  p.c0 = c0;
  return make_model(p);
}

}  // namespace

TEST(Ambient, MinkowskiIsFlat) {
  ModelParams p;
  p.label = "minkowski";
  p.n = 3;
  const ModelPtr m = make_model(p);
  const CurvatureTensors ct = riemann_at(*m, {0.3, 0.1, 0.2, 0.4});
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      EXPECT_EQ(ct.ricci[a][b], 0.0);
      for (int c = 0; c < 4; ++c) EXPECT_EQ(ct.christoffel.G[a][b][c], 0.0);
    }
}

// Conformally flat oracle: Γ^a_bc = δ^a_b ψ_c + δ^a_c ψ_b - η_bc η^{ad} ψ_d.
TEST(Ambient, DeSitterChristoffelMatchesConformalOracle) {
  const int n = 2;
  const ModelPtr m = de_sitter(n);
  const double x0 = 0.7;
  const double eta[3] = {-1.0, 1.0, 1.0};
  const double dpsi[3] = {-1.0 / x0, 0.0, 0.0};  // ψ = -log x⁰
  const Christoffel c = christoffel_at(*m, {x0, 0.2, 0.5, 0.0});
  for (int a = 0; a <= n; ++a)
    for (int b = 0; b <= n; ++b)
      for (int d = 0; d <= n; ++d) {
        double want = (a == b ? dpsi[d] : 0.0) + (a == d ? dpsi[b] : 0.0);
        if (b == d) want -= eta[b] * eta[a] * dpsi[a];
        EXPECT_NEAR(c.G[a][b][d], want, 1e-12) << a << b << d;
      }
}

TEST(Ambient, ClosedFormCurvatureAgreesWithDifferencedChristoffels) {
  const ModelPtr m = de_sitter(2);
  double K = 0.0;
  ASSERT_TRUE(m->constant_curvature(&K));
  EXPECT_DOUBLE_EQ(K, 1.0);
  const STPoint x{0.8, 0.3, 1.1, 0.0};
  const CurvatureTensors closed = riemann_at(*m, x);
  const CurvatureTensors fd = riemann_fd(*m, x);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d)
          EXPECT_NEAR(closed.riemann[a][b][c][d], fd.riemann[a][b][c][d], 1e-7);
}

TEST(Ambient, DeSitterIsEinsteinWithRicciNG) {
  const int n = 2;
  const ModelPtr m = de_sitter(n);
  const STPoint x{1.3, 0.0, 0.0, 0.0};
  const CurvatureTensors ct = riemann_fd(*m, x);
  const MetricComponents g = metric_at(*m, x);
  for (int a = 0; a <= n; ++a)
    for (int b = 0; b <= n; ++b) EXPECT_NEAR(ct.ricci[a][b], n * g.g[a][b], 1e-7);
}

TEST(Ambient, RiemannSymmetries) {
  ModelParams p;
  p.label = "custom";
  p.n = 2;
  p.aniso = 0.2;
  p.bump = 0.1;
  const ModelPtr m = make_model(p);
  const CurvatureTensors ct = riemann_fd(*m, {0.9, 0.13, 0.41, 0.0});
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          const double r = ct.riemann[a][b][c][d];
          EXPECT_NEAR(r, -ct.riemann[b][a][c][d], 1e-8);
          EXPECT_NEAR(r, -ct.riemann[a][b][d][c], 1e-8);
          EXPECT_NEAR(r, ct.riemann[c][d][a][b], 1e-6);
        }
}

TEST(Ambient, WarpDerivativesMatchDifferences) {
  WarpProfile w;
  w.c0 = 1.5;
  w.p = 0.8;
  w.beta = 0.5;
  w.kappa = 2.5;
  for (double tau : {-2.0, -0.7, -0.05}) {
    const double h = 1e-4 * -tau;
    EXPECT_NEAR(w.f1(tau), (w.f(tau + h) - w.f(tau - h)) / (2 * h), 1e-6 * std::abs(w.f1(tau)));
    EXPECT_NEAR(w.f2(tau), (w.f1(tau + h) - w.f1(tau - h)) / (2 * h), 1e-6 * std::abs(w.f2(tau)));
  }
  // e^f = c0 (-τ)^p (1 + β(-τ)^κ)
  EXPECT_NEAR(std::exp(w.f(-0.5)), 1.5 * std::pow(0.5, 0.8) * (1 + 0.5 * std::pow(0.5, 2.5)), 1e-14);
}

TEST(Ambient, ArwProfileExponents) {
  const ARWProfile a = ARWProfile::make(2, 2.0, 1.5, 0.0, std::nan(""));
  EXPECT_DOUBLE_EQ(a.gamma_tilde, 1.0);
  EXPECT_DOUBLE_EQ(a.gamma, 0.5);
  EXPECT_DOUBLE_EQ(a.warp.p, 1.0);
  EXPECT_DOUBLE_EQ(a.mass, 2.25);
  EXPECT_DOUBLE_EQ(a.warp.kappa, 2.0);

  const ARWProfile b = ARWProfile::make(1, 3.5, 1.0, 0.5, std::nan(""));
  EXPECT_DOUBLE_EQ(b.gamma_tilde, 1.25);
  EXPECT_DOUBLE_EQ(b.gamma, 1.25);
  EXPECT_DOUBLE_EQ(b.warp.p, 0.8);
  EXPECT_DOUBLE_EQ(b.warp.kappa, 2.5);

  EXPECT_THROW(ARWProfile::make(1, 1.0, 1.0, 0.0, 0.0), DomainError);
}

// m = lim |f'|² e^{2γ̃f} as τ → 0.
TEST(Ambient, ArwMassIsTheLimitOfTheDerivativeProduct) {
  const ARWProfile a = ARWProfile::make(2, 3.0, 1.3, 0.4, std::nan(""));
  const double tau = -1e-7;
  const double lim = a.f1(tau) * a.f1(tau) * std::exp(2 * a.gamma_tilde * a.f(tau));
  EXPECT_NEAR(lim, a.mass, 1e-5 * a.mass);
}

TEST(Ambient, DomainIsEnforced) {
  const ModelPtr m = rw(2, 1.0);
  EXPECT_THROW(m->check_domain({0.1, 0, 0, 0}), DomainError);
  EXPECT_THROW(m->check_domain({-11.0, 0, 0, 0}), DomainError);
  EXPECT_NO_THROW(m->check_domain({-1.0, 0, 0, 0}));
  ModelParams bad;
  bad.label = "no_such_model";
  EXPECT_THROW(make_model(bad), DomainError);
}

TEST(Ambient, MirrorReflectsTime) {
  const ModelPtr m = rw(2, 2.0, 1.2);
  const ModelPtr r = mirrored(m);
  LocalData a, b;
  m->local({-0.6, 0.1, 0.2, 0.0}, a);
  r->local({0.6, 0.1, 0.2, 0.0}, b);
  EXPECT_DOUBLE_EQ(b.psi, a.psi);
  EXPECT_DOUBLE_EQ(b.dpsi[0], -a.dpsi[0]);
  EXPECT_DOUBLE_EQ(b.ddpsi[0][0], a.ddpsi[0][0]);
  EXPECT_DOUBLE_EQ(r->time_min(), -m->time_max());
}

TEST(Ambient, ConformalViewDropsTheWarp) {
  const ModelPtr c = conformal_view(rw(2, 2.0));
  LocalData d;
  c->local({-0.6, 0.1, 0.2, 0.0}, d);
  EXPECT_EQ(d.psi, 0.0);
  EXPECT_EQ(d.dpsi[0], 0.0);
  EXPECT_EQ(d.sig[0][0], 1.0);
}

// In de Sitter (ψ = -log x⁰) the Hessian of χ = e^{x⁰} is diagonal with
// χ_ij = χ δ_ij / x⁰ and a positive χ_00 - c ḡ_00, so the best c is
// min x⁰ e^{x⁰} over the sampled slab.
TEST(Ambient, ExponentialTimeIsConvexInDeSitter) {
  const ConvexChiResult r = convex_chi(*de_sitter(2), 0.5, 2.0, 5, {{0.0, 0.0, 0.0}, {1.0, 2.0, 0.0}}, 1.0);
  EXPECT_TRUE(r.is_convex);
  EXPECT_NEAR(r.c, 0.5 * std::exp(0.5), 1e-4);
}

// In Minkowski space the Hessian of e^{λx⁰} vanishes on spatial directions.
TEST(Ambient, ExponentialTimeIsNotConvexInMinkowski) {
  ModelParams p;
  p.label = "minkowski";
  p.n = 2;
  EXPECT_FALSE(convex_chi(*make_model(p), 0.5, 2.0, 5, {{0.0, 0.0, 0.0}}, 1.0).is_convex);
}
