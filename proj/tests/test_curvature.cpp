#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "flowlab/curvature.hpp"
#include "flowlab/errors.hpp"

using namespace flowlab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ModelPtr make(const std::string& label, double aniso = 0.0, double bump = 0.0) {
  ModelParams p;
  p.label = label;
  p.n = 2;
  p.period = kTwoPi;
  p.aniso = aniso;
  p.bump = bump;
  return make_model(p);
}

double class_d_ratio(const ModelPtr& m, const CurvatureSpec& spec) {
  double r[2];
  for (int l = 0; l < 2; ++l) {
    const SpatialGrid g{2, 64 << l, kTwoPi};
    r[l] = check_class_D(spec, *m, compute_geometry(*m, random_band_limited(g, 1.0, 0.05, 2, 7))).residual;
  }
  return r[0] / r[1];
}

}  // namespace

TEST(Curvature, ElementarySymmetricPolynomials) {
  const double k[3] = {1.0, 2.0, 3.0};
  EXPECT_EQ(sym_poly(0, k, 3), 1.0);
  EXPECT_EQ(sym_poly(1, k, 3), 6.0);
  EXPECT_EQ(sym_poly(2, k, 3), 11.0);
  EXPECT_EQ(sym_poly(3, k, 3), 6.0);
  EXPECT_EQ(sym_poly(3, k, 2), 0.0);
}

TEST(Curvature, GardingCones) {
  const double in2[2] = {3.0, -1.0};   // σ1 = 2, σ2 = -3
  const double pos[2] = {1.0, 0.5};
  EXPECT_TRUE(in_cone(ConeSpec{1}, in2, 2));
  EXPECT_FALSE(in_cone(ConeSpec{2}, in2, 2));
  EXPECT_TRUE(in_cone(ConeSpec{2}, pos, 2));
  EXPECT_TRUE(in_cone(ConeSpec{0}, in2, 2));
}

// At a diagonal A with g = δ the recursion gives ∂σ_k/∂κ_i on the diagonal.
TEST(Curvature, SymPolyDerivativeMatchesDifferences) {
  const double kappa[3] = {0.7, 1.3, 2.1};
  const double ginv[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const double A[3][3] = {{kappa[0], 0, 0}, {0, kappa[1], 0}, {0, 0, kappa[2]}};
  for (int k = 1; k <= 3; ++k) {
    double d[3][3];
    sym_poly_derivative(k, 3, A, ginv, d);
    for (int i = 0; i < 3; ++i) {
      double kp[3] = {kappa[0], kappa[1], kappa[2]}, km[3] = {kappa[0], kappa[1], kappa[2]};
      kp[i] += 1e-6;
      km[i] -= 1e-6;
      EXPECT_NEAR(d[i][i], (sym_poly(k, kp, 3) - sym_poly(k, km, 3)) / 2e-6, 1e-8) << k << i;
      for (int j = 0; j < 3; ++j)
        if (j != i) EXPECT_NEAR(d[i][j], 0.0, 1e-14);
    }
  }
}

TEST(Curvature, PhiDerivativesMatchDifferences) {
  for (PhiKind phi : {PhiKind::Identity, PhiKind::Log, PhiKind::Power, PhiKind::NegInvPower,
                      PhiKind::NegInverse}) {
    CurvatureSpec s;
    s.kind = FKind::SymPoly;
    s.k = 2;
    s.phi = phi;
    const double r = 1.7, h = 1e-5;
    EXPECT_NEAR(s.dPhi(r, 2), (s.Phi(r + h, 2) - s.Phi(r - h, 2)) / (2 * h), 1e-8);
    EXPECT_NEAR(s.ddPhi(r, 2), (s.dPhi(r + h, 2) - s.dPhi(r - h, 2)) / (2 * h), 1e-8);
    if (phi != PhiKind::Identity) EXPECT_GT(s.dPhi(r, 2), 0.0);
    EXPECT_LE(s.ddPhi(r, 2), 0.0);  // concave
  }
}

TEST(Curvature, NamesRoundTrip) {
  int k = 0;
  EXPECT_EQ(parse_fkind("H", &k), FKind::MeanH);
  EXPECT_EQ(parse_fkind("H2", &k), FKind::SymPoly);
  EXPECT_EQ(k, 2);
  EXPECT_EQ(to_string(FKind::SymPoly, 2), "H2");
  EXPECT_EQ(parse_fkind("K", &k), FKind::GaussK);
  EXPECT_THROW(parse_fkind("H7", &k), ConfigError);
  for (const char* s : {"identity", "log", "power", "neg_inv_power", "neg_inverse"})
    EXPECT_EQ(to_string(parse_phi(s)), s);
  EXPECT_THROW(parse_phi("exp"), ConfigError);
}

TEST(Curvature, UmbilicSliceValues) {
  // de Sitter slice x⁰ = 1: every principal curvature has the same value.
  const ModelPtr m = make("de_sitter_conformal");
  const SpatialGrid g{2, 32, kTwoPi};
  const HypersurfaceGeometry geom = compute_geometry(*m, constant_state(g, 1.0));
  const double k = geom.pts[0].kappa[0];
  CurvatureSpec H, H2, K;
  H2.kind = FKind::SymPoly;
  H2.k = 2;
  K.kind = FKind::GaussK;
  const CurvatureField fh = eval_F(H, geom), f2 = eval_F(H2, geom), fk = eval_F(K, geom);
  EXPECT_NEAR(fh.F[5], 2 * k, 1e-12);
  EXPECT_NEAR(f2.F[5], k * k, 1e-12);
  EXPECT_NEAR(fk.F[5], k * k, 1e-12);
}

TEST(Curvature, OutsideTheConeIsRejected) {
  const ModelPtr m = make("de_sitter_conformal");
  const SpatialGrid g{2, 32, kTwoPi};
  const HypersurfaceGeometry geom = compute_geometry(*m, constant_state(g, 1.0));
  CurvatureSpec s;
  s.kind = FKind::SymPoly;
  s.k = 2;
  // σ_1 = -1 < 0 at κ = (1, -2).
  CurvatureValues cv;
  PointGeometry bad = geom.pts[0];
  bad.kappa[0] = 1.0;
  bad.kappa[1] = -2.0;
  bad.H = -1.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      bad.hmix[i][j] = (i == j) ? bad.kappa[i] : 0.0;
      bad.h[i][j] = bad.hmix[i][j] * bad.g[i][i];
    }
  EXPECT_THROW(eval_point(s, 2, bad, 0, cv, true), AdmissibilityError);
}

TEST(Curvature, ClassDResidualConvergesInDeSitter) {
  CurvatureSpec H2;
  H2.kind = FKind::SymPoly;
  H2.k = 2;
  EXPECT_GE(class_d_ratio(make("de_sitter_conformal"), H2), 12.0);
}

TEST(Curvature, ClassDResidualStallsWithoutEinsteinCondition) {
  CurvatureSpec H2;
  H2.kind = FKind::SymPoly;
  H2.k = 2;
  EXPECT_LT(class_d_ratio(make("custom", 0.2, 0.1), H2), 2.0);
}

TEST(Curvature, RegularizationMatchesTheChainRule) {
  const ModelPtr m = make("de_sitter_conformal");
  const SpatialGrid g{2, 32, kTwoPi};
  const HypersurfaceGeometry geom = compute_geometry(*m, random_band_limited(g, 1.0, 0.05, 2, 7));
  CurvatureSpec H2;
  H2.kind = FKind::SymPoly;
  H2.k = 2;
  const RegularizedGeometry r = epsilon_regularize(H2, geom, 0.1);
  EXPECT_LT(r.identity_residual, 1e-8);
  // κ̃ = κ + εH shifts every principal curvature by the same amount.
  const PointGeometry& a = geom.pts[3];
  const PointGeometry& b = r.geom.pts[3];
  EXPECT_NEAR(b.kappa[0] - a.kappa[0], 0.1 * a.H, 1e-12);
  EXPECT_NEAR(b.kappa[1] - a.kappa[1], 0.1 * a.H, 1e-12);
}
