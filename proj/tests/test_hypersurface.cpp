#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "flowlab/errors.hpp"
#include "flowlab/hypersurface.hpp"

using namespace flowlab;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ModelPtr rw(int n, double p_exp, double period = 1.0) {
  ModelParams p;
  p.label = "robertson_walker";
  p.n = n;
  p.p = p_exp;
  p.period = period;
  return make_model(p);
}

ModelPtr de_sitter() {
  ModelParams p;
  p.label = "de_sitter_conformal";
  p.n = 2;
  p.period = kTwoPi;
  return make_model(p);
}

}  // namespace

// A coordinate slice τ = u0 of e^{2f}(-dτ² + dx²) is umbilic with
// g_ij = e^{2f}δ_ij and |κ_i| = |f'| e^{-f}; here f = p log(-τ).
TEST(Hypersurface, CoordinateSliceOfWarpedProduct) {
  const double u0 = -0.5, p = 1.0;
  const SpatialGrid g{2, 32, 1.0};
  const HypersurfaceGeometry geom = compute_geometry(*rw(2, p), constant_state(g, u0));
  const double ef = std::pow(-u0, p);
  const double kappa = (p / -u0) / ef;
  for (const PointGeometry& q : geom.pts) {
    EXPECT_DOUBLE_EQ(q.v, 1.0);
    EXPECT_NEAR(q.g[0][0], ef * ef, 1e-14);
    EXPECT_EQ(q.g[0][1], 0.0);
    EXPECT_NEAR(q.sqrt_g, ef * ef, 1e-14);
    EXPECT_NEAR(std::abs(q.kappa[0]), kappa, 1e-12);
    EXPECT_NEAR(q.kappa[0], q.kappa[1], 1e-12);
    EXPECT_NEAR(q.H, q.kappa[0] + q.kappa[1], 1e-12);
  }
  EXPECT_NEAR(volume(geom), ef * ef, 1e-12);
}

TEST(Hypersurface, StructureEquationsConvergeAtFourthOrder) {
  const ModelPtr m = de_sitter();
  StructureResiduals r[2];
  for (int l = 0; l < 2; ++l)
    r[l] = check_gauss_codazzi(*m, random_band_limited(SpatialGrid{2, 64 << l, kTwoPi}, 1.0, 0.05, 2, 7));
  EXPECT_GT(std::log2(r[0].gauss / r[1].gauss), 3.5);
  EXPECT_GT(std::log2(r[0].codazzi / r[1].codazzi), 3.5);
  EXPECT_GT(std::log2(r[0].weingarten / r[1].weingarten), 3.5);
}

TEST(Hypersurface, RandomGraphsAreReproducibleAndMeanPreserving) {
  const SpatialGrid g{2, 32, 1.0};
  const GraphState a = random_band_limited(g, -1.0, 0.1, 3, 42);
  const GraphState b = random_band_limited(g, -1.0, 0.1, 3, 42);
  const GraphState c = random_band_limited(g, -1.0, 0.1, 3, 43);
  EXPECT_EQ(a.u, b.u);
  EXPECT_NE(a.u, c.u);
  EXPECT_NEAR(integrate(g, a.u), -1.0, 1e-12);
}

TEST(Hypersurface, SteepGraphIsNotSpacelike) {
  const SpatialGrid g{1, 32, 1.0};
  GraphState s = constant_state(g, -1.0);
  for (std::size_t p = 0; p < g.size(); ++p) s.u[p] += 0.5 * std::sin(kTwoPi * g.point(p)[0]);
  EXPECT_THROW(compute_geometry(*rw(1, 1.0), s), GeometryError);
}

TEST(Hypersurface, TiltedPlaneInMinkowski) {
  // u = a x¹ has v² = 1 - a², ν^0 = ±1/v and vanishing curvature.
  ModelParams p;
  p.label = "minkowski";
  p.n = 1;
  const ModelPtr m = make_model(p);
  const SpatialGrid g{1, 128, 1.0};
  const double a = 0.6;
  GraphState s = constant_state(g, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) s.u[i] = a * std::sin(kTwoPi * g.point(i)[0]) / kTwoPi;
  const HypersurfaceGeometry geom = compute_geometry(*m, s);
  const PointGeometry& q = geom.pts[0];  // x = 0, u' = a
  EXPECT_NEAR(q.v, std::sqrt(1 - a * a), 1e-6);
  EXPECT_NEAR(std::abs(q.nu[0]), 1.0 / q.v, 1e-6);
  EXPECT_NEAR(q.kappa[0], 0.0, 1e-6);
  // ν is a unit timelike vector tangent-orthogonal to x_1
  double t[4];
  q.tangent(0, t);
  EXPECT_NEAR(-q.nu[0] * t[0] + q.nu[1] * t[1], 0.0, 1e-12);
  EXPECT_NEAR(-q.nu[0] * q.nu[0] + q.nu[1] * q.nu[1], -1.0, 1e-12);
}

TEST(Hypersurface, FlatSliceHasNoIntrinsicChristoffels) {
  const SpatialGrid g{2, 32, 1.0};
  const IntrinsicChristoffel ic = intrinsic_christoffel(compute_geometry(*rw(2, 2.0), constant_state(g, -0.7)));
  for (const auto& G : ic.G)
    for (double x : G) EXPECT_NEAR(x, 0.0, 1e-12);
}

TEST(Hypersurface, AdmissibilityFlagsOutsideTheCone) {
  const SpatialGrid g{2, 32, 1.0};
  const HypersurfaceGeometry geom = compute_geometry(*rw(2, 1.0), constant_state(g, -0.5));
  const double k = geom.pts[0].kappa[0];
  // The umbilic slice is in every cone when κ > 0, otherwise only in Γ_0.
  EXPECT_TRUE(admissibility(geom, ConeSpec{0}).all);
  EXPECT_EQ(admissibility(geom, ConeSpec{2}).all, k > 0);
}

TEST(Hypersurface, GradientBoundOnSlices) {
  const SpatialGrid g{2, 32, 1.0};
  const VTildeBound b = v_tilde_bound_estimate(*rw(2, 1.0), constant_state(g, -0.5), -10.0);
  EXPECT_DOUBLE_EQ(b.max_v_tilde, 1.0);
  EXPECT_DOUBLE_EQ(b.max_grad2, 0.0);
  EXPECT_FALSE(b.flagged);
}
