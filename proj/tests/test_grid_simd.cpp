#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "flowlab/errors.hpp"
#include "flowlab/grid.hpp"
#include "flowlab/simd.hpp"

using namespace flowlab;

namespace {

Field random_field(const SpatialGrid& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Field f(g.size());
  for (double& x : f) x = d(rng);
  return f;
}

// sin(2π x^axis / L) and its first and second derivatives.
void sine(const SpatialGrid& g, int axis, Field& f, Field& df, Field& d2f) {
  const double k = 2.0 * std::numbers::pi / g.L;
  f.resize(g.size());
  df.resize(g.size());
  d2f.resize(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double x = g.point(p)[static_cast<std::size_t>(axis)];
    f[p] = std::sin(k * x);
    df[p] = k * std::cos(k * x);
    d2f[p] = -k * k * std::sin(k * x);
  }
}

double max_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(Grid, ValidateRejectsBadShapes) {
  EXPECT_THROW((SpatialGrid{2, 48, 1.0}.validate()), ConfigError);
  EXPECT_THROW((SpatialGrid{2, 16, 1.0}.validate()), ConfigError);
  EXPECT_THROW((SpatialGrid{4, 32, 1.0}.validate()), ConfigError);
  EXPECT_THROW((SpatialGrid{2, 32, 0.0}.validate()), ConfigError);
  EXPECT_NO_THROW((SpatialGrid{3, 32, 2.0}.validate()));
}

TEST(Grid, FlatIndexRoundTrip) {
  const SpatialGrid g{3, 32, 1.0};
  for (std::size_t p : {std::size_t{0}, std::size_t{1}, std::size_t{33}, g.size() - 1})
    EXPECT_EQ(g.flat(g.multi_index(p)), p);
  EXPECT_EQ(g.multi_index(1)[0], 1);  // axis 0 fastest
}

TEST(Grid, IntegrateConstantIsTorusVolume) {
  const SpatialGrid g{2, 32, 3.0};
  EXPECT_NEAR(integrate(g, make_field(g, 2.0)), 18.0, 1e-12);
}

TEST(Grid, StencilsAreFourthOrder) {
  for (int axis : {0, 1}) {
    double e1[2], e2[2];
    for (int l = 0; l < 2; ++l) {
      const SpatialGrid g{2, 32 << l, 1.0};
      Field f, df, d2f, out(g.size());
      sine(g, axis, f, df, d2f);
      grid_d1(g, f, out, axis);
      e1[l] = max_diff(out, df);
      grid_d2(g, f, out, axis);
      e2[l] = max_diff(out, d2f);
    }
    EXPECT_GT(std::log2(e1[0] / e1[1]), 3.9);
    EXPECT_GT(std::log2(e2[0] / e2[1]), 3.9);
  }
}

TEST(Grid, DerivativeCommutesWithTranslation) {
  const SpatialGrid g{2, 32, 1.0};
  const Field f = random_field(g, 3);
  Field a(g.size()), b(g.size());
  grid_d1(g, translate(g, f, {3, -5, 0}), a, 1);
  grid_d1(g, f, b, 1);
  EXPECT_EQ(a, translate(g, b, {3, -5, 0}));
}

TEST(Grid, MixedDerivativeIsSymmetric) {
  const SpatialGrid g{2, 32, 1.0};
  const Field f = random_field(g, 4);
  Field a(g.size()), b(g.size()), tmp(g.size());
  grid_d11(g, f, a, 0, 1, tmp);
  grid_d11(g, f, b, 1, 0, tmp);
  EXPECT_LT(max_diff(a, b), 1e-9);
}

class SimdEquivalence : public ::testing::TestWithParam<simd::Isa> {};

TEST_P(SimdEquivalence, MatchesScalarBitForBit) {
  const simd::Isa isa = GetParam();
  if (!simd::supported(isa)) GTEST_SKIP() << simd::isa_name(isa) << " unavailable";
  for (int n = 1; n <= 3; ++n) {
    const SpatialGrid g{n, 32, 0.7};
    const Field f = random_field(g, 10 + static_cast<unsigned>(n));
    const Field y = random_field(g, 20 + static_cast<unsigned>(n));
    for (int axis = 0; axis < n; ++axis) {
      Field ref(g.size()), got(g.size());
      simd::scalar::d1(f.data(), ref.data(), n, g.N, axis, g.dx());
      simd::force_isa(isa);
      simd::d1(f.data(), got.data(), n, g.N, axis, g.dx());
      EXPECT_EQ(ref, got) << "d1 n=" << n << " axis=" << axis;
      simd::scalar::d2(f.data(), ref.data(), n, g.N, axis, g.dx());
      simd::d2(f.data(), got.data(), n, g.N, axis, g.dx());
      EXPECT_EQ(ref, got) << "d2 n=" << n << " axis=" << axis;
    }
    Field ref(g.size()), got(g.size());
    simd::scalar::axpy(0.37, f.data(), y.data(), ref.data(), g.size() - 3);  // ragged tail
    simd::axpy(0.37, f.data(), y.data(), got.data(), g.size() - 3);
    EXPECT_EQ(ref, got);
  }
  simd::force_isa(simd::Isa::Scalar);
}

INSTANTIATE_TEST_SUITE_P(Isas, SimdEquivalence,
                         ::testing::Values(simd::Isa::Avx2, simd::Isa::Neon),
                         [](const auto& info) { return std::string(simd::isa_name(info.param)); });

TEST(Simd, UnsupportedIsaFallsBackToScalar) {
#if defined(FLOWLAB_SIMD_X86)
  simd::force_isa(simd::Isa::Neon);
  EXPECT_EQ(simd::active_isa(), simd::Isa::Scalar);
#endif
  simd::force_isa(simd::Isa::Scalar);
  EXPECT_EQ(simd::active_isa(), simd::Isa::Scalar);
}
