#pragma once

// Spacelike graphs M = {x⁰ = u(x)} over the spatial torus and their induced
// geometry. Conventions: x_i = (u_i, e_i), v² = 1 + σ σ^{ij}u_i u_j,
// ν_α = e^ψ v^{-1}(1, -u_i), and h_ij taken with respect to -σν so that
// x_ij = -σ h_ij ν and ν_i = h_i^k x_k.

#include <cstdint>
#include <vector>

#include "flowlab/ambient.hpp"
#include "flowlab/cone.hpp"
#include "flowlab/grid.hpp"

namespace flowlab {

struct GraphState {
  SpatialGrid grid;
  Field u;
  double t = 0.0;
};

GraphState constant_state(const SpatialGrid& grid, double u0);
// u0 + amplitude · (normalized random combination of Fourier modes 1..kmax).
GraphState random_band_limited(const SpatialGrid& grid, double u0, double amplitude, int kmax,
                               std::uint64_t seed);

struct PointGeometry {
  double u = 0.0;
  double Du[3] = {};
  double D2u[3][3] = {};
  double psi = 0.0;
  double g[3][3] = {};
  double ginv[3][3] = {};
  double v = 1.0;
  double v_tilde = 1.0;
  double nu[4] = {};      // ν^α
  double nu_low[4] = {};  // ν_α
  double h[3][3] = {};
  double hmix[3][3] = {};  // h^i_j = g^{ik} h_kj
  double kappa[3] = {};    // ascending
  double H = 0.0;
  double sqrt_g = 0.0;

  STPoint position(const SpatialGrid& grid, std::size_t idx) const;
  // Tangent vector x_i^α.
  void tangent(int i, double out[4]) const;
};

struct HypersurfaceGeometry {
  SpatialGrid grid;
  int n = 0;
  int sigma = -1;
  double t = 0.0;
  std::vector<PointGeometry> pts;
};

// Lorentzian states with σ^{ij}u_i u_j above this are rejected.
constexpr double kSpacelikeMargin = 1e-4;

HypersurfaceGeometry compute_geometry(const AmbientModel& model, const GraphState& state);
void compute_geometry(const AmbientModel& model, const GraphState& state,
                      HypersurfaceGeometry& out);

double volume(const HypersurfaceGeometry& geom);

struct StructureResiduals {
  double gauss = 0.0;
  double codazzi = 0.0;
  double weingarten = 0.0;
};

StructureResiduals check_gauss_codazzi(const AmbientModel& model, const GraphState& state);

// Intrinsic Christoffel symbols Γ^k_ij of g from stencils of g_ij.
struct IntrinsicChristoffel {
  std::vector<std::array<double, 27>> G;  // G[p][k*9 + i*3 + j]
  double at(std::size_t p, int k, int i, int j) const { return G[p][k * 9 + i * 3 + j]; }
};
IntrinsicChristoffel intrinsic_christoffel(const HypersurfaceGeometry& geom);

struct AdmissibilityReport {
  std::vector<std::uint8_t> inside;
  bool all = true;
  std::size_t first_violation = 0;
};

AdmissibilityReport admissibility(const HypersurfaceGeometry& geom, const ConeSpec& cone);

struct VTildeBound {
  double max_v_tilde = 1.0;
  double max_grad2 = 0.0;           // max σ^{ij}u_i u_j
  double christoffel_sup = 0.0;     // sup |Γ̄| over the sampled points
  bool applicable = true;           // κ_i ≥ κ₀ held everywhere
  bool flagged = false;             // beyond the spacelikeness margin
};

VTildeBound v_tilde_bound_estimate(const AmbientModel& model, const GraphState& state,
                                   double kappa0);

}  // namespace flowlab
