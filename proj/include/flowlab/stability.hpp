#pragma once

// Linearization of G = Φ(F) - f̃ at a graph, its first eigenpair, and the
// local foliation by leaves G = τ(ε).
//
// For a normal variation w the operator is
//   L w = -Φ̇F^{ij} w_{;ij} - c w,
//   c = σ(Φ̇F^{ij}h_i^k h_kj + Φ̇F^{ij} R̄(ν,x_i,ν,x_j) + f̃_α ν^α).
// A vertical variation φ of u moves M normally by w = e^ψ v^{-1} φ and
// changes G at fixed chart points by L w + T^i G_i, T^i = σ v^{-2} u^i φ.

#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "flowlab/ambient.hpp"
#include "flowlab/curvature.hpp"
#include "flowlab/flow.hpp"
#include "flowlab/hypersurface.hpp"

namespace flowlab {

struct LinearizedOperator {
  SpatialGrid grid;
  int n = 0;
  int sigma = -1;
  bool divergence_form = false;
  bool class_d = false;        // model/F pair qualifies
  double class_d_residual = 0.0;
  // Weighted form μL = K - diag(μ c) with μ = √g / Φ̇. K is symmetric in
  // divergence form; otherwise it discretizes μ Φ̇F^{ij}(-∂_ij + Γ^k_ij ∂_k).
  Eigen::SparseMatrix<double> K;
  Field mu;
  Field c;
  Field sqrt_g;
  Field phidot;
  double asymmetry = 0.0;  // ‖K - Kᵀ‖_F / ‖K‖_F

  Field apply(const Field& w) const;  // L w
  // Σ w(μL)w / Σ μ w², the discrete weighted Rayleigh quotient.
  double rayleigh(const Field& w) const;
};

// Divergence form is used when the pair qualifies for class (D), unless
// `force_nondivergence` is set.
LinearizedOperator assemble(const AmbientModel& model, const GraphState& state,
                            const CurvatureSpec& spec, const ForcingSpec& forcing,
                            bool force_nondivergence = false);

enum class StabilityVerdict { Stable, Marginal, Unstable, Unclassified, NotApplicable };
std::string to_string(StabilityVerdict v);

struct StabilityReport {
  double lambda1 = 0.0;
  Field eta;                 // ∫η²√g = 1, ∫η√g > 0
  bool positive_eta = false;
  double eta_min = 0.0;
  double eta_max = 0.0;
  StabilityVerdict verdict = StabilityVerdict::NotApplicable;
  double marginal_tol = 0.0;
  bool heuristic = false;    // symmetrized non-self-adjoint operator
  int sweeps = 0;
  std::string note;

  bool not_unstable() const {
    return verdict == StabilityVerdict::Stable || verdict == StabilityVerdict::Marginal;
  }
};

StabilityReport first_eigenpair(const LinearizedOperator& op);

StabilityReport verify_limit_stability(const FlowRun& run);

// Directional derivative of G along the vertical variation φ, by the
// assembled operator (w = e^ψ v^{-1} φ plus the tangential term).
Field linearized_response(const AmbientModel& model, const GraphState& state,
                          const CurvatureSpec& spec, const ForcingSpec& forcing,
                          const LinearizedOperator& op, const Field& phi);
// Central difference (G(u+δφ) - G(u-δφ)) / 2δ.
Field finite_difference_response(const AmbientModel& model, const GraphState& state,
                                 const CurvatureSpec& spec, const ForcingSpec& forcing,
                                 const Field& phi, double delta);

struct Leaf {
  double eps = 0.0;
  double tau = 0.0;
  Field u;
  int newton_iterations = 0;
};

struct FoliateOptions {
  double eps_step = 1e-3;
  int leaves_per_side = 5;
  double tol = 1e-10;
  int max_newton = 40;
  bool force_bordered = false;  // use the constrained system even when strictly stable
};

struct Foliation {
  std::vector<Leaf> leaves;  // ascending in ε, including ε = 0
  bool bordered = false;
  double lambda1 = 0.0;
  bool ordered = false;       // u_ε strictly increasing in ε at every point
  bool tau_sign_matches = false;
};

Foliation foliate(const AmbientModel& model, const GraphState& stationary,
                  const CurvatureSpec& spec, const ForcingSpec& forcing,
                  const FoliateOptions& opts = {});

}  // namespace flowlab
