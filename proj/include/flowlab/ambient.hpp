#pragma once

// Warped-product ambient spaces  ds² = e^{2ψ}(σ (dx⁰)² + σ_ij dx^i dx^j)
// on (a,b) × T^n, with closed-form ψ, σ_ij and their derivatives.

#include <array>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace flowlab {

constexpr int kMaxDim = 3;

// Spacetime point: x[0] = x⁰, x[1..n] spatial chart coordinates.
using STPoint = std::array<double, 4>;

// Closed-form data at one point; indices α ∈ 0..n, i,j ∈ 0..n-1.
struct LocalData {
  double psi = 0.0;
  double dpsi[4] = {};
  double ddpsi[4][4] = {};
  double sig[3][3] = {};
  double dsig[4][3][3] = {};  // ∂_α σ_ij
};

struct MetricComponents {
  int dim = 0;  // n + 1
  double g[4][4] = {};
  double ginv[4][4] = {};
};

struct Christoffel {
  int dim = 0;
  double G[4][4][4] = {};  // G[a][b][c] = Γ̄^a_bc
};

struct CurvatureTensors {
  int dim = 0;
  Christoffel christoffel;
  double riemann[4][4][4][4] = {};  // R̄_abcd
  double ricci[4][4] = {};
};

// Power-law warp e^f = c0 (-τ)^p (1 + β(-τ)^κ) on τ < 0.
struct WarpProfile {
  double c0 = 1.0;
  double p = 1.0;
  double beta = 0.0;
  double kappa = 2.0;

  double f(double tau) const;
  double f1(double tau) const;
  double f2(double tau) const;
};

// Big-crunch profile data; γ̃ and γ are fixed once here and read everywhere.
struct ARWProfile {
  int n = 2;
  double omega = 2.0;
  double gamma_tilde = 1.0;  // (n + ω - 2)/2
  double gamma = 0.5;        // γ̃/n
  double mass = 1.0;         // lim |f'|² e^{2γ̃ f}
  WarpProfile warp;

  static ARWProfile make(int n, double omega, double c0, double beta, double kappa);
  double f(double tau) const { return warp.f(tau); }
  double f1(double tau) const { return warp.f1(tau); }
  double f2(double tau) const { return warp.f2(tau); }
};

struct ModelParams {
  std::string label = "minkowski";
  int n = 2;
  int sigma = -1;
  double period = 1.0;  // torus period L of x-dependent fields
  // robertson_walker: e^f = c0 (-τ)^p on (tau_min, 0)
  double c0 = 1.0;
  double p = 1.0;
  double tau_min = -10.0;
  // arw_power: p = 1/γ̃, optional correction β(-τ)^κ (κ defaults to 2γ̃)
  // and perturbation ψ̂ = ε(-τ) Σ_i cos(2π x^i / L)
  double omega = 2.0;
  double beta = 0.0;
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double eps = 0.0;
  // de_sitter_conformal: "flat" (ψ = -log x⁰, x⁰ > 0) or "closed" (n = 1, ψ = -log cos x⁰)
  std::string slicing = "flat";
  // warped_riemannian / custom: ψ = power·log x⁰ (+ bump Σ sin(2π x^i/L)),
  // custom σ_ij = δ_ij e^{2 aniso sin(2π x¹/L)} + off-diagonal aniso coupling
  double power = -1.0;
  double bump = 0.0;
  double aniso = 0.0;
};

class AmbientModel {
 public:
  virtual ~AmbientModel() = default;

  int n() const { return n_; }
  int sigma() const { return sigma_; }
  double time_min() const { return tmin_; }
  double time_max() const { return tmax_; }
  double period() const { return period_; }
  const std::string& label() const { return label_; }

  // Throws DomainError when x⁰ is outside (a, b).
  void check_domain(const STPoint& p) const;
  virtual void local(const STPoint& p, LocalData& out) const = 0;
  // Sets *K and returns true for constant sectional curvature.
  virtual bool constant_curvature(double* K) const {
    (void)K;
    return false;
  }
  virtual bool einstein() const { return constant_curvature(nullptr); }
  virtual const ARWProfile* arw() const { return nullptr; }

 protected:
  AmbientModel(std::string label, int n, int sigma, double tmin, double tmax, double period)
      : label_(std::move(label)), n_(n), sigma_(sigma), tmin_(tmin), tmax_(tmax), period_(period) {}

 private:
  std::string label_;
  int n_;
  int sigma_;
  double tmin_, tmax_, period_;
};

using ModelPtr = std::shared_ptr<const AmbientModel>;

ModelPtr make_model(const ModelParams& params);
// Same σ and σ_ij with ψ ≡ 0: the conformally rescaled ambient space.
ModelPtr conformal_view(const ModelPtr& model);
// Reflection x̂⁰ = -x⁰ of the model's data.
ModelPtr mirrored(const ModelPtr& model);

MetricComponents metric_at(const AmbientModel& model, const STPoint& p);
Christoffel christoffel_from_local(int n, int sigma, const LocalData& d);
Christoffel christoffel_at(const AmbientModel& model, const STPoint& p);
// Riemann via one 4th-order difference layer of Γ̄ (h = 1e-3), or the closed
// constant-curvature form when the model declares one.
CurvatureTensors riemann_at(const AmbientModel& model, const STPoint& p);
CurvatureTensors riemann_fd(const AmbientModel& model, const STPoint& p, double h = 1e-3);

struct ConvexChiResult {
  bool is_convex = false;
  double c = 0.0;  // largest c with χ_αβ ≥ c ḡ_αβ over the samples
};

// χ = e^{λ x⁰} sampled on [t0, t1] (nt levels) × the given spatial points.
ConvexChiResult convex_chi(const AmbientModel& model, double t0, double t1, int nt,
                           const std::vector<std::array<double, 3>>& xs, double lambda);

}  // namespace flowlab
