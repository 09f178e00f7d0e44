#pragma once

// Curvature functions F(κ) with derivative tensors F^{ij} = ∂F/∂h_ij and
// concave reparametrizations Φ. H_k is the raw elementary symmetric σ_k.

#include <array>
#include <string>
#include <vector>

#include "flowlab/ambient.hpp"
#include "flowlab/cone.hpp"
#include "flowlab/hypersurface.hpp"

namespace flowlab {

enum class FKind { MeanH, SymPoly, GaussK };
enum class PhiKind { Identity, Log, Power, NegInvPower, NegInverse };

struct CurvatureSpec {
  FKind kind = FKind::MeanH;
  int k = 1;  // SymPoly order
  PhiKind phi = PhiKind::Identity;
  double epsilon = 0.0;

  int order(int n) const;  // polynomial degree of F
  ConeSpec cone(int n) const;
  // Φ, Φ̇, Φ̈ at r; Power uses r^{1/deg}, NegInvPower -r^{-1/deg}.
  double Phi(double r, int n) const;
  double dPhi(double r, int n) const;
  double ddPhi(double r, int n) const;
};

FKind parse_fkind(const std::string& s, int* k);
PhiKind parse_phi(const std::string& s);
std::string to_string(FKind kind, int k);
std::string to_string(PhiKind phi);

// F at κ (no regularization).
double eval_F_kappa(const CurvatureSpec& spec, const double* kappa, int n);

struct CurvatureValues {
  double F = 0.0;
  double Phi = 0.0;
  double dPhi = 0.0;
  double kappa[3] = {};  // κ̃ = κ + εH
  double Fij[3][3] = {};
};

// Pointwise evaluation with the ε-shift h ↦ h + εHg applied. Throws
// AdmissibilityError outside the cone and DomainError when Φ needs F > 0.
void eval_point(const CurvatureSpec& spec, int n, const PointGeometry& q, std::size_t index,
                CurvatureValues& out, bool with_derivative);

// Derivative of σ_k at the mixed tensor A^i_j (= g^{ik}h_kj) by the recursion
// F_(m+1)^{ij} = σ_m g^{ij} - F_(m)^{jl} A^i_l.
void sym_poly_derivative(int k, int n, const double A[3][3], const double ginv[3][3],
                         double out[3][3]);

struct CurvatureField {
  std::vector<double> F;
  std::vector<double> Phi;
};

CurvatureField eval_F(const CurvatureSpec& spec, const HypersurfaceGeometry& geom);
std::vector<std::array<double, 9>> eval_F_ij(const CurvatureSpec& spec,
                                             const HypersurfaceGeometry& geom);

struct ClassDReport {
  double residual = 0.0;  // max_i,p |∇_j F^{ij}|
  bool qualifies = false; // the model/F pair is covered by the divergence-free result
};

ClassDReport check_class_D(const CurvatureSpec& spec, const AmbientModel& model,
                           const HypersurfaceGeometry& geom);

struct RegularizedGeometry {
  HypersurfaceGeometry geom;  // h, h^i_j, κ, H replaced by the shifted values
  std::vector<double> F;
  std::vector<std::array<double, 9>> Fij;  // F^{ij}(h̃) + ε F^{kl}(h̃) g_kl g^{ij}
  double identity_residual = 0.0;          // vs the chain rule through the shifted argument
};

RegularizedGeometry epsilon_regularize(const CurvatureSpec& spec,
                                       const HypersurfaceGeometry& geom, double eps);

}  // namespace flowlab
