#pragma once

#include "g2flow/model.hpp"
#include "g2flow/structure.hpp"
#include "g2flow/torsion.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace g2flow {

using Nu = std::array<double, 4>;
inline constexpr Nu kDefaultNu{7.0, 84.0, 1.0, 1.0};

class DegenerateBasisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ValidationReport {
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

// d^2 = 0 on coframe elements (Lie-group models) and on the invariant bases,
// d(inv3) inside *_ref(inv3), unimodularity, positivity of the reference point.
ValidationReport validate_model(const HomogeneousModel& m);

// Throws ModelError listing every failure.
void require_valid(const HomogeneousModel& m);

inline PForm d_invariant(const HomogeneousModel& m, const PForm& a) { return m.d(a); }

// delta = (-1)^p * d * on p-forms.
int codifferential_sign(int p);
PForm codifferential(const HomogeneousModel& m, const PositiveThreeForm& ctx, const PForm& a);

// Largest relative mismatch of <d a, b> against <a, delta b> over pairs of
// invariant forms available for the model.
double codifferential_adjointness_residual(const HomogeneousModel& m, const PositiveThreeForm& ctx);

// Everything the energies need at one invariant form.
struct StructureState {
  PositiveThreeForm ctx;
  PForm dOmega, dStarOmega;
  TorsionExtraction torsion;
  double H = 0.0;  // volume scale times vol_total
};

StructureState evaluate_structure(const HomogeneousModel& m, const Eigen::VectorXd& coeffs);

struct EnergyReport {
  double D0 = 0, D1 = 0, D2 = 0, D3 = 0;
  double D_nu = 0;  // with the requested nu
  double D = 0;     // with nu = (7, 84, 1, 1)
  double H = 0, S = 0, C = 0, Ct = 0;
  // (|nabla Omega|^2 + |Omega|^2) H with |nabla Omega|^2 from the intrinsic torsion.
  double W12 = 0;
  double tau0sq = 0, tau1sq = 0, tau2sq = 0, tau3sq = 0;
};

EnergyReport energies(const HomogeneousModel& m, const Eigen::VectorXd& coeffs, const Nu& nu = kDefaultNu);

// Just D_nu and H, for finite differences.
double energy_D(const HomogeneousModel& m, const Eigen::VectorXd& coeffs, const Nu& nu);
double hitchin(const HomogeneousModel& m, const Eigen::VectorXd& coeffs);

// L^2 Gram matrix of inv3_basis at the given point.
Eigen::MatrixXd l2_gram(const HomogeneousModel& m, const PositiveThreeForm& ctx, double H);

// Relative step on each basis direction; the step along B_i has Omega-norm
// fd_rel_step * |Omega|.
inline constexpr double kFdRelStep = 1e-3;

// Central differences with one Richardson extrapolation of f(coeffs + t v) at t = 0.
double directional_derivative(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& c,
                              const Eigen::VectorXd& v, double h);

// Partial derivatives of D_nu in inv3 coordinates.
Eigen::VectorXd energy_gradient(const HomogeneousModel& m, const Eigen::VectorXd& coeffs, const Nu& nu);

// Q_nu = -G^{-1} grad D_nu (L^2 gradient restricted to invariant forms).
Eigen::VectorXd gradient_Q(const HomogeneousModel& m, const Eigen::VectorXd& coeffs, const Nu& nu = kDefaultNu);

// L^2 gradient of H in inv3 coordinates (should be coeffs / 3).
Eigen::VectorXd hitchin_gradient(const HomogeneousModel& m, const Eigen::VectorXd& coeffs);

struct EulerCheck {
  double directional = 0;   // D_Omega D_nu(Omega) by finite differences
  double five_thirds = 0;   // (5/3) D_nu(Omega)
  double ratio_half = 0;    // D_nu(Omega/2) / D_nu(Omega), expect 2^{-5/3}
  double ratio_two = 0;     // D_nu(2 Omega) / D_nu(Omega), expect 2^{5/3}
};

EulerCheck euler_check(const HomogeneousModel& m, const Eigen::VectorXd& coeffs, const Nu& nu = kDefaultNu);

// L_X a = d(X _| a) + X _| da.
PForm lie_derivative(const HomogeneousModel& m, const Vector7& X, const PForm& a);

// lambda*_Omega(xi) = L_{xi#} Omega for a 1-form xi.
PForm lambda_star(const HomogeneousModel& m, const PositiveThreeForm& ctx, const PForm& xi);
// lambda_Omega(a) = (delta a) _| Omega - a _| dOmega, a 1-form.
PForm lambda_op(const HomogeneousModel& m, const PositiveThreeForm& ctx, const PForm& a);

struct LambdaMatrices {
  Eigen::MatrixXd lambda;       // n1 x n3, inv3 -> inv1 coordinates
  Eigen::MatrixXd lambda_star;  // n3 x n1
  Eigen::MatrixXd gram3, gram1; // L^2 Gram matrices
  // max |G3 L* - L^T G1| / max(|G3 L*|, |L^T G1|)
  double adjointness_residual = 0;
};

LambdaMatrices lambda_matrices(const HomogeneousModel& m, const Eigen::VectorXd& coeffs);

// Express a 3-form in inv3 coordinates (L^2 projection); residual is the
// relative norm of the part outside the span.
Eigen::VectorXd to_inv3_coords(const HomogeneousModel& m, const PositiveThreeForm& ctx, const PForm& a,
                               double* residual = nullptr);

}  // namespace g2flow
