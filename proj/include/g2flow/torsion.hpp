#pragma once

#include "g2flow/rng.hpp"
#include "g2flow/structure.hpp"

#include <array>
#include <string>
#include <vector>

namespace g2flow {

class InconsistentDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TorsionForms {
  double tau0 = 0.0;
  PForm tau1{1};
  PForm tau2{2};
  PForm tau3{3};
};

struct TorsionExtraction {
  TorsionForms forms;
  // tau1 as read off from d*Omega alone (the full Lambda^5 solve).
  PForm tau1_tilde{1};
  // Relative residuals of the two reconstructions.
  double residual_domega = 0.0;
  double residual_dstar = 0.0;
};

// Extraction without the consistency verdict.
TorsionExtraction extract_torsion(const PositiveThreeForm& ctx, const PForm& dOmega, const PForm& dStarOmega);

// Throws InconsistentDataError if either reconstruction residual exceeds tol.
TorsionForms torsion_forms(const PositiveThreeForm& ctx, const PForm& dOmega, const PForm& dStarOmega,
                           double tol = 1e-8);

struct DifferentialData {
  PForm dOmega{4};
  PForm dStarOmega{5};
};

// dOmega = tau0 *Omega + 3 tau1 ^ Omega + *tau3, d*Omega = 4 tau1 ^ *Omega + tau2 ^ Omega.
DifferentialData synthesize(const PositiveThreeForm& ctx, const TorsionForms& t);

// Random torsion satisfying the type constraints.
TorsionForms random_torsion(const PositiveThreeForm& ctx, Rng& rng);

// Squared norms of the four summands of the intrinsic torsion.
struct IntrinsicNorms {
  double xi1 = 0, xi7 = 0, xi14 = 0, xi27 = 0;
  double sum() const { return xi1 + xi7 + xi14 + xi27; }
};

IntrinsicNorms intrinsic_norms(const PositiveThreeForm& ctx, const TorsionForms& t);

struct NormReport {
  // Norms computed from the forms themselves.
  double domega2 = 0, delta2 = 0, nabla2 = 0;
  // The same quantities from the torsion-form combinations.
  double domega2_torsion = 0, delta2_torsion = 0, nabla2_torsion = 0;
  // Summand norms of the reconstructed intrinsic torsion tensor.
  IntrinsicNorms direct;
  // Names of the identities whose two sides differ by more than tol (relative).
  std::vector<std::string> violations(double tol = 1e-9) const;
};

// nabla2 is computed by solving eps(xi) = dOmega, iota(xi) = -delta Omega for the
// intrinsic torsion xi in Lambda^1 (x) Lambda^3_7 and taking its norm.
NormReport norm_report(const PositiveThreeForm& ctx, const PForm& dOmega, const PForm& dStarOmega,
                       const TorsionForms& t);

struct DistortionConstants {
  // |eps(x)|^2 / |x|^2 on the 1-, 7- and 27-summands, |iota(x)|^2 / |x|^2 on the 7- and 14-summands.
  double eps1 = 0, eps7 = 0, eps27 = 0, iota7 = 0, iota14 = 0;
  // Largest deviation of the ratio across elements of one summand.
  double spread = 0;
  // The element e1(x)e2 + e2(x)e1, and pi_14 of e1(x)e2 - e2(x)e1.
  double witness_sym_f2 = 0, witness_sym_eps2 = 0;
  double witness_skew_f2 = 0, witness_skew_iota2 = 0;
};

DistortionConstants distortion_constants(const PositiveThreeForm& ctx);

}  // namespace g2flow
