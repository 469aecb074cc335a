#pragma once

#include "g2flow/homogeneous.hpp"

#include <complex>
#include <string>
#include <vector>

namespace g2flow {

class NotNearlyParallelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A linear map on inv3 coordinates at a basepoint.
struct LinearOperatorOnInvariants {
  Eigen::MatrixXd matrix;
  Eigen::MatrixXd gram;  // L^2 Gram matrix of inv3_basis at the basepoint
  Eigen::VectorXd basepoint;
  double tau0 = 0;
  Eigen::VectorXd singular_values;  // of the Gram-weighted matrix, descending

  // |G A - (G A)^T| / |G A| (max norm).
  double gram_asymmetry() const;
  // Operator norm in the metric x^T G x.
  double weighted_norm() const;
};

double weighted_operator_norm(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G);

// Rejects unless dOmega = tau0 * star(Omega) and d*Omega = 0 within tol
// (relative to |dOmega| + |Omega|). Returns tau0.
double require_nearly_parallel(const HomogeneousModel& m, const Eigen::VectorXd& coeffs, double tol = 1e-9);

struct LinearizationQ {
  LinearOperatorOnInvariants closed;    // -delta d - p d delta p - tau0 (*d r + r *d) + tau0^2 (...)
  LinearOperatorOnInvariants factored;  // -p d (p d)^* - (*d + tau0 r)^2 + tau0^2 / 6
  LinearOperatorOnInvariants jacobian;  // finite differences of gradient_Q
  // Relative differences in the Gram-weighted operator norm.
  double closed_vs_factored = 0, closed_vs_jacobian = 0, factored_vs_jacobian = 0;
  // Largest relative part of an image that falls outside span(inv3_basis).
  double invariance_residual = 0;
};

LinearizationQ linearize_Q(const HomogeneousModel& m, const Eigen::VectorXd& coeffs);

struct LinearizationS {
  LinearOperatorOnInvariants direct;    // D Q + (5/6) tau0^2 Id
  LinearOperatorOnInvariants factored;  // -p d (p d)^* - (*d + tau0 r)^2 + tau0^2
  double direct_vs_factored = 0;
};

LinearizationS linearize_soliton(const HomogeneousModel& m, const Eigen::VectorXd& coeffs);

// P = D S - lambda^* lambda, with lambda^* the Gram adjoint of the lambda matrix.
LinearOperatorOnInvariants soliton_P(const HomogeneousModel& m, const Eigen::VectorXd& coeffs);

struct DeformationSpace {
  Eigen::MatrixXd sigma;        // columns: basis of ker D S within ker lambda (inv3 coordinates)
  Eigen::VectorXd sigma_singular_values;
  Eigen::MatrixXd kernel_P;     // columns: basis of ker P
  Eigen::VectorXd P_singular_values;
  Eigen::MatrixXd kernel_lambda;
  // max over sigma of |P v| / (|P| |v|); zero when sigma is empty.
  double sigma_in_kernel_P = 0;
  double threshold = 1e-8;
};

DeformationSpace deformation_space(const HomogeneousModel& m, const Eigen::VectorXd& coeffs,
                                   double threshold = 1e-8);

struct StarDSpectrum {
  std::vector<std::complex<double>> eigenvalues;
  Eigen::MatrixXd basis;  // 35 x k, G-orthonormal invariant Lambda^3_27 forms
  Eigen::MatrixXd matrix; // compression of pi_27 * d on that basis
  double leakage = 0;     // relative part of *d(basis) outside span(basis)
  double tau0 = 0;
  std::vector<bool> near_minus_tau0, near_minus_3tau0;
};

StarDSpectrum star_d_spectrum_27(const HomogeneousModel& m, const Eigen::VectorXd& coeffs, double flag_tol = 1e-6);

// Operator export (schema_version 1).
std::string operator_to_json(const LinearOperatorOnInvariants& op, const std::string& kind);

}  // namespace g2flow
