#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace g2flow {

inline constexpr int kDim = 7;

using Vector7 = Eigen::Matrix<double, 7, 1>;
using Matrix7 = Eigen::Matrix<double, 7, 7>;

// Multi-indices are stored as bitmasks over {0,...,6}; bit i stands for e^{i+1}.
using Mask = std::uint8_t;

// C(7, p).
int form_dim(int p);

// Masks of degree p in lexicographic order of their sorted index lists.
const std::vector<Mask>& degree_masks(int p);

// Position of a mask inside degree_masks(popcount(mask)).
int mask_position(Mask m);

// Sign of e^I ^ e^J relative to e^{I u J}; 0 if I and J overlap.
int wedge_sign(Mask a, Mask b);

class PForm {
 public:
  PForm();
  explicit PForm(int degree);
  PForm(int degree, Eigen::VectorXd coeffs);

  // e^{i1 ... ip} with 1-based labels, e.g. elementary({1, 2, 3}) = e^{123}.
  // Labels need not be sorted; the sign of the sorting permutation is applied.
  static PForm elementary(std::initializer_list<int> labels);
  static PForm scalar(double value);

  int degree() const { return degree_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }
  Eigen::VectorXd& coeffs() { return coeffs_; }
  double operator[](int i) const { return coeffs_[i]; }

  // Coefficient of e^{i1...ip} (1-based, any order).
  double component(std::initializer_list<int> labels) const;

  bool is_zero(double tol = 0.0) const;
  double max_abs() const { return coeffs_.size() ? coeffs_.cwiseAbs().maxCoeff() : 0.0; }

  PForm& operator+=(const PForm& o);
  PForm& operator-=(const PForm& o);
  PForm& operator*=(double s);

 private:
  int degree_;
  Eigen::VectorXd coeffs_;
};

PForm operator+(PForm a, const PForm& b);
PForm operator-(PForm a, const PForm& b);
PForm operator-(PForm a);
PForm operator*(double s, PForm a);
PForm operator*(PForm a, double s);

PForm wedge(const PForm& a, const PForm& b);

// Matrix of b -> a ^ b on degree-q forms.
Eigen::MatrixXd wedge_matrix(const PForm& a, int q);

// Contraction of a vector into the first slot: (v _| a)(x,...) = a(v, x, ...).
PForm interior(const Vector7& v, const PForm& a);
Eigen::MatrixXd interior_matrix(const Vector7& v, int p);

// Contraction of the multivector e_I into the first |I| slots of e^M.
// Returns the sign and the remaining mask; sign 0 if I is not contained in M.
int contract_sign(Mask I, Mask M, Mask* rest);

// Derivation action of A in gl(7): sum_ij A(i,j) e^i ^ (e_j _| a).
PForm endo_apply(const Matrix7& A, const PForm& a);

// Pullback by the linear map A: (A^* a)(v1,...) = a(A v1, ...).
Eigen::MatrixXd pullback_matrix(const Matrix7& A, int p);
PForm pullback(const Matrix7& A, const PForm& a);

// W(I, K) = sign of e^I ^ e^K against e^{1...7}; a signed permutation matrix.
const Eigen::MatrixXd& top_pairing(int p);

// Bryant's convention: e123 + e145 + e167 + e246 - e257 - e347 - e356.
PForm standard_form();
PForm top_form();

}  // namespace g2flow
