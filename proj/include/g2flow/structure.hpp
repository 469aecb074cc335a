#pragma once

#include "g2flow/forms.hpp"

#include <array>
#include <stdexcept>
#include <string>

namespace g2flow {

class NotPositiveError : public std::runtime_error {
 public:
  NotPositiveError(const std::string& what, double min_eigenvalue)
      : std::runtime_error(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

struct Decomposition3 {
  PForm part1, part7, part27;
};

struct Decomposition2 {
  PForm part7, part14;
};

struct PSR {
  PForm p, s, r;
};

// A G2-positive 3-form together with its induced metric, orientation,
// volume form and Hodge star. Immutable after construction.
class PositiveThreeForm {
 public:
  // orientation = +1 uses e^{1...7} as reference orientation, -1 uses -e^{1...7}.
  explicit PositiveThreeForm(const PForm& omega, int orientation = 1);

  const PForm& omega() const { return omega_; }
  const PForm& star_omega() const { return star_omega_; }
  int orientation() const { return orientation_; }
  const Matrix7& metric() const { return g_; }
  const Matrix7& inverse_metric() const { return ginv_; }
  // sqrt(det g): vol = orientation * volume_scale * e^{1...7}.
  double volume_scale() const { return vol_scale_; }
  const PForm& vol() const { return vol_; }

  // Induced inner product on p-forms (minors of g^{-1}) and the Hodge star matrix.
  const Eigen::MatrixXd& gram(int p) const { return gram_[p]; }
  const Eigen::MatrixXd& star_matrix(int p) const { return star_[p]; }

  PForm hodge(const PForm& a) const;
  double inner(const PForm& a, const PForm& b) const;
  double norm2(const PForm& a) const { return inner(a, a); }

  // Metric duality between vectors and 1-forms.
  Vector7 sharp(const PForm& xi) const;
  PForm flat(const Vector7& v) const;

  // Contraction of a (degree p) into the first p slots of b, indices of a raised
  // with the metric: (a _| b)_K = sum_I a^I b_{IK}.
  PForm contract(const PForm& a, const PForm& b) const;

  // xi _| star(Omega) for the 1-form xi.
  PForm lambda37_element(const PForm& xi) const;

  // Subspace bases as coefficient columns. Columns of the *_onb matrices are
  // orthonormal for the induced inner product.
  const Eigen::MatrixXd& lambda3_7() const { return l37_; }       // 35x7: e^i# _| star Omega
  const Eigen::MatrixXd& lambda3_7_onb() const { return l37_onb_; }
  const Eigen::MatrixXd& lambda3_27_onb() const { return l327_onb_; }
  const Eigen::MatrixXd& lambda2_7() const { return l27_; }       // 21x7: e^i# _| Omega
  const Eigen::MatrixXd& lambda2_7_onb() const { return l27_onb_; }
  const Eigen::MatrixXd& lambda2_14_onb() const { return l214_onb_; }

  // Matrix of beta -> star(beta ^ Omega) on 2-forms.
  Eigen::MatrixXd star_wedge_omega() const;

 private:
  PForm omega_;
  int orientation_;
  Matrix7 g_, ginv_;
  double vol_scale_;
  PForm vol_;
  PForm star_omega_;
  std::array<Eigen::MatrixXd, 8> gram_;
  std::array<Eigen::MatrixXd, 8> star_;
  Eigen::MatrixXd l37_, l37_onb_, l327_onb_, l27_, l27_onb_, l214_onb_;
};

inline PositiveThreeForm metric_from_form(const PForm& omega, int orientation = 1) {
  return PositiveThreeForm(omega, orientation);
}

// Symmetric bilinear form B(u,v) e^{1..7} = (u _| w) ^ (v _| w) ^ w / 6, without
// any positivity check.
Matrix7 triple_wedge_form(const PForm& omega);

inline PForm hodge(const PositiveThreeForm& ctx, const PForm& a) { return ctx.hodge(a); }
inline double inner(const PositiveThreeForm& ctx, const PForm& a, const PForm& b) { return ctx.inner(a, b); }

// Euclidean contraction of a 3-form into a 4-form (metric of the standard form).
PForm form_contract(const PForm& a, const PForm& b);

Decomposition3 decompose3(const PositiveThreeForm& ctx, const PForm& a);
Decomposition2 decompose2(const PositiveThreeForm& ctx, const PForm& b);
PSR psr_maps(const PositiveThreeForm& ctx, const PForm& a);

// The closed formula pi_14(b) = (2b - star(b ^ Omega)) / 3.
PForm pi14(const PositiveThreeForm& ctx, const PForm& b);

// Orthonormal basis (for the inner product with Cholesky factor R, G = R^T R)
// of the column span of M, keeping singular values above rel_tol * largest.
Eigen::MatrixXd orthonormal_span(const Eigen::MatrixXd& R, const Eigen::MatrixXd& M, double rel_tol = 1e-10);

}  // namespace g2flow
