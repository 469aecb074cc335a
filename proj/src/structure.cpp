#include "g2flow/structure.hpp"

#include <bit>
#include <cmath>
#include <sstream>

namespace g2flow {

namespace {

// Gram matrices of all degrees: entry (I, J) of degree p is the minor of g^{-1}
// on rows I, columns J, i.e. the e^I coefficient of the wedge of columns J.
std::array<Eigen::MatrixXd, 8> compound_grams(const Matrix7& ginv) {
  std::array<Eigen::VectorXd, 128> w;
  w[0] = Eigen::VectorXd::Ones(1);
  std::array<Eigen::MatrixXd, 8> G;
  for (int p = 0; p <= kDim; ++p) G[p].resize(form_dim(p), form_dim(p));
  G[0](0, 0) = 1.0;
  for (int mask = 1; mask < 128; ++mask) {
    int top = 6;
    while (!(mask & (1 << top))) --top;
    const Mask prev = Mask(mask ^ (1 << top));
    const int p = std::popcount(unsigned(mask));
    const auto& src = degree_masks(p - 1);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(form_dim(p));
    for (std::size_t a = 0; a < src.size(); ++a) {
      const double x = w[prev][a];
      if (x == 0.0) continue;
      for (int i = 0; i < kDim; ++i) {
        if (src[a] & (1 << i)) continue;
        out[mask_position(Mask(src[a] | (1 << i)))] += wedge_sign(src[a], Mask(1 << i)) * x * ginv(i, top);
      }
    }
    G[p].col(mask_position(Mask(mask))) = out;
    w[mask] = std::move(out);
  }
  for (int p = 0; p <= kDim; ++p) G[p] = 0.5 * (G[p] + G[p].transpose());
  return G;
}

Eigen::MatrixXd upper_cholesky(const Eigen::MatrixXd& G) {
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  return llt.matrixU();
}

// R^{-1} times the trailing columns of an orthogonal completion of R*S.
Eigen::MatrixXd orthonormal_complement(const Eigen::MatrixXd& R, const Eigen::MatrixXd& S) {
  const int n = int(R.rows());
  const int k = int(S.cols());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(R * S);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd tail = Q.rightCols(n - k);
  return R.triangularView<Eigen::Upper>().solve(tail);
}

}  // namespace

Matrix7 triple_wedge_form(const PForm& omega) {
  if (omega.degree() != 3) throw std::invalid_argument("triple_wedge_form expects a 3-form");
  std::array<PForm, 7> iw;
  for (int i = 0; i < kDim; ++i) iw[i] = interior(Vector7::Unit(i), omega);
  Matrix7 B;
  for (int i = 0; i < kDim; ++i)
    for (int j = i; j < kDim; ++j) B(i, j) = B(j, i) = wedge(wedge(iw[i], iw[j]), omega)[0] / 6.0;
  return B;
}

Eigen::MatrixXd orthonormal_span(const Eigen::MatrixXd& R, const Eigen::MatrixXd& M, double rel_tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(R * M, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  int rank = 0;
  const double top = sv.size() ? sv[0] : 0.0;
  while (rank < sv.size() && sv[rank] > rel_tol * top) ++rank;
  Eigen::MatrixXd U = svd.matrixU().leftCols(rank);
  return R.triangularView<Eigen::Upper>().solve(U);
}

PositiveThreeForm::PositiveThreeForm(const PForm& omega, int orientation)
    : omega_(omega), orientation_(orientation >= 0 ? 1 : -1) {
  if (omega.degree() != 3) throw std::invalid_argument("a positive form must have degree 3");
  // B is cubic in omega; work with omega / scale so det B cannot underflow.
  const double scale = omega.max_abs();
  if (!(scale > 0.0) || !std::isfinite(scale)) throw NotPositiveError("not a positive 3-form: zero or non-finite", 0.0);
  Matrix7 B = orientation_ * triple_wedge_form((1.0 / scale) * omega);
  Eigen::SelfAdjointEigenSolver<Matrix7> eig(B);
  const double lo = eig.eigenvalues()[0];
  const double hi = eig.eigenvalues()[kDim - 1];
  if (!(hi > 0.0) || !(lo > 1e-10 * hi)) {
    std::ostringstream os;
    os << "not a positive 3-form: minimal eigenvalue of B is " << lo << " (largest " << hi << ")";
    throw NotPositiveError(os.str(), lo);
  }
  const double detB = eig.eigenvalues().prod();
  g_ = (std::cbrt(scale * scale) * std::pow(detB, -1.0 / 9.0)) * B;
  g_ = 0.5 * (g_ + g_.transpose());
  ginv_ = g_.inverse();
  ginv_ = 0.5 * (ginv_ + ginv_.transpose());
  // With B unscaled: g = detB^{-1/9} B and sqrt(det g) = detB^{1/9}.
  vol_scale_ = std::pow(scale, 7.0 / 3.0) * std::pow(detB, 1.0 / 9.0);
  vol_ = (orientation_ * vol_scale_) * top_form();

  gram_ = compound_grams(ginv_);
  for (int p = 0; p <= kDim; ++p) {
    // top_pairing(p) is a signed permutation: row I of the Gram matrix lands on the complement of I.
    const auto& mp = degree_masks(p);
    star_[p].resize(form_dim(kDim - p), form_dim(p));
    for (int a = 0; a < int(mp.size()); ++a) {
      const Mask comp = Mask(0x7f ^ mp[a]);
      star_[p].row(mask_position(comp)) = (orientation_ * vol_scale_ * wedge_sign(mp[a], comp)) * gram_[p].row(a);
    }
  }
  star_omega_ = hodge(omega_);

  l37_.resize(35, 7);
  l27_.resize(21, 7);
  for (int i = 0; i < kDim; ++i) {
    Vector7 v = ginv_.col(i);
    l37_.col(i) = interior(v, star_omega_).coeffs();
    l27_.col(i) = interior(v, omega_).coeffs();
  }
  const Eigen::MatrixXd R3 = upper_cholesky(gram_[3]);
  const Eigen::MatrixXd R2 = upper_cholesky(gram_[2]);
  l37_onb_ = orthonormal_span(R3, l37_);
  l27_onb_ = orthonormal_span(R2, l27_);
  Eigen::MatrixXd S(35, 8);
  S.col(0) = omega_.coeffs();
  S.rightCols(7) = l37_;
  l327_onb_ = orthonormal_complement(R3, S);
  l214_onb_ = orthonormal_complement(R2, l27_);
}

PForm PositiveThreeForm::hodge(const PForm& a) const {
  return PForm(kDim - a.degree(), star_[a.degree()] * a.coeffs());
}

double PositiveThreeForm::inner(const PForm& a, const PForm& b) const {
  if (a.degree() != b.degree()) throw std::invalid_argument("inner product of forms of different degree");
  return a.coeffs().dot(gram_[a.degree()] * b.coeffs());
}

Vector7 PositiveThreeForm::sharp(const PForm& xi) const {
  if (xi.degree() != 1) throw std::invalid_argument("sharp expects a 1-form");
  return ginv_ * xi.coeffs();
}

PForm PositiveThreeForm::flat(const Vector7& v) const { return PForm(1, g_ * v); }

PForm PositiveThreeForm::contract(const PForm& a, const PForm& b) const {
  const int p = a.degree(), q = b.degree();
  if (p > q) throw std::invalid_argument("contraction of a higher-degree form into a lower one");
  const Eigen::VectorXd up = gram_[p] * a.coeffs();
  PForm out(q - p);
  const auto& mp = degree_masks(p);
  const auto& mq = degree_masks(q);
  for (int i = 0; i < int(mp.size()); ++i) {
    if (up[i] == 0.0) continue;
    for (int j = 0; j < int(mq.size()); ++j) {
      if (b[j] == 0.0) continue;
      Mask rest = 0;
      int s = contract_sign(mp[i], mq[j], &rest);
      if (s) out.coeffs()[mask_position(rest)] += s * up[i] * b[j];
    }
  }
  return out;
}

PForm PositiveThreeForm::lambda37_element(const PForm& xi) const { return interior(sharp(xi), star_omega_); }

Eigen::MatrixXd PositiveThreeForm::star_wedge_omega() const { return star_[5] * wedge_matrix(omega_, 2); }

PForm form_contract(const PForm& a, const PForm& b) {
  static const PositiveThreeForm euclid(standard_form());
  if (a.degree() != 3 || b.degree() != 4) throw std::invalid_argument("form_contract expects a 3-form and a 4-form");
  return euclid.contract(a, b);
}

Decomposition3 decompose3(const PositiveThreeForm& ctx, const PForm& a) {
  if (a.degree() != 3) throw std::invalid_argument("decompose3 expects a 3-form");
  const Eigen::MatrixXd& G = ctx.gram(3);
  Decomposition3 d;
  d.part1 = (ctx.inner(a, ctx.omega()) / 7.0) * ctx.omega();
  const Eigen::MatrixXd& E = ctx.lambda3_7_onb();
  d.part7 = PForm(3, E * (E.transpose() * (G * a.coeffs())));
  d.part27 = a - d.part1 - d.part7;
  return d;
}

PForm pi14(const PositiveThreeForm& ctx, const PForm& b) {
  if (b.degree() != 2) throw std::invalid_argument("pi14 expects a 2-form");
  return (1.0 / 3.0) * (2.0 * b - ctx.hodge(wedge(b, ctx.omega())));
}

Decomposition2 decompose2(const PositiveThreeForm& ctx, const PForm& b) {
  Decomposition2 d;
  d.part14 = pi14(ctx, b);
  d.part7 = b - d.part14;
  return d;
}

PSR psr_maps(const PositiveThreeForm& ctx, const PForm& a) {
  Decomposition3 d = decompose3(ctx, a);
  PSR out;
  out.p = (4.0 / 3.0) * d.part1 + d.part7 - d.part27;
  out.s = d.part1 - d.part7 + d.part27;
  out.r = a - out.p;
  return out;
}

}  // namespace g2flow
