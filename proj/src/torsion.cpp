#include "g2flow/torsion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace g2flow {

namespace {

Eigen::MatrixXd upper_cholesky(const Eigen::MatrixXd& G) {
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  return llt.matrixU();
}

// Least squares in the norm x^T G x: returns argmin |R (A x - b)|.
Eigen::VectorXd weighted_solve(const Eigen::MatrixXd& R, const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  return (R * A).colPivHouseholderQr().solve(R * b);
}

// Orthonormal frame of the induced metric: u_a = columns of g^{-1/2},
// dual coframe theta^a = rows of g^{1/2}.
struct Frame {
  Matrix7 U, Theta;
  explicit Frame(const PositiveThreeForm& ctx) {
    Eigen::SelfAdjointEigenSolver<Matrix7> eig(ctx.metric());
    const auto& V = eig.eigenvectors();
    Vector7 s = eig.eigenvalues().cwiseSqrt();
    Theta = V * s.asDiagonal() * V.transpose();
    U = V * s.cwiseInverse().asDiagonal() * V.transpose();
  }
  PForm theta(int a) const { return PForm(1, Theta.row(a).transpose()); }
  Vector7 u(int a) const { return U.col(a); }
};

// The intrinsic torsion machinery: T in gl(7) (frame components) maps to
// f(T) = sum_ab T_ab theta^a (x) (u_b _| *Omega).
struct TorsionTensorMaps {
  const PositiveThreeForm& ctx;
  Frame frame;
  std::array<PForm, 7> beta;  // u_b _| *Omega
  Eigen::MatrixXd beta_gram;  // <beta_b, beta_c>
  Eigen::MatrixXd eps_map;    // 35 x 49
  Eigen::MatrixXd iota_map;   // 21 x 49

  explicit TorsionTensorMaps(const PositiveThreeForm& c) : ctx(c), frame(c) {
    for (int b = 0; b < kDim; ++b) beta[b] = interior(frame.u(b), ctx.star_omega());
    beta_gram.resize(7, 7);
    for (int b = 0; b < kDim; ++b)
      for (int d = 0; d < kDim; ++d) beta_gram(b, d) = ctx.inner(beta[b], beta[d]);
    eps_map.resize(35, 49);
    iota_map.resize(21, 49);
    for (int a = 0; a < kDim; ++a) {
      PForm th = frame.theta(a);
      for (int b = 0; b < kDim; ++b) {
        eps_map.col(7 * a + b) = wedge(th, beta[b]).coeffs();
        iota_map.col(7 * a + b) = interior(frame.u(a), beta[b]).coeffs();
      }
    }
  }

  static Eigen::VectorXd flatten(const Matrix7& T) {
    Eigen::VectorXd v(49);
    for (int a = 0; a < kDim; ++a)
      for (int b = 0; b < kDim; ++b) v[7 * a + b] = T(a, b);
    return v;
  }

  double f_norm2(const Matrix7& T) const {
    double s = 0.0;
    for (int a = 0; a < kDim; ++a) s += T.row(a) * beta_gram * T.row(a).transpose();
    return s;
  }
  double eps_norm2(const Matrix7& T) const {
    Eigen::VectorXd e = eps_map * flatten(T);
    return e.dot(ctx.gram(4) * e);
  }
  double iota_norm2(const Matrix7& T) const {
    Eigen::VectorXd i = iota_map * flatten(T);
    return i.dot(ctx.gram(2) * i);
  }

  Matrix7 skew_from_two_form(const PForm& alpha) const {
    Matrix7 A;
    for (int a = 0; a < kDim; ++a) {
      PForm ia = interior(frame.u(a), alpha);
      for (int b = 0; b < kDim; ++b) A(a, b) = ia.coeffs().dot(frame.u(b));
    }
    return A;
  }
  PForm two_form_from_skew(const Matrix7& A) const {
    PForm alpha(2);
    for (int a = 0; a < kDim; ++a)
      for (int b = a + 1; b < kDim; ++b) alpha += A(a, b) * wedge(frame.theta(a), frame.theta(b));
    return alpha;
  }

  struct Split {
    Matrix7 t1, t7, t14, t27;
  };
  Split split(const Matrix7& T) const {
    Split s;
    const double tr = T.trace();
    s.t1 = (tr / 7.0) * Matrix7::Identity();
    Matrix7 sym = 0.5 * (T + T.transpose());
    s.t27 = sym - s.t1;
    Matrix7 skew = 0.5 * (T - T.transpose());
    Decomposition2 d = decompose2(ctx, two_form_from_skew(skew));
    s.t7 = skew_from_two_form(d.part7);
    s.t14 = skew_from_two_form(d.part14);
    return s;
  }
};

}  // namespace

TorsionExtraction extract_torsion(const PositiveThreeForm& ctx, const PForm& dOmega, const PForm& dStarOmega) {
  if (dOmega.degree() != 4 || dStarOmega.degree() != 5)
    throw std::invalid_argument("torsion extraction expects a 4-form and a 5-form");
  const PForm& om = ctx.omega();
  const PForm& som = ctx.star_omega();
  TorsionExtraction out;
  TorsionForms& t = out.forms;

  t.tau0 = ctx.hodge(wedge(dOmega, om))[0] / 7.0;

  const Eigen::MatrixXd R4 = upper_cholesky(ctx.gram(4));
  const Eigen::MatrixXd R5 = upper_cholesky(ctx.gram(5));
  const PForm rest4 = dOmega - t.tau0 * som;
  // Columns 3 e^i ^ Omega.
  Eigen::MatrixXd A1(35, 7);
  for (int i = 0; i < kDim; ++i) A1.col(i) = 3.0 * wedge(PForm(1, Vector7::Unit(i)), om).coeffs();
  t.tau1 = PForm(1, weighted_solve(R4, A1, rest4.coeffs()));
  t.tau3 = ctx.hodge(rest4 - wedge(3.0 * t.tau1, om));
  {
    Decomposition3 d = decompose3(ctx, t.tau3);
    const double scale = std::sqrt(ctx.norm2(dOmega)) + std::sqrt(ctx.norm2(dStarOmega));
    const double bad = std::sqrt(ctx.norm2(d.part1) + ctx.norm2(d.part7));
    out.residual_domega = scale > 0 ? bad / scale : 0.0;
    t.tau3 = d.part27;
  }

  const Eigen::MatrixXd& W14 = ctx.lambda2_14_onb();
  const Eigen::MatrixXd wedge_om_2 = wedge_matrix(om, 2);  // beta -> Omega ^ beta = beta ^ Omega (even degree)
  const Eigen::MatrixXd A2 = wedge_om_2 * W14;
  const PForm rest5 = dStarOmega - wedge(4.0 * t.tau1, som);
  Eigen::VectorXd y = weighted_solve(R5, A2, rest5.coeffs());
  t.tau2 = PForm(2, W14 * y);
  {
    const PForm miss = rest5 - wedge(t.tau2, om);
    const double scale = std::sqrt(ctx.norm2(dOmega)) + std::sqrt(ctx.norm2(dStarOmega));
    out.residual_dstar = scale > 0 ? std::sqrt(ctx.norm2(miss)) / scale : 0.0;
  }

  // Independent reading of tau1 from d*Omega alone.
  Eigen::MatrixXd A3(21, 21);
  for (int i = 0; i < kDim; ++i) A3.col(i) = 4.0 * wedge(PForm(1, Vector7::Unit(i)), som).coeffs();
  A3.rightCols(14) = A2;
  Eigen::VectorXd z = weighted_solve(R5, A3, dStarOmega.coeffs());
  out.tau1_tilde = PForm(1, z.head(7));
  return out;
}

TorsionForms torsion_forms(const PositiveThreeForm& ctx, const PForm& dOmega, const PForm& dStarOmega, double tol) {
  TorsionExtraction e = extract_torsion(ctx, dOmega, dStarOmega);
  if (e.residual_domega > tol || e.residual_dstar > tol) {
    std::ostringstream os;
    os << "inconsistent differential data: reconstruction residuals " << e.residual_domega << " (dOmega), "
       << e.residual_dstar << " (d*Omega)";
    throw InconsistentDataError(os.str());
  }
  return e.forms;
}

DifferentialData synthesize(const PositiveThreeForm& ctx, const TorsionForms& t) {
  DifferentialData d;
  d.dOmega = t.tau0 * ctx.star_omega() + 3.0 * wedge(t.tau1, ctx.omega()) + ctx.hodge(t.tau3);
  d.dStarOmega = 4.0 * wedge(t.tau1, ctx.star_omega()) + wedge(t.tau2, ctx.omega());
  return d;
}

TorsionForms random_torsion(const PositiveThreeForm& ctx, Rng& rng) {
  TorsionForms t;
  t.tau0 = rng.uniform(-2.0, 2.0);
  t.tau1 = random_form(rng, 1);
  t.tau2 = pi14(ctx, random_form(rng, 2));
  t.tau3 = decompose3(ctx, random_form(rng, 3)).part27;
  return t;
}

IntrinsicNorms intrinsic_norms(const PositiveThreeForm& ctx, const TorsionForms& t) {
  IntrinsicNorms n;
  n.xi1 = 1.75 * t.tau0 * t.tau0;
  n.xi7 = 24.0 * ctx.norm2(t.tau1);
  n.xi14 = 2.0 * ctx.norm2(t.tau2);
  n.xi27 = 2.0 * ctx.norm2(t.tau3);
  return n;
}

NormReport norm_report(const PositiveThreeForm& ctx, const PForm& dOmega, const PForm& dStarOmega,
                       const TorsionForms& t) {
  NormReport r;
  r.domega2 = ctx.norm2(dOmega);
  r.delta2 = ctx.norm2(dStarOmega);
  const double t0 = t.tau0 * t.tau0, t1 = ctx.norm2(t.tau1), t2 = ctx.norm2(t.tau2), t3 = ctx.norm2(t.tau3);
  r.domega2_torsion = 7.0 * t0 + 36.0 * t1 + t3;
  r.delta2_torsion = 48.0 * t1 + t2;
  r.nabla2_torsion = intrinsic_norms(ctx, t).sum();

  // Recover the intrinsic torsion from d Omega = eps(xi) and delta Omega = -iota(xi),
  // where delta Omega = -*d*Omega on 3-forms.
  TorsionTensorMaps maps(ctx);
  Eigen::MatrixXd A(56, 49);
  A.topRows(35) = maps.eps_map;
  A.bottomRows(21) = maps.iota_map;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(56, 56);
  G.topLeftCorner(35, 35) = ctx.gram(4);
  G.bottomRightCorner(21, 21) = ctx.gram(2);
  Eigen::VectorXd rhs(56);
  rhs.head(35) = dOmega.coeffs();
  rhs.tail(21) = ctx.hodge(dStarOmega).coeffs();
  Eigen::VectorXd x = weighted_solve(upper_cholesky(G), A, rhs);
  Matrix7 T;
  for (int a = 0; a < kDim; ++a)
    for (int b = 0; b < kDim; ++b) T(a, b) = x[7 * a + b];
  r.nabla2 = maps.f_norm2(T);
  auto s = maps.split(T);
  r.direct.xi1 = maps.f_norm2(s.t1);
  r.direct.xi7 = maps.f_norm2(s.t7);
  r.direct.xi14 = maps.f_norm2(s.t14);
  r.direct.xi27 = maps.f_norm2(s.t27);
  return r;
}

std::vector<std::string> NormReport::violations(double tol) const {
  std::vector<std::string> out;
  auto scale = [](double a, double b, double floor) { return std::max({std::abs(a), std::abs(b), floor}); };
  const double floor = 1e-12 * (std::abs(domega2) + std::abs(delta2) + std::abs(nabla2)) + 1e-300;
  auto check = [&](double a, double b, const char* name) {
    if (std::abs(a - b) / scale(a, b, floor) > tol) out.push_back(name);
  };
  check(domega2, domega2_torsion, "|dOmega|^2 = 7 tau0^2 + 36 |tau1|^2 + |tau3|^2");
  check(delta2, delta2_torsion, "|delta Omega|^2 = 48 |tau1|^2 + |tau2|^2");
  check(domega2 + delta2, domega2_torsion + delta2_torsion,
        "|dOmega|^2 + |delta Omega|^2 = 7 tau0^2 + 84 |tau1|^2 + |tau2|^2 + |tau3|^2");
  check(nabla2, nabla2_torsion, "|nabla Omega|^2 = 7/4 tau0^2 + 24 |tau1|^2 + 2 |tau2|^2 + 2 |tau3|^2");
  return out;
}

DistortionConstants distortion_constants(const PositiveThreeForm& ctx) {
  TorsionTensorMaps maps(ctx);
  DistortionConstants dc;
  Rng rng(1);

  std::vector<Matrix7> s1{Matrix7::Identity()}, s7, s14, s27;
  const Eigen::MatrixXd& B7 = ctx.lambda2_7_onb();
  const Eigen::MatrixXd& B14 = ctx.lambda2_14_onb();
  for (int k = 0; k < B7.cols(); ++k) s7.push_back(maps.skew_from_two_form(PForm(2, B7.col(k))));
  for (int k = 0; k < B14.cols(); ++k) s14.push_back(maps.skew_from_two_form(PForm(2, B14.col(k))));
  for (int a = 0; a < kDim; ++a)
    for (int b = a; b < kDim; ++b) {
      Matrix7 E = Matrix7::Zero();
      if (a == b) {
        if (a + 1 == kDim) continue;
        E(a, a) = 1.0;
        E(a + 1, a + 1) = -1.0;
      } else {
        E(a, b) = E(b, a) = 1.0;
      }
      s27.push_back(E);
    }
  auto add_random = [&](std::vector<Matrix7>& s) {
    Matrix7 R = Matrix7::Zero();
    for (const auto& e : s) R += rng.uniform(-1.0, 1.0) * e;
    s.push_back(R);
  };
  add_random(s7);
  add_random(s14);
  add_random(s27);

  auto ratio = [&](const std::vector<Matrix7>& s, bool use_eps, double* value) {
    double first = 0.0;
    for (size_t k = 0; k < s.size(); ++k) {
      const double num = use_eps ? maps.eps_norm2(s[k]) : maps.iota_norm2(s[k]);
      const double r = num / maps.f_norm2(s[k]);
      if (k == 0) first = r;
      dc.spread = std::max(dc.spread, std::abs(r - first));
    }
    const Matrix7& last = s.back();
    *value = (use_eps ? maps.eps_norm2(last) : maps.iota_norm2(last)) / maps.f_norm2(last);
  };
  ratio(s1, true, &dc.eps1);
  ratio(s7, true, &dc.eps7);
  ratio(s27, true, &dc.eps27);
  ratio(s7, false, &dc.iota7);
  ratio(s14, false, &dc.iota14);

  Matrix7 sym = Matrix7::Zero(), skew = Matrix7::Zero();
  sym(0, 1) = sym(1, 0) = 1.0;
  skew(0, 1) = 1.0;
  skew(1, 0) = -1.0;
  // The skew element straddles the 7- and 14-summands; project it first.
  skew = maps.skew_from_two_form(pi14(ctx, maps.two_form_from_skew(skew)));
  dc.witness_sym_f2 = maps.f_norm2(sym);
  dc.witness_sym_eps2 = maps.eps_norm2(sym);
  dc.witness_skew_f2 = maps.f_norm2(skew);
  dc.witness_skew_iota2 = maps.iota_norm2(skew);
  return dc;
}

}  // namespace g2flow
