#include "g2flow/linearized.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace g2flow {

namespace {

Eigen::MatrixXd upper_cholesky(const Eigen::MatrixXd& G) {
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  return llt.matrixU();
}

// R A R^{-1} with G = R^T R.
Eigen::MatrixXd weighted(const Eigen::MatrixXd& A, const Eigen::MatrixXd& R) {
  const Eigen::MatrixXd RA = R * A;
  return R.transpose().triangularView<Eigen::Lower>().solve(RA.transpose()).transpose();
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return Eigen::VectorXd();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  return svd.singularValues();
}

struct Base {
  PositiveThreeForm ctx;
  double tau0;
  Eigen::MatrixXd G;
};

Base make_base(const HomogeneousModel& m, const Eigen::VectorXd& c) {
  const double tau0 = require_nearly_parallel(m, c);
  PositiveThreeForm ctx(m.form_from_coeffs(c), m.orientation());
  Eigen::MatrixXd G = l2_gram(m, ctx, ctx.volume_scale() * m.vol_total());
  return Base{std::move(ctx), tau0, std::move(G)};
}

LinearOperatorOnInvariants make_operator(const Base& b, const Eigen::VectorXd& c, Eigen::MatrixXd A) {
  LinearOperatorOnInvariants op;
  op.matrix = std::move(A);
  op.gram = b.G;
  op.basepoint = c;
  op.tau0 = b.tau0;
  op.singular_values = singular_values(weighted(op.matrix, upper_cholesky(b.G)));
  return op;
}

double relative_distance(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& G) {
  const double s = std::max(weighted_operator_norm(A, G), weighted_operator_norm(B, G));
  return s > 0.0 ? weighted_operator_norm(A - B, G) / s : 0.0;
}

// Pointwise operators at a nearly parallel basepoint, acting on 3-forms.
struct Ops {
  const HomogeneousModel& m;
  const PositiveThreeForm& ctx;
  double tau0;

  PForm star_d(const PForm& v) const { return ctx.hodge(m.d(v)); }
  PForm p(const PForm& v) const { return psr_maps(ctx, v).p; }
  PForm r(const PForm& v) const { return v - p(v); }
  // p d delta p: the first-order-squared part shared by both forms.
  PForm pddp(const PForm& v) const { return p(m.d(codifferential(m, ctx, p(v)))); }

  PForm closed(const PForm& v) const {
    const Decomposition3 d = decompose3(ctx, v);
    PForm out = -1.0 * codifferential(m, ctx, m.d(v));
    out -= pddp(v);
    out -= tau0 * (star_d(r(v)) + r(star_d(v)));
    out += (tau0 * tau0) * ((1.0 / 18.0) * d.part1 + (1.0 / 6.0) * d.part7 - (23.0 / 6.0) * d.part27);
    return out;
  }

  // -(*d + tau0 r)^2 v
  PForm minus_square(const PForm& v) const {
    const PForm w = star_d(v) + tau0 * r(v);
    return -1.0 * (star_d(w) + tau0 * r(w));
  }

  PForm factored_Q(const PForm& v) const { return -1.0 * pddp(v) + minus_square(v) + (tau0 * tau0 / 6.0) * v; }
  PForm factored_S(const PForm& v) const { return -1.0 * pddp(v) + minus_square(v) + (tau0 * tau0) * v; }
};

template <class F>
Eigen::MatrixXd assemble(const HomogeneousModel& m, const PositiveThreeForm& ctx, F&& op, double* worst) {
  const int n = m.n_inv3();
  Eigen::MatrixXd A(n, n);
  for (int j = 0; j < n; ++j) {
    double res = 0.0;
    A.col(j) = to_inv3_coords(m, ctx, op(m.data().inv3_basis[j]), &res);
    if (worst) *worst = std::max(*worst, res);
  }
  return A;
}

Eigen::MatrixXd jacobian_Q(const HomogeneousModel& m, const PositiveThreeForm& ctx, const Eigen::VectorXd& c) {
  const int n = m.n_inv3();
  const Eigen::MatrixXd& B = m.inv3_matrix();
  const double om = std::sqrt(ctx.norm2(ctx.omega()));
  Eigen::MatrixXd J(n, n);
  for (int j = 0; j < n; ++j) {
    const double h = kFdRelStep * om / std::sqrt(B.col(j).dot(ctx.gram(3) * B.col(j)));
    const Eigen::VectorXd e = Eigen::VectorXd::Unit(n, j);
    auto central = [&](double s) {
      return Eigen::VectorXd((gradient_Q(m, c + s * e) - gradient_Q(m, c - s * e)) / (2.0 * s));
    };
    J.col(j) = (4.0 * central(0.5 * h) - central(h)) / 3.0;
  }
  return J;
}

// Columns of V (right singular vectors of A) whose singular value is at most
// threshold * scale.
Eigen::MatrixXd null_columns(const Eigen::MatrixXd& A, double threshold, double scale, Eigen::VectorXd* sv) {
  const int n = int(A.cols());
  if (n == 0) return Eigen::MatrixXd(0, 0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();
  if (sv) *sv = s;
  Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
  full.head(s.size()) = s;
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (full[i] <= threshold * scale) keep.push_back(i);
  Eigen::MatrixXd V(n, int(keep.size()));
  for (int k = 0; k < int(keep.size()); ++k) V.col(k) = svd.matrixV().col(keep[k]);
  return V;
}

}  // namespace

double weighted_operator_norm(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G) {
  if (A.size() == 0) return 0.0;
  return singular_values(weighted(A, upper_cholesky(G)))[0];
}

double LinearOperatorOnInvariants::gram_asymmetry() const {
  const Eigen::MatrixXd GA = gram * matrix;
  const double s = GA.cwiseAbs().maxCoeff();
  return s > 0.0 ? (GA - GA.transpose()).cwiseAbs().maxCoeff() / s : 0.0;
}

double LinearOperatorOnInvariants::weighted_norm() const { return weighted_operator_norm(matrix, gram); }

double require_nearly_parallel(const HomogeneousModel& m, const Eigen::VectorXd& coeffs, double tol) {
  PositiveThreeForm ctx(m.form_from_coeffs(coeffs), m.orientation());
  const PForm dO = m.d(ctx.omega());
  const PForm dS = m.d(ctx.star_omega());
  const double tau0 = ctx.hodge(wedge(dO, ctx.omega()))[0] / 7.0;
  const double scale = std::sqrt(ctx.norm2(dO));
  const double r1 = scale > 0.0 ? std::sqrt(ctx.norm2(dO - tau0 * ctx.star_omega())) / scale : 0.0;
  const double r2 = scale > 0.0 ? std::sqrt(ctx.norm2(dS)) / scale : std::sqrt(ctx.norm2(dS));
  if (r1 > tol || r2 > tol) {
    std::ostringstream os;
    os << "basepoint is not nearly parallel: |dOmega - tau0 *Omega| = " << r1 << ", |d*Omega| = " << r2
       << " (relative to |dOmega|)";
    throw NotNearlyParallelError(os.str());
  }
  return tau0;
}

LinearizationQ linearize_Q(const HomogeneousModel& m, const Eigen::VectorXd& coeffs) {
  const Base b = make_base(m, coeffs);
  const Ops ops{m, b.ctx, b.tau0};
  LinearizationQ out;
  double worst = 0.0;
  out.closed = make_operator(b, coeffs, assemble(m, b.ctx, [&](const PForm& v) { return ops.closed(v); }, &worst));
  out.factored =
      make_operator(b, coeffs, assemble(m, b.ctx, [&](const PForm& v) { return ops.factored_Q(v); }, &worst));
  out.jacobian = make_operator(b, coeffs, jacobian_Q(m, b.ctx, coeffs));
  out.invariance_residual = worst;
  out.closed_vs_factored = relative_distance(out.closed.matrix, out.factored.matrix, b.G);
  out.closed_vs_jacobian = relative_distance(out.closed.matrix, out.jacobian.matrix, b.G);
  out.factored_vs_jacobian = relative_distance(out.factored.matrix, out.jacobian.matrix, b.G);
  return out;
}

LinearizationS linearize_soliton(const HomogeneousModel& m, const Eigen::VectorXd& coeffs) {
  const Base b = make_base(m, coeffs);
  const Ops ops{m, b.ctx, b.tau0};
  const int n = m.n_inv3();
  const Eigen::MatrixXd DQ = assemble(m, b.ctx, [&](const PForm& v) { return ops.closed(v); }, nullptr);
  LinearizationS out;
  out.direct = make_operator(b, coeffs, DQ + (5.0 / 6.0) * b.tau0 * b.tau0 * Eigen::MatrixXd::Identity(n, n));
  out.factored =
      make_operator(b, coeffs, assemble(m, b.ctx, [&](const PForm& v) { return ops.factored_S(v); }, nullptr));
  out.direct_vs_factored = relative_distance(out.direct.matrix, out.factored.matrix, b.G);
  return out;
}

LinearOperatorOnInvariants soliton_P(const HomogeneousModel& m, const Eigen::VectorXd& coeffs) {
  const LinearizationS S = linearize_soliton(m, coeffs);
  const LambdaMatrices L = lambda_matrices(m, coeffs);
  Eigen::MatrixXd P = S.direct.matrix;
  if (m.n_inv1() > 0) {
    const Eigen::MatrixXd adj = L.gram3.ldlt().solve(L.lambda.transpose() * L.gram1);
    P -= adj * L.lambda;
  }
  LinearOperatorOnInvariants op = S.direct;
  op.matrix = P;
  op.singular_values = singular_values(weighted(P, upper_cholesky(op.gram)));
  return op;
}

DeformationSpace deformation_space(const HomogeneousModel& m, const Eigen::VectorXd& coeffs, double threshold) {
  DeformationSpace out;
  out.threshold = threshold;
  const LinearizationS S = linearize_soliton(m, coeffs);
  const LinearOperatorOnInvariants P = soliton_P(m, coeffs);
  const Eigen::MatrixXd& G = S.direct.gram;
  const Eigen::MatrixXd R = upper_cholesky(G);
  const int n = m.n_inv3();
  auto unweight = [&](const Eigen::MatrixXd& X) {
    return Eigen::MatrixXd(R.triangularView<Eigen::Upper>().solve(X));
  };

  // ker lambda, as G-orthonormal columns.
  Eigen::MatrixXd K;
  if (m.n_inv1() == 0) {
    K = unweight(Eigen::MatrixXd::Identity(n, n));
  } else {
    const LambdaMatrices L = lambda_matrices(m, coeffs);
    const Eigen::MatrixXd R1 = upper_cholesky(L.gram1);
    const Eigen::MatrixXd Lw = R1 * L.lambda * unweight(Eigen::MatrixXd::Identity(n, n));
    const Eigen::VectorXd sl = singular_values(Lw);
    const double top = sl.size() ? sl[0] : 0.0;
    K = unweight(null_columns(Lw, threshold, top > 0.0 ? top : 1.0, nullptr));
  }
  out.kernel_lambda = K;

  const double ds_scale = S.direct.singular_values.size() ? S.direct.singular_values[0] : 0.0;
  const Eigen::MatrixXd M = R * S.direct.matrix * K;
  out.sigma = K * null_columns(M, threshold, ds_scale, &out.sigma_singular_values);

  const double p_scale = P.singular_values.size() ? P.singular_values[0] : 0.0;
  out.kernel_P = unweight(null_columns(weighted(P.matrix, R), threshold, p_scale, &out.P_singular_values));

  for (int k = 0; k < out.sigma.cols(); ++k) {
    const Eigen::VectorXd v = out.sigma.col(k);
    const double denom = p_scale * (R * v).norm();
    if (denom > 0.0) out.sigma_in_kernel_P = std::max(out.sigma_in_kernel_P, (R * (P.matrix * v)).norm() / denom);
  }
  return out;
}

StarDSpectrum star_d_spectrum_27(const HomogeneousModel& m, const Eigen::VectorXd& coeffs, double flag_tol) {
  StarDSpectrum out;
  out.tau0 = require_nearly_parallel(m, coeffs);
  PositiveThreeForm ctx(m.form_from_coeffs(coeffs), m.orientation());
  const Eigen::MatrixXd& G3 = ctx.gram(3);
  const int n = m.n_inv3();
  Eigen::MatrixXd S(form_dim(3), n);
  for (int j = 0; j < n; ++j) S.col(j) = decompose3(ctx, m.data().inv3_basis[j]).part27.coeffs();
  out.basis = orthonormal_span(upper_cholesky(G3), S, 1e-8);
  const int k = int(out.basis.cols());
  out.matrix = Eigen::MatrixXd::Zero(k, k);
  for (int j = 0; j < k; ++j) {
    const PForm w(3, out.basis.col(j));
    const PForm y = ctx.hodge(m.d(w));
    const PForm y27 = decompose3(ctx, y).part27;
    out.matrix.col(j) = out.basis.transpose() * G3 * y27.coeffs();
    const Eigen::VectorXd miss = y.coeffs() - out.basis * out.matrix.col(j);
    const double ny = std::sqrt(ctx.norm2(y));
    if (ny > 0.0) out.leakage = std::max(out.leakage, std::sqrt(miss.dot(G3 * miss)) / ny);
  }
  if (k > 0) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(out.matrix);
    for (int i = 0; i < k; ++i) out.eigenvalues.push_back(es.eigenvalues()[i]);
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), [](auto a, auto b) {
      return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
  }
  const double scale = std::max(std::abs(out.tau0), 1.0);
  for (const auto& ev : out.eigenvalues) {
    out.near_minus_tau0.push_back(std::abs(ev - std::complex<double>(-out.tau0, 0.0)) <= flag_tol * scale);
    out.near_minus_3tau0.push_back(std::abs(ev - std::complex<double>(-3.0 * out.tau0, 0.0)) <= flag_tol * scale);
  }
  return out;
}

std::string operator_to_json(const LinearOperatorOnInvariants& op, const std::string& kind) {
  using nlohmann::json;
  auto rows = [](const Eigen::MatrixXd& A) {
    json r = json::array();
    for (int i = 0; i < A.rows(); ++i) {
      json row = json::array();
      for (int j = 0; j < A.cols(); ++j) row.push_back(A(i, j));
      r.push_back(row);
    }
    return r;
  };
  auto vec = [](const Eigen::VectorXd& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
  };
  json j;
  j["schema_version"] = 1;
  j["kind"] = kind;
  j["tau0"] = op.tau0;
  j["basepoint"] = vec(op.basepoint);
  j["matrix"] = rows(op.matrix);
  j["gram"] = rows(op.gram);
  j["singular_values"] = vec(op.singular_values);
  return j.dump(1) + "\n";
}

}  // namespace g2flow
