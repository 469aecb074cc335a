#include "g2flow/homogeneous.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace g2flow {

namespace {

std::string describe(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

}  // namespace

ValidationReport validate_model(const HomogeneousModel& m) {
  ValidationReport rep;
  const ModelData& d = m.data();
  double scale = 1.0;
  for (const auto& t : d.mc_table) scale = std::max(scale, t.max_abs());
  const double tol = 1e-12 * scale * scale;

  if (!d.quotient) {
    for (int i = 0; i < kDim; ++i) {
      const double r = m.d(d.mc_table[i]).max_abs();
      if (r > tol) rep.failures.push_back("d^2 " + d.coframe[i] + " != 0 (max coefficient " + describe(r) + ")");
    }
    const double r6 = m.d_matrix(6).cwiseAbs().maxCoeff();
    if (r6 > tol) rep.failures.push_back("d does not vanish on 6-forms (not unimodular)");
  }
  for (int k = 0; k < m.n_inv3(); ++k) {
    const double r = m.d(m.d(d.inv3_basis[k])).max_abs();
    if (r > tol * (1.0 + d.inv3_basis[k].max_abs()))
      rep.failures.push_back("d^2 inv3_basis[" + std::to_string(k) + "] != 0 (max coefficient " + describe(r) + ")");
  }
  for (int k = 0; k < m.n_inv1(); ++k) {
    const double r = m.d(m.d(d.inv1_basis[k])).max_abs();
    if (r > tol * (1.0 + d.inv1_basis[k].max_abs()))
      rep.failures.push_back("d^2 inv1_basis[" + std::to_string(k) + "] != 0 (max coefficient " + describe(r) + ")");
  }
  {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m.inv3_matrix());
    if (lu.rank() < m.n_inv3()) rep.failures.push_back("inv3_basis is linearly dependent");
  }

  if (!d.reference.empty()) {
    const Eigen::VectorXd ref = Eigen::Map<const Eigen::VectorXd>(d.reference.data(), Eigen::Index(d.reference.size()));
    try {
      PositiveThreeForm ctx(m.form_from_coeffs(ref), d.orientation);
      // Invariant 4-forms are the Hodge duals of invariant 3-forms.
      Eigen::MatrixXd S = ctx.star_matrix(3) * m.inv3_matrix();
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(S);
      for (int k = 0; k < m.n_inv3(); ++k) {
        Eigen::VectorXd dk = m.d(d.inv3_basis[k]).coeffs();
        const double n = dk.norm();
        if (n == 0.0) continue;
        const double r = (S * qr.solve(dk) - dk).norm() / n;
        if (r > 1e-10)
          rep.failures.push_back("d inv3_basis[" + std::to_string(k) + "] leaves the invariant 4-forms (residual " +
                                 describe(r) + ")");
      }
      if (d.quotient) {
        for (int k = 0; k < m.n_inv1(); ++k) {
          const double r = m.d(ctx.hodge(d.inv1_basis[k])).max_abs();
          if (r > tol) rep.failures.push_back("d * inv1_basis[" + std::to_string(k) + "] != 0 (not unimodular)");
        }
      }
    } catch (const NotPositiveError& e) {
      rep.failures.push_back(std::string("reference point: ") + e.what());
    }
  }
  return rep;
}

void require_valid(const HomogeneousModel& m) {
  ValidationReport r = validate_model(m);
  if (r.ok()) return;
  std::string msg = "model " + m.name() + " failed validation:";
  for (const auto& f : r.failures) msg += "\n  " + f;
  throw ModelError(msg);
}

int codifferential_sign(int p) { return (p % 2 == 0) ? 1 : -1; }

PForm codifferential(const HomogeneousModel& m, const PositiveThreeForm& ctx, const PForm& a) {
  const int p = a.degree();
  if (p == 0) throw std::invalid_argument("codifferential of a function");
  return double(codifferential_sign(p)) * ctx.hodge(m.d(ctx.hodge(a)));
}

double codifferential_adjointness_residual(const HomogeneousModel& m, const PositiveThreeForm& ctx) {
  double worst = 0.0;
  auto pair = [&](const PForm& a, const PForm& b) {
    const PForm da = m.d(a);
    const PForm db = codifferential(m, ctx, b);
    const double lhs = ctx.inner(da, b), rhs = ctx.inner(a, db);
    const double s = std::sqrt(ctx.norm2(da) * ctx.norm2(b)) + std::sqrt(ctx.norm2(a) * ctx.norm2(db)) + 1e-300;
    worst = std::max(worst, std::abs(lhs - rhs) / s);
  };
  if (!m.data().quotient) {
    Rng rng(7);
    for (int p = 1; p <= kDim; ++p)
      for (int rep = 0; rep < 3; ++rep) pair(random_form(rng, p - 1), random_form(rng, p));
  }
  for (int i = 0; i < m.n_inv3(); ++i)
    for (int j = 0; j < m.n_inv3(); ++j) {
      const PForm& a = m.data().inv3_basis[i];
      const PForm b = ctx.hodge(m.data().inv3_basis[j]);
      pair(a, b);
      pair(b, m.d(b));
    }
  return worst;
}

StructureState evaluate_structure(const HomogeneousModel& m, const Eigen::VectorXd& coeffs) {
  PositiveThreeForm ctx(m.form_from_coeffs(coeffs), m.orientation());
  PForm dO = m.d(ctx.omega());
  PForm dS = m.d(ctx.star_omega());
  TorsionExtraction t = extract_torsion(ctx, dO, dS);
  const double H = ctx.volume_scale() * m.vol_total();
  return StructureState{std::move(ctx), std::move(dO), std::move(dS), std::move(t), H};
}

namespace {

std::array<double, 4> tau_squares(const StructureState& s) {
  const TorsionForms& t = s.torsion.forms;
  return {t.tau0 * t.tau0, s.ctx.norm2(t.tau1), s.ctx.norm2(t.tau2), s.ctx.norm2(t.tau3)};
}

}  // namespace

EnergyReport energies(const HomogeneousModel& m, const Eigen::VectorXd& coeffs, const Nu& nu) {
  StructureState s = evaluate_structure(m, coeffs);
  if (s.torsion.residual_domega > 1e-8 || s.torsion.residual_dstar > 1e-8)
    throw InconsistentDataError("inconsistent differential data for model " + m.name() + " (residual " +
                                describe(std::max(s.torsion.residual_domega, s.torsion.residual_dstar)) + ")");
  const auto ts = tau_squares(s);
  EnergyReport e;
  e.tau0sq = ts[0];
  e.tau1sq = ts[1];
  e.tau2sq = ts[2];
  e.tau3sq = ts[3];
  e.H = s.H;
  e.D0 = 0.5 * ts[0] * s.H;
  e.D1 = 0.5 * ts[1] * s.H;
  e.D2 = 0.5 * ts[2] * s.H;
  e.D3 = 0.5 * ts[3] * s.H;
  e.D_nu = nu[0] * e.D0 + nu[1] * e.D1 + nu[2] * e.D2 + nu[3] * e.D3;
  e.D = 7.0 * e.D0 + 84.0 * e.D1 + e.D2 + e.D3;
  e.S = (21.0 / 8.0 * ts[0] + 30.0 * ts[1] - 0.5 * ts[2] - 0.5 * ts[3]) * s.H;
  e.C = e.D - e.S;
  e.Ct = 4.0 * e.D + 7.0 * e.H;
  NormReport nr = norm_report(s.ctx, s.dOmega, s.dStarOmega, s.torsion.forms);
  e.W12 = (nr.nabla2 + s.ctx.norm2(s.ctx.omega())) * s.H;
  return e;
}

double energy_D(const HomogeneousModel& m, const Eigen::VectorXd& coeffs, const Nu& nu) {
  StructureState s = evaluate_structure(m, coeffs);
  const auto ts = tau_squares(s);
  return 0.5 * s.H * (nu[0] * ts[0] + nu[1] * ts[1] + nu[2] * ts[2] + nu[3] * ts[3]);
}

double hitchin(const HomogeneousModel& m, const Eigen::VectorXd& coeffs) {
  PositiveThreeForm ctx(m.form_from_coeffs(coeffs), m.orientation());
  return ctx.volume_scale() * m.vol_total();
}

Eigen::MatrixXd l2_gram(const HomogeneousModel& m, const PositiveThreeForm& ctx, double H) {
  const Eigen::MatrixXd& B = m.inv3_matrix();
  Eigen::MatrixXd G = H * (B.transpose() * ctx.gram(3) * B);
  return 0.5 * (G + G.transpose());
}

double directional_derivative(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& c,
                              const Eigen::VectorXd& v, double h) {
  auto central = [&](double s) { return (f(c + s * v) - f(c - s * v)) / (2.0 * s); };
  const double coarse = central(h);
  const double fine = central(0.5 * h);
  return (4.0 * fine - coarse) / 3.0;
}

namespace {

// Step along B_i whose Omega-norm is kFdRelStep * |Omega|.
Eigen::VectorXd basis_steps(const HomogeneousModel& m, const PositiveThreeForm& ctx) {
  const Eigen::MatrixXd& B = m.inv3_matrix();
  const double om = std::sqrt(ctx.norm2(ctx.omega()));
  Eigen::VectorXd h(m.n_inv3());
  for (int i = 0; i < m.n_inv3(); ++i) h[i] = kFdRelStep * om / std::sqrt(B.col(i).dot(ctx.gram(3) * B.col(i)));
  return h;
}

Eigen::VectorXd fd_gradient(const HomogeneousModel& m, const PositiveThreeForm& ctx, const Eigen::VectorXd& c,
                            const std::function<double(const Eigen::VectorXd&)>& f) {
  const Eigen::VectorXd h = basis_steps(m, ctx);
  Eigen::VectorXd g(m.n_inv3());
  for (int i = 0; i < m.n_inv3(); ++i) g[i] = directional_derivative(f, c, Eigen::VectorXd::Unit(m.n_inv3(), i), h[i]);
  return g;
}

Eigen::VectorXd solve_gram(const Eigen::MatrixXd& G, const Eigen::VectorXd& rhs) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
  const double lo = eig.eigenvalues()[0], hi = eig.eigenvalues()[G.rows() - 1];
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw DegenerateBasisError("L2 Gram matrix of inv3_basis is degenerate (condition number " + describe(hi / lo) +
                               ")");
  return G.ldlt().solve(rhs);
}

}  // namespace

Eigen::VectorXd energy_gradient(const HomogeneousModel& m, const Eigen::VectorXd& coeffs, const Nu& nu) {
  PositiveThreeForm ctx(m.form_from_coeffs(coeffs), m.orientation());
  return fd_gradient(m, ctx, coeffs, [&](const Eigen::VectorXd& x) { return energy_D(m, x, nu); });
}

Eigen::VectorXd gradient_Q(const HomogeneousModel& m, const Eigen::VectorXd& coeffs, const Nu& nu) {
  PositiveThreeForm ctx(m.form_from_coeffs(coeffs), m.orientation());
  const double H = ctx.volume_scale() * m.vol_total();
  Eigen::VectorXd grad = fd_gradient(m, ctx, coeffs, [&](const Eigen::VectorXd& x) { return energy_D(m, x, nu); });
  return -solve_gram(l2_gram(m, ctx, H), grad);
}

Eigen::VectorXd hitchin_gradient(const HomogeneousModel& m, const Eigen::VectorXd& coeffs) {
  PositiveThreeForm ctx(m.form_from_coeffs(coeffs), m.orientation());
  const double H = ctx.volume_scale() * m.vol_total();
  Eigen::VectorXd grad = fd_gradient(m, ctx, coeffs, [&](const Eigen::VectorXd& x) { return hitchin(m, x); });
  return solve_gram(l2_gram(m, ctx, H), grad);
}

EulerCheck euler_check(const HomogeneousModel& m, const Eigen::VectorXd& coeffs, const Nu& nu) {
  EulerCheck e;
  auto f = [&](const Eigen::VectorXd& x) { return energy_D(m, x, nu); };
  const double D = f(coeffs);
  e.directional = directional_derivative(f, coeffs, coeffs, kFdRelStep);
  e.five_thirds = 5.0 / 3.0 * D;
  e.ratio_half = D != 0.0 ? f(0.5 * coeffs) / D : 0.0;
  e.ratio_two = D != 0.0 ? f(2.0 * coeffs) / D : 0.0;
  return e;
}

PForm lie_derivative(const HomogeneousModel& m, const Vector7& X, const PForm& a) {
  const int p = a.degree();
  PForm out(p);
  if (p > 0) out += m.d(interior(X, a));
  if (p < kDim) out += interior(X, m.d(a));
  return out;
}

PForm lambda_star(const HomogeneousModel& m, const PositiveThreeForm& ctx, const PForm& xi) {
  return lie_derivative(m, ctx.sharp(xi), ctx.omega());
}

PForm lambda_op(const HomogeneousModel& m, const PositiveThreeForm& ctx, const PForm& a) {
  if (a.degree() != 3) throw std::invalid_argument("lambda_op expects a 3-form");
  const PForm delta_a = codifferential(m, ctx, a);
  return ctx.contract(delta_a, ctx.omega()) - ctx.contract(a, m.d(ctx.omega()));
}

Eigen::VectorXd to_inv3_coords(const HomogeneousModel& m, const PositiveThreeForm& ctx, const PForm& a,
                               double* residual) {
  const Eigen::MatrixXd& B = m.inv3_matrix();
  const Eigen::MatrixXd& G = ctx.gram(3);
  Eigen::MatrixXd BtG = B.transpose() * G;
  Eigen::VectorXd x = (BtG * B).ldlt().solve(BtG * a.coeffs());
  if (residual) {
    const Eigen::VectorXd r = a.coeffs() - B * x;
    const double n = std::sqrt(a.coeffs().dot(G * a.coeffs()));
    *residual = n > 0 ? std::sqrt(r.dot(G * r)) / n : 0.0;
  }
  return x;
}

LambdaMatrices lambda_matrices(const HomogeneousModel& m, const Eigen::VectorXd& coeffs) {
  PositiveThreeForm ctx(m.form_from_coeffs(coeffs), m.orientation());
  const double H = ctx.volume_scale() * m.vol_total();
  LambdaMatrices L;
  const int n3 = m.n_inv3(), n1 = m.n_inv1();
  L.gram3 = l2_gram(m, ctx, H);
  const Eigen::MatrixXd& Th = m.inv1_matrix();
  L.gram1 = H * (Th.transpose() * ctx.gram(1) * Th);
  L.lambda = Eigen::MatrixXd::Zero(n1, n3);
  L.lambda_star = Eigen::MatrixXd::Zero(n3, n1);
  if (n1 == 0) return L;
  Eigen::MatrixXd ThtG = Th.transpose() * ctx.gram(1);
  auto ldlt1 = (ThtG * Th).ldlt();
  for (int j = 0; j < n3; ++j) {
    PForm l = lambda_op(m, ctx, m.data().inv3_basis[j]);
    L.lambda.col(j) = ldlt1.solve(ThtG * l.coeffs());
  }
  for (int k = 0; k < n1; ++k) L.lambda_star.col(k) = to_inv3_coords(m, ctx, lambda_star(m, ctx, m.data().inv1_basis[k]));
  const Eigen::MatrixXd lhs = L.gram3 * L.lambda_star;
  const Eigen::MatrixXd rhs = L.lambda.transpose() * L.gram1;
  const double s = std::max({lhs.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff(), 1e-300});
  L.adjointness_residual = (lhs - rhs).cwiseAbs().maxCoeff() / s;
  return L;
}

}  // namespace g2flow
