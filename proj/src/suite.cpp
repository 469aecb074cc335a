#include "g2flow/suite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace g2flow {

namespace {

double rel(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

double rel_form(const PositiveThreeForm& ctx, const PForm& a, const PForm& b) {
  const double s = std::max(std::sqrt(ctx.norm2(a)), std::sqrt(ctx.norm2(b)));
  return s > 0.0 ? std::sqrt(ctx.norm2(a - b)) / s : 0.0;
}

class Tally {
 public:
  Tally(std::string group, std::string name, double tol) {
    r_.group = std::move(group);
    r_.name = std::move(name);
    r_.tol = tol;
  }
  void add(double v) { r_.value = std::isfinite(v) ? std::max(r_.value, v) : INFINITY; }
  CheckResult done() {
    r_.pass = r_.value <= r_.tol;
    return r_;
  }

 private:
  CheckResult r_;
};

void algebra_checks(SuiteResult& out, const SuiteOptions& opts) {
  Rng rng(opts.seed);
  Tally c1("g2_algebra", "(xi _| Omega) _| Omega = 3 xi", 1e-10);
  Tally c2("g2_algebra", "Omega _| (xi ^ Omega) = -4 xi", 1e-10);
  Tally c3("g2_algebra", "*(xi ^ *Omega) _| Omega = 3 xi", 1e-10);
  Tally norm("g2_algebra", "|Omega|^2 = 7", 1e-10);
  Tally vol("g2_algebra", "Omega ^ *Omega = 7 vol", 1e-10);
  Tally inv("g2_algebra", "** = 1 on 3-forms", 1e-10);
  Tally spec("g2_algebra", "*(. ^ Omega) on 2-forms has eigenvalues -1 (x14) and 2 (x7)", 1e-9);
  Tally split("g2_algebra", "Lambda^3 = 1 + 7 + 27, orthogonal and exhaustive", 1e-10);
  Tally p14("g2_algebra", "(2b - *(b ^ Omega)) / 3 is the orthogonal projection onto Lambda^2_14", 1e-10);
  Tally theta("g2_algebra", "derivative of *Omega along a is *(p a)", 1e-7);
  Tally roundtrip("torsion", "synthetic torsion forms are recovered from dOmega, d*Omega", 1e-9);
  Tally n1("torsion", "|dOmega|^2 = 7 tau0^2 + 36 |tau1|^2 + |tau3|^2", 1e-9);
  Tally n2("torsion", "|delta Omega|^2 = 48 |tau1|^2 + |tau2|^2", 1e-9);
  Tally n3("torsion", "|nabla Omega|^2 = 7/4 tau0^2 + 24 |tau1|^2 + 2 |tau2|^2 + 2 |tau3|^2", 1e-9);
  Tally dist("torsion", "distortion constants (4, 3/2, 1/2, 2, 1/2)", 1e-9);

  for (int s = 0; s < opts.algebra_samples; ++s) {
    const PositiveThreeForm ctx(random_positive_form(rng));
    const PForm& om = ctx.omega();
    const PForm& so = ctx.star_omega();
    const PForm xi = random_form(rng, 1);
    const double nx = std::sqrt(ctx.norm2(xi));
    c1.add(std::sqrt(ctx.norm2(ctx.contract(ctx.contract(xi, om), om) - 3.0 * xi)) / nx);
    c2.add(std::sqrt(ctx.norm2(ctx.contract(om, wedge(xi, om)) + 4.0 * xi)) / nx);
    c3.add(std::sqrt(ctx.norm2(ctx.contract(ctx.hodge(wedge(xi, so)), om) - 3.0 * xi)) / nx);
    norm.add(rel(ctx.norm2(om), 7.0));
    vol.add(rel(wedge(om, so)[0], 7.0 * ctx.vol()[0]));
    const PForm a = random_form(rng, 3);
    inv.add(rel_form(ctx, ctx.hodge(ctx.hodge(a)), a));

    // Self-adjoint for the induced inner product, not in coefficients.
    Eigen::EigenSolver<Eigen::MatrixXd> eig(ctx.star_wedge_omega(), false);
    std::vector<double> ev(21);
    double e = 0.0;
    for (int i = 0; i < 21; ++i) {
      ev[i] = eig.eigenvalues()[i].real();
      e = std::max(e, std::abs(eig.eigenvalues()[i].imag()));
    }
    std::sort(ev.begin(), ev.end());
    for (int i = 0; i < 21; ++i) e = std::max(e, std::abs(ev[i] - (i < 14 ? -1.0 : 2.0)));
    spec.add(e / 2.0);

    const Decomposition3 d = decompose3(ctx, a);
    const double na = std::sqrt(ctx.norm2(a));
    double sp = std::sqrt(ctx.norm2(d.part1 + d.part7 + d.part27 - a)) / na;
    sp = std::max({sp, std::abs(ctx.inner(d.part1, d.part7)) / (na * na), std::abs(ctx.inner(d.part1, d.part27)) / (na * na),
                   std::abs(ctx.inner(d.part7, d.part27)) / (na * na)});
    // part27 has no 1- or 7-component: orthogonal to Omega and to every xi _| *Omega.
    sp = std::max(sp, std::abs(ctx.inner(d.part27, om)) / (na * std::sqrt(7.0)));
    const Eigen::VectorXd to7 = ctx.lambda3_7_onb().transpose() * (ctx.gram(3) * d.part27.coeffs());
    sp = std::max(sp, to7.norm() / na);
    split.add(sp);

    const PForm b = random_form(rng, 2);
    const PForm b14 = pi14(ctx, b);
    const PForm b7 = b - b14;
    const double nb = ctx.norm2(b);
    double pe = std::abs(ctx.inner(b14, b7)) / nb;
    pe = std::max(pe, std::sqrt(ctx.norm2(pi14(ctx, b14) - b14)) / std::sqrt(nb));
    pe = std::max(pe, std::sqrt(ctx.norm2(wedge(b14, om) + ctx.hodge(b14))) / std::sqrt(nb));
    p14.add(pe);

    {
      const PForm dir = random_form(rng, 3);
      const double h = 1e-3 * std::sqrt(ctx.norm2(om) / ctx.norm2(dir));
      auto star_om = [&](double t) { return PositiveThreeForm(om + t * dir).star_omega(); };
      auto central = [&](double t) { return (1.0 / (2.0 * t)) * (star_om(t) - star_om(-t)); };
      const PForm fd = (1.0 / 3.0) * (4.0 * central(0.5 * h) - central(h));
      theta.add(std::sqrt(ctx.norm2(fd - ctx.hodge(psr_maps(ctx, dir).p))) / std::sqrt(ctx.norm2(ctx.hodge(psr_maps(ctx, dir).p))));
    }

    const TorsionForms t = random_torsion(ctx, rng);
    const DifferentialData dd = synthesize(ctx, t);
    const TorsionExtraction ex = extract_torsion(ctx, dd.dOmega, dd.dStarOmega);
    const double scale = std::sqrt(t.tau0 * t.tau0 + ctx.norm2(t.tau1) + ctx.norm2(t.tau2) + ctx.norm2(t.tau3));
    double rt = std::abs(ex.forms.tau0 - t.tau0);
    rt = std::max(rt, std::sqrt(ctx.norm2(ex.forms.tau1 - t.tau1)));
    rt = std::max(rt, std::sqrt(ctx.norm2(ex.forms.tau2 - t.tau2)));
    rt = std::max(rt, std::sqrt(ctx.norm2(ex.forms.tau3 - t.tau3)));
    rt = std::max(rt, std::sqrt(ctx.norm2(ex.tau1_tilde - t.tau1)));
    roundtrip.add(rt / scale);
    const NormReport nr = norm_report(ctx, dd.dOmega, dd.dStarOmega, ex.forms);
    n1.add(rel(nr.domega2, nr.domega2_torsion));
    n2.add(rel(nr.delta2, nr.delta2_torsion));
    n3.add(rel(nr.nabla2, nr.nabla2_torsion));

    const DistortionConstants dc = distortion_constants(ctx);
    dist.add(std::max({std::abs(dc.eps1 - 4.0), std::abs(dc.eps7 - 1.5), std::abs(dc.eps27 - 0.5),
                       std::abs(dc.iota7 - 2.0), std::abs(dc.iota14 - 0.5), dc.spread}));
  }
  for (Tally* t : {&c1, &c2, &c3, &norm, &vol, &inv, &spec, &split, &p14, &theta, &roundtrip, &n1, &n2, &n3, &dist})
    out.checks.push_back(t->done());
}

void model_checks(SuiteResult& out, const HomogeneousModel& m, const SuiteOptions& opts) {
  Tally valid("bianchi", "model differentials validate (d^2 = 0, unimodular, invariant closure)", 0.0);
  const ValidationReport vr = validate_model(m);
  valid.add(vr.ok() ? 0.0 : 1.0);
  out.checks.push_back(valid.done());
  if (!vr.ok()) return;

  Rng rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  Tally adj_d("bianchi", "codifferential is the L2 adjoint of d", 1e-9);
  Tally tilde("bianchi", "tau1 read from d*Omega equals tau1 read from dOmega", 1e-9);
  Tally lam_om("bianchi", "lambda(Omega) = 0", 1e-8);
  Tally lam_q("bianchi", "lambda(Q(Omega)) = 0", 1e-8);
  Tally lam_adj("bianchi", "lambda* is the L2 adjoint of lambda", 1e-9);
  Tally euler("bianchi", "<Q, Omega> = -(5/3) D", 1e-7);

  for (int s = 0; s < opts.model_samples; ++s) {
    const Eigen::VectorXd c = random_invariant_point(m, rng);
    const StructureState st = evaluate_structure(m, c);
    const PositiveThreeForm& ctx = st.ctx;
    adj_d.add(codifferential_adjointness_residual(m, ctx));
    const double t1 = std::sqrt(ctx.norm2(st.torsion.forms.tau1));
    const double ref = std::max({t1, std::abs(st.torsion.forms.tau0), 1e-300});
    tilde.add(std::sqrt(ctx.norm2(st.torsion.forms.tau1 - st.torsion.tau1_tilde)) / ref);

    const PForm& om = ctx.omega();
    const Eigen::VectorXd q = gradient_Q(m, c);
    lam_om.add(lambda_relative(m, ctx, om));
    const PForm Q = m.form_from_coeffs(q);
    lam_q.add(lambda_relative(m, ctx, Q));
    if (m.n_inv1() > 0) lam_adj.add(lambda_matrices(m, c).adjointness_residual);

    const EnergyReport e = energies(m, c);
    const double qo = ctx.inner(Q, om) * st.H;
    euler.add(e.D > 0.0 ? std::abs(qo + 5.0 / 3.0 * e.D) / e.D : std::abs(qo));
  }
  for (Tally* t : {&adj_d, &tilde, &lam_om, &lam_q, &lam_adj, &euler}) out.checks.push_back(t->done());
}

}  // namespace

bool SuiteResult::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

std::vector<std::string> SuiteResult::failures() const {
  std::vector<std::string> f;
  for (const auto& c : checks)
    if (!c.pass) f.push_back(c.group + ": " + c.name);
  return f;
}

Eigen::VectorXd random_invariant_point(const HomogeneousModel& m, Rng& rng, double spread) {
  const auto& ref = m.data().reference;
  const Eigen::VectorXd c0 = Eigen::Map<const Eigen::VectorXd>(ref.data(), Eigen::Index(ref.size()));
  const double s = c0.cwiseAbs().maxCoeff();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Eigen::VectorXd c = c0 + spread * s * rng.vector(m.n_inv3());
    try {
      PositiveThreeForm ctx(m.form_from_coeffs(c), m.orientation());
      return c;
    } catch (const NotPositiveError&) {
    }
  }
  return c0;
}

double lambda_relative(const HomogeneousModel& m, const PositiveThreeForm& ctx, const PForm& a) {
  const PForm t1 = ctx.contract(codifferential(m, ctx, a), ctx.omega());
  const PForm t2 = ctx.contract(a, m.d(ctx.omega()));
  const double scale = std::sqrt(ctx.norm2(t1)) + std::sqrt(ctx.norm2(t2));
  const double r = std::sqrt(ctx.norm2(lambda_op(m, ctx, a)));
  if (scale == 0.0) return 0.0;
  return r / scale;
}

SuiteResult run_identity_suite(const HomogeneousModel& m, const SuiteOptions& opts) {
  SuiteResult r;
  algebra_checks(r, opts);
  model_checks(r, m, opts);
  return r;
}

void print_suite(std::ostream& os, const SuiteResult& r) {
  char buf[64];
  for (const auto& c : r.checks) {
    std::snprintf(buf, sizeof buf, "%.3e (tol %.0e)", c.value, c.tol);
    os << (c.pass ? "PASS  " : "FAIL  ") << c.group << "  " << c.name << "  " << buf << '\n';
  }
  int failed = 0;
  for (const auto& c : r.checks) failed += !c.pass;
  os << (failed ? "FAILED " : "ok ") << r.checks.size() - failed << "/" << r.checks.size() << " checks passed\n";
}

}  // namespace g2flow
