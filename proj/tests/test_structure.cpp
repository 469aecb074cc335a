#include "g2flow/rng.hpp"
#include "g2flow/structure.hpp"

#include <doctest.h>

#include <cmath>

#include "oracle.hpp"

using namespace g2flow;

namespace {

double maxdiff(const PForm& a, const PForm& b) { return (a.coeffs() - b.coeffs()).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("standard form induces the Euclidean metric") {
  const PositiveThreeForm ctx(standard_form());
  CHECK((ctx.metric() - Matrix7::Identity()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(std::abs(ctx.volume_scale() - 1.0) < 1e-14);
  // *Omega_0 = e4567 + e2367 + e2345 + e1357 - e1346 - e1256 - e1247
  const PForm& so = ctx.star_omega();
  CHECK(so.component({4, 5, 6, 7}) == doctest::Approx(1.0));
  CHECK(so.component({2, 3, 6, 7}) == doctest::Approx(1.0));
  CHECK(so.component({2, 3, 4, 5}) == doctest::Approx(1.0));
  CHECK(so.component({1, 3, 5, 7}) == doctest::Approx(1.0));
  CHECK(so.component({1, 3, 4, 6}) == doctest::Approx(-1.0));
  CHECK(so.component({1, 2, 5, 6}) == doctest::Approx(-1.0));
  CHECK(so.component({1, 2, 4, 7}) == doctest::Approx(-1.0));
}

TEST_CASE("metric of a pulled-back standard form is A^T A") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix7 A;
    const PForm om = random_positive_form(rng, 0.3, &A);
    const PositiveThreeForm ctx(om);
    const Matrix7 g = A.transpose() * A;
    CHECK((ctx.metric() - g).cwiseAbs().maxCoeff() < 1e-12 * g.cwiseAbs().maxCoeff());
    CHECK(ctx.volume_scale() == doctest::Approx(A.determinant()).epsilon(1e-12));
  }
}

TEST_CASE("orientation reversal: -Omega is positive for the opposite orientation") {
  Rng rng(12);
  const PForm om = random_positive_form(rng);
  const PositiveThreeForm ctx(om);
  const PositiveThreeForm neg(-om, -1);
  CHECK((neg.metric() - ctx.metric()).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(maxdiff(neg.star_omega(), ctx.star_omega()) < 1e-13);
  CHECK_THROWS_AS(PositiveThreeForm(-om, 1), NotPositiveError);
}

TEST_CASE("non-positive forms are rejected") {
  CHECK_THROWS_AS(PositiveThreeForm(PForm::elementary({1, 2, 3}) + PForm::elementary({1, 4, 5})), NotPositiveError);
  CHECK_THROWS_AS(PositiveThreeForm(PForm(3)), NotPositiveError);
  // Flipping the sign of e123 gives B of signature (3, 4).
  const PForm split = standard_form() - 2.0 * PForm::elementary({1, 2, 3});
  try {
    PositiveThreeForm bad(split);
    FAIL("indefinite form accepted");
  } catch (const NotPositiveError& e) {
    CHECK(e.min_eigenvalue() < 0.0);
  }
}

TEST_CASE("metric is homogeneous of degree 2/3 across extreme scales") {
  Rng rng(13);
  const PForm om = random_positive_form(rng);
  const PositiveThreeForm ctx(om);
  for (double s : {1e-12, 1e-3, 10.0, 1e9}) {
    const PositiveThreeForm sc(s * om);
    const double f = std::cbrt(s * s);
    CHECK((sc.metric() / f - ctx.metric()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(sc.volume_scale() / std::pow(s, 7.0 / 3.0) == doctest::Approx(ctx.volume_scale()).epsilon(1e-12));
  }
}

TEST_CASE("induced inner product matches the determinant oracle") {
  Rng rng(14);
  const PositiveThreeForm ctx(random_positive_form(rng));
  for (int p = 0; p <= 4; ++p) {
    const PForm a = random_form(rng, p), b = random_form(rng, p);
    const double ref = oracle::inner(ctx.inverse_metric(), a, b);
    CHECK(std::abs(ctx.inner(a, b) - ref) < 1e-12 * (1.0 + std::abs(ref)));
  }
}

TEST_CASE("Hodge star: a ^ *b = <a, b> vol and ** = 1") {
  Rng rng(15);
  const PositiveThreeForm ctx(random_positive_form(rng));
  for (int p = 0; p <= 7; ++p) {
    const PForm a = random_form(rng, p), b = random_form(rng, p);
    const double lhs = wedge(a, ctx.hodge(b))[0];
    const double rhs = oracle::inner(ctx.inverse_metric(), a, b) * ctx.vol()[0];
    CHECK(std::abs(lhs - rhs) < 1e-12 * (1.0 + std::abs(rhs)));
    CHECK(maxdiff(ctx.hodge(ctx.hodge(a)), a) < 1e-12);
  }
}

TEST_CASE("contraction identities with the positive form") {
  Rng rng(16);
  for (int trial = 0; trial < 10; ++trial) {
    const PositiveThreeForm ctx(random_positive_form(rng));
    const PForm& om = ctx.omega();
    const PForm xi = random_form(rng, 1);
    CHECK(maxdiff(ctx.contract(ctx.contract(xi, om), om), 3.0 * xi) < 1e-12);
    CHECK(maxdiff(ctx.contract(om, wedge(xi, om)), -4.0 * xi) < 1e-12);
    CHECK(maxdiff(ctx.contract(ctx.hodge(wedge(xi, ctx.star_omega())), om), 3.0 * xi) < 1e-12);
    // Contraction of a vector agrees with the metric dual 1-form.
    CHECK(maxdiff(ctx.contract(xi, om), interior(ctx.sharp(xi), om)) < 1e-13);
    CHECK(ctx.norm2(om) == doctest::Approx(7.0).epsilon(1e-13));
  }
}

TEST_CASE("3-form splitting agrees with the wedge characterization") {
  Rng rng(17);
  const PositiveThreeForm ctx(random_positive_form(rng));
  const PForm a = random_form(rng, 3);
  const Decomposition3 d = decompose3(ctx, a);
  // Lambda^3_27 = {g : g ^ Omega = 0, g ^ *Omega = 0}.
  CHECK(wedge(d.part27, ctx.omega()).is_zero(1e-12));
  CHECK(std::abs(wedge(d.part27, ctx.star_omega())[0]) < 1e-12);
  // Lambda^3_7 = *(alpha ^ Omega): recover alpha by least squares.
  const Eigen::MatrixXd M = ctx.star_matrix(4) * wedge_matrix(ctx.omega(), 1);
  const Eigen::VectorXd alpha = M.colPivHouseholderQr().solve(d.part7.coeffs());
  CHECK((M * alpha - d.part7.coeffs()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(maxdiff(d.part1 + d.part7 + d.part27, a) < 1e-13);
  CHECK(ctx.lambda3_27_onb().cols() == 27);
  CHECK(ctx.lambda3_7_onb().cols() == 7);
  CHECK(ctx.lambda2_14_onb().cols() == 14);
  const Eigen::MatrixXd E = ctx.lambda3_27_onb();
  CHECK((E.transpose() * ctx.gram(3) * E - Eigen::MatrixXd::Identity(27, 27)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("2-form splitting: star(. ^ Omega) acts by 2 and -1") {
  Rng rng(18);
  const PositiveThreeForm ctx(random_positive_form(rng));
  const PForm b = random_form(rng, 2);
  const Decomposition2 d = decompose2(ctx, b);
  CHECK(maxdiff(ctx.hodge(wedge(d.part7, ctx.omega())), 2.0 * d.part7) < 1e-12);
  CHECK(maxdiff(ctx.hodge(wedge(d.part14, ctx.omega())), -d.part14) < 1e-12);
  // Lambda^2_14 is also the kernel of wedge with *Omega.
  CHECK(wedge(d.part14, ctx.star_omega()).is_zero(1e-12));
}

TEST_CASE("derivative of the metric data along a 3-form") {
  Rng rng(19);
  const PositiveThreeForm ctx(random_positive_form(rng));
  const PForm& om = ctx.omega();
  const PForm dir = random_form(rng, 3);
  const double h = 1e-4;
  const PositiveThreeForm plus(om + h * dir), minus(om - h * dir);
  const PSR m = psr_maps(ctx, dir);
  // Derivative of *Omega is *(p a).
  const PForm fd = (1.0 / (2.0 * h)) * (plus.star_omega() - minus.star_omega());
  CHECK(maxdiff(fd, ctx.hodge(m.p)) < 1e-6);
  // Derivative of the volume density is (1/3) <a, Omega> vol.
  const double dvol = (plus.volume_scale() - minus.volume_scale()) / (2.0 * h);
  CHECK(dvol == doctest::Approx(ctx.inner(dir, om) / 3.0 * ctx.volume_scale()).epsilon(1e-7));
  CHECK(maxdiff(m.p + m.r, dir) < 1e-14);
  CHECK(maxdiff(psr_maps(ctx, om).p, (4.0 / 3.0) * om) < 1e-12);
}
