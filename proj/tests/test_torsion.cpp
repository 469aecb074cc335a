#include "g2flow/rng.hpp"
#include "g2flow/torsion.hpp"

#include <doctest.h>

#include <cmath>

using namespace g2flow;

namespace {

double form_err(const PositiveThreeForm& ctx, const PForm& a, const PForm& b) {
  return std::sqrt(ctx.norm2(a - b));
}

}  // namespace

TEST_CASE("random torsion satisfies the type constraints") {
  Rng rng(21);
  const PositiveThreeForm ctx(random_positive_form(rng));
  const TorsionForms t = random_torsion(ctx, rng);
  CHECK(form_err(ctx, pi14(ctx, t.tau2), t.tau2) < 1e-12);
  const Decomposition3 d = decompose3(ctx, t.tau3);
  CHECK(std::sqrt(ctx.norm2(d.part1 + d.part7)) < 1e-12);
  CHECK(t.tau0 != 0.0);
}

TEST_CASE("synthetic round trip recovers every torsion form") {
  Rng rng(22);
  for (int trial = 0; trial < 25; ++trial) {
    const PositiveThreeForm ctx(random_positive_form(rng));
    const TorsionForms t = random_torsion(ctx, rng);
    const DifferentialData dd = synthesize(ctx, t);
    const TorsionForms r = torsion_forms(ctx, dd.dOmega, dd.dStarOmega);
    CHECK(r.tau0 == doctest::Approx(t.tau0).epsilon(1e-11));
    CHECK(form_err(ctx, r.tau1, t.tau1) < 1e-11);
    CHECK(form_err(ctx, r.tau2, t.tau2) < 1e-11);
    CHECK(form_err(ctx, r.tau3, t.tau3) < 1e-11);
  }
}

TEST_CASE("torsion of the structure equations read off by hand") {
  // dOmega = 5 *Omega on the standard form: tau0 = 5 and nothing else.
  const PositiveThreeForm ctx(standard_form());
  const TorsionExtraction ex = extract_torsion(ctx, 5.0 * ctx.star_omega(), PForm(5));
  CHECK(ex.forms.tau0 == doctest::Approx(5.0));
  CHECK(ex.forms.tau1.is_zero(1e-14));
  CHECK(ex.forms.tau2.is_zero(1e-14));
  CHECK(ex.forms.tau3.is_zero(1e-14));
  // d*Omega = 4 e^1 ^ *Omega is pure tau1 = e^1, which forces dOmega = 3 e^1 ^ Omega.
  const PForm e1 = PForm::elementary({1});
  const TorsionForms t = torsion_forms(ctx, 3.0 * wedge(e1, ctx.omega()), 4.0 * wedge(e1, ctx.star_omega()));
  CHECK(form_err(ctx, t.tau1, e1) < 1e-13);
  CHECK(t.tau0 == doctest::Approx(0.0));
}

TEST_CASE("inconsistent differentials are rejected") {
  Rng rng(23);
  const PositiveThreeForm ctx(random_positive_form(rng));
  const TorsionForms t = random_torsion(ctx, rng);
  DifferentialData dd = synthesize(ctx, t);
  // Shift the tau1 read from dOmega only.
  dd.dOmega += 3.0 * wedge(random_form(rng, 1), ctx.omega());
  CHECK_THROWS_AS(torsion_forms(ctx, dd.dOmega, dd.dStarOmega), InconsistentDataError);
  const TorsionExtraction ex = extract_torsion(ctx, dd.dOmega, dd.dStarOmega);
  CHECK(std::sqrt(ctx.norm2(ex.forms.tau1 - ex.tau1_tilde)) > 0.1);
}

TEST_CASE("norm identities hold on synthetic data") {
  Rng rng(24);
  for (int trial = 0; trial < 25; ++trial) {
    const PositiveThreeForm ctx(random_positive_form(rng));
    const TorsionForms t = random_torsion(ctx, rng);
    const DifferentialData dd = synthesize(ctx, t);
    const NormReport nr = norm_report(ctx, dd.dOmega, dd.dStarOmega, t);
    CHECK(nr.violations(1e-9).empty());
    // |dOmega|^2 computed here from the 4-form itself.
    const double t1 = ctx.norm2(t.tau1), t3 = ctx.norm2(t.tau3);
    CHECK(ctx.norm2(dd.dOmega) == doctest::Approx(7 * t.tau0 * t.tau0 + 36 * t1 + t3).epsilon(1e-10));
    const PForm delta = -1.0 * ctx.hodge(dd.dStarOmega);
    CHECK(ctx.norm2(delta) == doctest::Approx(48 * t1 + ctx.norm2(t.tau2)).epsilon(1e-10));
    const IntrinsicNorms in = intrinsic_norms(ctx, t);
    CHECK(nr.direct.sum() == doctest::Approx(in.sum()).epsilon(1e-9));
    CHECK(nr.direct.xi1 == doctest::Approx(in.xi1).epsilon(1e-9));
    CHECK(nr.direct.xi27 == doctest::Approx(in.xi27).epsilon(1e-9));
  }
}

TEST_CASE("norm report flags a wrong identity") {
  Rng rng(25);
  const PositiveThreeForm ctx(random_positive_form(rng));
  TorsionForms t = random_torsion(ctx, rng);
  const DifferentialData dd = synthesize(ctx, t);
  t.tau0 *= 1.1;
  CHECK_FALSE(norm_report(ctx, dd.dOmega, dd.dStarOmega, t).violations(1e-9).empty());
}

TEST_CASE("distortion constants") {
  Rng rng(26);
  for (int trial = 0; trial < 5; ++trial) {
    const PositiveThreeForm ctx(random_positive_form(rng));
    const DistortionConstants dc = distortion_constants(ctx);
    CHECK(dc.eps1 == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(dc.eps7 == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(dc.eps27 == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(dc.iota7 == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(dc.iota14 == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(dc.spread < 1e-10);
  }
}
