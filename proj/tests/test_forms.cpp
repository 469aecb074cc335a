#include "g2flow/rng.hpp"

#include <doctest.h>

#include "oracle.hpp"

using namespace g2flow;

namespace {

double maxdiff(const PForm& a, const PForm& b) { return (a.coeffs() - b.coeffs()).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("degree tables") {
  int total = 0;
  for (int p = 0; p <= 7; ++p) {
    CHECK(int(degree_masks(p).size()) == form_dim(p));
    for (int i = 0; i < form_dim(p); ++i) CHECK(mask_position(degree_masks(p)[i]) == i);
    total += form_dim(p);
  }
  CHECK(total == 128);
  CHECK(degree_masks(3)[0] == Mask(0b0000111));
  CHECK(degree_masks(3).back() == Mask(0b1110000));
}

TEST_CASE("elementary forms sort their labels with sign") {
  CHECK(PForm::elementary({2, 1}).component({1, 2}) == -1.0);
  CHECK(PForm::elementary({3, 1, 2}).component({1, 2, 3}) == 1.0);
  CHECK(PForm::elementary({1, 2, 3}).component({2, 1, 3}) == -1.0);
}

TEST_CASE("wedge matches the permutation-sum oracle") {
  Rng rng(1);
  for (int p = 0; p <= 4; ++p)
    for (int q = 0; p + q <= 5; ++q) {
      const PForm a = random_form(rng, p), b = random_form(rng, q);
      CHECK(maxdiff(wedge(a, b), oracle::wedge(a, b)) < 1e-13);
    }
}

TEST_CASE("wedge is graded commutative and associative") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int p = trial % 4, q = (trial / 4) % 3 + 1;
    const PForm a = random_form(rng, p), b = random_form(rng, q), c = random_form(rng, 1);
    const double s = (p * q) % 2 ? -1.0 : 1.0;
    CHECK(maxdiff(wedge(a, b), s * wedge(b, a)) < 1e-13);
    if (p + q + 1 <= 7) CHECK(maxdiff(wedge(wedge(a, b), c), wedge(a, wedge(b, c))) < 1e-12);
  }
  const PForm xi = random_form(rng, 1);
  CHECK(wedge(xi, xi).is_zero(1e-15));
}

TEST_CASE("wedge_matrix agrees with wedge") {
  Rng rng(3);
  const PForm a = random_form(rng, 2), b = random_form(rng, 3);
  CHECK((wedge_matrix(a, 3) * b.coeffs() - wedge(a, b).coeffs()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("interior product matches the oracle and is an antiderivation") {
  Rng rng(4);
  for (int p = 1; p <= 5; ++p) {
    const Vector7 v = rng.vector(7);
    const PForm a = random_form(rng, p);
    CHECK(maxdiff(interior(v, a), oracle::interior(v, a)) < 1e-13);
    CHECK((interior_matrix(v, p) * a.coeffs() - interior(v, a).coeffs()).cwiseAbs().maxCoeff() < 1e-13);
    if (p >= 2) CHECK(interior(v, interior(v, a)).is_zero(1e-13));
    if (p <= 3) {
      const PForm b = random_form(rng, 2);
      const double s = (p % 2) ? -1.0 : 1.0;
      const PForm lhs = interior(v, wedge(a, b));
      const PForm rhs = wedge(interior(v, a), b) + s * wedge(a, interior(v, b));
      CHECK(maxdiff(lhs, rhs) < 1e-12);
    }
  }
}

TEST_CASE("contract_sign contracts into the first slots") {
  Mask rest = 0;
  // e_1 _| e^{123} = e^{23}
  CHECK(contract_sign(0b1, 0b111, &rest) == 1);
  CHECK(rest == Mask(0b110));
  // e_2 _| e^{123} = -e^{13}
  CHECK(contract_sign(0b10, 0b111, &rest) == -1);
  CHECK(rest == Mask(0b101));
  CHECK(contract_sign(0b1000, 0b111, &rest) == 0);
}

TEST_CASE("pullback matches the oracle and composes contravariantly") {
  Rng rng(5);
  const Matrix7 A = rng.matrix7(), B = rng.matrix7();
  for (int p = 1; p <= 3; ++p) {
    const PForm a = random_form(rng, p);
    CHECK(maxdiff(pullback(A, a), oracle::pullback(A, a)) < 1e-12);
    CHECK(maxdiff(pullback(A * B, a), pullback(B, pullback(A, a))) < 1e-11);
  }
  const PForm a = random_form(rng, 2), b = random_form(rng, 3);
  CHECK(maxdiff(pullback(A, wedge(a, b)), wedge(pullback(A, a), pullback(A, b))) < 1e-11);
  CHECK(std::abs(pullback(A, top_form())[0] - A.determinant()) < 1e-12);
}

TEST_CASE("endo_apply is the derivative of pullback at the identity") {
  Rng rng(6);
  const Matrix7 X = rng.matrix7();
  const PForm a = random_form(rng, 3);
  const double h = 1e-4;
  const Matrix7 I = Matrix7::Identity();
  const PForm fd = (1.0 / (2.0 * h)) * (pullback(I + h * X, a) - pullback(I - h * X, a));
  // The derivation acts by the transpose of the pullback generator.
  CHECK(maxdiff(endo_apply(X.transpose(), a), fd) < 1e-7);
}

TEST_CASE("top pairing is a signed permutation") {
  for (int p = 0; p <= 7; ++p) {
    const Eigen::MatrixXd& W = top_pairing(p);
    CHECK((W.cwiseAbs().colwise().sum().array() == 1.0).all());
    CHECK((W.cwiseAbs().rowwise().sum().array() == 1.0).all());
  }
}

TEST_CASE("standard form has seven terms with the fixed signs") {
  const PForm om = standard_form();
  int nonzero = 0;
  for (int i = 0; i < 35; ++i) nonzero += om[i] != 0.0;
  CHECK(nonzero == 7);
  CHECK(om.component({1, 2, 3}) == 1.0);
  CHECK(om.component({2, 5, 7}) == -1.0);
  CHECK(om.component({3, 5, 6}) == -1.0);
}
