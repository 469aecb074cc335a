#include "g2flow/dynamics.hpp"
#include "g2flow/linearized.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>

using namespace g2flow;

namespace {

Eigen::VectorXd squashed(const HomogeneousModel& m, double a, double b) {
  return m.coeffs_from_params(Eigen::Vector2d(a, b));
}

}  // namespace

TEST_CASE("nearly parallel gate") {
  const HomogeneousModel m = builtin_model("squashed_s7");
  CHECK(std::abs(require_nearly_parallel(m, squashed(m, 1.0, 1.0))) == doctest::Approx(12.0).epsilon(1e-12));
  // The same structure at another scale: tau0 scales like |Omega|^{-1/3}.
  CHECK(std::abs(require_nearly_parallel(m, 8.0 * squashed(m, 1.0, 1.0))) == doctest::Approx(6.0).epsilon(1e-12));
  CHECK_THROWS_AS(require_nearly_parallel(m, squashed(m, 1.3, 0.8)), NotNearlyParallelError);
  CHECK_THROWS_AS(linearize_Q(m, squashed(m, 1.3, 0.8)), NotNearlyParallelError);
  const HomogeneousModel h = builtin_model("heisenberg7");
  CHECK_THROWS_AS(require_nearly_parallel(h, Eigen::Map<const Eigen::VectorXd>(h.data().reference.data(), 35)),
                  NotNearlyParallelError);
}

TEST_CASE("three assemblies of DQ agree at the round point") {
  const HomogeneousModel m = builtin_model("squashed_s7");
  const Eigen::VectorXd c = squashed(m, 1.0, 1.0);
  const LinearizationQ lq = linearize_Q(m, c);
  CHECK(lq.closed_vs_factored < 1e-12);
  CHECK(lq.closed_vs_jacobian < 1e-6);
  CHECK(lq.factored_vs_jacobian < 1e-6);
  CHECK(lq.invariance_residual < 1e-12);
  const double t2 = lq.closed.tau0 * lq.closed.tau0;
  // Q is homogeneous of degree 1/3, so DQ(Omega) = Q / 3 = -(5/18) tau0^2 Omega.
  CHECK((lq.closed.matrix * c + (5.0 / 18.0) * t2 * c).norm() < 1e-8 * t2 * c.norm());
  CHECK((lq.jacobian.matrix * c - gradient_Q(m, c) / 3.0).norm() < 1e-6 * t2 * c.norm());
}

TEST_CASE("DS, P and their symmetry") {
  const HomogeneousModel m = builtin_model("squashed_s7");
  const Eigen::VectorXd c = squashed(m, 1.0, 1.0);
  const LinearizationS ls = linearize_soliton(m, c);
  const double t2 = ls.direct.tau0 * ls.direct.tau0;
  CHECK(ls.direct_vs_factored < 1e-12);
  CHECK((ls.direct.matrix * c - (5.0 / 9.0) * t2 * c).norm() < 1e-8 * t2 * c.norm());
  const LinearOperatorOnInvariants P = soliton_P(m, c);
  CHECK(P.gram_asymmetry() < 1e-8);
  CHECK(P.singular_values.size() == 2);
  CHECK(P.singular_values[0] >= P.singular_values[1]);
  // Without invariant 1-forms P reduces to DS.
  CHECK((P.matrix - ls.direct.matrix).cwiseAbs().maxCoeff() < 1e-12 * t2);
}

TEST_CASE("weighted operator norm") {
  Eigen::MatrixXd G(2, 2);
  G << 4.0, 0.0, 0.0, 1.0;
  Eigen::MatrixXd A(2, 2);
  A << 0.0, 1.0, 0.0, 0.0;
  // |A x|_G / |x|_G with x = e2: |(1, 0)|_G = 2, |e2|_G = 1.
  CHECK(weighted_operator_norm(A, G) == doctest::Approx(2.0));
  CHECK(weighted_operator_norm(Eigen::MatrixXd::Identity(2, 2), G) == doctest::Approx(1.0));
}

TEST_CASE("star d on invariant 27-forms and the deformation space") {
  const HomogeneousModel m = builtin_model("squashed_s7");
  const Eigen::VectorXd c = squashed(m, 1.0, 1.0);
  const StarDSpectrum sp = star_d_spectrum_27(m, c);
  REQUIRE(sp.eigenvalues.size() == 1);
  CHECK(sp.leakage < 1e-12);
  CHECK(sp.eigenvalues[0].imag() == 0.0);
  // Neither -tau0 nor -3 tau0: the squashed family carries no invariant
  // infinitesimal deformations.
  CHECK_FALSE(sp.near_minus_tau0[0]);
  CHECK_FALSE(sp.near_minus_3tau0[0]);
  const DeformationSpace ds = deformation_space(m, c);
  CHECK(ds.sigma.cols() == 0);
  CHECK(ds.kernel_P.cols() == 0);
  CHECK(ds.kernel_lambda.cols() == 2);
}

TEST_CASE("operator JSON export") {
  const HomogeneousModel m = builtin_model("squashed_s7");
  const Eigen::VectorXd c = squashed(m, 1.0, 1.0);
  const LinearizationQ lq = linearize_Q(m, c);
  const std::string text = operator_to_json(lq.closed, "DQ");
  const auto j = nlohmann::json::parse(text);
  CHECK(j.at("schema_version") == 1);
  CHECK(j.at("kind") == "DQ");
  CHECK(j.at("matrix").size() == 2);
  CHECK(j.at("gram").size() == 2);
  CHECK(j.at("basepoint").size() == 2);
  CHECK(j.at("singular_values").size() == 2);
  CHECK(j.at("matrix")[1][0].get<double>() == lq.closed.matrix(1, 0));
  CHECK(operator_to_json(lq.closed, "DQ") == text);
}
