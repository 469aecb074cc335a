#include "g2flow/dynamics.hpp"
#include "g2flow/rng.hpp"
#include "g2flow/suite.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace g2flow;

namespace {

Eigen::VectorXd squashed(const HomogeneousModel& m, double a, double b) {
  return m.coeffs_from_params(Eigen::Vector2d(a, b));
}

}  // namespace

TEST_CASE("soliton scaling function") {
  CHECK(soliton_T_max(-120.0) == doctest::Approx(1.0 / 80.0));
  CHECK(std::isinf(soliton_T_max(0.0)));
  CHECK(soliton_mu(-120.0, 0.0) == 1.0);
  CHECK(soliton_mu(-120.0, 0.01) == doctest::Approx(std::pow(0.2, 1.5)));
  CHECK(soliton_mu(3.0, 1.0) == doctest::Approx(std::pow(3.0, 1.5)));
  CHECK_THROWS_AS(soliton_mu(-120.0, 0.02), std::domain_error);
}

TEST_CASE("flow from the round point follows the soliton") {
  const HomogeneousModel m = builtin_model("squashed_s7");
  const Eigen::VectorXd c0 = squashed(m, 1.0, 1.0);
  const FlowTrajectory tr = flow(m, c0, kDefaultNu, 0.008);
  CHECK(tr.termination == Termination::reached_t_end);
  CHECK(tr.times.back() == 0.008);
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const Eigen::VectorXd exact = soliton_mu(-120.0, tr.times[k]) * c0;
    CHECK((tr.states[k] - exact).norm() < 1e-7 * exact.norm());
  }
}

TEST_CASE("flow through the finite-time singularity stops early") {
  const HomogeneousModel m = builtin_model("squashed_s7");
  const FlowTrajectory tr = flow(m, squashed(m, 1.0, 1.0), kDefaultNu, 0.02);
  CHECK(tr.termination != Termination::reached_t_end);
  CHECK(tr.times.back() <= (1.0 / 80.0) * (1.0 + 1e-9));
  CHECK(tr.times.back() > 0.0124);
}

TEST_CASE("invalid inputs are rejected") {
  const HomogeneousModel m = builtin_model("squashed_s7");
  CHECK_THROWS_AS(flow(m, squashed(m, 0.0, 1.0), kDefaultNu, 0.01), NotPositiveError);
  CHECK_THROWS_AS(flow(m, squashed(m, 1.0, 1.0), {7.0, 84.0, 0.0, 1.0}, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(flow(m, squashed(m, 1.0, 1.0), kDefaultNu, -1.0), std::invalid_argument);
}

TEST_CASE("monotone quantities along a generic squashed flow") {
  const HomogeneousModel m = builtin_model("squashed_s7");
  const FlowTrajectory tr = flow(m, squashed(m, 1.3, 0.8), kDefaultNu, 0.004);
  REQUIRE(tr.termination == Termination::reached_t_end);
  const MonotonicityReport rep = monotonicity_report(tr);
  CHECK_MESSAGE(rep.ok(), rep.violations().size());
  CHECK(rep.ct_checked);
  for (std::size_t k = 0; k < tr.monitors.size(); ++k) CHECK(std::abs(tr.monitors[k].S) <= tr.monitors[k].D);
}

TEST_CASE("monotonicity report catches a fabricated increase") {
  const HomogeneousModel m = builtin_model("squashed_s7");
  FlowTrajectory tr = flow(m, squashed(m, 1.3, 0.8), kDefaultNu, 0.001);
  REQUIRE(tr.monitors.size() >= 3);
  tr.monitors[2].H = tr.monitors[1].H * 1.01;
  const MonotonicityReport rep = monotonicity_report(tr);
  CHECK_FALSE(rep.ok());
  CHECK(rep.H_increase > 1e-3);
}

TEST_CASE("dH/dt = -(5/9) D along the flow") {
  const HomogeneousModel m = builtin_model("squashed_s7");
  const FlowTrajectory tr = flow(m, squashed(m, 1.1, 0.9), kDefaultNu, 0.003);
  const HitchinDerivativeReport hd = hitchin_derivative_check(m, tr);
  REQUIRE_FALSE(hd.times.empty());
  CHECK(hd.max_rel_first < 1e-6);
  CHECK(hd.max_rel_second < 1e-4);
}

TEST_CASE("worker threads return trajectories in input order, identical to serial runs") {
  const HomogeneousModel m = builtin_model("squashed_s7");
  const std::vector<Eigen::VectorXd> starts{squashed(m, 1.2, 0.9), squashed(m, 0.9, 1.1), squashed(m, 1.0, 1.0)};
  const auto many = flow_many(m, starts, kDefaultNu, 0.001, {}, 3);
  REQUIRE(many.size() == starts.size());
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const FlowTrajectory one = flow(m, starts[k], kDefaultNu, 0.001);
    REQUIRE(one.times.size() == many[k].times.size());
    CHECK(one.states.back() == many[k].states.back());
    CHECK(one.times == many[k].times);
  }
}

TEST_CASE("trajectory CSV layout") {
  const HomogeneousModel m = builtin_model("squashed_s7");
  FlowOptions opts;
  opts.output_times = {0.001, 0.002};
  const FlowTrajectory tr = flow(m, squashed(m, 1.0, 1.0), kDefaultNu, 0.002, opts);
  CHECK(tr.times.size() == 3);
  std::ostringstream a, b;
  write_trajectory_csv(a, m, tr);
  write_trajectory_csv(b, m, flow(m, squashed(m, 1.0, 1.0), kDefaultNu, 0.002, opts));
  CHECK(a.str() == b.str());
  std::istringstream in(a.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,c1,c2,D0,D1,D2,D3,D_nu,H,S,C,Ct,Qnorm2,tau0sq,tau1sq,tau2sq,tau3sq,termination");
  int rows = 0;
  std::string last;
  while (std::getline(in, line)) {
    ++rows;
    last = line;
  }
  CHECK(rows == 3);
  CHECK(last.substr(last.rfind(',') + 1) == "reached_t_end");
}

TEST_CASE("soliton classification") {
  const HomogeneousModel m = builtin_model("squashed_s7");
  const SolitonReport round = soliton_check(m, squashed(m, 1.0, 1.0));
  CHECK(round.classification == SolitonClass::shrinking);
  CHECK(round.mu_hat == doctest::Approx(-120.0).epsilon(1e-9));
  CHECK(round.T_max == doctest::Approx(1.0 / 80.0).epsilon(1e-9));
  const SolitonReport generic = soliton_check(m, squashed(m, 1.3, 0.8));
  CHECK(generic.classification == SolitonClass::not_soliton);
  CHECK_FALSE(generic.diagnostic.empty());
  const HomogeneousModel flat = builtin_model("flat7");
  Rng rng(41);
  CHECK(soliton_check(flat, random_invariant_point(flat, rng)).classification == SolitonClass::steady);
}

TEST_CASE("constrained critical point of the squashed family") {
  const HomogeneousModel m = builtin_model("squashed_s7");
  const CriticalPoint cp = constrained_critical(m, kDefaultNu, Eigen::VectorXd(Eigen::Vector2d(2.0, 0.5)));
  CHECK(cp.converged);
  CHECK(cp.params[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(cp.params[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(cp.mu_scaled == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(cp.mu_L == doctest::Approx(360.0).epsilon(1e-9));
  CHECK(cp.mu0 == doctest::Approx(-120.0).epsilon(1e-9));
  CHECK_THROWS_AS(constrained_critical(builtin_model("heisenberg7")), ModelError);
}

TEST_CASE("velocity splits into f, alpha, gamma") {
  const HomogeneousModel m = builtin_model("heisenberg7");
  Rng rng(42);
  const Eigen::VectorXd c = random_invariant_point(m, rng);
  const StructureState st = evaluate_structure(m, c);
  const PForm v = m.form_from_coeffs(gradient_Q(m, c));
  const DeformationForms df = deformation_forms(st.ctx, v);
  const PForm back = 3.0 * df.f * st.ctx.omega() + st.ctx.hodge(wedge(df.alpha, st.ctx.omega())) + df.gamma;
  CHECK((back - v).max_abs() < 1e-10 * v.max_abs());
  CHECK(std::abs(st.ctx.inner(df.gamma, st.ctx.omega())) < 1e-10 * std::sqrt(st.ctx.norm2(df.gamma)) + 1e-14);
}

TEST_CASE("rescaled trajectory") {
  const HomogeneousModel m = builtin_model("squashed_s7");
  const FlowTrajectory tr = flow(m, squashed(m, 1.2, 0.9), kDefaultNu, 0.002);
  const RescalingReport r = rescaling_check(m, tr, 2.0);
  CHECK(r.complete);
  CHECK(r.max_rel_error < 1e-6);
}
