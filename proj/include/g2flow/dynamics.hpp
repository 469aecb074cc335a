#pragma once

#include "g2flow/homogeneous.hpp"

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace g2flow {

enum class Termination { reached_t_end, positivity_lost, step_underflow };
std::string to_string(Termination t);

struct FlowOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0: chosen from |c| / |Q|
  int max_steps = 100000;
  // When non-empty, samples are taken exactly at these (increasing, positive)
  // times instead of at every accepted step.
  std::vector<double> output_times;
};

struct FlowTrajectory {
  Nu nu = kDefaultNu;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> velocities;  // Q_nu at each sample
  std::vector<EnergyReport> monitors;
  std::vector<double> qnorm2;  // |Q_nu|^2 in L^2
  Termination termination = Termination::reached_t_end;
  int accepted_steps = 0, rejected_steps = 0;
};

// Integrates dc/dt = Q_nu(c) with Dormand-Prince 5(4). Throws
// std::invalid_argument for a non-positive nu entry or bad options and
// NotPositiveError for a non-positive start.
FlowTrajectory flow(const HomogeneousModel& m, const Eigen::VectorXd& start, const Nu& nu, double t_end,
                    const FlowOptions& opts = {});

// Independent trajectories integrated on worker threads; results in input order.
std::vector<FlowTrajectory> flow_many(const HomogeneousModel& m, const std::vector<Eigen::VectorXd>& starts,
                                      const Nu& nu, double t_end, const FlowOptions& opts = {}, int threads = 0);

void validate_nu(const Nu& nu);

struct MonotonicityReport {
  // Largest increase between consecutive samples, relative to the initial value.
  double D_nu_increase = 0, H_increase = 0, Ct_increase = 0;
  // Largest excess of H_k over the chord through its neighbours, relative to H(0).
  double convexity_defect = 0;
  // max(|S| - D, 0) / D(0) over samples.
  double S_excess = 0;
  // max(H(0) - (5/9) D(0) t - H(t), 0) / H(0); default nu only.
  double lower_bound_defect = 0;
  bool ct_checked = false;  // Ct is only monotone for the default nu
  double tol = 1e-8;
  bool ok() const;
  std::vector<std::string> violations() const;
};

MonotonicityReport monotonicity_report(const FlowTrajectory& traj, double tol = 1e-8);

struct HitchinDerivativeReport {
  std::vector<double> times;
  std::vector<double> dH, minus_five_ninths_D;     // first derivative
  std::vector<double> d2H, five_ninths_qnorm2;     // second derivative
  double max_rel_first = 0, max_rel_second = 0;
};

// dH/dt from the chain rule along the recorded velocity; d^2H/dt^2 from
// second differences of H along short RK4 excursions of the flow.
HitchinDerivativeReport hitchin_derivative_check(const HomogeneousModel& m, const FlowTrajectory& traj);

struct DeformationForms {
  double f = 0;
  PForm alpha{1}, gamma{3};
};

// velocity = 3 f Omega + star(alpha ^ Omega) + gamma with gamma in Lambda^3_27.
DeformationForms deformation_forms(const PositiveThreeForm& ctx, const PForm& velocity);

// (2 mu0 t / 3 + 1)^{3/2}; std::domain_error past the blow-up time.
double soliton_mu(double mu0, double t);
// -3 / (2 mu0) for mu0 < 0, infinity otherwise.
double soliton_T_max(double mu0);

enum class SolitonClass { steady, shrinking, not_soliton };
std::string to_string(SolitonClass c);

struct SolitonReport {
  double mu_hat = 0;
  double residual_rel = 0;
  SolitonClass classification = SolitonClass::not_soliton;
  double T_max = std::numeric_limits<double>::infinity();
  std::string diagnostic;
};

struct SolitonTolerances {
  double mu = 1e-8;
  double residual = 1e-8;
};

SolitonReport soliton_check(const HomogeneousModel& m, const Eigen::VectorXd& coeffs, const Nu& nu = kDefaultNu,
                            const SolitonTolerances& tol = {});

struct CriticalPoint {
  Eigen::VectorXd params;
  double mu_L = 0;       // grad D_nu = mu_L grad H on the family
  double mu_scaled = 0;  // mu_L * multiplier_scale
  double mu0 = 0;        // implied soliton constant -mu_L / 3
  double H = 0;
  double residual = 0;
  int iterations = 0;
  bool converged = false;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, CriticalPoint last) : std::runtime_error(what), last_(std::move(last)) {}
  const CriticalPoint& last() const { return last_; }

 private:
  CriticalPoint last_;
};

// Damped Newton on (params, mu_L) for grad D_nu = mu_L grad H, H = vol_total.
// Throws ModelError without a family, ConvergenceError after 100 iterations.
CriticalPoint constrained_critical(const HomogeneousModel& m, const Nu& nu = kDefaultNu,
                                   std::optional<Eigen::VectorXd> start = std::nullopt, double tol = 1e-10);

struct RescalingReport {
  double lambda = 1;
  std::vector<double> times;  // sample times of the original trajectory
  double max_rel_error = 0;
  bool complete = true;  // false if the rescaled flow stopped early
};

// Fresh flow from lambda * start sampled at lambda^{2/3} t_k, compared with lambda * c_k.
RescalingReport rescaling_check(const HomogeneousModel& m, const FlowTrajectory& traj, double lambda,
                                const FlowOptions& opts = {});

// CSV with header t,<coefficient columns>,D0,...,termination.
void write_trajectory_csv(std::ostream& os, const HomogeneousModel& m, const FlowTrajectory& traj);
std::string trajectory_csv_header(const HomogeneousModel& m);

}  // namespace g2flow
