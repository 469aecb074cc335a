#include "g2flow/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <sstream>
#include <thread>

namespace g2flow {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::reached_t_end: return "reached_t_end";
    case Termination::positivity_lost: return "positivity_lost";
    case Termination::step_underflow: return "step_underflow";
  }
  return "unknown";
}

std::string to_string(SolitonClass c) {
  switch (c) {
    case SolitonClass::steady: return "steady";
    case SolitonClass::shrinking: return "shrinking";
    case SolitonClass::not_soliton: return "not_soliton";
  }
  return "unknown";
}

void validate_nu(const Nu& nu) {
  for (double v : nu)
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("nu entries must be finite and positive");
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

void record(const HomogeneousModel& m, FlowTrajectory& traj, double t, const Eigen::VectorXd& y,
            const Eigen::VectorXd& q) {
  traj.times.push_back(t);
  traj.states.push_back(y);
  traj.velocities.push_back(q);
  traj.monitors.push_back(energies(m, y, traj.nu));
  PositiveThreeForm ctx(m.form_from_coeffs(y), m.orientation());
  const Eigen::MatrixXd G = l2_gram(m, ctx, ctx.volume_scale() * m.vol_total());
  traj.qnorm2.push_back(q.dot(G * q));
}

double rel_diff(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

}  // namespace

FlowTrajectory flow(const HomogeneousModel& m, const Eigen::VectorXd& start, const Nu& nu, double t_end,
                    const FlowOptions& opts) {
  validate_nu(nu);
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("t_end must be finite and >= 0");
  if (!(opts.rtol > 0.0) || !(opts.atol > 0.0)) throw std::invalid_argument("rtol and atol must be positive");
  if (start.size() != m.n_inv3()) throw std::invalid_argument("start has the wrong number of coefficients");
  double prev = 0.0;
  for (double t : opts.output_times) {
    if (!(t > prev) || t > t_end) throw std::invalid_argument("output_times must increase within (0, t_end]");
    prev = t;
  }

  auto Q = [&](const Eigen::VectorXd& y) { return gradient_Q(m, y, nu); };

  FlowTrajectory traj;
  traj.nu = nu;
  Eigen::VectorXd y = start;
  Eigen::VectorXd k1 = Q(y);  // throws NotPositiveError for a bad start
  double t = 0.0;
  record(m, traj, t, y, k1);

  const bool sparse = !opts.output_times.empty();
  std::size_t next_out = 0;

  double h = opts.initial_step;
  if (!(h > 0.0)) {
    const double qn = k1.norm();
    h = qn > 0.0 ? 1e-3 * std::max(y.norm(), 1e-12) / qn : t_end;
  }

  bool last_positivity = false;
  int steps = 0;
  while (t < t_end) {
    if (++steps > opts.max_steps) {
      traj.termination = Termination::step_underflow;
      break;
    }
    const double target = sparse ? opts.output_times[next_out] : t_end;
    // Snap onto the target when the proposed step nearly reaches it.
    const bool hit = t + h >= target - 1e-9 * h;
    const double h_free = h;
    h = hit ? target - t : h;
    const double h_min = 1e-14 * std::max(1.0, std::abs(t));
    if (h < h_min && !hit) {
      traj.termination = last_positivity ? Termination::positivity_lost : Termination::step_underflow;
      break;
    }

    Eigen::VectorXd y_new, k7, err;
    bool positive = true;
    try {
      const Eigen::VectorXd k2 = Q(y + h * (a21 * k1));
      const Eigen::VectorXd k3 = Q(y + h * (a31 * k1 + a32 * k2));
      const Eigen::VectorXd k4 = Q(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
      const Eigen::VectorXd k5 = Q(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const Eigen::VectorXd k6 = Q(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      k7 = Q(y_new);
      err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    } catch (const NotPositiveError&) {
      positive = false;
    } catch (const InconsistentDataError&) {
      // Stage landed on a nearly degenerate form where the torsion fit loses accuracy.
      positive = false;
    }
    if (!positive) {
      last_positivity = true;
      ++traj.rejected_steps;
      h *= 0.25;
      continue;
    }
    last_positivity = false;

    double acc = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      const double sc = opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      acc += (err[i] / sc) * (err[i] / sc);
    }
    const double en = std::sqrt(acc / double(y.size()));
    const double factor = std::clamp(en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0, 0.2, 5.0);
    if (en <= 1.0) {
      t = hit ? target : t + h;
      y = y_new;
      k1 = k7;
      ++traj.accepted_steps;
      if (!sparse || hit) {
        if (sparse) ++next_out;
        record(m, traj, t, y, k1);
        if (sparse && next_out == opts.output_times.size()) break;
      }
      // A step shortened to land on an output time does not shrink the next one.
      h = hit ? std::max(h * factor, h_free) : h * factor;
    } else {
      ++traj.rejected_steps;
      h *= factor;
    }
  }
  return traj;
}

std::vector<FlowTrajectory> flow_many(const HomogeneousModel& m, const std::vector<Eigen::VectorXd>& starts,
                                      const Nu& nu, double t_end, const FlowOptions& opts, int threads) {
  const std::size_t n = starts.size();
  std::vector<FlowTrajectory> out(n);
  std::vector<std::exception_ptr> errors(n);
  if (threads <= 0) threads = int(std::max(1u, std::thread::hardware_concurrency()));
  threads = int(std::min<std::size_t>(std::size_t(threads), std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = flow(m, starts[i], nu, t_end, opts);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

bool MonotonicityReport::ok() const { return violations().empty(); }

std::vector<std::string> MonotonicityReport::violations() const {
  std::vector<std::string> v;
  if (D_nu_increase > tol) v.push_back("D_nu increased along the flow");
  if (H_increase > tol) v.push_back("Hitchin volume increased along the flow");
  if (ct_checked && Ct_increase > tol) v.push_back("4D + 7H increased along the flow");
  if (convexity_defect > tol) v.push_back("Hitchin volume not convex in t");
  if (S_excess > tol) v.push_back("|S| exceeds D");
  if (lower_bound_defect > tol) v.push_back("H(t) below H(0) - (5/9) D(0) t");
  return v;
}

MonotonicityReport monotonicity_report(const FlowTrajectory& traj, double tol) {
  MonotonicityReport r;
  r.tol = tol;
  const bool standard = traj.nu == kDefaultNu;
  r.ct_checked = standard;
  const auto& M = traj.monitors;
  if (M.empty()) return r;
  const double D0 = M[0].D_nu, H0 = M[0].H, Ct0 = M[0].Ct;
  auto rel = [](double x, double scale) { return scale > 0.0 ? x / scale : (x > 0.0 ? x : 0.0); };
  for (std::size_t k = 0; k < M.size(); ++k) {
    if (k > 0) {
      r.D_nu_increase = std::max(r.D_nu_increase, rel(M[k].D_nu - M[k - 1].D_nu, D0));
      r.H_increase = std::max(r.H_increase, rel(M[k].H - M[k - 1].H, H0));
      r.Ct_increase = std::max(r.Ct_increase, rel(M[k].Ct - M[k - 1].Ct, Ct0));
    }
    if (k > 0 && k + 1 < M.size()) {
      const double t0 = traj.times[k - 1], t1 = traj.times[k], t2 = traj.times[k + 1];
      const double w = (t1 - t0) / (t2 - t0);
      const double chord = (1.0 - w) * M[k - 1].H + w * M[k + 1].H;
      r.convexity_defect = std::max(r.convexity_defect, rel(M[k].H - chord, H0));
    }
    r.S_excess = std::max(r.S_excess, rel(std::abs(M[k].S) - M[k].D, M[0].D));
    if (standard) {
      const double bound = H0 - 5.0 / 9.0 * M[0].D * traj.times[k];
      r.lower_bound_defect = std::max(r.lower_bound_defect, rel(bound - M[k].H, H0));
    }
  }
  return r;
}

HitchinDerivativeReport hitchin_derivative_check(const HomogeneousModel& m, const FlowTrajectory& traj) {
  HitchinDerivativeReport r;
  const std::size_t n = traj.times.size();
  auto H = [&](const Eigen::VectorXd& x) { return hitchin(m, x); };
  auto Q = [&](const Eigen::VectorXd& x) { return gradient_Q(m, x, traj.nu); };
  auto rk4 = [&](const Eigen::VectorXd& y, const Eigen::VectorXd& f0, double dt) {
    const Eigen::VectorXd k2 = Q(y + 0.5 * dt * f0);
    const Eigen::VectorXd k3 = Q(y + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = Q(y + dt * k3);
    return Eigen::VectorXd(y + dt / 6.0 * (f0 + 2.0 * k2 + 2.0 * k3 + k4));
  };
  const std::size_t lo = n >= 3 ? 1 : 0, hi = n >= 3 ? n - 1 : n;
  for (std::size_t k = lo; k < hi; ++k) {
    const Eigen::VectorXd& c = traj.states[k];
    const Eigen::VectorXd& q = traj.velocities[k];
    double dH = 0.0, d2H = 0.0;
    if (q.norm() > 0.0) {
      dH = directional_derivative(H, c, q, kFdRelStep * c.norm() / q.norm());
      const double delta = kFdRelStep * c.norm() / q.norm();
      const double h0 = H(c);
      auto second = [&](double dt) { return (H(rk4(c, q, dt)) - 2.0 * h0 + H(rk4(c, q, -dt))) / (dt * dt); };
      d2H = (4.0 * second(0.5 * delta) - second(delta)) / 3.0;
    }
    r.times.push_back(traj.times[k]);
    r.dH.push_back(dH);
    r.minus_five_ninths_D.push_back(-5.0 / 9.0 * traj.monitors[k].D_nu);
    r.d2H.push_back(d2H);
    r.five_ninths_qnorm2.push_back(5.0 / 9.0 * traj.qnorm2[k]);
    r.max_rel_first = std::max(r.max_rel_first, rel_diff(r.dH.back(), r.minus_five_ninths_D.back()));
    r.max_rel_second = std::max(r.max_rel_second, rel_diff(r.d2H.back(), r.five_ninths_qnorm2.back()));
  }
  return r;
}

DeformationForms deformation_forms(const PositiveThreeForm& ctx, const PForm& velocity) {
  DeformationForms out;
  const Decomposition3 parts = decompose3(ctx, velocity);
  out.f = ctx.inner(velocity, ctx.omega()) / 21.0;
  Eigen::MatrixXd M(form_dim(3), kDim);
  for (int i = 0; i < kDim; ++i) {
    PForm e(1);
    e.coeffs()[i] = 1.0;
    M.col(i) = ctx.hodge(wedge(e, ctx.omega())).coeffs();
  }
  const Eigen::MatrixXd& G = ctx.gram(3);
  const Eigen::MatrixXd MtG = M.transpose() * G;
  out.alpha = PForm(1);
  out.alpha.coeffs() = (MtG * M).ldlt().solve(MtG * parts.part7.coeffs());
  out.gamma = parts.part27;
  return out;
}

double soliton_T_max(double mu0) {
  return mu0 < 0.0 ? -3.0 / (2.0 * mu0) : std::numeric_limits<double>::infinity();
}

double soliton_mu(double mu0, double t) {
  const double base = 2.0 * mu0 * t / 3.0 + 1.0;
  if (!(base > 0.0)) throw std::domain_error("soliton_mu: t is at or beyond the blow-up time");
  return std::pow(base, 1.5);
}

SolitonReport soliton_check(const HomogeneousModel& m, const Eigen::VectorXd& coeffs, const Nu& nu,
                            const SolitonTolerances& tol) {
  SolitonReport r;
  PositiveThreeForm ctx(m.form_from_coeffs(coeffs), m.orientation());
  const Eigen::MatrixXd G = l2_gram(m, ctx, ctx.volume_scale() * m.vol_total());
  const Eigen::VectorXd q = gradient_Q(m, coeffs, nu);
  const double qn = std::sqrt(q.dot(G * q));
  r.mu_hat = q.dot(G * coeffs) / coeffs.dot(G * coeffs);
  if (qn == 0.0) {
    r.mu_hat = 0.0;
    r.residual_rel = 0.0;
    r.classification = SolitonClass::steady;
    return r;
  }
  const Eigen::VectorXd res = q - r.mu_hat * coeffs;
  r.residual_rel = std::sqrt(std::max(res.dot(G * res), 0.0)) / qn;
  std::ostringstream diag;
  if (r.residual_rel > tol.residual) {
    r.classification = SolitonClass::not_soliton;
    diag << "Q is not a multiple of Omega (relative residual " << r.residual_rel << ")";
  } else if (std::abs(r.mu_hat) <= tol.mu) {
    r.classification = SolitonClass::steady;
  } else if (r.mu_hat < 0.0) {
    r.classification = SolitonClass::shrinking;
    r.T_max = soliton_T_max(r.mu_hat);
  } else {
    r.classification = SolitonClass::not_soliton;
    diag << "positive multiplier " << r.mu_hat << "; expanding solitons do not exist, so this indicates an error";
  }
  r.diagnostic = diag.str();
  return r;
}

namespace {

struct FamilyEval {
  Eigen::VectorXd gD, gH;
  double H = 0;
};

FamilyEval family_gradients(const HomogeneousModel& m, const Nu& nu, const Eigen::VectorXd& p) {
  const int n = int(p.size());
  auto D = [&](const Eigen::VectorXd& x) { return energy_D(m, m.coeffs_from_params(x), nu); };
  auto H = [&](const Eigen::VectorXd& x) { return hitchin(m, m.coeffs_from_params(x)); };
  FamilyEval e;
  e.gD.resize(n);
  e.gH.resize(n);
  e.H = H(p);
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd u = Eigen::VectorXd::Unit(n, j);
    const double h = kFdRelStep * std::max(std::abs(p[j]), 1e-3);
    e.gD[j] = directional_derivative(D, p, u, h);
    e.gH[j] = directional_derivative(H, p, u, h);
  }
  return e;
}

Eigen::VectorXd lagrange_residual(const FamilyEval& e, double mu, double target) {
  const int n = int(e.gD.size());
  Eigen::VectorXd F(n + 1);
  F.head(n) = e.gD - mu * e.gH;
  F[n] = e.H - target;
  return F;
}

// Residual scaled so both blocks are dimensionless.
double scaled_norm(const FamilyEval& e, const Eigen::VectorXd& F, double target) {
  const int n = int(e.gD.size());
  const double s = std::max(e.gD.norm(), 1e-300);
  return std::hypot(F.head(n).norm() / s, F[n] / target);
}

}  // namespace

CriticalPoint constrained_critical(const HomogeneousModel& m, const Nu& nu, std::optional<Eigen::VectorXd> start,
                                   double tol) {
  validate_nu(nu);
  if (!m.data().family) throw ModelError("model '" + m.name() + "' has no invariant family");
  const InvariantFamily& fam = *m.data().family;
  const int n = fam.param_dim();
  Eigen::VectorXd p = start ? *start : Eigen::Map<const Eigen::VectorXd>(fam.default_params.data(), n);
  if (p.size() != n) throw std::invalid_argument("start has the wrong number of family parameters");
  const double target = m.vol_total();

  FamilyEval e = family_gradients(m, nu, p);
  const double gg = e.gH.squaredNorm();
  double mu = gg > 0.0 ? e.gD.dot(e.gH) / gg : 0.0;
  Eigen::VectorXd F = lagrange_residual(e, mu, target);
  double merit = scaled_norm(e, F, target);

  CriticalPoint cp;
  auto fill = [&](int it, bool conv) {
    cp.params = p;
    cp.mu_L = mu;
    cp.mu_scaled = mu * fam.multiplier_scale;
    cp.mu0 = -mu / 3.0;
    cp.H = e.H;
    cp.residual = merit;
    cp.iterations = it;
    cp.converged = conv;
  };

  for (int it = 0; it < 100; ++it) {
    if (merit <= tol) {
      fill(it, true);
      return cp;
    }
    // Jacobian of F in (p, mu): central differences of the FD gradients.
    Eigen::MatrixXd J(n + 1, n + 1);
    for (int j = 0; j < n; ++j) {
      const double h = 1e-4 * std::max(std::abs(p[j]), 1e-2);
      Eigen::VectorXd pp = p, pm = p;
      pp[j] += h;
      pm[j] -= h;
      const Eigen::VectorXd Fp = lagrange_residual(family_gradients(m, nu, pp), mu, target);
      const Eigen::VectorXd Fm = lagrange_residual(family_gradients(m, nu, pm), mu, target);
      J.col(j) = (Fp - Fm) / (2.0 * h);
    }
    J.col(n).head(n) = -e.gH;
    J(n, n) = 0.0;
    const Eigen::VectorXd step = J.colPivHouseholderQr().solve(-F);

    double alpha = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
      const Eigen::VectorXd p_try = p + alpha * step.head(n);
      const double mu_try = mu + alpha * step[n];
      try {
        FamilyEval e_try = family_gradients(m, nu, p_try);
        const Eigen::VectorXd F_try = lagrange_residual(e_try, mu_try, target);
        const double merit_try = scaled_norm(e_try, F_try, target);
        if (std::isfinite(merit_try) && merit_try < (1.0 - 1e-4 * alpha) * merit) {
          p = p_try;
          mu = mu_try;
          e = std::move(e_try);
          F = F_try;
          merit = merit_try;
          moved = true;
          break;
        }
      } catch (const NotPositiveError&) {
      }
    }
    if (!moved) {
      fill(it + 1, merit <= tol);
      if (cp.converged) return cp;
      // Line search stalled at the noise floor of the finite differences.
      if (merit <= 1e3 * tol) {
        cp.converged = true;
        return cp;
      }
      throw ConvergenceError("constrained_critical: line search failed", cp);
    }
  }
  fill(100, merit <= tol);
  if (cp.converged) return cp;
  throw ConvergenceError("constrained_critical: Newton did not converge in 100 iterations", cp);
}

RescalingReport rescaling_check(const HomogeneousModel& m, const FlowTrajectory& traj, double lambda,
                                const FlowOptions& opts) {
  RescalingReport r;
  r.lambda = lambda;
  if (traj.times.empty()) return r;
  const double s = std::pow(lambda, 2.0 / 3.0);
  FlowOptions o = opts;
  o.output_times.clear();
  std::vector<std::size_t> idx;
  for (std::size_t k = 1; k < traj.times.size(); ++k) {
    const double t = s * traj.times[k];
    if (!o.output_times.empty() && !(t > o.output_times.back())) continue;
    o.output_times.push_back(t);
    idx.push_back(k);
  }
  const double t_end = o.output_times.empty() ? 0.0 : o.output_times.back();
  const FlowTrajectory scaled = flow(m, lambda * traj.states[0], traj.nu, t_end, o);
  r.times.push_back(traj.times[0]);
  r.max_rel_error = (scaled.states[0] - lambda * traj.states[0]).norm() / (lambda * traj.states[0]).norm();
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (j + 1 >= scaled.states.size()) {
      r.complete = false;
      break;
    }
    const Eigen::VectorXd ref = lambda * traj.states[idx[j]];
    r.times.push_back(traj.times[idx[j]]);
    r.max_rel_error = std::max(r.max_rel_error, (scaled.states[j + 1] - ref).norm() / ref.norm());
  }
  return r;
}

std::string trajectory_csv_header(const HomogeneousModel& m) {
  std::string h = "t";
  for (int i = 0; i < m.n_inv3(); ++i) h += ",c" + std::to_string(i + 1);
  h += ",D0,D1,D2,D3,D_nu,H,S,C,Ct,Qnorm2,tau0sq,tau1sq,tau2sq,tau3sq,termination";
  return h;
}

void write_trajectory_csv(std::ostream& os, const HomogeneousModel& m, const FlowTrajectory& traj) {
  os << trajectory_csv_header(m) << '\n';
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    num(traj.times[k]);
    for (int i = 0; i < traj.states[k].size(); ++i) {
      os << ',';
      num(traj.states[k][i]);
    }
    const EnergyReport& e = traj.monitors[k];
    for (double v : {e.D0, e.D1, e.D2, e.D3, e.D_nu, e.H, e.S, e.C, e.Ct, traj.qnorm2[k], e.tau0sq, e.tau1sq,
                     e.tau2sq, e.tau3sq}) {
      os << ',';
      num(v);
    }
    os << ',' << (k + 1 == traj.times.size() ? to_string(traj.termination) : std::string("running")) << '\n';
  }
}

}  // namespace g2flow
