#include "g2flow/dynamics.hpp"
#include "g2flow/linearized.hpp"
#include "g2flow/suite.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace g2flow;
using nlohmann::ordered_json;

// 0 quiet, 1 info (default), 2 debug.
int log_level() {
  const char* env = std::getenv("G2FLOW_LOG");
  if (!env) return 1;
  const std::string s(env);
  if (s == "quiet" || s == "0" || s == "error") return 0;
  if (s == "debug" || s == "2" || s == "trace") return 2;
  return 1;
}

void log(int level, const std::string& msg) {
  if (level <= log_level()) std::cerr << "g2flow: " << msg << '\n';
}

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Config {
  std::string model = "squashed_s7";
  std::vector<double> nu{kDefaultNu.begin(), kDefaultNu.end()};
  std::vector<std::string> starts;  // comma lists of family parameters
  std::string coeffs;               // comma list of inv3 coefficients
  double t_end = 0.01;
  double rtol = 1e-9, atol = 1e-12;
  std::uint64_t seed = 42;
  std::string out;
  int threads = 0;
};

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError(what + ": cannot parse '" + item + "' as a number");
    }
  }
  if (v.empty()) throw InputError(what + ": empty list");
  return v;
}

Eigen::VectorXd to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
}

Nu get_nu(const Config& cfg) {
  if (cfg.nu.size() != 4) throw InputError("--nu expects 4 values");
  Nu nu{cfg.nu[0], cfg.nu[1], cfg.nu[2], cfg.nu[3]};
  try {
    validate_nu(nu);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  return nu;
}

HomogeneousModel get_model(const Config& cfg) {
  HomogeneousModel m = [&] {
    try {
      return load_model(cfg.model);
    } catch (const ModelError& e) {
      throw InputError(std::string("cannot load model: ") + e.what());
    }
  }();
  const ValidationReport vr = validate_model(m);
  if (!vr.ok()) {
    std::string msg = "model validation failed:";
    for (const auto& f : vr.failures) msg += "\n  " + f;
    throw InputError(msg);
  }
  log(2, "model " + m.name() + " with " + std::to_string(m.n_inv3()) + " invariant 3-forms");
  return m;
}

Eigen::VectorXd start_coeffs(const HomogeneousModel& m, const std::string& start) {
  try {
    return m.coeffs_from_params(to_vec(parse_list(start, "--start")));
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

// The single evaluation point: --coeffs, else --start, else the family default
// or the model's reference point.
Eigen::VectorXd point(const HomogeneousModel& m, const Config& cfg) {
  Eigen::VectorXd c;
  if (!cfg.coeffs.empty()) {
    c = to_vec(parse_list(cfg.coeffs, "--coeffs"));
    if (c.size() != m.n_inv3())
      throw InputError("--coeffs expects " + std::to_string(m.n_inv3()) + " values, got " + std::to_string(c.size()));
  } else if (!cfg.starts.empty()) {
    if (cfg.starts.size() > 1) throw InputError("this command takes a single --start");
    c = start_coeffs(m, cfg.starts.front());
  } else if (m.data().family) {
    c = m.coeffs_from_params(to_vec(m.data().family->default_params));
  } else {
    c = to_vec(m.data().reference);
  }
  return c;
}

// Opens --out, or returns stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw InputError("cannot open output file: " + path);
    }
  }
  std::ostream& os() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

ordered_json vec_json(const Eigen::VectorXd& v) {
  ordered_json j = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

ordered_json nu_json(const Nu& nu) { return ordered_json(std::vector<double>(nu.begin(), nu.end())); }

void write_json(const Config& cfg, const ordered_json& j) {
  Output out(cfg.out);
  out.os() << j.dump(1) << '\n';
}

int cmd_verify(const Config& cfg) {
  const HomogeneousModel m = get_model(cfg);
  SuiteOptions opts;
  opts.seed = cfg.seed;
  const SuiteResult r = run_identity_suite(m, opts);
  print_suite(std::cout, r);
  if (!cfg.out.empty()) {
    ordered_json j;
    j["schema_version"] = 1;
    j["model"] = m.name();
    j["seed"] = cfg.seed;
    j["checks"] = ordered_json::array();
    for (const auto& c : r.checks)
      j["checks"].push_back({{"group", c.group}, {"name", c.name}, {"value", c.value}, {"tol", c.tol}, {"pass", c.pass}});
    j["pass"] = r.ok();
    write_json(cfg, j);
  }
  return r.ok() ? 0 : 1;
}

int cmd_energy(const Config& cfg) {
  const HomogeneousModel m = get_model(cfg);
  const Nu nu = get_nu(cfg);
  const Eigen::VectorXd c = point(m, cfg);
  const EnergyReport e = energies(m, c, nu);
  ordered_json j;
  j["schema_version"] = 1;
  j["model"] = m.name();
  j["nu"] = nu_json(nu);
  j["coeffs"] = vec_json(c);
  j["D0"] = e.D0;
  j["D1"] = e.D1;
  j["D2"] = e.D2;
  j["D3"] = e.D3;
  j["D_nu"] = e.D_nu;
  j["D"] = e.D;
  j["H"] = e.H;
  j["S"] = e.S;
  j["C"] = e.C;
  j["Ct"] = e.Ct;
  j["W12"] = e.W12;
  j["tau0sq"] = e.tau0sq;
  j["tau1sq"] = e.tau1sq;
  j["tau2sq"] = e.tau2sq;
  j["tau3sq"] = e.tau3sq;
  j["Q"] = vec_json(gradient_Q(m, c, nu));
  write_json(cfg, j);
  return 0;
}

std::string indexed_path(const std::string& out, std::size_t k) {
  const std::filesystem::path p(out);
  std::filesystem::path q = p.parent_path() / (p.stem().string() + "_" + std::to_string(k) + p.extension().string());
  return q.string();
}

int cmd_flow(const Config& cfg) {
  const HomogeneousModel m = get_model(cfg);
  const Nu nu = get_nu(cfg);
  if (!(cfg.t_end > 0.0)) throw InputError("--t-end must be positive");
  FlowOptions opts;
  opts.rtol = cfg.rtol;
  opts.atol = cfg.atol;
  std::vector<Eigen::VectorXd> starts;
  if (cfg.starts.size() > 1) {
    if (cfg.out.empty()) throw InputError("several --start values need --out (files are named <stem>_<k><ext>)");
    for (const auto& s : cfg.starts) starts.push_back(start_coeffs(m, s));
  } else {
    starts.push_back(point(m, cfg));
  }
  for (const auto& s : starts) PositiveThreeForm(m.form_from_coeffs(s), m.orientation());

  std::vector<FlowTrajectory> trajs;
  try {
    trajs = flow_many(m, starts, nu, cfg.t_end, opts, cfg.threads);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  for (std::size_t k = 0; k < trajs.size(); ++k) {
    const auto& tr = trajs[k];
    log(1, "trajectory " + std::to_string(k) + ": " + to_string(tr.termination) + " at t = " +
               std::to_string(tr.times.back()) + " after " + std::to_string(tr.accepted_steps) + " steps");
    Output out(starts.size() > 1 ? indexed_path(cfg.out, k) : cfg.out);
    write_trajectory_csv(out.os(), m, tr);
  }
  return 0;
}

int cmd_soliton(const Config& cfg) {
  const HomogeneousModel m = get_model(cfg);
  const Nu nu = get_nu(cfg);
  const Eigen::VectorXd c = point(m, cfg);
  const SolitonReport r = soliton_check(m, c, nu);
  ordered_json j;
  j["schema_version"] = 1;
  j["model"] = m.name();
  j["nu"] = nu_json(nu);
  j["coeffs"] = vec_json(c);
  j["classification"] = to_string(r.classification);
  j["mu_hat"] = r.mu_hat;
  j["residual_rel"] = r.residual_rel;
  if (std::isfinite(r.T_max)) j["T_max"] = r.T_max;
  else j["T_max"] = nullptr;
  j["diagnostic"] = r.diagnostic;
  write_json(cfg, j);
  return 0;
}

int cmd_critical(const Config& cfg) {
  const HomogeneousModel m = get_model(cfg);
  const Nu nu = get_nu(cfg);
  if (!m.data().family) throw InputError("model " + m.name() + " has no parameter family");
  std::optional<Eigen::VectorXd> start;
  if (cfg.starts.size() > 1) throw InputError("critical takes a single --start");
  if (!cfg.starts.empty()) start = to_vec(parse_list(cfg.starts.front(), "--start"));
  CriticalPoint cp;
  try {
    cp = constrained_critical(m, nu, start);
  } catch (const ConvergenceError& e) {
    std::cerr << "g2flow: " << e.what() << '\n';
    return 1;
  }
  const auto& names = m.data().family->param_names;
  for (int i = 0; i < cp.params.size(); ++i) std::printf("%s = %.12g\n", names[i].c_str(), cp.params[i]);
  std::printf("mu = %.12g\nmu_L = %.12g\nmu0 = %.12g\nH = %.12g\nresidual = %.3e\niterations = %d\n", cp.mu_scaled,
              cp.mu_L, cp.mu0, cp.H, cp.residual, cp.iterations);
  if (!cfg.out.empty()) {
    ordered_json j;
    j["schema_version"] = 1;
    j["model"] = m.name();
    j["nu"] = nu_json(nu);
    j["params"] = vec_json(cp.params);
    j["mu"] = cp.mu_scaled;
    j["mu_L"] = cp.mu_L;
    j["mu0"] = cp.mu0;
    j["H"] = cp.H;
    j["residual"] = cp.residual;
    j["iterations"] = cp.iterations;
    write_json(cfg, j);
  }
  return 0;
}

int cmd_linearize(const Config& cfg) {
  const HomogeneousModel m = get_model(cfg);
  const Eigen::VectorXd c = point(m, cfg);
  try {
    require_nearly_parallel(m, c);
  } catch (const NotNearlyParallelError& e) {
    throw InputError(e.what());
  }
  const LinearizationQ lq = linearize_Q(m, c);
  const LinearizationS ls = linearize_soliton(m, c);
  const LinearOperatorOnInvariants P = soliton_P(m, c);
  ordered_json j;
  j["schema_version"] = 1;
  j["model"] = m.name();
  j["operators"] = {
      {"DQ_closed", ordered_json::parse(operator_to_json(lq.closed, "DQ_closed"))},
      {"DQ_factored", ordered_json::parse(operator_to_json(lq.factored, "DQ_factored"))},
      {"DQ_jacobian", ordered_json::parse(operator_to_json(lq.jacobian, "DQ_jacobian"))},
      {"DS", ordered_json::parse(operator_to_json(ls.direct, "DS"))},
      {"P", ordered_json::parse(operator_to_json(P, "P"))},
  };
  j["agreement"] = {{"closed_vs_factored", lq.closed_vs_factored},
                    {"closed_vs_jacobian", lq.closed_vs_jacobian},
                    {"factored_vs_jacobian", lq.factored_vs_jacobian},
                    {"DS_direct_vs_factored", ls.direct_vs_factored},
                    {"invariance_residual", lq.invariance_residual},
                    {"P_gram_asymmetry", P.gram_asymmetry()}};
  write_json(cfg, j);
  return 0;
}

int cmd_spectrum(const Config& cfg) {
  const HomogeneousModel m = get_model(cfg);
  const Eigen::VectorXd c = point(m, cfg);
  try {
    require_nearly_parallel(m, c);
  } catch (const NotNearlyParallelError& e) {
    throw InputError(e.what());
  }
  const StarDSpectrum sp = star_d_spectrum_27(m, c);
  const DeformationSpace ds = deformation_space(m, c);
  ordered_json j;
  j["schema_version"] = 1;
  j["model"] = m.name();
  j["basepoint"] = vec_json(c);
  j["tau0"] = sp.tau0;
  j["star_d_27"] = ordered_json::array();
  for (std::size_t i = 0; i < sp.eigenvalues.size(); ++i)
    j["star_d_27"].push_back({{"re", sp.eigenvalues[i].real()},
                              {"im", sp.eigenvalues[i].imag()},
                              {"near_minus_tau0", bool(sp.near_minus_tau0[i])},
                              {"near_minus_3tau0", bool(sp.near_minus_3tau0[i])}});
  j["leakage"] = sp.leakage;
  j["deformations"] = {{"dim_sigma", ds.sigma.cols()},
                       {"dim_kernel_P", ds.kernel_P.cols()},
                       {"dim_kernel_lambda", ds.kernel_lambda.cols()},
                       {"sigma_in_kernel_P", ds.sigma_in_kernel_P},
                       {"P_singular_values", vec_json(ds.P_singular_values)},
                       {"threshold", ds.threshold}};
  write_json(cfg, j);
  return 0;
}

int cmd_dump_model(const Config& cfg) {
  const HomogeneousModel m = get_model(cfg);
  Output out(cfg.out);
  out.os() << model_to_json(m);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Homogeneous Laplacian-type flows of G2-structures"};
  app.require_subcommand(1);
  Config cfg;

  auto add_model = [&](CLI::App* sc) {
    sc->add_option("--model", cfg.model, "built-in model name or JSON model file")->capture_default_str();
  };
  auto add_nu = [&](CLI::App* sc) {
    sc->add_option("--nu", cfg.nu, "energy weights a,b,c,d")->delimiter(',')->expected(4)->capture_default_str();
  };
  auto add_point = [&](CLI::App* sc, bool many) {
    auto* o = sc->add_option("--start", cfg.starts, "family parameters, comma separated");
    if (!many) o->expected(1);
    sc->add_option("--coeffs", cfg.coeffs, "invariant 3-form coefficients, comma separated");
  };
  auto add_out = [&](CLI::App* sc) { sc->add_option("--out", cfg.out, "output file (default stdout)"); };

  auto* verify = app.add_subcommand("verify", "run the identity suite");
  add_model(verify);
  verify->add_option("--seed", cfg.seed, "seed for the random samples")->capture_default_str();
  add_out(verify);

  auto* energy = app.add_subcommand("energy", "energies and Q at one point");
  add_model(energy);
  add_nu(energy);
  add_point(energy, false);
  add_out(energy);

  auto* flow_cmd = app.add_subcommand("flow", "integrate the flow and write the trajectory CSV");
  add_model(flow_cmd);
  add_nu(flow_cmd);
  add_point(flow_cmd, true);
  flow_cmd->add_option("--t-end", cfg.t_end, "final time")->capture_default_str();
  flow_cmd->add_option("--rtol", cfg.rtol)->capture_default_str();
  flow_cmd->add_option("--atol", cfg.atol)->capture_default_str();
  flow_cmd->add_option("--threads", cfg.threads, "worker threads for several starts (0: hardware)");
  add_out(flow_cmd);

  auto* soliton = app.add_subcommand("soliton", "test Q = mu Omega at one point");
  add_model(soliton);
  add_nu(soliton);
  add_point(soliton, false);
  add_out(soliton);

  auto* critical = app.add_subcommand("critical", "critical point of D on the family at fixed volume");
  add_model(critical);
  add_nu(critical);
  critical->add_option("--start", cfg.starts, "initial family parameters")->expected(1);
  add_out(critical);

  auto* linearize = app.add_subcommand("linearize", "linearized operators at a nearly parallel point");
  add_model(linearize);
  add_point(linearize, false);
  add_out(linearize);

  auto* spectrum = app.add_subcommand("spectrum", "spectrum of *d on invariant 27-forms and deformation counts");
  add_model(spectrum);
  add_point(spectrum, false);
  add_out(spectrum);

  auto* dump = app.add_subcommand("dump-model", "write a model as JSON");
  add_model(dump);
  add_out(dump);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (verify->parsed()) return cmd_verify(cfg);
    if (energy->parsed()) return cmd_energy(cfg);
    if (flow_cmd->parsed()) return cmd_flow(cfg);
    if (soliton->parsed()) return cmd_soliton(cfg);
    if (critical->parsed()) return cmd_critical(cfg);
    if (linearize->parsed()) return cmd_linearize(cfg);
    if (spectrum->parsed()) return cmd_spectrum(cfg);
    if (dump->parsed()) return cmd_dump_model(cfg);
  } catch (const InputError& e) {
    std::cerr << "g2flow: " << e.what() << '\n';
    return 2;
  } catch (const NotPositiveError& e) {
    std::cerr << "g2flow: initial form is not positive: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "g2flow: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
