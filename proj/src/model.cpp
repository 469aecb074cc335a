#include "g2flow/model.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace g2flow {

using nlohmann::json;

Eigen::VectorXd InvariantFamily::eval(const Eigen::VectorXd& params) const {
  if (params.size() != param_dim())
    throw std::invalid_argument("family expects " + std::to_string(param_dim()) + " parameters, got " +
                                std::to_string(params.size()));
  Eigen::VectorXd c = Eigen::VectorXd::Zero(int(terms.size()));
  for (size_t i = 0; i < terms.size(); ++i)
    for (const Monomial& m : terms[i]) {
      double v = m.coef;
      for (int j = 0; j < param_dim(); ++j)
        if (m.exps[j] != 0.0) v *= std::pow(params[j], m.exps[j]);
      c[int(i)] += v;
    }
  return c;
}

Eigen::MatrixXd InvariantFamily::jacobian(const Eigen::VectorXd& params) const {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(int(terms.size()), param_dim());
  for (size_t i = 0; i < terms.size(); ++i)
    for (const Monomial& m : terms[i])
      for (int k = 0; k < param_dim(); ++k) {
        if (m.exps[k] == 0.0) continue;
        double v = m.coef * m.exps[k] * std::pow(params[k], m.exps[k] - 1.0);
        for (int j = 0; j < param_dim(); ++j)
          if (j != k && m.exps[j] != 0.0) v *= std::pow(params[j], m.exps[j]);
        J(int(i), k) += v;
      }
  return J;
}

HomogeneousModel::HomogeneousModel(ModelData data) : data_(std::move(data)) {
  for (int i = 0; i < kDim; ++i)
    if (data_.mc_table[i].degree() != 2)
      throw ModelError("mc_table entry for " + data_.coframe[i] + " is not a 2-form");
  if (!(data_.vol_total > 0.0)) throw ModelError("vol_total must be positive");
  if (data_.orientation != 1 && data_.orientation != -1) throw ModelError("orientation must be +1 or -1");
  for (const auto& b : data_.inv3_basis)
    if (b.degree() != 3) throw ModelError("inv3_basis contains a form that is not of degree 3");
  for (const auto& b : data_.inv1_basis)
    if (b.degree() != 1) throw ModelError("inv1_basis contains a form that is not of degree 1");
  if (data_.inv3_basis.empty()) throw ModelError("inv3_basis is empty");
  if (!data_.reference.empty() && int(data_.reference.size()) != n_inv3())
    throw ModelError("reference has the wrong number of coefficients");
  if (data_.family) {
    const auto& f = *data_.family;
    if (int(f.terms.size()) != n_inv3()) throw ModelError("family must give one term list per inv3 element");
    for (const auto& ts : f.terms)
      for (const auto& m : ts)
        if (int(m.exps.size()) != f.param_dim()) throw ModelError("family monomial has the wrong number of exponents");
  }

  // d(e^{i1...ip}) = sum_k (-1)^(k-1) e^{i1} ^ ... ^ de^{ik} ^ ... ^ e^{ip}.
  for (int p = 0; p < kDim; ++p) {
    const auto& mp = degree_masks(p);
    d_[p] = Eigen::MatrixXd::Zero(form_dim(p + 1), form_dim(p));
    for (int c = 0; c < int(mp.size()); ++c) {
      std::vector<int> idx;
      for (int k = 0; k < kDim; ++k)
        if (mp[c] & (1u << k)) idx.push_back(k);
      PForm acc(p + 1);
      for (int k = 0; k < p; ++k) {
        PForm term = PForm::scalar(k % 2 == 0 ? 1.0 : -1.0);
        for (int j = 0; j < p; ++j)
          term = wedge(term, j == k ? data_.mc_table[idx[j]] : PForm(1, Vector7::Unit(idx[j])));
        acc += term;
      }
      d_[p].col(c) = acc.coeffs();
    }
  }
  inv3_.resize(35, n_inv3());
  for (int i = 0; i < n_inv3(); ++i) inv3_.col(i) = data_.inv3_basis[i].coeffs();
  inv1_.resize(7, n_inv1());
  for (int i = 0; i < n_inv1(); ++i) inv1_.col(i) = data_.inv1_basis[i].coeffs();
}

PForm HomogeneousModel::d(const PForm& a) const {
  if (a.degree() >= kDim) throw std::invalid_argument("d of a top-degree form");
  return PForm(a.degree() + 1, d_[a.degree()] * a.coeffs());
}

PForm HomogeneousModel::form_from_coeffs(const Eigen::VectorXd& c) const {
  if (c.size() != n_inv3())
    throw std::invalid_argument("expected " + std::to_string(n_inv3()) + " invariant coefficients, got " +
                                std::to_string(c.size()));
  return PForm(3, inv3_ * c);
}

PForm HomogeneousModel::one_form_from_coeffs(const Eigen::VectorXd& x) const {
  if (x.size() != n_inv1()) throw std::invalid_argument("wrong number of invariant 1-form coefficients");
  return PForm(1, inv1_ * x);
}

Eigen::VectorXd HomogeneousModel::coeffs_from_params(const Eigen::VectorXd& params) const {
  if (data_.family) return data_.family->eval(params);
  if (params.size() != n_inv3())
    throw std::invalid_argument("model " + name() + " has no family; expected " + std::to_string(n_inv3()) +
                                " coefficients");
  return params;
}

// ---------------------------------------------------------------------------
// Built-in models.

namespace {

PForm e(std::initializer_list<int> l) { return PForm::elementary(l); }

std::array<std::string, 7> default_coframe() { return {"e1", "e2", "e3", "e4", "e5", "e6", "e7"}; }

std::vector<PForm> all_elementary(int p) {
  std::vector<PForm> out;
  for (int i = 0; i < form_dim(p); ++i) out.emplace_back(p, Eigen::VectorXd::Unit(form_dim(p), i));
  return out;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

ModelData flat7_data() {
  ModelData d;
  d.name = "flat7";
  d.coframe = default_coframe();
  for (auto& t : d.mc_table) t = PForm(2);
  d.inv3_basis = all_elementary(3);
  d.inv1_basis = all_elementary(1);
  const Eigen::VectorXd om = standard_form().coeffs();
  d.reference = to_std(om);
  InvariantFamily f;
  f.param_names = {"s"};
  f.terms.resize(35);
  for (int i = 0; i < 35; ++i)
    if (om[i] != 0.0) f.terms[i].push_back({om[i], {1.0}});
  f.default_params = {1.0};
  d.family = f;
  return d;
}

ModelData squashed_data() {
  ModelData d;
  d.name = "squashed_s7";
  d.coframe = {"e1", "e2", "e3", "e4", "f1", "f2", "f3"};
  // Maurer-Cartan table of m = h^perp in sp(2)+sp(1), scaled so that
  // d(f^123) = -2 Psi.
  d.mc_table[0] = 2.0 * (e({2, 5}) + e({3, 6}) + e({4, 7}));
  d.mc_table[1] = 2.0 * (-e({1, 5}) + e({3, 7}) - e({4, 6}));
  d.mc_table[2] = 2.0 * (-e({1, 6}) - e({2, 7}) + e({4, 5}));
  d.mc_table[3] = 2.0 * (-e({1, 7}) + e({2, 6}) - e({3, 5}));
  d.mc_table[4] = 2.0 * (e({1, 2}) + e({3, 4}) - e({6, 7}));
  d.mc_table[5] = 2.0 * (e({1, 3}) - e({2, 4}) + e({5, 7}));
  d.mc_table[6] = 2.0 * (e({1, 4}) + e({2, 3}) - e({5, 6}));
  const PForm w1 = e({1, 2}) + e({3, 4});
  const PForm w2 = e({1, 3}) - e({2, 4});
  const PForm w3 = e({1, 4}) + e({2, 3});
  const PForm omega1 = e({5, 6, 7});
  const PForm omega2 = wedge(e({5}), w1) + wedge(e({6}), w2) + wedge(e({7}), w3);
  d.inv3_basis = {omega1, omega2};
  d.orientation = -1;
  d.quotient = true;
  d.reference = {-1.0, 1.0};
  InvariantFamily f;
  f.param_names = {"a", "b"};
  f.terms = {{{-1.0, {3.0, 0.0}}}, {{1.0, {1.0, 2.0}}}};
  f.multiplier_scale = 1.0 / 60.0;
  f.default_params = {1.0, 1.0};
  d.family = f;
  return d;
}

ModelData heisenberg_data() {
  ModelData d;
  d.name = "heisenberg7";
  d.coframe = default_coframe();
  for (auto& t : d.mc_table) t = PForm(2);
  d.mc_table[6] = e({1, 2}) + e({3, 4}) + e({5, 6});
  d.inv3_basis = all_elementary(3);
  d.inv1_basis = all_elementary(1);
  d.reference = to_std(standard_form().coeffs());
  return d;
}

// JSON helpers.

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

PForm form_from_json(const json& j, int degree, const std::string& what) {
  if (!j.is_array()) throw ModelError(what + ": expected an array of coefficients");
  if (int(j.size()) != form_dim(degree))
    throw ModelError(what + ": expected " + std::to_string(form_dim(degree)) + " coefficients, got " +
                     std::to_string(j.size()));
  Eigen::VectorXd v(form_dim(degree));
  for (int i = 0; i < v.size(); ++i) {
    if (!j[i].is_number()) throw ModelError(what + ": non-numeric coefficient");
    v[i] = j[i].get<double>();
  }
  return PForm(degree, v);
}

}  // namespace

std::vector<std::string> builtin_model_names() { return {"flat7", "squashed_s7", "heisenberg7"}; }

HomogeneousModel builtin_model(const std::string& name) {
  if (name == "flat7") return HomogeneousModel(flat7_data());
  if (name == "squashed_s7") return HomogeneousModel(squashed_data());
  if (name == "heisenberg7") return HomogeneousModel(heisenberg_data());
  throw ModelError("unknown built-in model: " + name);
}

std::string model_to_json(const HomogeneousModel& m) {
  const ModelData& d = m.data();
  json j;
  j["schema_version"] = 1;
  j["name"] = d.name;
  j["coframe"] = d.coframe;
  j["orientation"] = d.orientation;
  j["quotient"] = d.quotient;
  j["vol_total"] = d.vol_total;
  j["mc_table"] = json::array();
  for (const auto& t : d.mc_table) j["mc_table"].push_back(vec_json(t.coeffs()));
  j["inv3_basis"] = json::array();
  for (const auto& b : d.inv3_basis) j["inv3_basis"].push_back(vec_json(b.coeffs()));
  j["inv1_basis"] = json::array();
  for (const auto& b : d.inv1_basis) j["inv1_basis"].push_back(vec_json(b.coeffs()));
  if (!d.reference.empty()) j["reference"] = d.reference;
  if (d.family) {
    json f;
    f["param_names"] = d.family->param_names;
    f["multiplier_scale"] = d.family->multiplier_scale;
    f["default_params"] = d.family->default_params;
    f["terms"] = json::array();
    for (const auto& ts : d.family->terms) {
      json row = json::array();
      for (const auto& mono : ts) row.push_back({{"coef", mono.coef}, {"exp", mono.exps}});
      f["terms"].push_back(row);
    }
    j["family"] = f;
  }
  return j.dump(1) + "\n";
}

HomogeneousModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw ModelError(std::string("malformed model JSON: ") + ex.what());
  }
  try {
    ModelData d;
    if (!j.is_object()) throw ModelError("model JSON must be an object");
    if (j.value("schema_version", 1) != 1) throw ModelError("unsupported model schema_version");
    d.name = j.value("name", std::string("unnamed"));
    const json& cf = j.at("coframe");
    if (!cf.is_array() || cf.size() != 7) throw ModelError("coframe must list 7 names");
    for (int i = 0; i < 7; ++i) d.coframe[i] = cf[i].get<std::string>();
    const json& mc = j.at("mc_table");
    if (!mc.is_array() || mc.size() != 7) throw ModelError("mc_table must have 7 entries");
    for (int i = 0; i < 7; ++i) d.mc_table[i] = form_from_json(mc[i], 2, "mc_table[" + std::to_string(i) + "]");
    d.vol_total = j.at("vol_total").get<double>();
    for (const auto& b : j.at("inv3_basis")) d.inv3_basis.push_back(form_from_json(b, 3, "inv3_basis"));
    if (j.contains("inv1_basis"))
      for (const auto& b : j.at("inv1_basis")) d.inv1_basis.push_back(form_from_json(b, 1, "inv1_basis"));
    d.orientation = j.value("orientation", 1);
    d.quotient = j.value("quotient", false);
    if (j.contains("reference")) d.reference = j.at("reference").get<std::vector<double>>();
    if (j.contains("family")) {
      const json& fj = j.at("family");
      InvariantFamily f;
      f.param_names = fj.at("param_names").get<std::vector<std::string>>();
      f.multiplier_scale = fj.value("multiplier_scale", 1.0);
      if (fj.contains("default_params")) f.default_params = fj.at("default_params").get<std::vector<double>>();
      for (const auto& row : fj.at("terms")) {
        std::vector<Monomial> ts;
        for (const auto& mono : row) ts.push_back({mono.at("coef").get<double>(), mono.at("exp").get<std::vector<double>>()});
        f.terms.push_back(ts);
      }
      d.family = f;
    }
    return HomogeneousModel(std::move(d));
  } catch (const json::exception& ex) {
    throw ModelError(std::string("malformed model JSON: ") + ex.what());
  }
}

HomogeneousModel load_model(const std::string& name_or_path) {
  for (const auto& n : builtin_model_names())
    if (n == name_or_path) return builtin_model(n);
  std::ifstream in(name_or_path);
  if (!in) throw ModelError("cannot open model file: " + name_or_path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace g2flow
