#pragma once

#include "g2flow/forms.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace g2flow {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// c_i(params) = sum over terms of coef * prod_j params_j^exps_j.
struct Monomial {
  double coef = 0.0;
  std::vector<double> exps;
};

struct InvariantFamily {
  std::vector<std::string> param_names;
  std::vector<std::vector<Monomial>> terms;  // one list per inv3 coefficient
  // Factor applied to the raw Lagrange multiplier by constrained_critical.
  double multiplier_scale = 1.0;
  std::vector<double> default_params;

  int param_dim() const { return int(param_names.size()); }
  Eigen::VectorXd eval(const Eigen::VectorXd& params) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& params) const;
};

struct ModelData {
  std::string name;
  std::array<std::string, 7> coframe;
  std::array<PForm, 7> mc_table;  // de^i, degree 2
  double vol_total = 1.0;
  std::vector<PForm> inv3_basis;
  std::vector<PForm> inv1_basis;
  // Reference orientation is orientation * e^{1...7}.
  int orientation = 1;
  // True for a reductive quotient G/H, whose projected table satisfies
  // d^2 = 0 only on invariant forms.
  bool quotient = false;
  // A positive point of the invariant span (inv3 coordinates); used for the
  // closure check of validate_model.
  std::vector<double> reference;
  std::optional<InvariantFamily> family;
};

// A Maurer-Cartan model with its exterior derivative assembled once.
class HomogeneousModel {
 public:
  explicit HomogeneousModel(ModelData data);

  const ModelData& data() const { return data_; }
  const std::string& name() const { return data_.name; }
  int orientation() const { return data_.orientation; }
  double vol_total() const { return data_.vol_total; }
  int n_inv3() const { return int(data_.inv3_basis.size()); }
  int n_inv1() const { return int(data_.inv1_basis.size()); }

  // Matrix of d on p-forms (p = 0..6).
  const Eigen::MatrixXd& d_matrix(int p) const { return d_[p]; }
  PForm d(const PForm& a) const;

  // Columns are inv3_basis / inv1_basis coefficient vectors.
  const Eigen::MatrixXd& inv3_matrix() const { return inv3_; }
  const Eigen::MatrixXd& inv1_matrix() const { return inv1_; }
  PForm form_from_coeffs(const Eigen::VectorXd& c) const;
  PForm one_form_from_coeffs(const Eigen::VectorXd& x) const;

  // Family parameters to inv3 coefficients; the identity when the model has no family.
  Eigen::VectorXd coeffs_from_params(const Eigen::VectorXd& params) const;

 private:
  ModelData data_;
  std::array<Eigen::MatrixXd, 7> d_;
  Eigen::MatrixXd inv3_, inv1_;
};

// Built-in models: "flat7", "squashed_s7", "heisenberg7".
HomogeneousModel builtin_model(const std::string& name);
std::vector<std::string> builtin_model_names();

// JSON text <-> model. Serialization is deterministic and parse(dump(m)) is bit-exact.
std::string model_to_json(const HomogeneousModel& m);
HomogeneousModel model_from_json(const std::string& text);

// A built-in name or a path to a JSON model file.
HomogeneousModel load_model(const std::string& name_or_path);

}  // namespace g2flow
