#include "g2flow/model.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

using namespace g2flow;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_bits(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (!same_bits(a[i], b[i])) return false;
  return true;
}

void check_bit_identical(const ModelData& a, const ModelData& b) {
  CHECK(a.name == b.name);
  CHECK(a.coframe == b.coframe);
  CHECK(a.orientation == b.orientation);
  CHECK(a.quotient == b.quotient);
  CHECK(same_bits(a.vol_total, b.vol_total));
  for (int i = 0; i < 7; ++i) CHECK(same_bits(a.mc_table[i].coeffs(), b.mc_table[i].coeffs()));
  REQUIRE(a.inv3_basis.size() == b.inv3_basis.size());
  for (std::size_t i = 0; i < a.inv3_basis.size(); ++i) CHECK(same_bits(a.inv3_basis[i].coeffs(), b.inv3_basis[i].coeffs()));
  REQUIRE(a.inv1_basis.size() == b.inv1_basis.size());
  for (std::size_t i = 0; i < a.inv1_basis.size(); ++i) CHECK(same_bits(a.inv1_basis[i].coeffs(), b.inv1_basis[i].coeffs()));
  REQUIRE(a.reference.size() == b.reference.size());
  for (std::size_t i = 0; i < a.reference.size(); ++i) CHECK(same_bits(a.reference[i], b.reference[i]));
  REQUIRE(a.family.has_value() == b.family.has_value());
  if (a.family) {
    CHECK(a.family->param_names == b.family->param_names);
    CHECK(same_bits(a.family->multiplier_scale, b.family->multiplier_scale));
    REQUIRE(a.family->terms.size() == b.family->terms.size());
    for (std::size_t i = 0; i < a.family->terms.size(); ++i) {
      REQUIRE(a.family->terms[i].size() == b.family->terms[i].size());
      for (std::size_t k = 0; k < a.family->terms[i].size(); ++k) {
        CHECK(same_bits(a.family->terms[i][k].coef, b.family->terms[i][k].coef));
        CHECK(a.family->terms[i][k].exps == b.family->terms[i][k].exps);
      }
    }
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("built-in models survive a JSON round trip bit for bit") {
  for (const auto& name : builtin_model_names()) {
    const HomogeneousModel m = builtin_model(name);
    const std::string text = model_to_json(m);
    const HomogeneousModel back = model_from_json(text);
    check_bit_identical(m.data(), back.data());
    CHECK(model_to_json(back) == text);
  }
}

TEST_CASE("awkward doubles survive a JSON round trip bit for bit") {
  ModelData d = builtin_model("squashed_s7").data();
  d.vol_total = 1.0 / 3.0;
  d.mc_table[0] *= 0.1 + 0.2;
  d.mc_table[1].coeffs()[0] = std::numeric_limits<double>::denorm_min();
  d.mc_table[1].coeffs()[1] = -std::numeric_limits<double>::max();
  d.mc_table[1].coeffs()[2] = std::nextafter(1.0, 2.0);
  d.mc_table[1].coeffs()[3] = -0.0;
  d.family->multiplier_scale = std::sqrt(2.0);
  d.family->terms[0][0].coef = M_PI;
  const HomogeneousModel m(d);
  const HomogeneousModel back = model_from_json(model_to_json(m));
  check_bit_identical(m.data(), back.data());
  CHECK(std::signbit(back.data().mc_table[1].coeffs()[3]));
}

TEST_CASE("shipped model files match the built-in models") {
  for (const auto& name : builtin_model_names()) {
    const std::string path = std::string(G2FLOW_MODEL_DIR) + "/" + name + ".json";
    const std::string text = read_file(path);
    REQUIRE_FALSE(text.empty());
    CHECK(text == model_to_json(builtin_model(name)));
    check_bit_identical(load_model(path).data(), builtin_model(name).data());
  }
}

TEST_CASE("malformed and incomplete JSON is rejected with a model error") {
  CHECK_THROWS_AS(model_from_json("{not json"), ModelError);
  CHECK_THROWS_AS(model_from_json("[1, 2, 3]"), ModelError);
  CHECK_THROWS_AS(model_from_json("{\"coframe\": [\"a\"]}"), ModelError);
  std::string text = model_to_json(builtin_model("flat7"));
  const auto pos = text.find("\"vol_total\"");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 11, "\"vol_totl\"");
  CHECK_THROWS_AS(model_from_json(text), ModelError);
  try {
    model_from_json("{bad");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("malformed model JSON") == 0);
  }
  CHECK_THROWS_AS(load_model("/nonexistent/model.json"), ModelError);
  std::string future = model_to_json(builtin_model("flat7"));
  future.replace(future.find("\"schema_version\": 1"), 19, "\"schema_version\": 2");
  CHECK_THROWS_AS(model_from_json(future), ModelError);
}

TEST_CASE("structurally invalid tables are rejected on construction") {
  ModelData d = builtin_model("flat7").data();
  d.vol_total = -1.0;
  CHECK_THROWS_AS((void)HomogeneousModel(d), ModelError);
  d = builtin_model("flat7").data();
  d.orientation = 0;
  CHECK_THROWS_AS((void)HomogeneousModel(d), ModelError);
  d = builtin_model("flat7").data();
  d.inv3_basis.clear();
  CHECK_THROWS_AS((void)HomogeneousModel(d), ModelError);
}
