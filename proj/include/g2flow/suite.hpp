#pragma once

#include "g2flow/homogeneous.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace g2flow {

struct CheckResult {
  std::string group;  // g2_algebra, torsion, bianchi
  std::string name;   // the identity, in words
  double value = 0;   // worst relative error over the samples
  double tol = 0;
  bool pass = false;
};

struct SuiteOptions {
  std::uint64_t seed = 42;
  int algebra_samples = 100;  // random positive forms
  int model_samples = 20;     // random invariant points of the model
};

struct SuiteResult {
  std::vector<CheckResult> checks;
  bool ok() const;
  std::vector<std::string> failures() const;
};

// Pointwise identities at seeded random positive forms, then the Bianchi-type
// identities at seeded random invariant points of the model.
SuiteResult run_identity_suite(const HomogeneousModel& m, const SuiteOptions& opts = {});

// A random positive invariant form near the model's reference point.
Eigen::VectorXd random_invariant_point(const HomogeneousModel& m, Rng& rng, double spread = 0.2);

// |lambda(a)| relative to the sum of the norms of its two terms,
// (delta a) _| Omega and a _| dOmega.
double lambda_relative(const HomogeneousModel& m, const PositiveThreeForm& ctx, const PForm& a);

void print_suite(std::ostream& os, const SuiteResult& r);

}  // namespace g2flow
