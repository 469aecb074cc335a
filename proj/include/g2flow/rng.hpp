#pragma once

#include "g2flow/forms.hpp"

#include <cstdint>
#include <random>

namespace g2flow {

// Reproducible random numbers. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard; doubles are formed from the top 53
// bits of one draw, (x >> 11) * 2^-53, so results do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  Eigen::VectorXd vector(int n, double lo = -1.0, double hi = 1.0) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  Matrix7 matrix7(double lo = -1.0, double hi = 1.0) {
    Matrix7 m;
    for (int i = 0; i < kDim; ++i)
      for (int j = 0; j < kDim; ++j) m(i, j) = uniform(lo, hi);
    return m;
  }

 private:
  std::mt19937_64 engine_;
};

inline PForm random_form(Rng& rng, int p) { return PForm(p, rng.vector(form_dim(p))); }

// A^* of the standard form for A = Id + spread * (uniform entries in [-1,1]),
// redrawn until det A > 0.
inline PForm random_positive_form(Rng& rng, double spread = 0.2, Matrix7* A_out = nullptr) {
  Matrix7 A;
  do {
    A = Matrix7::Identity() + spread * rng.matrix7();
  } while (A.determinant() <= 0.0);
  if (A_out) *A_out = A;
  return pullback(A, standard_form());
}

}  // namespace g2flow
