#include "g2flow/forms.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <stdexcept>
#include <string>

namespace g2flow {

namespace {

struct Tables {
  std::array<std::vector<Mask>, 8> masks;
  std::array<int, 128> position{};
  std::array<Eigen::MatrixXd, 8> pairing;

  Tables() {
    // Lexicographic order of sorted index lists: enumerate combinations.
    for (int p = 0; p <= kDim; ++p) {
      std::vector<int> idx(p);
      for (int i = 0; i < p; ++i) idx[i] = i;
      while (true) {
        Mask m = 0;
        for (int i : idx) m |= Mask(1u << i);
        position[m] = int(masks[p].size());
        masks[p].push_back(m);
        int k = p - 1;
        while (k >= 0 && idx[k] == kDim - p + k) --k;
        if (k < 0) break;
        ++idx[k];
        for (int j = k + 1; j < p; ++j) idx[j] = idx[j - 1] + 1;
      }
    }
    for (int p = 0; p <= kDim; ++p) {
      const int n = int(masks[p].size());
      pairing[p] = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i) {
        Mask I = masks[p][i];
        Mask K = Mask(0x7f & ~I);
        pairing[p](i, position[K]) = wedge_sign(I, K);
      }
    }
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

void check_degree(int p) {
  if (p < 0 || p > kDim) throw std::invalid_argument("form degree out of range: " + std::to_string(p));
}

}  // namespace

int form_dim(int p) {
  static constexpr int c[8] = {1, 7, 21, 35, 35, 21, 7, 1};
  check_degree(p);
  return c[p];
}

const std::vector<Mask>& degree_masks(int p) {
  check_degree(p);
  return tables().masks[p];
}

int mask_position(Mask m) { return tables().position[m & 0x7f]; }

int wedge_sign(Mask a, Mask b) {
  if (a & b) return 0;
  // Count pairs (i in a, j in b) with i > j.
  int inversions = 0;
  for (int j = 0; j < kDim; ++j)
    if (b & (1u << j)) inversions += std::popcount(unsigned(a) >> (j + 1));
  return (inversions & 1) ? -1 : 1;
}

PForm::PForm() : degree_(0), coeffs_(Eigen::VectorXd::Zero(1)) {}

PForm::PForm(int degree) : degree_(degree), coeffs_(Eigen::VectorXd::Zero(form_dim(degree))) {}

PForm::PForm(int degree, Eigen::VectorXd coeffs) : degree_(degree), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != form_dim(degree))
    throw std::invalid_argument("coefficient vector of length " + std::to_string(coeffs_.size()) +
                                " does not match degree " + std::to_string(degree));
}

namespace {
int labels_to_mask(std::initializer_list<int> labels, Mask* out) {
  Mask m = 0;
  int sign = 1;
  for (int l : labels) {
    if (l < 1 || l > kDim) throw std::invalid_argument("basis label out of range: " + std::to_string(l));
    Mask bit = Mask(1u << (l - 1));
    if (m & bit) return 0;
    sign *= wedge_sign(m, bit);
    m |= bit;
  }
  *out = m;
  return sign;
}
}  // namespace

PForm PForm::elementary(std::initializer_list<int> labels) {
  PForm f(int(labels.size()));
  Mask m = 0;
  int s = labels_to_mask(labels, &m);
  if (s != 0) f.coeffs_[mask_position(m)] = s;
  return f;
}

PForm PForm::scalar(double value) {
  PForm f(0);
  f.coeffs_[0] = value;
  return f;
}

double PForm::component(std::initializer_list<int> labels) const {
  if (int(labels.size()) != degree_) throw std::invalid_argument("component label count does not match degree");
  Mask m = 0;
  int s = labels_to_mask(labels, &m);
  return s == 0 ? 0.0 : s * coeffs_[mask_position(m)];
}

bool PForm::is_zero(double tol) const { return max_abs() <= tol; }

PForm& PForm::operator+=(const PForm& o) {
  if (o.degree_ != degree_) throw std::invalid_argument("adding forms of different degree");
  coeffs_ += o.coeffs_;
  return *this;
}

PForm& PForm::operator-=(const PForm& o) {
  if (o.degree_ != degree_) throw std::invalid_argument("subtracting forms of different degree");
  coeffs_ -= o.coeffs_;
  return *this;
}

PForm& PForm::operator*=(double s) {
  coeffs_ *= s;
  return *this;
}

PForm operator+(PForm a, const PForm& b) { return a += b; }
PForm operator-(PForm a, const PForm& b) { return a -= b; }
PForm operator-(PForm a) { return a *= -1.0; }
PForm operator*(double s, PForm a) { return a *= s; }
PForm operator*(PForm a, double s) { return a *= s; }

PForm wedge(const PForm& a, const PForm& b) {
  const int p = a.degree(), q = b.degree();
  if (p + q > kDim)
    throw std::invalid_argument("wedge of degrees " + std::to_string(p) + " and " + std::to_string(q) +
                                " exceeds dimension 7");
  PForm out(p + q);
  const auto& ma = degree_masks(p);
  const auto& mb = degree_masks(q);
  for (int i = 0; i < int(ma.size()); ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    for (int j = 0; j < int(mb.size()); ++j) {
      const double bj = b[j];
      if (bj == 0.0) continue;
      int s = wedge_sign(ma[i], mb[j]);
      if (s) out.coeffs()[mask_position(ma[i] | mb[j])] += s * ai * bj;
    }
  }
  return out;
}

Eigen::MatrixXd wedge_matrix(const PForm& a, int q) {
  const int p = a.degree();
  if (p + q > kDim) throw std::invalid_argument("wedge_matrix degree overflow");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(form_dim(p + q), form_dim(q));
  const auto& ma = degree_masks(p);
  const auto& mb = degree_masks(q);
  for (int i = 0; i < int(ma.size()); ++i) {
    if (a[i] == 0.0) continue;
    for (int j = 0; j < int(mb.size()); ++j) {
      int s = wedge_sign(ma[i], mb[j]);
      if (s) M(mask_position(ma[i] | mb[j]), j) += s * a[i];
    }
  }
  return M;
}

int contract_sign(Mask I, Mask M, Mask* rest) {
  if ((I & M) != I) return 0;
  Mask K = Mask(M & ~I);
  *rest = K;
  return wedge_sign(I, K);
}

Eigen::MatrixXd interior_matrix(const Vector7& v, int p) {
  if (p < 1) throw std::invalid_argument("interior product needs a form of degree >= 1");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(form_dim(p - 1), form_dim(p));
  const auto& mp = degree_masks(p);
  for (int j = 0; j < int(mp.size()); ++j) {
    for (int k = 0; k < kDim; ++k) {
      if (v[k] == 0.0) continue;
      Mask rest = 0;
      int s = contract_sign(Mask(1u << k), mp[j], &rest);
      if (s) M(mask_position(rest), j) += s * v[k];
    }
  }
  return M;
}

PForm interior(const Vector7& v, const PForm& a) {
  const int p = a.degree();
  if (p < 1) throw std::invalid_argument("interior product needs a form of degree >= 1");
  PForm out(p - 1);
  const auto& mp = degree_masks(p);
  for (int j = 0; j < int(mp.size()); ++j) {
    if (a[j] == 0.0) continue;
    for (int k = 0; k < kDim; ++k) {
      if (v[k] == 0.0) continue;
      Mask rest = 0;
      const int s = contract_sign(Mask(1u << k), mp[j], &rest);
      if (s) out.coeffs()[mask_position(rest)] += s * v[k] * a[j];
    }
  }
  return out;
}

PForm endo_apply(const Matrix7& A, const PForm& a) {
  const int p = a.degree();
  PForm out(p);
  if (p == 0) return out;
  const auto& mp = degree_masks(p);
  for (int c = 0; c < int(mp.size()); ++c) {
    if (a[c] == 0.0) continue;
    for (int j = 0; j < kDim; ++j) {
      Mask rest = 0;
      int s1 = contract_sign(Mask(1u << j), mp[c], &rest);
      if (!s1) continue;
      for (int i = 0; i < kDim; ++i) {
        if (A(i, j) == 0.0) continue;
        int s2 = wedge_sign(Mask(1u << i), rest);
        if (s2) out.coeffs()[mask_position(rest | Mask(1u << i))] += s1 * s2 * A(i, j) * a[c];
      }
    }
  }
  return out;
}

Eigen::MatrixXd pullback_matrix(const Matrix7& A, int p) {
  const auto& mp = degree_masks(p);
  const int n = int(mp.size());
  Eigen::MatrixXd M(n, n);
  if (p == 0) {
    M(0, 0) = 1.0;
    return M;
  }
  // Coefficient of e^I in A^* e^J is det A[J, I].
  std::vector<int> rows(p), cols(p);
  Eigen::MatrixXd sub(p, p);
  for (int J = 0; J < n; ++J) {
    for (int k = 0, r = 0; k < kDim; ++k)
      if (mp[J] & (1u << k)) rows[r++] = k;
    for (int I = 0; I < n; ++I) {
      for (int k = 0, c = 0; k < kDim; ++k)
        if (mp[I] & (1u << k)) cols[c++] = k;
      for (int r = 0; r < p; ++r)
        for (int c = 0; c < p; ++c) sub(r, c) = A(rows[r], cols[c]);
      M(I, J) = sub.determinant();
    }
  }
  return M;
}

PForm pullback(const Matrix7& A, const PForm& a) {
  return PForm(a.degree(), pullback_matrix(A, a.degree()) * a.coeffs());
}

const Eigen::MatrixXd& top_pairing(int p) {
  check_degree(p);
  return tables().pairing[p];
}

PForm standard_form() {
  return PForm::elementary({1, 2, 3}) + PForm::elementary({1, 4, 5}) + PForm::elementary({1, 6, 7}) +
         PForm::elementary({2, 4, 6}) - PForm::elementary({2, 5, 7}) - PForm::elementary({3, 4, 7}) -
         PForm::elementary({3, 5, 6});
}

PForm top_form() { return PForm::elementary({1, 2, 3, 4, 5, 6, 7}); }

}  // namespace g2flow
