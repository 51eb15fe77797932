#include "tbound/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tbound/error.hpp"

namespace tbound::tensor {

std::string_view to_string(Basis b) {
  return b == Basis::standard ? "standard" : "permuted";
}

Vector9 mat_to_vec(const Matrix3& p) {
  Vector9 v;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) v(vec_index(i, j)) = p(i, j);
  return v;
}

Matrix3 vec_to_mat(const Vector9& v) {
  Matrix3 p;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) p(i, j) = v(vec_index(i, j));
  return p;
}

double Tensor4::operator()(int i, int j, int k, int l) const {
  return entries(vec_index(i, j), vec_index(k, l));
}

double& Tensor4::operator()(int i, int j, int k, int l) {
  return entries(vec_index(i, j), vec_index(k, l));
}

Matrix3 Tensor4::apply(const Matrix3& p) const { return vec_to_mat(entries * mat_to_vec(p)); }

double Tensor4::quadratic(const Matrix3& p) const {
  const Vector9 v = mat_to_vec(p);
  return v.dot(entries * v);
}

bool Tensor4::is_symmetric(double tol) const {
  return (entries - entries.transpose()).cwiseAbs().maxCoeff() <= tol;
}

Tensor4 identity_tensor() {
  Tensor4 t;
  t.entries.setIdentity();
  return t;
}

Matrix3 translation(const Matrix3& p) {
  return p.trace() * Matrix3::Identity() - p.transpose();
}

Tensor4 translation_tensor() {
  // T_ijkl = d_ij d_kl - d_il d_jk
  Tensor4 t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          t(i, j, k, l) = double(i == j && k == l) - double(i == l && j == k);
  return t;
}

Matrix3 translation_prime(const Matrix3& p) {
  return p + p.transpose() - p.trace() * Matrix3::Identity();
}

Tensor4 translation_prime_tensor() {
  // T'_ijkl = d_ik d_jl + d_il d_jk - d_ij d_kl
  Tensor4 t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          t(i, j, k, l) =
              double(i == k && j == l) + double(i == l && j == k) - double(i == j && k == l);
  return t;
}

Projections project(const Matrix3& p) {
  Projections out;
  out.hydrostatic = (p.trace() / 3.0) * Matrix3::Identity();
  out.deviatoric = 0.5 * (p + p.transpose()) - out.hydrostatic;
  out.antisymmetric = 0.5 * (p - p.transpose());
  return out;
}

Tensor4 assemble_Lc(double sigma, double c, Positivity req) {
  if (req == Positivity::require_positive_definite && !(c > -0.5 * sigma && c < sigma)) {
    throw InvalidInput("L_c = sigma I + c T is not positive definite for sigma=" +
                       std::to_string(sigma) + ", c=" + std::to_string(c) +
                       " (need -sigma/2 < c < sigma)");
  }
  Tensor4 t = translation_tensor();
  t.entries *= c;
  t.entries.diagonal().array() += sigma;
  return t;
}

Tensor4 assemble_Lc_prime(double sigma, double c, Positivity req) {
  // eigenvalues: 1/sigma + c (hydrostatic), 1/sigma - 2c (deviatoric), 1/sigma (antisymmetric)
  if (req == Positivity::require_positive_definite &&
      !(c < 0.5 / sigma && c > -1.0 / sigma)) {
    throw InvalidInput("L'_c = sigma^-1 I - c T' is not positive definite for sigma=" +
                       std::to_string(sigma) + ", c=" + std::to_string(c) +
                       " (need -1/sigma < c < 1/(2 sigma))");
  }
  Tensor4 t = translation_prime_tensor();
  t.entries *= -c;
  t.entries.diagonal().array() += 1.0 / sigma;
  return t;
}

const std::array<int, 9>& block_order() {
  static const std::array<int, 9> order = {
      vec_index(0, 0), vec_index(1, 1), vec_index(2, 2),  //
      vec_index(1, 0), vec_index(0, 1),                   //
      vec_index(2, 0), vec_index(0, 2),                   //
      vec_index(2, 1), vec_index(1, 2)};
  return order;
}

Tensor4 permute_basis(const Tensor4& t, Direction dir) {
  const Basis want_in = dir == Direction::to_permuted ? Basis::standard : Basis::permuted;
  if (t.basis != want_in) {
    throw InvalidInput(std::string("permute_basis: tensor is already in the ") +
                       std::string(to_string(t.basis)) + " basis");
  }
  const auto& perm = block_order();
  Tensor4 out;
  for (int a = 0; a < 9; ++a) {
    for (int b = 0; b < 9; ++b) {
      if (dir == Direction::to_permuted)
        out.entries(a, b) = t.entries(perm[a], perm[b]);
      else
        out.entries(perm[a], perm[b]) = t.entries(a, b);
    }
  }
  out.basis = dir == Direction::to_permuted ? Basis::permuted : Basis::standard;
  return out;
}

Tensor4 rotate(const Tensor4& t, const Matrix3& r) {
  if (t.basis != Basis::standard) throw InvalidInput("rotate: tensor must be in the standard basis");
  Matrix9 q;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) q(vec_index(a, b), vec_index(i, j)) = r(a, i) * r(b, j);
  Tensor4 out;
  out.entries = q.transpose() * t.entries * q;
  return out;
}

double min_eigenvalue(const Tensor4& t) {
  const Matrix9 s = 0.5 * (t.entries + t.entries.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix9> es(s, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

void PhaseAverage::validate() const {
  if (!(f1 >= 0.0 && f1 <= 1.0)) throw InvalidInput("volume fraction f1 must lie in [0,1]");
  if (!(sigma2 > 0.0 && sigma1 > sigma2))
    throw InvalidInput("conductivities must satisfy sigma1 > sigma2 > 0");
}

namespace {

Matrix9 spd_inverse(const Matrix9& m) {
  Eigen::LDLT<Matrix9> ldlt(0.5 * (m + m.transpose()));
  Matrix9 inv = ldlt.solve(Matrix9::Identity());
  return 0.5 * (inv + inv.transpose());
}

Tensor4 closed_form_limit(double a, double b) {
  Tensor4 p;
  p.basis = Basis::permuted;
  p.entries.topLeftCorner<3, 3>().setConstant(a);
  for (int blk = 0; blk < 3; ++blk) {
    const int o = 3 + 2 * blk;
    p.entries(o, o) = b;
    p.entries(o + 1, o + 1) = b;
    p.entries(o, o + 1) = -b;
    p.entries(o + 1, o) = -b;
  }
  return permute_basis(p, Direction::to_standard);
}

}  // namespace

Tensor4 two_phase_inverse_average(const PhaseAverage& pa, double c) {
  pa.validate();
  if (c >= pa.sigma2) {
    throw SingularAverage("<L_c^-1>^-1 is singular for c >= sigma2 (c=" + std::to_string(c) +
                          ", sigma2=" + std::to_string(pa.sigma2) +
                          "); use limit_tensor for c -> sigma2");
  }
  if (c <= -0.5 * pa.sigma2) {
    throw SingularAverage("L_c(sigma2) is not positive definite for c <= -sigma2/2");
  }
  Matrix9 avg = Matrix9::Zero();
  if (pa.f1 > 0.0) avg += pa.f1 * spd_inverse(assemble_Lc(pa.sigma1, c).entries);
  if (pa.f2() > 0.0) avg += pa.f2() * spd_inverse(assemble_Lc(pa.sigma2, c).entries);
  Tensor4 out;
  out.entries = spd_inverse(avg);
  return out;
}

Tensor4 limit_tensor_numeric(const PhaseAverage& pa, double* consistency) {
  pa.validate();
  constexpr int kLevels = 5;  // k = 4..8
  constexpr double kRatio = 10.0;
  std::array<std::array<Matrix9, kLevels>, kLevels> table;
  for (int i = 0; i < kLevels; ++i) {
    const double h = pa.sigma2 * std::pow(10.0, -(4 + i));
    table[i][0] = two_phase_inverse_average(pa, pa.sigma2 - h).entries;
  }
  // Neville-Richardson on a geometric step sequence, error ~ h, h^2, ...
  double factor = 1.0;
  for (int j = 1; j < kLevels; ++j) {
    factor *= kRatio;
    for (int i = j; i < kLevels; ++i) {
      table[i][j] = table[i][j - 1] + (table[i][j - 1] - table[i - 1][j - 1]) / (factor - 1.0);
    }
  }
  Tensor4 out;
  out.entries = table[kLevels - 1][kLevels - 1];
  out.entries = 0.5 * (out.entries + out.entries.transpose());
  if (consistency) {
    const double scale = std::max(1e-300, out.entries.cwiseAbs().maxCoeff());
    *consistency =
        (table[kLevels - 1][kLevels - 1] - table[kLevels - 2][kLevels - 2]).cwiseAbs().maxCoeff() /
        scale;
  }
  return out;
}

LimitTensor limit_tensor(const PhaseAverage& pa) {
  pa.validate();
  LimitTensor out;
  out.degenerate_f1_zero = pa.f1 == 0.0;
  out.numeric = limit_tensor_numeric(pa, &out.richardson_consistency);

  out.a_closed = 1.0 / (pa.f2() / pa.sigma2 + 3.0 * pa.f1 / (2.0 * pa.sigma2 + pa.sigma1));
  out.b_closed = out.degenerate_f1_zero ? std::numeric_limits<double>::infinity()
                                        : pa.sigma2 / pa.f1;

  const Tensor4 perm = permute_basis(out.numeric, Direction::to_permuted);
  out.a_numeric = perm.entries.topLeftCorner<3, 3>().mean();
  double b = 0.0;
  for (int blk = 0; blk < 3; ++blk) {
    const int o = 3 + 2 * blk;
    b += perm.entries(o, o) + perm.entries(o + 1, o + 1) - perm.entries(o, o + 1) -
         perm.entries(o + 1, o);
  }
  out.b_numeric = b / 12.0;

  if (out.degenerate_f1_zero) {
    out.closed_form = closed_form_limit(out.a_closed, 0.0);
    out.discrepancy = std::numeric_limits<double>::infinity();
  } else {
    out.closed_form = closed_form_limit(out.a_closed, out.b_closed);
    out.discrepancy = (out.numeric.entries - out.closed_form.entries).cwiseAbs().maxCoeff();
  }
  return out;
}

}  // namespace tbound::tensor
