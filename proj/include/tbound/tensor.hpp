#pragma once

// 3x3 / 9x9 tensor algebra for the translation method.
//
// 3x3 matrices are identified with 9-vectors through (i,j) -> i + 3j
// (0-based), i.e. (1,1),(2,1),(3,1),(1,2),... in 1-based notation.  A fourth
// order tensor T_{ijkl} is stored as the 9x9 matrix entries(p,q) with
// p = (i,j), q = (k,l), so that (T P)_{ij} = T_{ijkl} P_{kl}.

#include <array>
#include <string_view>

#include <Eigen/Dense>

namespace tbound::tensor {

using Matrix3 = Eigen::Matrix3d;
using Vector3 = Eigen::Vector3d;
using Vector9 = Eigen::Matrix<double, 9, 1>;
using Matrix9 = Eigen::Matrix<double, 9, 9>;

enum class Basis { standard, permuted };
std::string_view to_string(Basis b);

constexpr int vec_index(int i, int j) { return i + 3 * j; }

Vector9 mat_to_vec(const Matrix3& p);
Matrix3 vec_to_mat(const Vector9& v);

struct Tensor4 {
  Matrix9 entries = Matrix9::Zero();
  Basis basis = Basis::standard;

  // Component access, standard basis only.
  double operator()(int i, int j, int k, int l) const;
  double& operator()(int i, int j, int k, int l);

  Matrix3 apply(const Matrix3& p) const;
  /// p : (T p)
  double quadratic(const Matrix3& p) const;
  bool is_symmetric(double tol) const;
};

Tensor4 identity_tensor();

/// T P = Tr(P) I - P^T, the null-Lagrangian translation for gradients.
Matrix3 translation(const Matrix3& p);
Tensor4 translation_tensor();

/// T' P = P + P^T - Tr(P) I = (2 Lambda_s - Lambda_h) P, quasiconvex on
/// divergence-free fields.
Matrix3 translation_prime(const Matrix3& p);
Tensor4 translation_prime_tensor();

struct Projections {
  Matrix3 hydrostatic;    // Tr(P)/3 I
  Matrix3 deviatoric;     // symmetric, trace free
  Matrix3 antisymmetric;
};
Projections project(const Matrix3& p);

enum class Positivity { any, require_positive_definite };

/// L_c = sigma I + c T.
Tensor4 assemble_Lc(double sigma, double c, Positivity req = Positivity::any);
/// L'_c = sigma^{-1} I - c T'.
Tensor4 assemble_Lc_prime(double sigma, double c, Positivity req = Positivity::any);

enum class Direction { to_permuted, to_standard };

/// Standard indices in block order: {(1,1),(2,2),(3,3)}, {(2,1),(1,2)},
/// {(3,1),(1,3)}, {(3,2),(2,3)}.
const std::array<int, 9>& block_order();
Tensor4 permute_basis(const Tensor4& t, Direction dir);

/// t'_{ijkl} = r_ai r_bj r_ck r_dl t_abcd (standard basis).
Tensor4 rotate(const Tensor4& t, const Matrix3& r);

/// Smallest eigenvalue of the symmetric part.
double min_eigenvalue(const Tensor4& t);

struct PhaseAverage {
  double f1 = 0.0;
  double sigma1 = 2.0;
  double sigma2 = 1.0;

  double f2() const { return 1.0 - f1; }
  /// Throws InvalidInput unless 0 <= f1 <= 1 and sigma1 > sigma2 > 0.
  void validate() const;
};

/// (f1 L_c(sigma1)^{-1} + f2 L_c(sigma2)^{-1})^{-1}; requires -sigma2/2 < c < sigma2.
Tensor4 two_phase_inverse_average(const PhaseAverage& pa, double c);

struct LimitTensor {
  Tensor4 numeric;          // Richardson limit c -> sigma2, standard basis
  Tensor4 closed_form;      // a/b block form with a, b as printed
  double a_closed = 0.0;    // (f2/s2 + 3 f1/(2 s2 + s1))^{-1}
  double b_closed = 0.0;    // s2 / f1
  double a_numeric = 0.0;   // from the permuted 3x3 block of `numeric`
  double b_numeric = 0.0;   // from the permuted 2x2 blocks of `numeric`
  double richardson_consistency = 0.0;  // relative, last two table diagonals
  double discrepancy = 0.0;             // max |numeric - closed_form|
  bool degenerate_f1_zero = false;
};

/// lim_{c -> sigma2} <L_c^{-1}>^{-1}, evaluated at c = sigma2 (1 - 10^-k),
/// k = 4..8, and extrapolated (linear in sigma2 - c).
LimitTensor limit_tensor(const PhaseAverage& pa);

/// Just the extrapolated tensor; used inside the feasibility scan.
Tensor4 limit_tensor_numeric(const PhaseAverage& pa, double* consistency = nullptr);

}  // namespace tbound::tensor
