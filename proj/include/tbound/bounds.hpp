#pragma once

// Volume-fraction bounds from measured A, M, A' and g.

#include <optional>
#include <string>
#include <vector>

#include "tbound/tensor.hpp"

namespace tbound::bounds {

using tensor::Matrix3;
using tensor::Tensor4;
using tensor::Vector3;

struct Bound {
  double value = 0.0;  // clamped to [0,1]
  double raw = 0.0;
  bool clamped = false;
  std::string note;
};
Bound clamp(double raw, std::string note = {});

/// Trace bound.  Q = diag(lambda - s2) + s2 (M_iijj - 1) off the diagonal,
/// T = 1 . Q^{-1} 1, f1 <= (s1 + 2 s2)/(s1 - s2) / (1 + s2 T).
/// Directions of Q with |eigenvalue| <= tol that are not orthogonal to
/// (1,1,1) make T infinite (bound 0); eigenvalues below -tol throw
/// DataInconsistency.  tol defaults to 1e-8 s2.
struct TraceBound {
  Bound bound;
  double T = 0.0;
  Matrix3 Q;
};
TraceBound upper_bound_trace(const Vector3& lambda, const Tensor4& m, double sigma1, double sigma2,
                             double tol = -1.0);
/// Same from a general symmetric A (diagonalized internally, M rotated along).
TraceBound upper_bound_trace_from_A(const Matrix3& a, const Tensor4& m, double sigma1, double sigma2,
                             double tol = -1.0);

/// Dirichlet-tensor form: the trace bound with M = T.
Bound upper_bound_special(const Matrix3& sigma_d, double sigma1, double sigma2, double tol = -1.0);

/// (s1 + s2)/(s1 - s2) / (1 + (2/3) s2 Tr[(sigma_D - s2 I)^{-1}]).  Diagnostic.
/// If m is given it must equal T on the entries M_iijj (to 1e-6), otherwise InvalidInput.
Bound pairwise_bound_affine(const Matrix3& sigma_d, double sigma1, double sigma2,
                            const Tensor4* m = nullptr);

struct Feasibility {
  double f1_star = 0.0;      // sup of the PSD-feasible set
  double epsilon = 0.0;      // PSD slack, 1e-9 ||A + s2 M||
  double tolerance = 1e-8;   // bisection width
  bool interval = true;      // pre-scan found a downward-closed set
  std::vector<double> scan_f1;
  std::vector<double> scan_min_eig;
  std::vector<double> scan_det;
  /// [lo, hi] runs of scan points where det >= 0 (the printed condition).
  std::vector<std::pair<double, double>> det_nonnegative;
  std::string warning;
};
struct FeasibilityOptions {
  int scan_points = 64;
  double tolerance = 1e-8;
  double epsilon_scale = 1e-9;
};
/// N(f1) = blockdiag(A,A,A) + s2 M - lim_{c -> s2} <L_c^{-1}>^{-1}(f1) >= -eps.
/// Throws DataInconsistency if N(0) is not PSD.
Feasibility feasibility_interval(const Matrix3& a, const Tensor4& m, double sigma1, double sigma2,
                                 const FeasibilityOptions& opt = {});
/// blockdiag(A,A,A) in the standard basis.
Tensor4 block_A(const Matrix3& a);
Tensor4 feasibility_operator(const Matrix3& a, const Tensor4& m, double f1, double sigma1, double sigma2);

/// f1 >= 1 - (2 s1 + s2)/(2 (s1 - s2)) [1 - 9/(2 s1 Tr A' - g)], g a lower bound on g.
Bound lower_bound_general(double trace_aprime, double g_minus, double sigma1, double sigma2);

struct NeumannLower {
  Bound lb18;
  Bound lb19;
  bool lb19_singular = false;  // s1 I - sigma_N singular: limit value 1
};
/// Special Neumann data (g = -3, A' = sigma_N^{-1}) and the earlier bound
/// f1 >= 1 - (2 s1 + s2)/(s1 - s2) / (s1 Tr[(s1 I - sigma_N)^{-1}] - 1).
/// Spectrum of sigma_N outside [s2, s1] by more than tol -> DataInconsistency.
NeumannLower lower_bound_special_neumann(const Matrix3& sigma_n, double sigma1, double sigma2,
                                         double tol = -1.0);

/// Hashin-Shtrikman lower value s2 + 3 f1 s2 (s1 - s2)/(3 s2 + f2 (s1 - s2)).
double hashin_shtrikman_lower(double f1, double sigma1, double sigma2);

}  // namespace tbound::bounds
