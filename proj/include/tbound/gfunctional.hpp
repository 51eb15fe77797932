#pragma once

// The g functional of the lower bound: fluxes generated by potentials
// (alpha, beta, J0), exact g by surface quadrature, the volume form, the
// exterior-field lower bound, face Poisson problems, and the discrete
// quasiconvexity check for T'.

#include <cstdint>
#include <vector>

#include "tbound/grid.hpp"
#include "tbound/pde.hpp"
#include "tbound/series.hpp"
#include "tbound/tensor.hpp"

namespace tbound::gfun {

using tensor::Matrix3;
using tensor::Vector3;

/// J_kl = J0_kl + d_k d_l alpha - delta_kl lap(alpha) + eps_klm d_m beta.
struct Potentials {
  expr::Series alpha;
  expr::Series beta;
  Matrix3 J0 = Matrix3::Identity();

  Matrix3 field(const Vector3& x) const;
};

/// Neumann data q_l = -n_k J_kl(x).
pde::BoundaryData flux_from_potentials(const Potentials& p);

/// J0 for which the box average of J equals I (volume Gauss quadrature on
/// the grid's cells).
Matrix3 normalized_J0(const expr::Series& alpha, const expr::Series& beta, const pde::Grid& g);

inline constexpr double g_special_neumann() { return -3.0; }

struct GResult {
  double value = 0.0;         // surface form
  Matrix3 mean_J;             // -(1/|Omega|) int x q^T
  double q_residual = 0.0;    // max |q - q(alpha, beta, J0)| / max |q|
};

/// g = (1/|Omega|) int_{dOmega} -[x^T T' J0 + 2 grad alpha] . q, with
/// `order`-point Gauss on every boundary cell face.  Throws InvalidInput if q
/// is not the flux generated by p (relative residual > 1e-8) or if its mean
/// current is not I (relative 1e-6).
GResult g_from_potentials(const Potentials& p, const pde::BoundaryData& q, const pde::Grid& g, int order = 4);

/// Tr <J^T T' J> over the box by `order`-point Gauss per cell.
double g_volume(const Potentials& p, const pde::Grid& g, int order = 3);

/// g- from a periodic field in the cube around the body:
/// (1/p) { Tr[(p I + (1-p) m)^T T' (p I + (1-p) m)] - (1-p) e },
/// m, e the exterior mean field and mean T' energy.
double g_lower(double p, const Matrix3& exterior_mean, double exterior_energy);
/// Cell-average version; `inside` flags cells of the body.
double g_lower_from_exterior(const pde::FieldMatrix& j, const std::vector<std::uint8_t>& inside);

struct FacePoisson {
  int n1 = 0, n2 = 0;                 // samples, row-major [i2 * n1 + i1]
  std::vector<double> alpha, alpha3, beta;
  Vector3 J0_row3;                    // (J0_31, J0_32, J0_33), first two from the q means
  std::array<double, 3> removed_mean{0, 0, 0};  // source means subtracted
};
/// Solves the three 2D Poisson problems on a flat face with normal e3,
/// periodic in-face, zero-mean gauge.  q_k sampled on an n1 x n2 periodic
/// grid of spacing (L1/n1, L2/n2); derivatives and solves are spectral (FFTW).
FacePoisson face_poisson_diagnostic(int n1, int n2, double l1, double l2, const std::vector<double>& q1,
                                    const std::vector<double>& q2, const std::vector<double>& q3, double j0_33);

struct Quasiconvexity {
  double lhs = 0.0;  // <Tr(J^T T' J)>
  double rhs = 0.0;  // Tr(<J>^T T' <J>)
  double gap = 0.0;
  double divergence = 0.0;  // relative max central-difference divergence
};
/// Periodic field on the cells of a grid; divergence by centred differences.
/// Throws InvalidInput if the relative divergence exceeds div_tol.
Quasiconvexity quasiconvexity_check(const pde::FieldMatrix& j, double div_tol = 1e-10);
double central_divergence(const pde::FieldMatrix& j);

/// J0 + centred-difference curl of a random periodic vector potential per column.
pde::FieldMatrix random_divergence_free(const pde::Grid& g, std::uint64_t seed, const Matrix3& j0,
                                        double amplitude = 1.0);
/// Equality-class field built with centred differences of alpha, beta
/// sampled at cell centres (periodic).
pde::FieldMatrix equality_class_field(const pde::Grid& g, const expr::Series& alpha, const expr::Series& beta,
                                      const Matrix3& j0);

}  // namespace tbound::gfun
