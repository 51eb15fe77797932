#pragma once

// Boundary-measurable objects: normalization <E> = I / <J> = I, the response
// matrices A and A', diagonalization, the M tensor and attainability
// residuals.

#include <optional>
#include <string>

#include "tbound/pde.hpp"
#include "tbound/tensor.hpp"

namespace tbound::measure {

using pde::Matrix3;
using pde::Vector3;
using tensor::Tensor4;

inline constexpr double kMaxCondition = 1e8;

struct Normalized {
  Matrix3 K = Matrix3::Identity();  // applied combination
  Matrix3 mean_before;              // <E> (or <J>) of the raw potentials
  double condition = 1.0;
  pde::PotentialSet potentials;
};

/// K = G^{-1} with G = boundary_mean_E; throws MeasurementDegeneracy if cond(G) > 1e8.
Normalized normalize_mean(const pde::PotentialSet& ps);
/// Same with G = <J> (Neumann data).
Normalized normalize_current(const pde::PotentialSet& ps);

struct ResponseMatrix {
  Matrix3 value;     // boundary route, symmetrized
  Matrix3 volume;
  Matrix3 boundary;  // raw
  double route_gap = 0.0;  // relative, volume vs boundary
  double asymmetry = 0.0;  // relative, boundary route
  bool warning = false;    // asymmetry or route gap above 1e-5
};

/// A = <E^T sigma E> (dirichlet) or A' = <J^T sigma^{-1} J> (neumann);
/// both equal <grad V_i . sigma grad V_k> on the normalized potentials.
ResponseMatrix compute_A(const pde::PotentialSet& normalized);
ResponseMatrix compute_Aprime(const pde::PotentialSet& normalized);

struct MTensor {
  Tensor4 value;  // volume route
  Tensor4 volume;
  Tensor4 boundary;
  double route_gap = 0.0;
  bool warning = false;
};

/// M from already solved potentials (any extension of the data works: M is a
/// null Lagrangian).
MTensor compute_M(const pde::PotentialSet& ps);
/// M for the data bc * K: solves the Laplace problems u = V0 and combines.
MTensor compute_M(const pde::Grid& grid, const pde::BoundaryData& bc, const Matrix3& k,
                  const pde::SolverOptions& opt);

struct Diagonalization {
  Matrix3 R;       // columns: eigenvectors, descending eigenvalues
  Vector3 lambda;  // descending
  Matrix3 A;       // R^T A R
  Tensor4 M;       // M rotated with R
};
Diagonalization diagonalize(const Matrix3& a, const Tensor4& m);

struct ResponseData {
  Matrix3 A = Matrix3::Identity();  // after diagonalization
  Vector3 lambda = Vector3::Ones();
  Matrix3 R = Matrix3::Identity();
  Matrix3 K = Matrix3::Identity();
  Tensor4 M = tensor::translation_tensor();
  std::optional<Matrix3> Aprime;
  std::optional<Matrix3> Kprime;
  double A_route_gap = 0.0;
  double A_asymmetry = 0.0;
  double M_route_gap = 0.0;
  double Aprime_route_gap = 0.0;
  double Aprime_asymmetry = 0.0;
  std::string A_source = "boundary";
  std::string M_source = "volume";
  std::string Aprime_source = "boundary";
};

/// M structural residuals: zeros for i=k or j=l, M_ijkl + M_ilkj, M_ijkl - M_klij.
struct MStructure {
  double zeros = 0.0;
  double antisymmetry = 0.0;
  double symmetry = 0.0;
  double max() const;
};
MStructure m_structure(const Tensor4& m);

struct Attainability {
  double r1 = 0.0;  // max over phase-1 cells |E - mean_1 E| / |mean_1 E|
  double r2 = 0.0;  // max over cells |L_{sigma2} E - mean| / |mean|
  bool phase1_empty = false;
};
Attainability attainability_residual(const pde::FieldMatrix& e, const pde::ConductivityField& f);

/// Tr A - 3 (f1/sigma1 + f2/sigma2)^{-1}, relative to the latter (>= -0.01 expected).
double harmonic_margin(const Matrix3& a, double f1, double sigma1, double sigma2);

}  // namespace tbound::measure
