#pragma once

// Forward solver for div(sigma grad V) = 0 on the box with three sets of
// boundary data, and the volume / boundary quadratures built on it.
//
// Discretization: trilinear (Q1) elements on the voxel grid with cellwise
// sigma, giving a symmetric 27-point stencil.  Every volume integral below is
// evaluated exactly for the discrete potentials (2x2x2 Gauss per cell), every
// boundary integral exactly on the bilinear face traces (2x2 Gauss per face
// cell), so the discrete Green identities hold to solver tolerance.

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tbound/grid.hpp"
#include "tbound/kernels.hpp"
#include "tbound/tensor.hpp"

namespace tbound::pde {

enum class Mode { conduction, laplace };
enum class BoundaryKind { dirichlet, neumann };

using ScalarFn = std::function<double(const Vector3& x)>;
// Neumann flux q = sigma dV/dn at boundary point x with outward normal n.
using FluxFn = std::function<double(const Vector3& x, const Vector3& n)>;

struct BoundaryData {
  BoundaryKind kind = BoundaryKind::dirichlet;
  std::array<ScalarFn, 3> value;  // dirichlet
  std::array<FluxFn, 3> flux;     // neumann

  static BoundaryData dirichlet(std::array<ScalarFn, 3> v);
  static BoundaryData neumann(std::array<FluxFn, 3> q);
  /// V0_i = -x_i, so that <E> = I on every body.
  static BoundaryData affine_dirichlet(const Vector3& center = Vector3::Zero());
  /// q = -n.
  static BoundaryData special_neumann();
};

/// Component k of the result is sum_a data_a K_ak.
BoundaryData combine(const BoundaryData& bc, const Matrix3& k);

struct SolverOptions {
  double tolerance = 1e-10;  // relative residual
  int max_iterations = 20000;
  int threads = 1;
  std::optional<simd::Isa> isa;  // default: detect_isa()
};

struct SolveStats {
  int iterations = 0;
  double final_residual = 0.0;  // relative
  bool converged = false;
  double seconds = 0.0;
  std::vector<double> residual_history;
  double removed_flux = 0.0;  // neumann: net load projected out
};

/// Three solved potentials plus their discrete boundary fluxes.
struct PotentialSet {
  Grid grid;
  NodeLayout layout;
  BoundaryKind kind = BoundaryKind::dirichlet;
  Mode mode = Mode::conduction;
  std::vector<double> sigma;       // per cell, as used by the operator
  std::array<NodeArray, 3> V;
  // (K V_k)_n with the full operator: the consistent normal flux
  // integral against the hat function of node n (zero in the interior up to
  // solver residual).  For neumann data this is the assembled load.
  std::array<NodeArray, 3> flux;
  std::array<SolveStats, 3> stats;
  std::string isa;

  double at(int comp, int i, int j, int k) const { return V[comp][layout.index(i, j, k)]; }
};

/// Component k of the result is sum_a V_a K_ak (fluxes likewise).
PotentialSet combine(const PotentialSet& ps, const Matrix3& k);

class Stencil {
 public:
  Stencil(const Grid& g, const std::vector<double>& cell_sigma);

  const NodeLayout& layout() const { return layout_; }
  simd::StencilView view() const;
  /// y = K x over every real node (halo stays zero).
  void apply(const simd::KernelTable& kt, const NodeArray& x, NodeArray& y, int threads = 1) const;
  /// Drop couplings to boundary nodes and put 1 on their diagonal.
  Stencil dirichlet_reduced() const;
  double coupling(std::size_t n, int di, int dj, int dk) const;
  double diagonal(std::size_t n) const { return diag_[n]; }

 private:
  Stencil() = default;
  Grid grid_;
  NodeLayout layout_;
  NodeArray diag_;
  std::array<NodeArray, simd::kHalfStencil> coeff_;
  std::array<std::ptrdiff_t, simd::kHalfStencil> offset_{};
  std::array<std::array<int, 3>, simd::kHalfStencil> dir_{};
};

/// Jacobi-preconditioned CG on K x = b over the flat node range.  Also used
/// for the pure Neumann operator, whose kernel (constants) the caller gauges.
SolveStats pcg(const Stencil& a, const NodeArray& b, NodeArray& x, const SolverOptions& opt,
               const simd::KernelTable& kt);

PotentialSet solve(const ConductivityField& field, const BoundaryData& bc, Mode mode,
                   const SolverOptions& opt = {});

struct Fields {
  FieldMatrix E;  // -grad V at cell centres
  FieldMatrix J;  // sigma E
};
Fields extract_fields(const PotentialSet& ps);

/// <E>_mk = -(1/|Omega|) int n_m V_k dS.
Matrix3 boundary_mean_E(const PotentialSet& ps);
/// <J>_mk = -(1/|Omega|) int x_m q_k dS with q the discrete flux.
Matrix3 boundary_mean_J(const PotentialSet& ps);

/// <grad V_i . sigma grad V_k>, two routes.
struct RoutePair {
  Matrix3 volume;
  Matrix3 boundary;
  double relative_gap() const;
};
RoutePair energy_matrix(const PotentialSet& ps);

/// M_ijkl = <d_j V_i d_l V_k - d_l V_i d_j V_k>, two routes.
struct TensorRoutes {
  tensor::Tensor4 volume;
  tensor::Tensor4 boundary;
  double relative_gap() const;
};
TensorRoutes m_tensor(const PotentialSet& ps);

/// (1/|Omega|) int (grad V1)^T T(grad V2), with (grad V)_ji = d_j V_i.
RoutePair null_lagrangian_pairing(const PotentialSet& a, const PotentialSet& b);

/// Max over interior nodes and components of the weak form of
/// div(T grad V) tested against hat functions.
double translation_divergence_residual(const PotentialSet& ps);

/// Max |int q_l dS| / int |q_l| dS over components, face Gauss quadrature.
double compatibility_residual(const BoundaryData& bc, const Grid& g);

/// Max over components of |sum of discrete boundary flux| / sum |flux|.
double flux_balance(const PotentialSet& ps);

}  // namespace tbound::pde
