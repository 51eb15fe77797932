#pragma once

// Box body, voxel conductivity and padded node storage.
//
// The body is the box [origin, origin + cells * spacing].  Potentials live on
// the (nx+1)(ny+1)(nz+1) grid nodes, conductivity and the E/J fields on cells.
// Node arrays carry one halo layer per side so that the 27-point stencil can
// run over a single flat index range without bounds checks.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace tbound::pde {

using Matrix3 = Eigen::Matrix3d;
using Vector3 = Eigen::Vector3d;

struct Grid {
  std::array<int, 3> cells{16, 16, 16};
  std::array<double, 3> spacing{1.0 / 16, 1.0 / 16, 1.0 / 16};
  Vector3 origin = Vector3::Zero();  // lower corner

  /// n^3 cells on a cube of side `length` centred at the origin.
  static Grid cube(int n, double length = 1.0);
  static Grid box(const std::array<int, 3>& cells, const Vector3& size);

  int nodes(int axis) const { return cells[axis] + 1; }
  double length(int axis) const { return cells[axis] * spacing[axis]; }
  double volume() const { return length(0) * length(1) * length(2); }
  double cell_volume() const { return spacing[0] * spacing[1] * spacing[2]; }
  std::size_t cell_count() const {
    return std::size_t(cells[0]) * std::size_t(cells[1]) * std::size_t(cells[2]);
  }
  std::size_t cell_index(int i, int j, int k) const {
    return std::size_t(i) + std::size_t(cells[0]) * (std::size_t(j) + std::size_t(cells[1]) * k);
  }
  Vector3 node_position(int i, int j, int k) const;
  Vector3 cell_center(int i, int j, int k) const;
  Vector3 center() const;

  /// Throws InvalidInput unless every axis has >= 4 cells and positive spacing.
  void validate() const;
};

class NodeLayout {
 public:
  NodeLayout() = default;
  explicit NodeLayout(const Grid& g);

  // i in [-1, nx+1] etc.; -1 and n+1 are halo.
  std::size_t index(int i, int j, int k) const {
    return std::size_t(i + 1) + sx_ * std::size_t(j + 1) + sxy_ * std::size_t(k + 1);
  }
  std::ptrdiff_t offset(int di, int dj, int dk) const {
    return di + std::ptrdiff_t(sx_) * dj + std::ptrdiff_t(sxy_) * dk;
  }
  std::size_t size() const { return total_; }
  // Flat range covering every real node (halo entries in between are zero).
  std::size_t first() const { return index(0, 0, 0); }
  std::size_t end() const { return index(n_[0] - 1, n_[1] - 1, n_[2] - 1) + 1; }
  const std::array<int, 3>& nodes() const { return n_; }
  bool is_boundary(int i, int j, int k) const {
    return i == 0 || j == 0 || k == 0 || i == n_[0] - 1 || j == n_[1] - 1 || k == n_[2] - 1;
  }

 private:
  std::array<int, 3> n_{0, 0, 0};
  std::size_t sx_ = 0, sxy_ = 0, total_ = 0;
};

using NodeArray = std::vector<double>;

struct ConductivityField {
  Grid grid;
  std::vector<std::uint8_t> phase;  // 1 or 2 per cell
  double sigma1 = 2.0;
  double sigma2 = 1.0;

  static ConductivityField homogeneous(const Grid& g, int phase_label, double s1, double s2);

  double sigma(std::size_t cell) const { return phase[cell] == 1 ? sigma1 : sigma2; }
  std::vector<double> cell_sigma() const;
  /// Fraction of phase-1 cells.
  double f1() const;
  void validate() const;
};

/// Per-cell 3x3 field; column k belongs to measurement k.
struct FieldMatrix {
  Grid grid;
  std::vector<Matrix3> cells;

  Matrix3 mean() const;
};

}  // namespace tbound::pde
