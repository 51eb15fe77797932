#pragma once

// Gauss rules on voxel cells and box faces, shared by the pde and bounds
// sources.  Not installed.

#include <array>
#include <cmath>
#include <cstddef>

#include "tbound/grid.hpp"

namespace tbound::pde::quad {

inline constexpr double kG0 = 0.5 - 0.5 / 1.7320508075688772;  // 2-point Gauss on [0,1]
inline constexpr double kG1 = 0.5 + 0.5 / 1.7320508075688772;
inline constexpr std::array<double, 2> kGauss{kG0, kG1};

// Shape function values/gradients of the 8 cell corners at the 8 Gauss
// points; corner c has local bits (c&1, (c>>1)&1, (c>>2)&1).
struct CellRule {
  std::array<std::array<double, 8>, 8> phi;
  std::array<std::array<Vector3, 8>, 8> grad;
  std::array<std::ptrdiff_t, 8> corner_offset;
  double weight;  // per Gauss point

  CellRule(const Grid& g, const NodeLayout& layout) {
    for (int gp = 0; gp < 8; ++gp) {
      const double xi[3] = {kGauss[gp & 1], kGauss[(gp >> 1) & 1], kGauss[(gp >> 2) & 1]};
      for (int c = 0; c < 8; ++c) {
        const int b[3] = {c & 1, (c >> 1) & 1, (c >> 2) & 1};
        double w[3], dw[3];
        for (int a = 0; a < 3; ++a) {
          w[a] = b[a] ? xi[a] : 1.0 - xi[a];
          dw[a] = (b[a] ? 1.0 : -1.0) / g.spacing[a];
        }
        phi[gp][c] = w[0] * w[1] * w[2];
        grad[gp][c] = Vector3(dw[0] * w[1] * w[2], w[0] * dw[1] * w[2], w[0] * w[1] * dw[2]);
      }
    }
    for (int c = 0; c < 8; ++c)
      corner_offset[c] = layout.offset(c & 1, (c >> 1) & 1, (c >> 2) & 1);
    weight = g.cell_volume() / 8.0;
  }
};

// Gradient matrix G_ji = d_j V_i at a Gauss point of the cell whose lowest
// corner has padded index `base`.
inline Matrix3 gradient_matrix(const CellRule& r, int gp, const NodeArray* v, std::size_t base) {
  Matrix3 g = Matrix3::Zero();
  for (int c = 0; c < 8; ++c) {
    const std::size_t n = base + r.corner_offset[c];
    for (int i = 0; i < 3; ++i) g.col(i) += v[i][n] * r.grad[gp][c];
  }
  return g;
}

struct FacePoint {
  Vector3 x;
  Vector3 n;       // outward unit normal
  int axis;        // normal axis
  double weight;
  std::array<std::size_t, 4> node;
  std::array<double, 4> phi;
  std::array<Vector3, 4> grad_t;  // in-face gradient of each hat function
};

// Visits the 2x2 Gauss points of every boundary face cell.
template <class F>
void for_each_face_point(const Grid& g, const NodeLayout& layout, F&& fn) {
  FacePoint fp;
  for (int axis = 0; axis < 3; ++axis) {
    const int t1 = axis == 0 ? 1 : 0;
    const int t2 = axis == 2 ? 1 : 2;
    for (int side = 0; side < 2; ++side) {
      fp.axis = axis;
      fp.n = Vector3::Zero();
      fp.n(axis) = side ? 1.0 : -1.0;
      fp.weight = g.spacing[t1] * g.spacing[t2] / 4.0;
      const int fixed = side ? g.cells[axis] : 0;
      for (int v = 0; v < g.cells[t2]; ++v) {
        for (int u = 0; u < g.cells[t1]; ++u) {
          for (int q = 0; q < 4; ++q) {
            int idx[3];
            idx[axis] = fixed;
            idx[t1] = u + (q & 1);
            idx[t2] = v + (q >> 1);
            fp.node[q] = layout.index(idx[0], idx[1], idx[2]);
          }
          for (int gq = 0; gq < 4; ++gq) {
            const double s = kGauss[gq & 1], t = kGauss[gq >> 1];
            int idx[3];
            idx[axis] = fixed;
            idx[t1] = u;
            idx[t2] = v;
            fp.x = g.node_position(idx[0], idx[1], idx[2]);
            fp.x(t1) += s * g.spacing[t1];
            fp.x(t2) += t * g.spacing[t2];
            for (int q = 0; q < 4; ++q) {
              const int p1 = q & 1, p2 = q >> 1;
              const double w1 = p1 ? s : 1.0 - s, w2 = p2 ? t : 1.0 - t;
              fp.phi[q] = w1 * w2;
              fp.grad_t[q] = Vector3::Zero();
              fp.grad_t[q](t1) = (p1 ? 1.0 : -1.0) / g.spacing[t1] * w2;
              fp.grad_t[q](t2) = w1 * (p2 ? 1.0 : -1.0) / g.spacing[t2];
            }
            fn(static_cast<const FacePoint&>(fp));
          }
        }
      }
    }
  }
}

inline double face_value(const FacePoint& fp, const NodeArray& v) {
  double s = 0.0;
  for (int q = 0; q < 4; ++q) s += fp.phi[q] * v[fp.node[q]];
  return s;
}

inline Vector3 face_gradient(const FacePoint& fp, const NodeArray& v) {
  Vector3 g = Vector3::Zero();
  for (int q = 0; q < 4; ++q) g += v[fp.node[q]] * fp.grad_t[q];
  return g;
}

}  // namespace tbound::pde::quad
