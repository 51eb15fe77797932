#pragma once

#include <random>
#include <cmath>

#include <Eigen/Dense>

#include "tbound/grid.hpp"

namespace testutil {

inline Eigen::Matrix3d random_matrix(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = n(rng);
  return m;
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::Matrix3d> qr(random_matrix(rng));
  Eigen::Matrix3d q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace testutil


namespace testutil {

// Cell-centre membership of a ball.
inline tbound::pde::ConductivityField sphere_field(int n, double radius, double s1, double s2,
                                                   const Eigen::Vector3d& c = Eigen::Vector3d::Zero()) {
  auto f = tbound::pde::ConductivityField::homogeneous(tbound::pde::Grid::cube(n), 2, s1, s2);
  const auto& g = f.grid;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if ((g.cell_center(i, j, k) - c).norm() < radius) f.phase[g.cell_index(i, j, k)] = 1;
  return f;
}

}  // namespace testutil
