#include "tbound/grid.hpp"

#include <string>

#include "tbound/error.hpp"

namespace tbound::pde {

Grid Grid::cube(int n, double length) {
  return box({n, n, n}, Vector3::Constant(length));
}

Grid Grid::box(const std::array<int, 3>& cells, const Vector3& size) {
  Grid g;
  g.cells = cells;
  for (int a = 0; a < 3; ++a) g.spacing[a] = size(a) / cells[a];
  g.origin = -0.5 * size;
  return g;
}

Vector3 Grid::node_position(int i, int j, int k) const {
  return origin + Vector3(i * spacing[0], j * spacing[1], k * spacing[2]);
}

Vector3 Grid::cell_center(int i, int j, int k) const {
  return origin + Vector3((i + 0.5) * spacing[0], (j + 0.5) * spacing[1], (k + 0.5) * spacing[2]);
}

Vector3 Grid::center() const {
  return origin + 0.5 * Vector3(length(0), length(1), length(2));
}

void Grid::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (cells[a] < 4) throw InvalidInput("grid needs at least 4 cells per axis");
    if (!(spacing[a] > 0.0)) throw InvalidInput("grid spacing must be positive");
  }
}

NodeLayout::NodeLayout(const Grid& g) {
  for (int a = 0; a < 3; ++a) n_[a] = g.nodes(a);
  sx_ = std::size_t(n_[0] + 2);
  sxy_ = sx_ * std::size_t(n_[1] + 2);
  total_ = sxy_ * std::size_t(n_[2] + 2);
}

ConductivityField ConductivityField::homogeneous(const Grid& g, int phase_label, double s1,
                                                 double s2) {
  ConductivityField f;
  f.grid = g;
  f.phase.assign(g.cell_count(), std::uint8_t(phase_label));
  f.sigma1 = s1;
  f.sigma2 = s2;
  return f;
}

std::vector<double> ConductivityField::cell_sigma() const {
  std::vector<double> s(phase.size());
  for (std::size_t c = 0; c < phase.size(); ++c) s[c] = sigma(c);
  return s;
}

double ConductivityField::f1() const {
  std::size_t n = 0;
  for (auto p : phase) n += p == 1;
  return phase.empty() ? 0.0 : double(n) / double(phase.size());
}

void ConductivityField::validate() const {
  grid.validate();
  if (!(sigma2 > 0.0 && sigma1 > sigma2))
    throw InvalidInput("conductivities must satisfy sigma1 > sigma2 > 0");
  if (phase.size() != grid.cell_count())
    throw InvalidInput("phase array has " + std::to_string(phase.size()) + " cells, grid has " +
                       std::to_string(grid.cell_count()));
  for (auto p : phase)
    if (p != 1 && p != 2) throw InvalidInput("phase labels must be 1 or 2");
}

Matrix3 FieldMatrix::mean() const {
  Matrix3 s = Matrix3::Zero();
  for (const auto& m : cells) s += m;
  return cells.empty() ? s : Matrix3(s / double(cells.size()));
}

}  // namespace tbound::pde
