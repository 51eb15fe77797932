#include <cmath>

#include "quadrature.hpp"
#include "tbound/error.hpp"
#include "tbound/pde.hpp"

namespace tbound::pde {

namespace {

template <class F>
void for_each_cell(const Grid& g, const NodeLayout& L, F&& fn) {
  for (int k = 0; k < g.cells[2]; ++k)
    for (int j = 0; j < g.cells[1]; ++j)
      for (int i = 0; i < g.cells[0]; ++i) fn(g.cell_index(i, j, k), L.index(i, j, k));
}

double rel_gap(double diff, double scale) { return scale > 0.0 ? diff / scale : diff; }

}  // namespace

double RoutePair::relative_gap() const {
  return rel_gap((volume - boundary).cwiseAbs().maxCoeff(),
                 std::max(volume.cwiseAbs().maxCoeff(), boundary.cwiseAbs().maxCoeff()));
}

double TensorRoutes::relative_gap() const {
  return rel_gap((volume.entries - boundary.entries).cwiseAbs().maxCoeff(),
                 std::max(volume.entries.cwiseAbs().maxCoeff(),
                          boundary.entries.cwiseAbs().maxCoeff()));
}

Fields extract_fields(const PotentialSet& ps) {
  const Grid& g = ps.grid;
  const NodeLayout& L = ps.layout;
  Fields f;
  f.E.grid = g;
  f.J.grid = g;
  f.E.cells.resize(g.cell_count());
  f.J.cells.resize(g.cell_count());
  const std::ptrdiff_t ox = L.offset(1, 0, 0), oy = L.offset(0, 1, 0), oz = L.offset(0, 0, 1);
  for_each_cell(g, L, [&](std::size_t c, std::size_t base) {
    Matrix3 e;
    for (int i = 0; i < 3; ++i) {
      const double* v = ps.V[i].data() + base;
      // corner values v[a*ox + b*oy + c*oz]
      double dx = 0.0, dy = 0.0, dz = 0.0;
      for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 2; ++t) {
          dx += v[ox + s * oy + t * oz] - v[s * oy + t * oz];
          dy += v[oy + s * ox + t * oz] - v[s * ox + t * oz];
          dz += v[oz + s * ox + t * oy] - v[s * ox + t * oy];
        }
      e(0, i) = -dx / (4.0 * g.spacing[0]);
      e(1, i) = -dy / (4.0 * g.spacing[1]);
      e(2, i) = -dz / (4.0 * g.spacing[2]);
    }
    f.E.cells[c] = e;
    f.J.cells[c] = ps.sigma[c] * e;
  });
  return f;
}

Matrix3 boundary_mean_E(const PotentialSet& ps) {
  Matrix3 m = Matrix3::Zero();
  quad::for_each_face_point(ps.grid, ps.layout, [&](const quad::FacePoint& fp) {
    for (int k = 0; k < 3; ++k) {
      const double v = quad::face_value(fp, ps.V[k]) * fp.weight;
      m.col(k) -= v * fp.n;
    }
  });
  return m / ps.grid.volume();
}

Matrix3 boundary_mean_J(const PotentialSet& ps) {
  const NodeLayout& L = ps.layout;
  const auto& n = L.nodes();
  Matrix3 m = Matrix3::Zero();
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        if (!L.is_boundary(i, j, k)) continue;
        const std::size_t idx = L.index(i, j, k);
        const Vector3 x = ps.grid.node_position(i, j, k);
        for (int c = 0; c < 3; ++c) m.col(c) -= ps.flux[c][idx] * x;
      }
  return m / ps.grid.volume();
}

RoutePair energy_matrix(const PotentialSet& ps) {
  const quad::CellRule rule(ps.grid, ps.layout);
  RoutePair out;
  out.volume.setZero();
  for_each_cell(ps.grid, ps.layout, [&](std::size_t c, std::size_t base) {
    Matrix3 acc = Matrix3::Zero();
    for (int gp = 0; gp < 8; ++gp) {
      const Matrix3 gm = quad::gradient_matrix(rule, gp, ps.V.data(), base);
      acc.noalias() += gm.transpose() * gm;
    }
    out.volume += (ps.sigma[c] * rule.weight) * acc;
  });
  out.volume /= ps.grid.volume();

  const NodeLayout& L = ps.layout;
  const auto& n = L.nodes();
  out.boundary.setZero();
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        if (!L.is_boundary(i, j, k)) continue;
        const std::size_t idx = L.index(i, j, k);
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) out.boundary(a, b) += ps.V[a][idx] * ps.flux[b][idx];
      }
  out.boundary /= ps.grid.volume();
  return out;
}

TensorRoutes m_tensor(const PotentialSet& ps) {
  using tensor::vec_index;
  const quad::CellRule rule(ps.grid, ps.layout);
  TensorRoutes out;
  tensor::Matrix9 vol = tensor::Matrix9::Zero();
  for_each_cell(ps.grid, ps.layout, [&](std::size_t, std::size_t base) {
    for (int gp = 0; gp < 8; ++gp) {
      const Matrix3 gm = quad::gradient_matrix(rule, gp, ps.V.data(), base);
      // entries(p=(i,j), q=(k,l)) += G_ji G_lk - G_li G_jk
      for (int l = 0; l < 3; ++l)
        for (int k = 0; k < 3; ++k)
          for (int j = 0; j < 3; ++j)
            for (int i = 0; i < 3; ++i)
              vol(vec_index(i, j), vec_index(k, l)) += gm(j, i) * gm(l, k) - gm(l, i) * gm(j, k);
    }
  });
  out.volume.entries = vol * (rule.weight / ps.grid.volume());

  tensor::Matrix9 bnd = tensor::Matrix9::Zero();
  quad::for_each_face_point(ps.grid, ps.layout, [&](const quad::FacePoint& fp) {
    Vector3 v;
    Matrix3 tg;  // column k: in-face gradient of V_k
    for (int c = 0; c < 3; ++c) {
      v(c) = quad::face_value(fp, ps.V[c]);
      tg.col(c) = quad::face_gradient(fp, ps.V[c]);
    }
    for (int l = 0; l < 3; ++l)
      for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 3; ++j) {
          const double t = fp.n(j) * tg(l, k) - fp.n(l) * tg(j, k);
          if (t == 0.0) continue;
          for (int i = 0; i < 3; ++i) bnd(vec_index(i, j), vec_index(k, l)) += fp.weight * v(i) * t;
        }
  });
  out.boundary.entries = bnd / ps.grid.volume();
  return out;
}

RoutePair null_lagrangian_pairing(const PotentialSet& a, const PotentialSet& b) {
  if (a.grid.cells != b.grid.cells) throw InvalidInput("pairing needs potentials on the same grid");
  const quad::CellRule rule(a.grid, a.layout);
  RoutePair out;
  out.volume.setZero();
  for_each_cell(a.grid, a.layout, [&](std::size_t, std::size_t base) {
    for (int gp = 0; gp < 8; ++gp) {
      const Matrix3 g1 = quad::gradient_matrix(rule, gp, a.V.data(), base);
      const Matrix3 g2 = quad::gradient_matrix(rule, gp, b.V.data(), base);
      out.volume.noalias() += g1.transpose() * tensor::translation(g2);
    }
  });
  out.volume *= rule.weight / a.grid.volume();

  out.boundary.setZero();
  quad::for_each_face_point(a.grid, a.layout, [&](const quad::FacePoint& fp) {
    Vector3 v;
    Matrix3 tg;
    for (int c = 0; c < 3; ++c) {
      v(c) = quad::face_value(fp, a.V[c]);
      tg.col(c) = quad::face_gradient(fp, b.V[c]);
    }
    // n_j (T G)_jk = sum_j (n_k d_j V_j - n_j d_k V_j), in-face derivatives only
    Vector3 w;
    for (int k = 0; k < 3; ++k) {
      double s = 0.0;
      for (int j = 0; j < 3; ++j) s += fp.n(k) * tg(j, j) - fp.n(j) * tg(k, j);
      w(k) = s;
    }
    out.boundary.noalias() += fp.weight * v * w.transpose();
  });
  out.boundary /= a.grid.volume();
  return out;
}

double translation_divergence_residual(const PotentialSet& ps) {
  const quad::CellRule rule(ps.grid, ps.layout);
  const NodeLayout& L = ps.layout;
  std::array<NodeArray, 3> res, mag;
  for (int c = 0; c < 3; ++c) {
    res[c].assign(L.size(), 0.0);
    mag[c].assign(L.size(), 0.0);
  }
  for_each_cell(ps.grid, L, [&](std::size_t, std::size_t base) {
    for (int gp = 0; gp < 8; ++gp) {
      const Matrix3 tg = tensor::translation(quad::gradient_matrix(rule, gp, ps.V.data(), base));
      for (int corner = 0; corner < 8; ++corner) {
        const Vector3 t = tg.transpose() * rule.grad[gp][corner];  // sum_j (TG)_jk d_j phi
        const std::size_t n = base + rule.corner_offset[corner];
        for (int k = 0; k < 3; ++k) {
          res[k][n] += rule.weight * t(k);
          mag[k][n] += rule.weight * std::abs(t(k));
        }
      }
    }
  });
  double worst = 0.0, scale = 0.0;
  const auto& n = L.nodes();
  for (int k = 1; k < n[2] - 1; ++k)
    for (int j = 1; j < n[1] - 1; ++j)
      for (int i = 1; i < n[0] - 1; ++i) {
        const std::size_t idx = L.index(i, j, k);
        for (int c = 0; c < 3; ++c) {
          worst = std::max(worst, std::abs(res[c][idx]));
          scale = std::max(scale, mag[c][idx]);
        }
      }
  return rel_gap(worst, scale);
}

double compatibility_residual(const BoundaryData& bc, const Grid& g) {
  if (bc.kind != BoundaryKind::neumann) return 0.0;
  const NodeLayout L(g);
  std::array<double, 3> net{0, 0, 0}, mag{0, 0, 0};
  quad::for_each_face_point(g, L, [&](const quad::FacePoint& fp) {
    for (int c = 0; c < 3; ++c) {
      const double q = bc.flux[c](fp.x, fp.n) * fp.weight;
      net[c] += q;
      mag[c] += std::abs(q);
    }
  });
  double worst = 0.0;
  for (int c = 0; c < 3; ++c) worst = std::max(worst, rel_gap(std::abs(net[c]), mag[c]));
  return worst;
}

double flux_balance(const PotentialSet& ps) {
  const NodeLayout& L = ps.layout;
  const auto& n = L.nodes();
  double worst = 0.0;
  for (int c = 0; c < 3; ++c) {
    double net = 0.0, mag = 0.0;
    for (int k = 0; k < n[2]; ++k)
      for (int j = 0; j < n[1]; ++j)
        for (int i = 0; i < n[0]; ++i) {
          if (!L.is_boundary(i, j, k)) continue;
          const double f = ps.flux[c][L.index(i, j, k)];
          net += f;
          mag += std::abs(f);
        }
    worst = std::max(worst, rel_gap(std::abs(net), mag));
  }
  return worst;
}

}  // namespace tbound::pde
