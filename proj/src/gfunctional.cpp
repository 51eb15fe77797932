#include "tbound/gfunctional.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <fftw3.h>

#include "tbound/error.hpp"

namespace tbound::gfun {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Rule {
  std::vector<double> x;  // on [0, 1]
  std::vector<double> w;
};

template <unsigned N>
Rule make_rule() {
  using G = boost::math::quadrature::gauss<double, N>;
  Rule r;
  const auto& a = G::abscissa();
  const auto& w = G::weights();
  for (std::size_t i = 0; i < a.size(); ++i) {
    r.x.push_back(0.5 + 0.5 * a[i]);
    r.w.push_back(0.5 * w[i]);
    if (a[i] != 0.0) {
      r.x.push_back(0.5 - 0.5 * a[i]);
      r.w.push_back(0.5 * w[i]);
    }
  }
  return r;
}

Rule gauss_rule(int order) {
  switch (order) {
    case 1: return make_rule<1>();
    case 2: return make_rule<2>();
    case 3: return make_rule<3>();
    case 4: return make_rule<4>();
    case 5: return make_rule<5>();
    case 6: return make_rule<6>();
    case 7: return make_rule<7>();
    case 8: return make_rule<8>();
    default: throw InvalidInput("Gauss order must be in 1..8");
  }
}

// fn(x, n, weight) over every boundary face cell of the box.
template <class F>
void for_each_surface_point(const pde::Grid& g, int order, F&& fn) {
  const Rule r = gauss_rule(order);
  for (int axis = 0; axis < 3; ++axis) {
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    const double h1 = g.spacing[a1], h2 = g.spacing[a2];
    for (int side = 0; side < 2; ++side) {
      Vector3 n = Vector3::Zero();
      n(axis) = side ? 1.0 : -1.0;
      Vector3 x;
      x(axis) = g.origin(axis) + side * g.length(axis);
      for (int c2 = 0; c2 < g.cells[a2]; ++c2)
        for (int c1 = 0; c1 < g.cells[a1]; ++c1)
          for (std::size_t p2 = 0; p2 < r.x.size(); ++p2)
            for (std::size_t p1 = 0; p1 < r.x.size(); ++p1) {
              x(a1) = g.origin(a1) + (c1 + r.x[p1]) * h1;
              x(a2) = g.origin(a2) + (c2 + r.x[p2]) * h2;
              fn(x, n, r.w[p1] * r.w[p2] * h1 * h2);
            }
    }
  }
}

template <class F>
void for_each_volume_point(const pde::Grid& g, int order, F&& fn) {
  const Rule r = gauss_rule(order);
  const double cv = g.cell_volume();
  Vector3 x;
  for (int k = 0; k < g.cells[2]; ++k)
    for (int j = 0; j < g.cells[1]; ++j)
      for (int i = 0; i < g.cells[0]; ++i)
        for (std::size_t pk = 0; pk < r.x.size(); ++pk)
          for (std::size_t pj = 0; pj < r.x.size(); ++pj)
            for (std::size_t pi = 0; pi < r.x.size(); ++pi) {
              x << g.origin(0) + (i + r.x[pi]) * g.spacing[0], g.origin(1) + (j + r.x[pj]) * g.spacing[1],
                  g.origin(2) + (k + r.x[pk]) * g.spacing[2];
              fn(x, r.w[pi] * r.w[pj] * r.w[pk] * cv);
            }
}

double levi_civita(int k, int l, int m) {
  if (k == l || l == m || k == m) return 0.0;
  return ((l - k + 3) % 3 == 1) ? 1.0 : -1.0;
}

Matrix3 derivative_part(const expr::Series& alpha, const expr::Series& beta, const Vector3& x) {
  Matrix3 j = Matrix3::Zero();
  if (!alpha.empty()) {
    const Matrix3 h = alpha.hessian(x);
    j += h - h.trace() * Matrix3::Identity();
  }
  if (!beta.empty()) {
    const Vector3 gb = beta.gradient(x);
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        for (int m = 0; m < 3; ++m) j(k, l) += levi_civita(k, l, m) * gb(m);
  }
  return j;
}

double tprime_energy(const Matrix3& j) {
  // Tr(J^T T' J) = |J|^2 + J : J^T - (Tr J)^2
  return j.squaredNorm() + j.cwiseProduct(j.transpose()).sum() - j.trace() * j.trace();
}

// Periodic cell neighbour along an axis.
std::size_t shifted(const pde::Grid& g, int i, int j, int k, int axis, int d) {
  std::array<int, 3> c{i, j, k};
  c[axis] = (c[axis] + d + g.cells[axis]) % g.cells[axis];
  return g.cell_index(c[0], c[1], c[2]);
}

}  // namespace

Matrix3 Potentials::field(const Vector3& x) const { return J0 + derivative_part(alpha, beta, x); }

pde::BoundaryData flux_from_potentials(const Potentials& p) {
  std::array<pde::FluxFn, 3> q;
  for (int l = 0; l < 3; ++l)
    q[l] = [p, l](const Vector3& x, const Vector3& n) { return -n.dot(p.field(x).col(l)); };
  return pde::BoundaryData::neumann(q);
}

Matrix3 normalized_J0(const expr::Series& alpha, const expr::Series& beta, const pde::Grid& g) {
  Matrix3 mean = Matrix3::Zero();
  for_each_volume_point(g, 3, [&](const Vector3& x, double w) { mean += w * derivative_part(alpha, beta, x); });
  return Matrix3::Identity() - mean / g.volume();
}

GResult g_from_potentials(const Potentials& p, const pde::BoundaryData& q, const pde::Grid& g, int order) {
  if (q.kind != pde::BoundaryKind::neumann) throw InvalidInput("g needs Neumann data");
  const Matrix3 tj0 = tensor::translation_prime(p.J0);
  GResult out;
  out.mean_J.setZero();
  double acc = 0.0, qmax = 0.0, qres = 0.0;
  for_each_surface_point(g, order, [&](const Vector3& x, const Vector3& n, double w) {
    const Matrix3 jx = p.field(x);
    Vector3 qv, qgen;
    for (int l = 0; l < 3; ++l) {
      qv(l) = q.flux[l](x, n);
      qgen(l) = -n.dot(jx.col(l));
    }
    qmax = std::max(qmax, qv.cwiseAbs().maxCoeff());
    qres = std::max(qres, (qv - qgen).cwiseAbs().maxCoeff());
    // Phi_l = x_m (T' J0)_ml + 2 d_l alpha
    Vector3 phi = tj0.transpose() * x;
    if (!p.alpha.empty()) phi += 2.0 * p.alpha.gradient(x);
    acc -= w * phi.dot(qv);
    out.mean_J -= w * x * qv.transpose();
  });
  out.value = acc / g.volume();
  out.mean_J /= g.volume();
  out.q_residual = qmax > 0.0 ? qres / qmax : qres;
  if (out.q_residual > 1e-8)
    throw InvalidInput("fluxes are not generated by the given potentials (relative residual " +
                       std::to_string(out.q_residual) + ")");
  const double mean_err = (out.mean_J - Matrix3::Identity()).cwiseAbs().maxCoeff();
  if (mean_err > 1e-6)
    throw InvalidInput("generated current does not average to I (max deviation " + std::to_string(mean_err) +
                       "); normalize J0");
  return out;
}

double g_volume(const Potentials& p, const pde::Grid& g, int order) {
  double acc = 0.0;
  for_each_volume_point(g, order, [&](const Vector3& x, double w) { acc += w * tprime_energy(p.field(x)); });
  return acc / g.volume();
}

double g_lower(double p, const Matrix3& exterior_mean, double exterior_energy) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidInput("body fraction p must be in (0, 1]");
  const Matrix3 m = p * Matrix3::Identity() + (1.0 - p) * exterior_mean;
  return (tprime_energy(m) - (1.0 - p) * exterior_energy) / p;
}

double g_lower_from_exterior(const pde::FieldMatrix& j, const std::vector<std::uint8_t>& inside) {
  if (inside.size() != j.cells.size()) throw InvalidInput("mask and field sizes differ");
  std::size_t n_in = 0;
  Matrix3 mean = Matrix3::Zero();
  double energy = 0.0;
  for (std::size_t c = 0; c < j.cells.size(); ++c) {
    if (inside[c]) {
      ++n_in;
      continue;
    }
    mean += j.cells[c];
    energy += tprime_energy(j.cells[c]);
  }
  const std::size_t n_out = j.cells.size() - n_in;
  if (n_in == 0) throw InvalidInput("body mask is empty");
  const double p = double(n_in) / double(j.cells.size());
  if (n_out == 0) return g_lower(1.0, Matrix3::Zero(), 0.0);
  return g_lower(p, mean / double(n_out), energy / double(n_out));
}

FacePoisson face_poisson_diagnostic(int n1, int n2, double l1, double l2, const std::vector<double>& q1,
                                    const std::vector<double>& q2, const std::vector<double>& q3, double j0_33) {
  const std::size_t n = std::size_t(n1) * std::size_t(n2);
  if (n1 < 2 || n2 < 2 || q1.size() != n || q2.size() != n || q3.size() != n)
    throw InvalidInput("face samples must be n1 x n2 arrays");
  const int h1 = n1 / 2 + 1;
  const std::size_t nc = std::size_t(n2) * h1;

  std::vector<double> real(n);
  std::vector<std::complex<double>> spec(nc);
  auto* cptr = reinterpret_cast<fftw_complex*>(spec.data());
  fftw_plan fwd = fftw_plan_dft_r2c_2d(n2, n1, real.data(), cptr, FFTW_ESTIMATE);
  fftw_plan bwd = fftw_plan_dft_c2r_2d(n2, n1, cptr, real.data(), FFTW_ESTIMATE);

  auto forward = [&](const std::vector<double>& in) {
    real = in;
    fftw_execute(fwd);
    return spec;
  };
  auto backward = [&](const std::vector<std::complex<double>>& s) {
    spec = s;
    fftw_execute(bwd);
    std::vector<double> out(real);
    for (double& v : out) v /= double(n);
    return out;
  };
  auto wave = [&](int m2, int m1, double& k1, double& k2, bool& nyquist) {
    const int s2 = m2 <= n2 / 2 ? m2 : m2 - n2;
    k1 = 2.0 * kPi * m1 / l1;
    k2 = 2.0 * kPi * s2 / l2;
    nyquist = (n1 % 2 == 0 && m1 == n1 / 2) || (n2 % 2 == 0 && m2 == n2 / 2);
  };

  FacePoisson out;
  out.n1 = n1;
  out.n2 = n2;
  const auto f1 = forward(q1), f2 = forward(q2), f3 = forward(q3);
  out.J0_row3 = Vector3(-f1[0].real() / double(n), -f2[0].real() / double(n), j0_33);
  out.removed_mean[0] = f3[0].real() / double(n) + j0_33;

  std::vector<std::complex<double>> sa(nc), s3(nc), sb(nc);
  const std::complex<double> I(0.0, 1.0);
  for (int m2 = 0; m2 < n2; ++m2)
    for (int m1 = 0; m1 < h1; ++m1) {
      const std::size_t idx = std::size_t(m2) * h1 + m1;
      double k1, k2;
      bool nyq;
      wave(m2, m1, k1, k2, nyq);
      const double kk = k1 * k1 + k2 * k2;
      if (idx == 0 || kk == 0.0) continue;
      // lap alpha = q3 + J33, lap alpha3 = -(d1 q1 + d2 q2), lap beta = d1 q2 - d2 q1
      sa[idx] = -f3[idx] / kk;
      if (!nyq) {
        s3[idx] = (I * k1 * f1[idx] + I * k2 * f2[idx]) / kk;
        sb[idx] = -(I * k1 * f2[idx] - I * k2 * f1[idx]) / kk;
      }
    }
  out.alpha = backward(sa);
  out.alpha3 = backward(s3);
  out.beta = backward(sb);
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(bwd);
  return out;
}

double central_divergence(const pde::FieldMatrix& j) {
  const pde::Grid& g = j.grid;
  double worst = 0.0, scale = 0.0;
  for (int k = 0; k < g.cells[2]; ++k)
    for (int jj = 0; jj < g.cells[1]; ++jj)
      for (int i = 0; i < g.cells[0]; ++i)
        for (int l = 0; l < 3; ++l) {
          double d = 0.0, s = 0.0;
          for (int a = 0; a < 3; ++a) {
            const double up = j.cells[shifted(g, i, jj, k, a, 1)](a, l);
            const double dn = j.cells[shifted(g, i, jj, k, a, -1)](a, l);
            d += (up - dn) / (2.0 * g.spacing[a]);
            s += (std::abs(up) + std::abs(dn)) / (2.0 * g.spacing[a]);
          }
          worst = std::max(worst, std::abs(d));
          scale = std::max(scale, s);
        }
  return scale > 0.0 ? worst / scale : worst;
}

Quasiconvexity quasiconvexity_check(const pde::FieldMatrix& j, double div_tol) {
  Quasiconvexity out;
  out.divergence = central_divergence(j);
  if (out.divergence > div_tol)
    throw InvalidInput("field is not divergence free (relative centred divergence " +
                       std::to_string(out.divergence) + ")");
  double lhs = 0.0;
  for (const Matrix3& c : j.cells) lhs += tprime_energy(c);
  out.lhs = lhs / double(j.cells.size());
  out.rhs = tprime_energy(j.mean());
  out.gap = out.lhs - out.rhs;
  return out;
}

pde::FieldMatrix random_divergence_free(const pde::Grid& g, std::uint64_t seed, const Matrix3& j0, double amplitude) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  const std::size_t nc = g.cell_count();
  // w[l][c]: vector potential of column l
  std::array<std::vector<Vector3>, 3> w;
  for (auto& col : w) {
    col.resize(nc);
    for (auto& v : col) v = Vector3(u(rng), u(rng), u(rng));
  }
  pde::FieldMatrix f;
  f.grid = g;
  f.cells.assign(nc, j0);
  for (int k = 0; k < g.cells[2]; ++k)
    for (int jj = 0; jj < g.cells[1]; ++jj)
      for (int i = 0; i < g.cells[0]; ++i) {
        Matrix3& out = f.cells[g.cell_index(i, jj, k)];
        for (int l = 0; l < 3; ++l) {
          // D_a w_b
          Matrix3 d;
          for (int a = 0; a < 3; ++a) {
            const Vector3 diff = w[l][shifted(g, i, jj, k, a, 1)] - w[l][shifted(g, i, jj, k, a, -1)];
            d.row(a) = diff.transpose() / (2.0 * g.spacing[a]);
          }
          out(0, l) += d(1, 2) - d(2, 1);
          out(1, l) += d(2, 0) - d(0, 2);
          out(2, l) += d(0, 1) - d(1, 0);
        }
      }
  return f;
}

pde::FieldMatrix equality_class_field(const pde::Grid& g, const expr::Series& alpha, const expr::Series& beta,
                                      const Matrix3& j0) {
  const std::size_t nc = g.cell_count();
  std::vector<double> a(nc), b(nc);
  for (int k = 0; k < g.cells[2]; ++k)
    for (int jj = 0; jj < g.cells[1]; ++jj)
      for (int i = 0; i < g.cells[0]; ++i) {
        const Vector3 x = g.cell_center(i, jj, k);
        a[g.cell_index(i, jj, k)] = alpha.value(x);
        b[g.cell_index(i, jj, k)] = beta.value(x);
      }
  // centred first differences along each axis
  auto diff = [&](const std::vector<double>& v, int axis) {
    std::vector<double> d(nc);
    for (int k = 0; k < g.cells[2]; ++k)
      for (int jj = 0; jj < g.cells[1]; ++jj)
        for (int i = 0; i < g.cells[0]; ++i)
          d[g.cell_index(i, jj, k)] =
              (v[shifted(g, i, jj, k, axis, 1)] - v[shifted(g, i, jj, k, axis, -1)]) / (2.0 * g.spacing[axis]);
    return d;
  };
  std::array<std::vector<double>, 3> da, db;
  std::array<std::array<std::vector<double>, 3>, 3> dda;
  for (int m = 0; m < 3; ++m) {
    da[m] = diff(a, m);
    db[m] = diff(b, m);
  }
  for (int k = 0; k < 3; ++k)
    for (int l = k; l < 3; ++l) dda[k][l] = diff(da[k], l);

  pde::FieldMatrix f;
  f.grid = g;
  f.cells.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    Matrix3 h;
    for (int k = 0; k < 3; ++k)
      for (int l = k; l < 3; ++l) h(k, l) = h(l, k) = dda[k][l][c];
    Matrix3 j = j0 + h - h.trace() * Matrix3::Identity();
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        for (int m = 0; m < 3; ++m) j(k, l) += levi_civita(k, l, m) * db[m][c];
    f.cells[c] = j;
  }
  return f;
}

}  // namespace tbound::gfun
