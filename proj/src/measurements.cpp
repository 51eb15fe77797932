#include "tbound/measurements.hpp"

#include <algorithm>
#include <cmath>

#include "tbound/error.hpp"

namespace tbound::measure {

namespace {

Normalized normalize_with(const pde::PotentialSet& ps, const Matrix3& g, const char* what) {
  Eigen::JacobiSVD<Matrix3> svd(g);
  const Vector3 s = svd.singularValues();
  const double cond = s(2) > 0.0 ? s(0) / s(2) : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxCondition)) {
    throw MeasurementDegeneracy(std::string("the three measurements are not independent: cond(") +
                                    what + ") = " + std::to_string(cond),
                                "measure");
  }
  Normalized out;
  out.mean_before = g;
  out.condition = cond;
  out.K = g.inverse();
  out.potentials = pde::combine(ps, out.K);
  return out;
}

double rel(double diff, double scale) { return scale > 0.0 ? diff / scale : diff; }

ResponseMatrix response(const pde::PotentialSet& ps) {
  const pde::RoutePair r = pde::energy_matrix(ps);
  ResponseMatrix out;
  out.volume = r.volume;
  out.boundary = r.boundary;
  out.value = 0.5 * (r.boundary + r.boundary.transpose());
  out.route_gap = r.relative_gap();
  out.asymmetry = rel((r.boundary - r.boundary.transpose()).cwiseAbs().maxCoeff(),
                      r.boundary.cwiseAbs().maxCoeff());
  out.warning = out.route_gap > 1e-5 || out.asymmetry > 1e-5;
  return out;
}

}  // namespace

Normalized normalize_mean(const pde::PotentialSet& ps) {
  return normalize_with(ps, pde::boundary_mean_E(ps), "<E>");
}

Normalized normalize_current(const pde::PotentialSet& ps) {
  return normalize_with(ps, pde::boundary_mean_J(ps), "<J>");
}

ResponseMatrix compute_A(const pde::PotentialSet& normalized) {
  if (normalized.kind != pde::BoundaryKind::dirichlet)
    throw InvalidInput("compute_A needs Dirichlet potentials");
  return response(normalized);
}

ResponseMatrix compute_Aprime(const pde::PotentialSet& normalized) {
  if (normalized.kind != pde::BoundaryKind::neumann)
    throw InvalidInput("compute_Aprime needs Neumann potentials");
  return response(normalized);
}

MTensor compute_M(const pde::PotentialSet& ps) {
  const pde::TensorRoutes r = pde::m_tensor(ps);
  MTensor out;
  out.volume = r.volume;
  out.boundary = r.boundary;
  out.value = r.volume;
  out.route_gap = r.relative_gap();
  out.warning = out.route_gap > 1e-5;
  return out;
}

MTensor compute_M(const pde::Grid& grid, const pde::BoundaryData& bc, const Matrix3& k,
                  const pde::SolverOptions& opt) {
  if (bc.kind != pde::BoundaryKind::dirichlet) throw InvalidInput("compute_M needs Dirichlet data");
  const auto field = pde::ConductivityField::homogeneous(grid, 2, 2.0, 1.0);
  const pde::PotentialSet u = pde::solve(field, bc, pde::Mode::laplace, opt);
  return compute_M(pde::combine(u, k));
}

Diagonalization diagonalize(const Matrix3& a, const Tensor4& m) {
  const Matrix3 sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix3> es(sym);
  Diagonalization out;
  for (int c = 0; c < 3; ++c) {
    Vector3 v = es.eigenvectors().col(2 - c);
    int big = 0;
    for (int r = 1; r < 3; ++r)
      if (std::abs(v(r)) > std::abs(v(big)) + 1e-12) big = r;
    if (v(big) < 0) v = -v;
    out.R.col(c) = v;
    out.lambda(c) = es.eigenvalues()(2 - c);
  }
  out.A = out.R.transpose() * sym * out.R;
  out.M = tensor::rotate(m, out.R);
  return out;
}

double MStructure::max() const { return std::max({zeros, antisymmetry, symmetry}); }

MStructure m_structure(const Tensor4& m) {
  MStructure s;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          if (i == k || j == l) s.zeros = std::max(s.zeros, std::abs(m(i, j, k, l)));
          s.antisymmetry = std::max(s.antisymmetry, std::abs(m(i, j, k, l) + m(i, l, k, j)));
          s.symmetry = std::max(s.symmetry, std::abs(m(i, j, k, l) - m(k, l, i, j)));
        }
  return s;
}

Attainability attainability_residual(const pde::FieldMatrix& e, const pde::ConductivityField& f) {
  Attainability out;
  Matrix3 mean1 = Matrix3::Zero();
  std::size_t n1 = 0;
  for (std::size_t c = 0; c < e.cells.size(); ++c)
    if (f.phase[c] == 1) {
      mean1 += e.cells[c];
      ++n1;
    }
  const double s2 = f.sigma2;
  auto translated = [&](std::size_t c) {
    return Matrix3(f.sigma(c) * e.cells[c] + s2 * tensor::translation(e.cells[c]));
  };
  Matrix3 mean_all = Matrix3::Zero();
  for (std::size_t c = 0; c < e.cells.size(); ++c) mean_all += translated(c);
  mean_all /= double(e.cells.size());
  for (std::size_t c = 0; c < e.cells.size(); ++c)
    out.r2 = std::max(out.r2, (translated(c) - mean_all).norm());
  out.r2 = rel(out.r2, mean_all.norm());

  if (n1 == 0) {
    out.phase1_empty = true;
    out.r1 = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  mean1 /= double(n1);
  for (std::size_t c = 0; c < e.cells.size(); ++c)
    if (f.phase[c] == 1) out.r1 = std::max(out.r1, (e.cells[c] - mean1).norm());
  out.r1 = rel(out.r1, mean1.norm());
  return out;
}

double harmonic_margin(const Matrix3& a, double f1, double sigma1, double sigma2) {
  const double h = 3.0 / (f1 / sigma1 + (1.0 - f1) / sigma2);
  return (a.trace() - h) / h;
}

}  // namespace tbound::measure
