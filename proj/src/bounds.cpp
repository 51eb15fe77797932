#include "tbound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tbound/error.hpp"

namespace tbound::bounds {

namespace {

void check_phases(double sigma1, double sigma2) {
  if (!(sigma1 > sigma2 && sigma2 > 0.0))
    throw InvalidInput("bounds need sigma1 > sigma2 > 0", "bound");
}

Matrix3 symmetric(const Matrix3& a) { return 0.5 * (a + a.transpose()); }

Eigen::SelfAdjointEigenSolver<Matrix3> eigen_sym(const Matrix3& a) {
  return Eigen::SelfAdjointEigenSolver<Matrix3>(symmetric(a));
}

}  // namespace

Bound clamp(double raw, std::string note) {
  Bound b;
  b.raw = raw;
  b.value = std::clamp(raw, 0.0, 1.0);
  b.clamped = b.value != raw;
  b.note = std::move(note);
  return b;
}

TraceBound upper_bound_trace(const Vector3& lambda, const Tensor4& m, double sigma1, double sigma2,
                             double tol) {
  check_phases(sigma1, sigma2);
  if (tol < 0.0) tol = 1e-8 * sigma2;
  TraceBound out;
  Matrix3& q = out.Q;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      q(i, j) = i == j ? lambda(i) - sigma2 : sigma2 * (m(i, i, j, j) - 1.0);

  const auto es = eigen_sym(q);
  const Vector3 ones = Vector3::Ones();
  double t = 0.0;
  bool infinite = false;
  for (int k = 0; k < 3; ++k) {
    const double mu = es.eigenvalues()(k);
    const double w = es.eigenvectors().col(k).dot(ones);
    if (mu < -tol)
      throw DataInconsistency("trace-bound matrix is indefinite (eigenvalue " + std::to_string(mu) + ")",
                              "bound");
    if (mu <= tol) {
      if (w * w > 1e-12) infinite = true;
      continue;
    }
    t += w * w / mu;
  }
  const double pref = (sigma1 + 2.0 * sigma2) / (sigma1 - sigma2);
  if (infinite) {
    out.T = std::numeric_limits<double>::infinity();
    out.bound = clamp(0.0, "singular trace-bound matrix");
  } else {
    out.T = t;
    out.bound = clamp(pref / (1.0 + sigma2 * t));
  }
  return out;
}

TraceBound upper_bound_trace_from_A(const Matrix3& a, const Tensor4& m, double sigma1, double sigma2, double tol) {
  const auto es = eigen_sym(a);
  Matrix3 r;
  Vector3 lambda;
  for (int c = 0; c < 3; ++c) {
    r.col(c) = es.eigenvectors().col(2 - c);
    lambda(c) = es.eigenvalues()(2 - c);
  }
  return upper_bound_trace(lambda, tensor::rotate(m, r), sigma1, sigma2, tol);
}

Bound upper_bound_special(const Matrix3& sigma_d, double sigma1, double sigma2, double tol) {
  return upper_bound_trace_from_A(sigma_d, tensor::translation_tensor(), sigma1, sigma2, tol).bound;
}

Bound pairwise_bound_affine(const Matrix3& sigma_d, double sigma1, double sigma2, const Tensor4* m) {
  check_phases(sigma1, sigma2);
  if (m) {
    const double dev = std::max({std::abs((*m)(0, 0, 1, 1) - 1.0), std::abs((*m)(0, 0, 2, 2) - 1.0),
                                 std::abs((*m)(1, 1, 2, 2) - 1.0)});
    if (dev > 1e-6)
      throw InvalidInput("pairwise bound is derived for affine Dirichlet data only (M_iijj = 1); |M_iijj - 1| = " +
                             std::to_string(dev),
                         "bound");
  }
  const auto es = eigen_sym(sigma_d);
  const double tol = 1e-8 * sigma2;
  double tr = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double mu = es.eigenvalues()(k) - sigma2;
    if (mu < -tol) throw DataInconsistency("sigma_D has an eigenvalue below sigma2", "bound");
    if (mu <= tol) return clamp(0.0, "sigma_D - sigma2 I singular");
    tr += 1.0 / mu;
  }
  return clamp((sigma1 + sigma2) / (sigma1 - sigma2) / (1.0 + 2.0 / 3.0 * sigma2 * tr));
}

Tensor4 block_A(const Matrix3& a) {
  Tensor4 t;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) t(i, j, k, j) = a(i, k);
  return t;
}

Tensor4 feasibility_operator(const Matrix3& a, const Tensor4& m, double f1, double sigma1, double sigma2) {
  const tensor::PhaseAverage pa{f1, sigma1, sigma2};
  Tensor4 n;
  n.entries = block_A(a).entries + sigma2 * m.entries - tensor::limit_tensor_numeric(pa).entries;
  n.entries = 0.5 * (n.entries + n.entries.transpose());
  return n;
}

Feasibility feasibility_interval(const Matrix3& a, const Tensor4& m, double sigma1, double sigma2,
                                 const FeasibilityOptions& opt) {
  check_phases(sigma1, sigma2);
  Feasibility out;
  out.tolerance = opt.tolerance;
  Tensor4 base;
  base.entries = block_A(a).entries + sigma2 * m.entries;
  base.entries = 0.5 * (base.entries + base.entries.transpose());
  out.epsilon = opt.epsilon_scale *
                Eigen::SelfAdjointEigenSolver<tensor::Matrix9>(base.entries, Eigen::EigenvaluesOnly)
                    .eigenvalues()
                    .cwiseAbs()
                    .maxCoeff();

  auto evaluate = [&](double f1, double* det) {
    const Tensor4 n = feasibility_operator(a, m, f1, sigma1, sigma2);
    if (det) *det = n.entries.determinant();
    return tensor::min_eigenvalue(n);
  };
  auto feasible = [&](double f1) { return evaluate(f1, nullptr) >= -out.epsilon; };

  const int np = std::max(2, opt.scan_points);
  for (int s = 0; s <= np; ++s) {
    const double f1 = double(s) / np;
    double det = 0.0;
    const double e = evaluate(f1, &det);
    out.scan_f1.push_back(f1);
    out.scan_min_eig.push_back(e);
    out.scan_det.push_back(det);
  }
  if (out.scan_min_eig[0] < -out.epsilon)
    throw DataInconsistency("A + sigma2 M - <L^-1>^-1 is not positive semidefinite even at f1 = 0 (min eigenvalue " +
                                std::to_string(out.scan_min_eig[0]) + ")",
                            "bound");

  for (std::size_t s = 0; s < out.scan_f1.size();) {
    if (out.scan_det[s] < 0.0) {
      ++s;
      continue;
    }
    std::size_t e = s;
    while (e + 1 < out.scan_f1.size() && out.scan_det[e + 1] >= 0.0) ++e;
    out.det_nonnegative.emplace_back(out.scan_f1[s], out.scan_f1[e]);
    s = e + 1;
  }

  // last feasible scan point, and whether the feasible points form a prefix
  std::size_t last = 0;
  for (std::size_t s = 0; s < out.scan_f1.size(); ++s)
    if (out.scan_min_eig[s] >= -out.epsilon) last = s;
  for (std::size_t s = 0; s < last; ++s)
    if (out.scan_min_eig[s] < -out.epsilon) out.interval = false;
  if (!out.interval) {
    out.warning = "feasible set is not an interval on the scan grid; returning the largest feasible scan point";
    out.f1_star = out.scan_f1[last];
    return out;
  }
  if (last + 1 == out.scan_f1.size()) {
    out.f1_star = 1.0;
    return out;
  }
  double lo = out.scan_f1[last], hi = out.scan_f1[last + 1];
  while (hi - lo > opt.tolerance) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  out.f1_star = lo;
  return out;
}

Bound lower_bound_general(double trace_aprime, double g_minus, double sigma1, double sigma2) {
  check_phases(sigma1, sigma2);
  const double den = 2.0 * sigma1 * trace_aprime - g_minus;
  if (!(den > 0.0))
    throw DataInconsistency("2 sigma1 Tr A' - g must be positive, got " + std::to_string(den), "bound");
  return clamp(1.0 - (2.0 * sigma1 + sigma2) / (2.0 * (sigma1 - sigma2)) * (1.0 - 9.0 / den));
}

NeumannLower lower_bound_special_neumann(const Matrix3& sigma_n, double sigma1, double sigma2, double tol) {
  check_phases(sigma1, sigma2);
  if (tol < 0.0) tol = 1e-6 * sigma1;
  const auto es = eigen_sym(sigma_n);
  const Vector3 mu = es.eigenvalues();
  if (mu(0) < sigma2 - tol || mu(2) > sigma1 + tol)
    throw DataInconsistency("sigma_N spectrum [" + std::to_string(mu(0)) + ", " + std::to_string(mu(2)) +
                                "] outside [sigma2, sigma1]",
                            "bound");
  NeumannLower out;
  double tr_inv = 0.0;
  for (int k = 0; k < 3; ++k) tr_inv += 1.0 / mu(k);
  out.lb18 = lower_bound_general(tr_inv, -3.0, sigma1, sigma2);

  const double gap_tol = 1e-12 * sigma1;
  double tr = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double d = sigma1 - mu(k);
    if (d <= gap_tol) {
      out.lb19_singular = true;
      break;
    }
    tr += 1.0 / d;
  }
  if (out.lb19_singular) {
    out.lb19 = clamp(1.0, "s1 I - sigma_N singular: limit value");
  } else {
    out.lb19 = clamp(1.0 - (2.0 * sigma1 + sigma2) / (sigma1 - sigma2) / (sigma1 * tr - 1.0));
  }
  return out;
}

double hashin_shtrikman_lower(double f1, double sigma1, double sigma2) {
  const double f2 = 1.0 - f1;
  return sigma2 + 3.0 * f1 * sigma2 * (sigma1 - sigma2) / (3.0 * sigma2 + f2 * (sigma1 - sigma2));
}

}  // namespace tbound::bounds
