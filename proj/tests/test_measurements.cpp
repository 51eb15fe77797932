#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "tbound/error.hpp"
#include "tbound/measurements.hpp"

using namespace tbound;
using namespace tbound::pde;
using namespace tbound::measure;

namespace {

constexpr double kPi = 3.14159265358979323846;

template <class D>
double max_abs(const Eigen::MatrixBase<D>& m) {
  return m.cwiseAbs().maxCoeff();
}

BoundaryData wavy_dirichlet(double amp) {
  std::array<ScalarFn, 3> v;
  for (int i = 0; i < 3; ++i)
    v[i] = [amp, i](const Vector3& x) {
      const int j = (i + 1) % 3, k = (i + 2) % 3;
      return -x(i) + amp * std::sin(kPi * x(j)) * std::sin(kPi * x(k)) + amp * x(j) * x(j);
    };
  return BoundaryData::dirichlet(v);
}

// Data rotated with r: V'_i(y) = r_ai V_a(r y).
BoundaryData rotated_data(const BoundaryData& bc, const Matrix3& r) {
  std::array<ScalarFn, 3> v;
  for (int i = 0; i < 3; ++i)
    v[i] = [bc, r, i](const Vector3& y) {
      const Vector3 x = r * y;
      double s = 0.0;
      for (int a = 0; a < 3; ++a) s += r(a, i) * bc.value[a](x);
      return s;
    };
  return BoundaryData::dirichlet(v);
}

}  // namespace

TEST_CASE("normalization") {
  const auto field = testutil::sphere_field(10, 0.25, 4.0, 1.0);

  SUBCASE("affine data needs no combination") {
    const auto ps = solve(field, BoundaryData::affine_dirichlet(), Mode::conduction);
    const Normalized n = normalize_mean(ps);
    CHECK(max_abs(n.K - Matrix3::Identity()) < 1e-12);
  }

  SUBCASE("G = diag(2,1,1)") {
    const auto ps = solve(field, combine(BoundaryData::affine_dirichlet(), Eigen::Vector3d(2, 1, 1).asDiagonal()),
                          Mode::conduction);
    const Normalized n = normalize_mean(ps);
    CHECK(max_abs(n.mean_before - Eigen::Vector3d(2, 1, 1).asDiagonal().toDenseMatrix()) < 1e-12);
    CHECK(max_abs(n.K - Eigen::Vector3d(0.5, 1, 1).asDiagonal().toDenseMatrix()) < 1e-12);
  }

  SUBCASE("a random combination is undone") {
    std::mt19937_64 rng(31);
    const Matrix3 c = testutil::random_matrix(rng) + 2.0 * Matrix3::Identity();
    const auto ps = solve(field, combine(BoundaryData::affine_dirichlet(), c), Mode::conduction);
    const Normalized n = normalize_mean(ps);
    CHECK(max_abs(n.K - c.inverse()) < 1e-10);
    CHECK(max_abs(boundary_mean_E(n.potentials) - Matrix3::Identity()) < 1e-10);
  }

  SUBCASE("dependent measurements") {
    Matrix3 c = Matrix3::Identity();
    c.col(2) = c.col(0);
    const auto ps = solve(field, combine(BoundaryData::affine_dirichlet(), c), Mode::conduction);
    CHECK_THROWS_AS(normalize_mean(ps), MeasurementDegeneracy);
  }
}

TEST_CASE("response matrix A") {
  const Grid g = Grid::cube(8);
  SUBCASE("homogeneous phase 2") {
    const auto ps = solve(ConductivityField::homogeneous(g, 2, 3.0, 1.5), BoundaryData::affine_dirichlet(),
                          Mode::conduction);
    const ResponseMatrix a = compute_A(normalize_mean(ps).potentials);
    CHECK(max_abs(a.value - 1.5 * Matrix3::Identity()) < 1e-9);
    CHECK(a.route_gap < 1e-8);
    CHECK_FALSE(a.warning);
  }
  SUBCASE("full phase 1") {
    const auto ps = solve(ConductivityField::homogeneous(g, 1, 3.0, 1.5), BoundaryData::affine_dirichlet(),
                          Mode::conduction);
    const ResponseMatrix a = compute_A(normalize_mean(ps).potentials);
    CHECK(max_abs(a.value - 3.0 * Matrix3::Identity()) < 1e-9);
  }
  SUBCASE("wrong boundary kind") {
    const auto ps = solve(ConductivityField::homogeneous(g, 2, 3.0, 1.5), BoundaryData::special_neumann(),
                          Mode::conduction);
    CHECK_THROWS_AS(compute_A(ps), InvalidInput);
  }
}

TEST_CASE("dilute sphere response at 64^3") {
  // f1 = 0.05 ball, Maxwell: sigma_D ~ (1 + 3 f1 (s1 - s2)/(s1 + 2 s2)) I
  const double r = std::cbrt(0.05 * 3.0 / (4.0 * kPi));
  const auto field = testutil::sphere_field(64, r, 5.0, 1.0);
  const auto ps = solve(field, BoundaryData::affine_dirichlet(), Mode::conduction);
  const Normalized n = normalize_mean(ps);
  const ResponseMatrix a = compute_A(n.potentials);
  const double f1 = field.f1();
  const double dilute = 1.0 + 3.0 * f1 * 4.0 / 7.0;
  for (int i = 0; i < 3; ++i) CHECK(std::abs(a.value(i, i) - 1.0) == doctest::Approx(dilute - 1.0).epsilon(0.1));
  CHECK(a.route_gap < 1e-8);
  CHECK(a.asymmetry < 1e-8);
  CHECK(harmonic_margin(a.value, f1, 5.0, 1.0) >= -0.01);
}

TEST_CASE("response matrix A'") {
  const Grid g = Grid::cube(8);
  SUBCASE("homogeneous phases") {
    for (int label : {1, 2}) {
      const auto field = ConductivityField::homogeneous(g, label, 4.0, 2.0);
      const auto ps = solve(field, BoundaryData::special_neumann(), Mode::conduction);
      const ResponseMatrix a = compute_Aprime(normalize_current(ps).potentials);
      CHECK(max_abs(a.value - Matrix3::Identity() / field.sigma(0)) < 1e-8);
    }
  }
  SUBCASE("two-phase: A' is the inverse Neumann tensor") {
    // <J> = I with J divergence free and E a gradient: <J^T E> = <E> = sigma_N^{-1}
    const auto field = testutil::sphere_field(16, 0.3, 5.0, 1.0);
    const auto ps = solve(field, BoundaryData::special_neumann(), Mode::conduction);
    const Normalized n = normalize_current(ps);
    const ResponseMatrix a = compute_Aprime(n.potentials);
    const Matrix3 e = boundary_mean_E(n.potentials);
    CHECK(max_abs(a.value - e) < 1e-8);
    CHECK(a.route_gap < 1e-8);
    CHECK(max_abs(a.value - a.value.transpose()) < 1e-12);
  }
}

TEST_CASE("diagonalization") {
  SUBCASE("hand example") {
    Matrix3 a;
    a << 2, 1, 0, 1, 2, 0, 0, 0, 3;
    const Diagonalization d = diagonalize(a, tensor::translation_tensor());
    CHECK(d.lambda(0) == doctest::Approx(3.0));
    CHECK(d.lambda(1) == doctest::Approx(3.0));
    CHECK(d.lambda(2) == doctest::Approx(1.0));
    CHECK(max_abs(d.A - Matrix3(d.lambda.asDiagonal())) < 1e-12);
    CHECK(max_abs(d.R.transpose() * d.R - Matrix3::Identity()) < 1e-12);
    CHECK(max_abs(d.M.entries - tensor::translation_tensor().entries) < 1e-12);
  }
  SUBCASE("already diagonal") {
    const Matrix3 a = Eigen::Vector3d(1.0, 5.0, 2.0).asDiagonal();
    const Diagonalization d = diagonalize(a, tensor::translation_tensor());
    Matrix3 p = Matrix3::Zero();
    p(1, 0) = p(2, 1) = p(0, 2) = 1.0;
    CHECK(max_abs(d.R - p) < 1e-12);
    CHECK((d.lambda - Eigen::Vector3d(5, 2, 1)).norm() < 1e-12);
  }
  SUBCASE("random symmetric matrices; idempotent") {
    std::mt19937_64 rng(32);
    for (int t = 0; t < 50; ++t) {
      const Matrix3 b = testutil::random_matrix(rng);
      const Matrix3 a = b * b.transpose();
      const Diagonalization d = diagonalize(a, tensor::translation_tensor());
      CHECK(max_abs(d.R * d.A * d.R.transpose() - a) < 1e-12);
      CHECK(d.lambda(0) >= d.lambda(1));
      CHECK(d.lambda(1) >= d.lambda(2));
      for (int c = 0; c < 3; ++c) CHECK(d.R.col(c).maxCoeff() >= -d.R.col(c).minCoeff() - 1e-12);
      const Diagonalization dd = diagonalize(d.A, d.M);
      CHECK(max_abs(dd.A - d.A) < 1e-12);
      CHECK(max_abs(dd.M.entries - tensor::translation_tensor().entries) < 1e-12);
    }
  }
}

TEST_CASE("M tensor") {
  const auto field = testutil::sphere_field(12, 0.3, 5.0, 1.0, Eigen::Vector3d(0.05, -0.03, 0.02));
  const SolverOptions opt;

  SUBCASE("affine data") {
    const MTensor m = compute_M(field.grid, BoundaryData::affine_dirichlet(), Matrix3::Identity(), opt);
    CHECK(max_abs(m.value.entries - tensor::translation_tensor().entries) < 1e-8);
    CHECK(m.value(0, 0, 1, 1) == doctest::Approx(1.0));
    CHECK(m.value(0, 0, 2, 2) == doctest::Approx(1.0));
    CHECK(m.value(1, 1, 2, 2) == doctest::Approx(1.0));
  }

  SUBCASE("non-affine data") {
    const MTensor m = compute_M(field.grid, wavy_dirichlet(0.2), Matrix3::Identity(), opt);
    CHECK(m.route_gap < 1e-10);
    CHECK_FALSE(m.warning);
    const MStructure s = m_structure(m.value);
    CHECK(s.max() < 1e-12);
    CHECK(m.value(0, 1, 0, 1) == 0.0);
    CHECK(m.value(0, 0, 1, 1) == doctest::Approx(-m.value(0, 1, 1, 0)));
    CHECK(max_abs(m.value.entries - tensor::translation_tensor().entries) > 1e-3);

    // conduction solve with the same data: same M (null Lagrangian)
    const auto ps = solve(field, wavy_dirichlet(0.2), Mode::conduction);
    CHECK(max_abs(compute_M(ps).value.entries - m.value.entries) < 1e-9);

    // combination by K transforms M as M(P K) per measurement index
    std::mt19937_64 rng(33);
    const Matrix3 k = testutil::random_matrix(rng) + 2.0 * Matrix3::Identity();
    const MTensor mk = compute_M(field.grid, wavy_dirichlet(0.2), k, opt);
    Tensor4 ref;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int kk = 0; kk < 3; ++kk)
          for (int l = 0; l < 3; ++l) {
            double s = 0.0;
            for (int a = 0; a < 3; ++a)
              for (int c = 0; c < 3; ++c) s += k(a, i) * k(c, kk) * m.value(a, j, c, l);
            ref(i, j, kk, l) = s;
          }
    CHECK(max_abs(mk.value.entries - ref.entries) < 1e-9);
  }

  SUBCASE("algebraic rotation matches a re-solve on the rotated body") {
    // cyclic axis permutation: (r y) = (y3, y1, y2)
    Matrix3 r = Matrix3::Zero();
    r(0, 2) = r(1, 0) = r(2, 1) = 1.0;
    const int n = field.grid.cells[0];
    auto rf = field;
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) rf.phase[rf.grid.cell_index(i, j, k)] = field.phase[field.grid.cell_index(k, i, j)];

    const auto bc = wavy_dirichlet(0.2);
    const MTensor m = compute_M(solve(field, bc, Mode::conduction));
    const auto rps = solve(rf, rotated_data(bc, r), Mode::conduction);
    const MTensor mr = compute_M(rps);
    CHECK(max_abs(mr.value.entries - tensor::rotate(m.value, r).entries) < 1e-9);

    // and A transforms as R^T A R
    const Matrix3 a = compute_A(solve(field, bc, Mode::conduction)).value;
    CHECK(max_abs(compute_A(rps).value - r.transpose() * a * r) < 1e-9);
  }
}

TEST_CASE("attainability residuals") {
  SUBCASE("homogeneous body") {
    const auto field = ConductivityField::homogeneous(Grid::cube(8), 2, 3.0, 1.0);
    const auto ps = solve(field, BoundaryData::affine_dirichlet(), Mode::conduction);
    const Attainability at = attainability_residual(extract_fields(ps).E, field);
    CHECK(at.r2 < 1e-9);
    CHECK(at.phase1_empty);
    CHECK(std::isnan(at.r1));
  }

  SUBCASE("two nearby spheres are less uniform than one") {
    const double s1 = 5.0, s2 = 1.0;
    const auto one = testutil::sphere_field(32, 0.15, s1, s2);
    auto two = testutil::sphere_field(32, 0.15, s1, s2, Eigen::Vector3d(-0.17, 0, 0));
    const auto other = testutil::sphere_field(32, 0.15, s1, s2, Eigen::Vector3d(0.17, 0, 0));
    for (std::size_t c = 0; c < two.phase.size(); ++c)
      if (other.phase[c] == 1) two.phase[c] = 1;
    const auto bc = BoundaryData::affine_dirichlet();
    const auto e1 = extract_fields(normalize_mean(solve(one, bc, Mode::conduction)).potentials).E;
    const auto e2 = extract_fields(normalize_mean(solve(two, bc, Mode::conduction)).potentials).E;
    const Attainability a1 = attainability_residual(e1, one);
    const Attainability a2 = attainability_residual(e2, two);
    MESSAGE("r1 one sphere " << a1.r1 << ", two spheres " << a2.r1);
    CHECK(a2.r1 > a1.r1);
    CHECK(a1.r2 > 0.0);
  }
}

TEST_CASE("harmonic-mean sanity bound") {
  const auto field = testutil::sphere_field(16, 0.3, 5.0, 1.0);
  const auto ps = solve(field, wavy_dirichlet(0.0), Mode::conduction);
  const ResponseMatrix a = compute_A(normalize_mean(ps).potentials);
  CHECK(harmonic_margin(a.value, field.f1(), 5.0, 1.0) >= -0.01);
  // homogeneous: equality
  CHECK(harmonic_margin(2.0 * Matrix3::Identity(), 0.0, 5.0, 2.0) == doctest::Approx(0.0));
}
