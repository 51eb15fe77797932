#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "tbound/bounds.hpp"
#include "tbound/error.hpp"
#include "tbound/measurements.hpp"

using namespace tbound;
using namespace tbound::bounds;

namespace {

constexpr double kPi = 3.14159265358979323846;

Tensor4 T() { return tensor::translation_tensor(); }
Matrix3 I3() { return Matrix3::Identity(); }

// Measured A and M for non-affine data on a small two-phase body.
struct Measured {
  Matrix3 A;
  Tensor4 M;
};
Measured measured_nonaffine() {
  using namespace tbound::pde;
  const auto field = testutil::sphere_field(12, 0.3, 5.0, 1.0, Vector3(0.04, 0.0, -0.05));
  std::array<ScalarFn, 3> v;
  for (int i = 0; i < 3; ++i)
    v[i] = [i](const Vector3& x) {
      const int j = (i + 1) % 3, k = (i + 2) % 3;
      return -x(i) + 0.3 * std::sin(kPi * x(j)) * std::sin(kPi * x(k)) + 0.2 * x(j) * x(j);
    };
  const auto ps = solve(field, BoundaryData::dirichlet(v), Mode::conduction);
  const auto n = measure::normalize_mean(ps);
  return {measure::compute_A(n.potentials).value, measure::compute_M(n.potentials).value};
}

}  // namespace

TEST_CASE("trace bound examples") {
  SUBCASE("Hashin-Shtrikman point") {
    const double l = hashin_shtrikman_lower(0.3, 2.0, 1.0);
    CHECK(l == doctest::Approx(1.2432432).epsilon(1e-7));
    const TraceBound b = upper_bound_trace(Vector3::Constant(l), T(), 2.0, 1.0);
    CHECK(std::abs(b.bound.value - 0.3) < 1e-9);
  }
  SUBCASE("full phase 1") {
    CHECK(std::abs(upper_bound_trace(Vector3::Constant(2.0), T(), 2.0, 1.0).bound.value - 1.0) < 1e-12);
  }
  SUBCASE("direct substitution") {
    const TraceBound b = upper_bound_trace(Vector3::Constant(1.2), T(), 5.0, 1.0);
    CHECK(b.T == doctest::Approx(15.0));
    CHECK(b.bound.value == doctest::Approx(7.0 / 64.0).epsilon(1e-12));
  }
  SUBCASE("singular limit") {
    const TraceBound b = upper_bound_trace(Vector3::Constant(1.0), T(), 5.0, 1.0);
    CHECK(std::isinf(b.T));
    CHECK(b.bound.value == 0.0);
  }
  SUBCASE("indefinite data") {
    CHECK_THROWS_AS(upper_bound_trace(Vector3(1.2, 0.9, 1.3), T(), 5.0, 1.0), DataInconsistency);
  }
  SUBCASE("off-diagonal entries enter with +sigma2 (M_iijj - 1)") {
    // M_1122 = 1.5: Q = [[.2,.5,0],[.5,.2,0],[0,0,.2]] is indefinite
    Tensor4 m = T();
    m(0, 0, 1, 1) = m(1, 1, 0, 0) = 1.5;
    CHECK_THROWS_AS(upper_bound_trace(Vector3::Constant(1.2), m, 5.0, 1.0), DataInconsistency);
    m(0, 0, 1, 1) = m(1, 1, 0, 0) = 1.1;
    const TraceBound b = upper_bound_trace(Vector3::Constant(1.2), m, 5.0, 1.0);
    CHECK(b.Q(0, 1) == doctest::Approx(0.1));
    // 1.Q^-1.1 with Q = [[.2,.1,0],[.1,.2,0],[0,0,.2]]: 2/0.3 + 5
    CHECK(b.T == doctest::Approx(2.0 / 0.3 + 5.0));
  }
}

TEST_CASE("special Dirichlet bound") {
  CHECK(std::abs(upper_bound_special(2.0 * I3(), 2.0, 1.0).value - 1.0) < 1e-12);
  CHECK(upper_bound_special(I3(), 2.0, 1.0).value == 0.0);
  CHECK(upper_bound_special(10.0 / 7.0 * I3(), 2.0, 1.0).value == doctest::Approx(0.5).epsilon(1e-12));
  for (double s1 : {2.0, 5.0})
    for (double f1 : {0.1, 0.3, 0.5, 0.9}) {
      const Bound b = upper_bound_special(hashin_shtrikman_lower(f1, s1, 1.0) * I3(), s1, 1.0);
      CHECK(std::abs(b.value - f1) < 1e-9);
    }
}

TEST_CASE("pairwise bound") {
  CHECK(std::abs(pairwise_bound_affine(2.0 * I3(), 2.0, 1.0).value - 1.0) < 1e-12);
  CHECK(pairwise_bound_affine(1.25 * I3(), 2.0, 1.0).value == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(upper_bound_special(1.25 * I3(), 2.0, 1.0).value == doctest::Approx(4.0 / 13.0).epsilon(1e-12));

  std::mt19937_64 rng(41);
  for (int t = 0; t < 1000; ++t) {
    const double s1 = testutil::uniform(rng, 1.5, 10.0);
    const Vector3 d(testutil::uniform(rng, 1.0, s1), testutil::uniform(rng, 1.0, s1), testutil::uniform(rng, 1.0, s1));
    const Matrix3 sd = d.asDiagonal();
    CHECK(upper_bound_special(sd, s1, 1.0).value <= pairwise_bound_affine(sd, s1, 1.0).value + 1e-12);
  }

  Tensor4 m = T();
  m(0, 0, 1, 1) = m(1, 1, 0, 0) = 1.1;
  CHECK_THROWS_AS(pairwise_bound_affine(1.5 * I3(), 2.0, 1.0, &m), InvalidInput);
  const Tensor4 t = T();
  CHECK_NOTHROW(pairwise_bound_affine(1.5 * I3(), 2.0, 1.0, &t));
}

TEST_CASE("lower bounds") {
  SUBCASE("general") {
    CHECK(std::abs(lower_bound_general(3.0 / 2.0, -3.0, 2.0, 1.0).value - 1.0) < 1e-12);
    CHECK(std::abs(lower_bound_general(3.0, -3.0, 2.0, 1.0).value) < 1e-12);
    CHECK(lower_bound_general(2.0, -3.0, 2.0, 1.0).value == doctest::Approx(6.0 / 11.0).epsilon(1e-12));
    CHECK_THROWS_AS(lower_bound_general(0.5, 3.0, 2.0, 1.0), DataInconsistency);
    const Bound neg = lower_bound_general(10.0, -3.0, 2.0, 1.0);
    CHECK(neg.value == 0.0);
    CHECK(neg.raw < 0.0);
    CHECK(neg.clamped);
  }
  SUBCASE("special Neumann") {
    const NeumannLower full = lower_bound_special_neumann(2.0 * I3(), 2.0, 1.0);
    CHECK(std::abs(full.lb18.value - 1.0) < 1e-12);
    CHECK(full.lb19.value == 1.0);
    CHECK(full.lb19_singular);

    const NeumannLower mid = lower_bound_special_neumann(1.5 * I3(), 2.0, 1.0);
    CHECK(mid.lb18.value == doctest::Approx(6.0 / 11.0).epsilon(1e-12));
    CHECK(mid.lb19.value == doctest::Approx(6.0 / 11.0).epsilon(1e-12));

    const NeumannLower hom = lower_bound_special_neumann(I3(), 2.0, 1.0);
    CHECK(std::abs(hom.lb18.value) < 1e-12);
    CHECK(std::abs(hom.lb19.value) < 1e-12);

    CHECK_THROWS_AS(lower_bound_special_neumann(0.5 * I3(), 2.0, 1.0), DataInconsistency);
    CHECK_THROWS_AS(lower_bound_special_neumann(2.5 * I3(), 2.0, 1.0), DataInconsistency);
  }
  SUBCASE("Milton bound (optimized over K) at least LB18") {
    std::mt19937_64 rng(42);
    for (int t = 0; t < 200; ++t) {
      const double s1 = testutil::uniform(rng, 1.5, 10.0);
      const Matrix3 r = testutil::random_rotation(rng);
      const Vector3 d(testutil::uniform(rng, 1.0, s1), testutil::uniform(rng, 1.0, s1),
                      testutil::uniform(rng, 1.0, s1));
      const Matrix3 sn = r * d.asDiagonal() * r.transpose();
      const NeumannLower b = lower_bound_special_neumann(sn, s1, 1.0);
      CHECK(b.lb19.raw >= b.lb18.raw - 1e-12);
    }
  }
}

TEST_CASE("trace bound properties") {
  SUBCASE("nondecreasing in each eigenvalue") {
    std::mt19937_64 rng(43);
    for (int t = 0; t < 200; ++t) {
      const Vector3 l(testutil::uniform(rng, 1.05, 4.0), testutil::uniform(rng, 1.05, 4.0),
                      testutil::uniform(rng, 1.05, 4.0));
      const double base = upper_bound_trace(l, T(), 4.0, 1.0).bound.raw;
      for (int i = 0; i < 3; ++i) {
        Vector3 lp = l;
        lp(i) += 0.01;
        CHECK(upper_bound_trace(lp, T(), 4.0, 1.0).bound.raw >= base - 1e-14);
      }
    }
  }
  SUBCASE("HS equality for lambda from the Hashin-Shtrikman formula across f1") {
    for (double f1 = 0.05; f1 < 1.0; f1 += 0.05)
      CHECK(std::abs(upper_bound_special(hashin_shtrikman_lower(f1, 3.0, 1.0) * I3(), 3.0, 1.0).value - f1) < 1e-9);
  }
}

TEST_CASE("rotational covariance of the bounds") {
  const Measured md = measured_nonaffine();
  const double s1 = 5.0, s2 = 1.0;
  std::mt19937_64 rng(44);
  const double up = upper_bound_trace_from_A(md.A, md.M, s1, s2).bound.raw;
  const double sp = upper_bound_special(md.A, s1, s2).raw;
  const double pw = pairwise_bound_affine(md.A, s1, s2).raw;
  const NeumannLower nl = lower_bound_special_neumann(md.A, s1, s2);
  MESSAGE("trace bound on measured non-affine data " << up);
  for (int t = 0; t < 20; ++t) {
    const Matrix3 r = testutil::random_rotation(rng);
    const Matrix3 a = r.transpose() * md.A * r;
    const Tensor4 m = tensor::rotate(md.M, r);
    CHECK(std::abs(upper_bound_trace_from_A(a, m, s1, s2).bound.raw - up) < 1e-10);
    CHECK(std::abs(upper_bound_special(a, s1, s2).raw - sp) < 1e-10);
    CHECK(std::abs(pairwise_bound_affine(a, s1, s2).raw - pw) < 1e-10);
    const NeumannLower n2 = lower_bound_special_neumann(a, s1, s2);
    CHECK(std::abs(n2.lb18.raw - nl.lb18.raw) < 1e-10);
    CHECK(std::abs(n2.lb19.raw - nl.lb19.raw) < 1e-10);
  }

  // measurement permutation: relabelling the three measurements
  Matrix3 p = Matrix3::Zero();
  p(0, 1) = p(1, 2) = p(2, 0) = 1.0;
  CHECK(std::abs(upper_bound_trace_from_A(p.transpose() * md.A * p, tensor::rotate(md.M, p), s1, s2).bound.raw - up) <
        1e-10);
}

TEST_CASE("feasibility interval") {
  const double s1 = 2.0, s2 = 1.0;
  SUBCASE("homogeneous body collapses to 0") {
    const Feasibility f = feasibility_interval(s2 * I3(), T(), s1, s2);
    CHECK(f.f1_star <= 1e-6);
    CHECK(f.interval);
  }
  SUBCASE("full phase 1 is feasible at 1") {
    const Feasibility f = feasibility_interval(s1 * I3(), T(), s1, s2);
    CHECK(f.f1_star == 1.0);
  }
  SUBCASE("below the trace bound") {
    for (double f1 : {0.1, 0.3, 0.6}) {
      const Matrix3 a = hashin_shtrikman_lower(f1, s1, s2) * I3();
      const Feasibility f = feasibility_interval(a, T(), s1, s2);
      const double ut = upper_bound_special(a, s1, s2).value;
      MESSAGE("f1 " << f1 << ": f1* " << f.f1_star << ", trace " << ut);
      CHECK(f.f1_star <= ut + 1e-6);
      CHECK(f.interval);
      CHECK(f.f1_star >= f1 - 1e-6);
    }
  }
  SUBCASE("anisotropic sigma_D and a non-affine M") {
    const Measured md = measured_nonaffine();
    const Feasibility f = feasibility_interval(md.A, md.M, 5.0, 1.0);
    const double ut = upper_bound_trace_from_A(md.A, md.M, 5.0, 1.0).bound.value;
    MESSAGE("non-affine: f1* " << f.f1_star << ", trace " << ut);
    CHECK(f.f1_star <= ut + 1e-6);
  }
  SUBCASE("inconsistent data") {
    CHECK_THROWS_AS(feasibility_interval(0.5 * I3(), T(), s1, s2), DataInconsistency);
  }
  SUBCASE("operator at f1 = 1 for the full phase vanishes") {
    const Tensor4 n = feasibility_operator(s1 * I3(), T(), 1.0, s1, s2);
    CHECK(n.entries.cwiseAbs().maxCoeff() < 1e-6);
  }
}
