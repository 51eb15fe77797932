#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <random>
#include <sstream>

#include "tbound/error.hpp"
#include "tbound/gfunctional.hpp"
#include "tbound/harness.hpp"
#include "tbound/series.hpp"

namespace tbound::harness {

namespace {

using Clock = std::chrono::steady_clock;

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct Recorder {
  VerificationSuite& suite;

  template <class F>
  void run(const std::string& id, const std::string& name, const std::string& provenance, F&& body,
           bool expected_failure = false) {
    Check c;
    c.id = id;
    c.name = name;
    c.provenance = provenance;
    c.expected_failure = expected_failure;
    const auto t0 = Clock::now();
    std::ostringstream detail;
    try {
      c.passed = body(detail);
    } catch (const std::exception& e) {
      c.passed = false;
      detail << "exception: " << e.what();
    }
    c.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    c.detail = detail.str();
    suite.checks.push_back(std::move(c));
  }
};

ScenarioConfig sphere_config(int n, double radius, double s1, double s2, int threads) {
  ScenarioConfig c;
  c.cells = {n, n, n};
  c.radius = radius;
  c.sigma1 = s1;
  c.sigma2 = s2;
  c.threads = threads;
  return c;
}

// ---------------------------------------------------------------- algebra

bool c1_hs_equality(std::ostream& d) {
  double worst = 0.0;
  for (double s1 : {2.0, 5.0})
    for (double f1 : {0.1, 0.3, 0.5, 0.9}) {
      const double hs = bounds::hashin_shtrikman_lower(f1, s1, 1.0);
      const double u = bounds::upper_bound_special(hs * Matrix3::Identity(), s1, 1.0).value;
      worst = std::max(worst, std::abs(u - f1));
    }
  d << "max |upper_special - f1| = " << num(worst) << " (tol 1e-9)";
  return worst <= 1e-9;
}

bool c2_degenerate(std::ostream& d) {
  double worst_one = 0.0, worst_zero = 0.0;
  const tensor::Tensor4 t = tensor::translation_tensor();
  for (const auto& [s1, s2] : {std::pair{2.0, 1.0}, std::pair{5.0, 1.0}, std::pair{10.0, 0.5}}) {
    // full phase 1
    const Matrix3 d1 = s1 * Matrix3::Identity();
    const auto n1 = bounds::lower_bound_special_neumann(d1, s1, s2);
    for (double v : {bounds::upper_bound_trace(Vector3::Constant(s1), t, s1, s2).bound.value,
                     bounds::upper_bound_special(d1, s1, s2).value,
                     bounds::lower_bound_general(3.0 / s1, -3.0, s1, s2).value, n1.lb18.value, n1.lb19.value})
      worst_one = std::max(worst_one, std::abs(v - 1.0));
    // homogeneous sigma2
    const Matrix3 d2 = s2 * Matrix3::Identity();
    const auto n2 = bounds::lower_bound_special_neumann(d2, s1, s2);
    for (double v : {bounds::upper_bound_trace(Vector3::Constant(s2), t, s1, s2).bound.value,
                     bounds::upper_bound_special(d2, s1, s2).value,
                     bounds::lower_bound_general(3.0 / s2, -3.0, s1, s2).value, n2.lb18.value, n2.lb19.value})
      worst_zero = std::max(worst_zero, std::abs(v));
  }
  d << "max |bound - 1| full phase 1 = " << num(worst_one) << ", max |bound| homogeneous = " << num(worst_zero)
    << " (tol 1e-9)";
  return worst_one <= 1e-9 && worst_zero <= 1e-9;
}

bool c3_ordering(std::ostream& d) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = -1e300;
  const double s1 = 5.0, s2 = 1.0;
  for (int n = 0; n < 1000; ++n) {
    Vector3 lam;
    for (int i = 0; i < 3; ++i) lam(i) = s2 + (s1 - s2) * u(rng);
    const Matrix3 sd = lam.asDiagonal();
    const double sp = bounds::upper_bound_special(sd, s1, s2).value;
    const double pw = bounds::pairwise_bound_affine(sd, s1, s2).value;
    worst = std::max(worst, sp - pw);
  }
  d << "max (upper_special - upper_pairwise) over 1000 draws = " << num(worst) << " (tol 1e-12)";
  return worst <= 1e-12;
}

bool c4_limit_tensor(std::ostream& d) {
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_a = 0.0, worst_rich = 0.0, max_b = 0.0;
  for (int n = 0; n < 20; ++n) {
    tensor::PhaseAverage pa;
    pa.f1 = 0.05 + 0.9 * u(rng);
    pa.sigma2 = 0.5 + u(rng);
    pa.sigma1 = pa.sigma2 * (1.5 + 9.0 * u(rng));
    const auto lt = tensor::limit_tensor(pa);
    worst_a = std::max(worst_a, std::abs(lt.a_numeric - lt.a_closed) / std::abs(lt.a_closed));
    worst_rich = std::max(worst_rich, lt.richardson_consistency);
    max_b = std::max(max_b, std::abs(lt.b_numeric - lt.b_closed) / std::abs(lt.b_closed));
  }
  d << "3x3 block: max rel |a_numeric - a_closed| = " << num(worst_a)
    << "; Richardson consistency = " << num(worst_rich)
    << " (tol 1e-6); 2x2 block: max rel |b_numeric - b_printed| = " << num(max_b) << " (reported, not asserted)";
  return worst_a <= 1e-6 && worst_rich <= 1e-6;
}

bool c9_g_functional(std::ostream& d) {
  double worst_special = 0.0;
  for (int n : {24, 64}) {
    const auto r = gfun::g_from_potentials(gfun::Potentials{}, pde::BoundaryData::special_neumann(),
                                           pde::Grid::cube(n));
    worst_special = std::max(worst_special, std::abs(r.value - gfun::g_special_neumann()));
  }
  const auto g = pde::Grid::cube(32);
  gfun::Potentials p;
  // not periodic on the box, so the two quadratures see different integrands;
  // every derivative term has zero mean, so J0 = I gives <J> = I
  p.alpha = expr::Series::parse("0.05*sin(pi*x)*sin(pi*y)*sin(2*pi*z)");
  p.beta = expr::Series::parse("0.04*sin(pi*x)*sin(pi*y)*cos(pi*z)");
  p.J0 = Matrix3::Identity();
  const auto surface = gfun::g_from_potentials(p, gfun::flux_from_potentials(p), g);
  const double volume = gfun::g_volume(p, g, 4);
  const double gap = std::abs(surface.value - volume);
  d << "q = -n: max |g + 3| on 24^3, 64^3 = " << num(worst_special) << " (tol 1e-10); potentials: surface "
    << num(surface.value) << " vs volume " << num(volume) << ", gap " << num(gap) << " (tol 1e-6)";
  return worst_special <= 1e-10 && gap <= 1e-6;
}

bool c10_quasiconvexity(std::ostream& d) {
  const auto g = pde::Grid::cube(32);
  std::mt19937_64 rng(4242);
  std::normal_distribution<double> nd(0.0, 1.0);
  auto random_j0 = [&] {
    Matrix3 m;
    for (int i = 0; i < 9; ++i) m(i % 3, i / 3) = nd(rng);
    return m;
  };
  double min_gap = 1e300;
  for (int s = 0; s < 100; ++s) {
    const auto f = gfun::random_divergence_free(g, 9000 + s, random_j0(), 0.5);
    min_gap = std::min(min_gap, gfun::quasiconvexity_check(f).gap);
  }
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  std::uniform_int_distribution<int> w(1, 3);
  double max_eq = 0.0;
  for (int s = 0; s < 10; ++s) {
    std::ostringstream a, b;
    a << u(rng) << "*sin(" << 2 * w(rng) << "*pi*x)*cos(" << 2 * w(rng) << "*pi*y); " << u(rng) << "*cos("
      << 2 * w(rng) << "*pi*z)*sin(" << 2 * w(rng) << "*pi*x)";
    b << u(rng) << "*sin(" << 2 * w(rng) << "*pi*y)*sin(" << 2 * w(rng) << "*pi*z)";
    const auto f = gfun::equality_class_field(g, expr::Series::parse(a.str()), expr::Series::parse(b.str()),
                                              random_j0());
    max_eq = std::max(max_eq, std::abs(gfun::quasiconvexity_check(f).gap));
  }
  d << "random fields: min gap = " << num(min_gap) << " (>= -1e-10); equality class: max |gap| = " << num(max_eq)
    << " (<= 1e-8)";
  return min_gap >= -1e-10 && max_eq <= 1e-8;
}

// ---------------------------------------------------------------- pde

bool c5_m_structure(std::ostream& d, int threads) {
  ScenarioConfig c = sphere_config(48, 0.2, 5.0, 1.0, threads);
  c.dirichlet = "dirichlet_expr";
  c.v0 = {"-x; 0.05*sin(pi*y)*sin(pi*z); 0.05*y^2", "-y; 0.05*sin(pi*z)*sin(pi*x); 0.05*z^2",
          "-z; 0.05*sin(pi*x)*sin(pi*y); 0.05*x^2"};
  c.neumann = "none";
  const auto r = run_scenario(c);
  const auto& s = r.m_structure;
  d << "zeros " << num(s.zeros) << ", antisymmetry " << num(s.antisymmetry) << ", major symmetry "
    << num(s.symmetry) << " (tol 1e-8); M routes rel gap " << num(r.M.route_gap) << " (tol 1e-5)";
  return s.max() <= 1e-8 && r.M.route_gap <= 1e-5;
}

bool c6_affine_identity(std::ostream& d, int threads) {
  double worst_m = 0.0, worst_a = 0.0;
  const tensor::Tensor4 t = tensor::translation_tensor();
  for (double radius : {0.0, 0.25}) {
    ScenarioConfig c = sphere_config(24, radius, 5.0, 1.0, threads);
    c.neumann = "none";
    const auto r = run_scenario(c);
    worst_m = std::max(worst_m, (r.M.value.entries - t.entries).cwiseAbs().maxCoeff());
    worst_a = std::max(worst_a, r.A.route_gap);
  }
  d << "max |M - T| = " << num(worst_m) << ", A rel route gap = " << num(worst_a)
    << " (tol 1e-8; homogeneous and sphere, 24^3)";
  return worst_m <= 1e-8 && worst_a <= 1e-8;
}

BoundReport scenario7(int threads) { return run_scenario(sphere_config(64, 0.2, 5.0, 1.0, threads)); }

bool c7_sandwich(std::ostream& d, const BoundReport& r) {
  const double f1 = r.truth_f1;
  const double lm = r.lower_neumann->lb19.value, ls = r.lower_neumann->lb18.value;
  const double ut = r.upper_trace.bound.value;
  const bool ok = std::abs(f1 - 0.0335) <= 0.0005 && lm <= ls + 1e-9 && ls <= f1 && f1 <= ut &&
                  ut <= 2.5 * f1 && lm >= 0.0 && ls >= 0.0;
  d << "f1 = " << num(f1) << "; lower_milton " << num(lm) << " <= lower_special_neumann " << num(ls)
    << " <= f1 <= upper_trace " << num(ut) << " (ratio " << num(ut / f1) << ", limit 2.5); lower_general "
    << num(r.lower_general->value);
  return ok;
}

bool c8_feasibility(std::ostream& d, const BoundReport& s7, int threads) {
  std::vector<std::pair<std::string, BoundReport>> cases;
  cases.emplace_back("sphere64", s7);
  cases.emplace_back("homogeneous", run_scenario(sphere_config(24, 0.0, 5.0, 1.0, threads)));
  {
    const auto path = std::filesystem::temp_directory_path() / "tbound_full_phase1_mask.tbf";
    auto full = pde::ConductivityField::homogeneous(pde::Grid::cube(24), 1, 5.0, 1.0);
    save_mask(path.string(), full);
    ScenarioConfig c = sphere_config(24, 0.0, 5.0, 1.0, threads);
    c.shape = "mask_file";
    c.mask_path = path.string();
    cases.emplace_back("full_phase1", run_scenario(c));
    std::filesystem::remove(path);
  }
  bool ok = true;
  for (const auto& [name, r] : cases) {
    const double fs = r.feasibility->f1_star, ut = r.upper_trace.bound.value;
    const bool pass = r.truth_f1 - r.delta_grid <= fs && fs <= ut + 1e-6;
    ok = ok && pass;
    d << name << ": f1 " << num(r.truth_f1) << ", delta " << num(r.delta_grid) << ", f1* " << num(fs)
      << ", upper_trace " << num(ut) << (pass ? "" : " VIOLATED") << "; ";
  }
  return ok;
}

bool c11_attainability(std::ostream& d, int threads) {
  std::vector<double> r1;
  for (double radius : {0.2, 0.15, 0.1}) {
    ScenarioConfig c = sphere_config(64, radius, 5.0, 1.0, threads);
    c.neumann = "none";
    r1.push_back(run_scenario(c).attainability.r1);
  }
  const bool decreasing = r1[1] < r1[0] && r1[2] < r1[1];
  d << "r1 at box/sphere ratio 2.5, 3.33, 5: " << num(r1[0]) << ", " << num(r1[1]) << ", " << num(r1[2])
    << " (need <= 0.05 and decreasing)";
  return r1[2] <= 0.05 && decreasing;
}

bool c12_determinism(std::ostream& d, int threads) {
  const std::string a = verify("algebra", threads).to_json(false).dump();
  const std::string b = verify("algebra", threads).to_json(false).dump();
  ScenarioConfig c = sphere_config(24, 0.3, 5.0, 1.0, threads);
  const std::string r1 = run_scenario(c).to_json(false).dump();
  const std::string r2 = run_scenario(c).to_json(false).dump();
  c.neumann = "neumann_potentials";
  c.alpha = "0.01*sin(2*pi*x)*sin(2*pi*y)";
  c.beta = "0.02*cos(2*pi*y)*sin(2*pi*z)";
  const std::string p1 = run_scenario(c).to_json(false).dump();
  const std::string p2 = run_scenario(c).to_json(false).dump();
  d << "verify(algebra) JSON identical: " << (a == b) << "; scenario reports identical: " << (r1 == r2)
    << ", " << (p1 == p2) << " (threads " << threads << ")";
  return a == b && r1 == r2 && p1 == p2;
}

}  // namespace

bool VerificationSuite::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

bool VerificationSuite::acceptable() const {
  for (const auto& c : checks)
    if (!c.passed && !c.expected_failure) return false;
  return true;
}

Json VerificationSuite::to_json(bool include_timing) const {
  Json j;
  j["suite"] = name;
  Json arr = Json::array();
  for (const auto& c : checks) {
    Json e;
    e["id"] = c.id;
    e["name"] = c.name;
    e["provenance"] = c.provenance;
    e["passed"] = c.passed;
    e["expected_failure"] = c.expected_failure;
    e["detail"] = c.detail;
    if (include_timing) e["seconds"] = c.seconds;
    arr.push_back(std::move(e));
  }
  j["checks"] = arr;
  j["all_passed"] = all_passed();
  j["acceptable"] = acceptable();
  return j;
}

VerificationSuite verify(const std::string& suite, int threads) {
  if (suite != "algebra" && suite != "pde" && suite != "determinism" && suite != "all")
    throw ConfigError("unknown suite '" + suite + "' (algebra, pde, determinism, all)", "config");
  if (threads < 1) throw ConfigError("threads must be >= 1", "config");
  VerificationSuite out;
  out.name = suite;
  Recorder rec{out};
  const bool alg = suite == "algebra" || suite == "all";
  const bool pde = suite == "pde" || suite == "all";

  if (alg) {
    rec.run("C1", "HS equality of the special upper bound", "closed form: Hashin-Shtrikman lower value",
            c1_hs_equality);
    rec.run("C2", "degenerate exactness", "closed form: both phase limits of every bound", c2_degenerate);
    rec.run("C3", "special <= pairwise ordering", "property over 1000 random spectra", c3_ordering);
    rec.run("C4", "limit tensor oracle", "closed form 3x3 block; Richardson self-consistency", c4_limit_tensor);
  }
  if (pde) {
    rec.run("C5", "M structure, non-affine data, 48^3 sphere", "null-Lagrangian identities; two routes",
            [&](std::ostream& d) { return c5_m_structure(d, threads); });
    rec.run("C6", "affine data: M = T, A routes agree", "closed form T; discrete Green identity",
            [&](std::ostream& d) { return c6_affine_identity(d, threads); });
    std::optional<BoundReport> s7;
    rec.run("C7", "validity sandwich, 64^3 sphere", "known voxel f1; dilute near-sharpness", [&](std::ostream& d) {
      s7 = scenario7(threads);
      return c7_sandwich(d, *s7);
    });
    rec.run("C8", "feasibility engine consistency", "known voxel f1 with grid allowance; trace bound",
            [&](std::ostream& d) {
              if (!s7) s7 = scenario7(threads);
              return c8_feasibility(d, *s7, threads);
            });
  }
  if (alg) {
    rec.run("C9", "g functional", "q = -n closed form -3; volume-integral oracle", c9_g_functional);
    rec.run("C10", "quasiconvexity of T'", "discrete Parseval; equality-class fields", c10_quasiconvexity);
  }
  if (pde) {
    rec.run(
        "C11", "attainability, small centred sphere", "uniform interior field of an ellipsoidal inclusion",
        [&](std::ostream& d) { return c11_attainability(d, threads); }, true);
  }
  if (suite == "determinism" || suite == "all") {
    rec.run("C12", "determinism", "byte comparison of repeated runs",
            [&](std::ostream& d) { return c12_determinism(d, threads); });
  }
  std::stable_sort(out.checks.begin(), out.checks.end(), [](const Check& a, const Check& b) {
    return std::stoi(a.id.substr(1)) < std::stoi(b.id.substr(1));
  });
  return out;
}

}  // namespace tbound::harness
