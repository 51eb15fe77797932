#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "tbound/error.hpp"
#include "tbound/gfunctional.hpp"
#include "tbound/harness.hpp"

using namespace tbound;
using namespace tbound::harness;

namespace {

constexpr double kPi = 3.14159265358979323846;

ScenarioConfig from_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ScenarioConfig sphere(int n, double r) {
  ScenarioConfig c;
  c.cells = {n, n, n};
  c.radius = r;
  return c;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = from_text(R"(
[domain]
size = 1
cells = 32x32x48
[materials]
sigma1 = 4
sigma2 = 0.5
[inclusion]
shape = ellipsoid
center = 0.05 0 0
semi_axes = 0.3 0.2 0.1
[boundary]
dirichlet = dirichlet_expr
v1 = -x; 0.01*sin(pi*y)
v2 = -y
v3 = -z
neumann = neumann_potentials
alpha = 0.01*sin(2*pi*x)*sin(2*pi*y)
J0 = auto
[solver]
tolerance = 1e-9
threads = 2
)");
  CHECK(c.cells == std::array<int, 3>{32, 32, 48});
  CHECK(c.sigma1 == 4.0);
  CHECK(c.shape == "ellipsoid");
  CHECK(c.semi_axes(0) == 0.3);
  CHECK(c.v0[0] == "-x; 0.01*sin(pi*y)");
  CHECK(!c.J0);
  CHECK(c.threads == 2);
  // defaults are materialized in the echo
  const Json j = c.to_json();
  CHECK(j["bounds"]["scan_points"] == 64);
  CHECK(j["solver"]["max_iterations"] == 20000);
  CHECK(j["boundary"]["J0"] == "auto");

  const auto m = from_text("[boundary]\nneumann = neumann_potentials\nbeta = 0.1*y\nJ0 = 1 0 0 0 1 0 0 0 1\n");
  REQUIRE(m.J0);
  CHECK(m.J0->isIdentity());
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(from_text("[materials]\nsigma1 = 1\nsigma2 = 1\n"), ConfigError);
  CHECK_THROWS_AS(from_text("[materials]\nsigma2 = 0\n"), ConfigError);
  CHECK_THROWS_AS(from_text("[domain]\ncells = 3\n"), ConfigError);
  CHECK_THROWS_AS(from_text("[solver]\ntolerance = 0\n"), ConfigError);
  CHECK_THROWS_AS(from_text("[inclusion]\nradius = 0.5\n"), ConfigError);
  CHECK_THROWS_AS(from_text("[inclusion]\nradius = 0.3\ncenter = 0.2 0 0\n"), ConfigError);
  CHECK_THROWS_AS(from_text("[inclusion]\nshape = cube\n"), ConfigError);
  CHECK_THROWS_AS(from_text("[inclusion]\nshape = multi_sphere\nspheres = 0 0 0 0.2; 0.4 0 0 0.2\n"),
                  ConfigError);
  CHECK_THROWS_AS(from_text("[materials]\nsigma3 = 2\n"), ConfigError);
  CHECK_THROWS_AS(from_text("[colors]\nred = 1\n"), ConfigError);
  CHECK_THROWS_AS(from_text("[materials]\nsigma1 = five\n"), ConfigError);
  CHECK_THROWS_AS(from_text("[boundary]\ndirichlet = dirichlet_expr\nv1 = -x\n"), ConfigError);
  CHECK_THROWS_AS(from_text("[boundary]\ndirichlet = none\nneumann = none\n"), ConfigError);
  CHECK_THROWS_AS(from_text("[boundary]\nneumann = neumann_potentials\nalpha = sin(q)\n"), ConfigError);
  CHECK_THROWS_AS(from_text("[boundary]\nJ0 = 1 2 3\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/scenario.ini"), ConfigError);
  CHECK_NOTHROW(from_text("[inclusion]\nradius = 0\n"));
}

TEST_CASE("grid option") {
  CHECK(parse_grid("48") == std::array<int, 3>{48, 48, 48});
  CHECK(parse_grid("16x24x32") == std::array<int, 3>{16, 24, 32});
  CHECK_THROWS_AS(parse_grid("2"), ConfigError);
  CHECK_THROWS_AS(parse_grid("16x16"), ConfigError);
  CHECK_THROWS_AS(parse_grid("16.5"), ConfigError);
}

TEST_CASE("geometry") {
  SUBCASE("sphere volume at 64^3") {
    const auto f = build_geometry(sphere(64, 0.2));
    CHECK(std::abs(f.f1() - 4.0 * kPi * 0.008 / 3.0) <= 0.0005);
    CHECK(std::abs(f.f1() - 0.0335) <= 0.0005);
  }
  SUBCASE("radius 0 is homogeneous") {
    const auto f = build_geometry(sphere(16, 0.0));
    CHECK(f.f1() == 0.0);
    CHECK(interface_fraction(f) == 0.0);
  }
  SUBCASE("ellipsoid and multi_sphere volumes") {
    ScenarioConfig c = sphere(64, 0.0);
    c.shape = "ellipsoid";
    c.semi_axes = Vector3(0.3, 0.2, 0.15);
    CHECK(build_geometry(c).f1() == doctest::Approx(4.0 * kPi * 0.3 * 0.2 * 0.15 / 3.0).epsilon(0.02));
    c.shape = "multi_sphere";
    c.spheres = {{Vector3(-0.2, 0, 0), 0.15}, {Vector3(0.2, 0, 0), 0.15}};
    CHECK(build_geometry(c).f1() == doctest::Approx(2 * 4.0 * kPi * 0.15 * 0.15 * 0.15 / 3.0).epsilon(0.02));
  }
  SUBCASE("interface fraction of a sphere") {
    const auto f = build_geometry(sphere(32, 0.25));
    // two layers of cells around a surface of area 4 pi r^2
    const double expect = 2.0 * 4.0 * kPi * 0.0625 / 32.0;
    CHECK(interface_fraction(f) == doctest::Approx(expect).epsilon(0.3));
  }
  SUBCASE("mask round trip") {
    const auto f = build_geometry(sphere(12, 0.3));
    const std::string path = temp_path("tbound_mask_roundtrip.tbf");
    save_mask(path, f);
    const auto g = load_mask(path);
    CHECK(g.phase == f.phase);
    CHECK(g.grid.cells == f.grid.cells);
    CHECK(g.grid.spacing == f.grid.spacing);
    CHECK((g.grid.origin - f.grid.origin).norm() < 1e-15);

    ScenarioConfig c = sphere(12, 0.0);
    c.shape = "mask_file";
    c.mask_path = path;
    CHECK(build_geometry(c).phase == f.phase);
    c.cells = {16, 16, 16};
    CHECK_THROWS_AS(build_geometry(c), ConfigError);
    std::filesystem::remove(path);
  }
  SUBCASE("bad mask files") {
    const std::string path = temp_path("tbound_mask_bad.tbf");
    std::ofstream(path) << "not a mask";
    CHECK_THROWS_AS(load_mask(path), ConfigError);
    std::filesystem::remove(path);
  }
}

TEST_CASE("potential dump") {
  ScenarioConfig c = sphere(8, 0.2);
  c.neumann = "none";
  c.dump_path = temp_path("tbound_dump.tbf");
  run_scenario(c);
  std::ifstream in(c.dump_path, std::ios::binary);
  char magic[4];
  std::uint32_t dims[3], count;
  double spacing[3];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(dims), 12);
  in.read(reinterpret_cast<char*>(spacing), 24);
  in.read(reinterpret_cast<char*>(&count), 4);
  CHECK(std::string(magic, 4) == "TBF1");
  CHECK(dims[0] == 9);
  CHECK(count == 3);
  CHECK(spacing[0] == doctest::Approx(1.0 / 8));
  std::vector<double> v(9 * 9 * 9 * 3);
  in.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * 8));
  CHECK(in.good());
  // node (0,0,0) sits at the lower corner; normalized affine data there is ~ +0.5
  CHECK(v[0] == doctest::Approx(0.5).epsilon(0.05));
  std::filesystem::remove(c.dump_path);
}

TEST_CASE("run_scenario degenerate bodies") {
  SUBCASE("homogeneous") {
    const auto r = run_scenario(sphere(16, 0.0));
    CHECK(r.truth_f1 == 0.0);
    CHECK(r.upper_trace.bound.value <= 1e-3);
    CHECK(r.lower_general->value <= 1e-3);
    CHECK(r.lower_neumann->lb18.value <= 1e-3);
    CHECK(r.lower_neumann->lb19.value <= 1e-3);
    CHECK(r.attainability.phase1_empty);
    CHECK(r.sandwich_ok());
  }
  SUBCASE("full phase 1 mask") {
    const std::string path = temp_path("tbound_full.tbf");
    save_mask(path, pde::ConductivityField::homogeneous(pde::Grid::cube(16), 1, 5.0, 1.0));
    ScenarioConfig c = sphere(16, 0.0);
    c.shape = "mask_file";
    c.mask_path = path;
    const auto r = run_scenario(c);
    std::filesystem::remove(path);
    CHECK(r.truth_f1 == 1.0);
    CHECK(std::abs(r.upper_trace.bound.value - 1.0) <= 1e-6);
    CHECK(std::abs(r.upper_special->value - 1.0) <= 1e-6);
    CHECK(std::abs(r.upper_pairwise->value - 1.0) <= 1e-6);
    CHECK(std::abs(r.feasibility->f1_star - 1.0) <= 1e-6);
    CHECK(std::abs(r.lower_general->value - 1.0) <= 1e-6);
    CHECK(std::abs(r.lower_neumann->lb18.value - 1.0) <= 1e-6);
    CHECK(std::abs(r.lower_neumann->lb19.value - 1.0) <= 1e-6);
  }
}

TEST_CASE("run_scenario sphere sandwich and report") {
  const ScenarioConfig c = sphere(32, 0.25);
  const auto r = run_scenario(c);
  std::string why;
  CHECK_MESSAGE(r.sandwich_ok(&why), why);
  CHECK(r.lower_general->value <= r.truth_f1);
  CHECK(r.lower_neumann->lb18.value <= r.truth_f1);
  CHECK(r.upper_trace.bound.value >= r.truth_f1);
  CHECK(r.feasibility->f1_star <= r.upper_trace.bound.value + 1e-6);
  CHECK(r.upper_special->value <= r.upper_pairwise->value + 1e-12);
  CHECK(r.g_value == -3.0);

  const Json j = r.to_json();
  for (const char* key : {"config", "truth_f1", "response", "bounds", "g", "attainability", "limit_tensor", "solver"})
    CHECK_MESSAGE(j.contains(key), key);
  CHECK(j["response"]["A"].size() == 3);
  CHECK(j["response"]["M"].size() == 9);
  CHECK(j["response"]["M"][0].size() == 9);
  CHECK(j["bounds"].contains("feasible_interval"));
  CHECK(j["solver"].contains("timing"));
  CHECK(!r.to_json(false)["solver"].contains("timing"));
  CHECK(j["config"] == c.to_json());

  // deterministic apart from timing
  CHECK(run_scenario(c).to_json(false).dump() == r.to_json(false).dump());

  // the bound command reproduces the bounds from the response file alone
  const Json resp = Json::parse(response_json(r, c).dump());
  const auto b = bounds_from_response(resp);
  CHECK(b.upper_trace.bound.value == doctest::Approx(r.upper_trace.bound.value).epsilon(1e-12));
  CHECK(b.feasibility->f1_star == doctest::Approx(r.feasibility->f1_star).epsilon(1e-12));
  CHECK(b.lower_general->value == doctest::Approx(r.lower_general->value).epsilon(1e-12));
  CHECK(b.lower_neumann->lb19.value == doctest::Approx(r.lower_neumann->lb19.value).epsilon(1e-12));
  CHECK(b.to_json(false)["bounds"] == r.to_json(false)["bounds"]);
  CHECK_THROWS_AS(bounds_from_response(Json::object()), ConfigError);
}

TEST_CASE("run_scenario with potential-generated fluxes") {
  ScenarioConfig c = sphere(24, 0.25);
  c.dirichlet = "none";
  c.neumann = "neumann_potentials";
  c.alpha = "0.01*sin(2*pi*x)*sin(2*pi*y)";
  c.beta = "0.02*cos(2*pi*y)*sin(2*pi*z)";
  const auto r = run_scenario(c);
  CHECK(r.g_source == "potentials");
  gfun::Potentials p;
  p.alpha = expr::Series::parse(c.alpha);
  p.beta = expr::Series::parse(c.beta);
  p.J0 = gfun::normalized_J0(p.alpha, p.beta, c.grid());
  CHECK(r.g_value == doctest::Approx(gfun::g_volume(p, c.grid(), 4)).epsilon(1e-6));
  CHECK(r.lower_general->value <= r.truth_f1 + r.delta_grid);
  CHECK(!r.lower_neumann);
  CHECK(!r.has_dirichlet);
}

TEST_CASE("solver failures carry the stage") {
  ScenarioConfig c = sphere(16, 0.25);
  c.max_iterations = 2;
  try {
    run_scenario(c);
    FAIL("expected a solver error");
  } catch (const SolverError& e) {
    CHECK(e.stage() == "solve");
  }
}

TEST_CASE("sweeps") {
  SUBCASE("radius: upper trace nondecreasing in f1") {
    std::ostringstream csv;
    ScenarioConfig c = sphere(32, 0.2);
    sweep(c, SweepAxis::radius, {0.1, 0.15, 0.2, 0.25}, csv);
    const auto lines = csv_lines(csv.str());
    REQUIRE(lines.size() == 5);
    double prev_f1 = -1, prev_u = -1;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto f = csv_fields(lines[i]);
      REQUIRE(f.size() == 23);
      const double f1 = std::stod(f[6]), u = std::stod(f[8]);
      CHECK(f1 > prev_f1);
      CHECK(u >= prev_u);
      CHECK(f[20] == "1");
      prev_f1 = f1;
      prev_u = u;
    }
  }
  SUBCASE("contrast: sandwiches stay valid") {
    std::ostringstream csv;
    sweep(sphere(24, 0.25), SweepAxis::contrast, {2, 5, 10}, csv);
    const auto lines = csv_lines(csv.str());
    REQUIRE(lines.size() == 4);
    for (std::size_t i = 1; i < lines.size(); ++i) CHECK(csv_fields(lines[i])[20] == "1");
  }
  SUBCASE("grid: successive differences of the trace bound shrink") {
    std::ostringstream csv;
    sweep(sphere(24, 0.2), SweepAxis::grid, {24, 32, 48, 64}, csv);
    const auto lines = csv_lines(csv.str());
    REQUIRE(lines.size() == 5);
    std::vector<double> u;
    for (std::size_t i = 1; i < lines.size(); ++i) u.push_back(std::stod(csv_fields(lines[i])[8]));
    MESSAGE("upper_trace over 24/32/48/64: " << u[0] << " " << u[1] << " " << u[2] << " " << u[3]);
    CHECK(std::abs(u[2] - u[1]) < std::abs(u[1] - u[0]));
    CHECK(std::abs(u[3] - u[2]) < std::abs(u[2] - u[1]));
  }
  SUBCASE("failed rows are recorded and the sweep continues") {
    std::ostringstream csv;
    sweep(sphere(16, 0.2), SweepAxis::radius, {0.6, 0.2}, csv);
    const auto lines = csv_lines(csv.str());
    REQUIRE(lines.size() == 3);
    const auto bad = csv_fields(lines[1]);
    REQUIRE(bad.size() == 23);
    CHECK(!bad[22].empty());
    CHECK(csv_fields(lines[2])[22].empty());
  }
  CHECK_THROWS_AS(parse_axis("temperature"), ConfigError);
}

TEST_CASE("verification suite selector") {
  CHECK_THROWS_AS(verify("nope"), ConfigError);
  const auto vs = verify("algebra");
  CHECK(vs.checks.size() == 6);
  for (const auto& c : vs.checks) {
    CHECK_MESSAGE(c.passed, c.id << ": " << c.detail);
    CHECK(!c.provenance.empty());
  }
  CHECK(vs.to_json(false).dump() == verify("algebra").to_json(false).dump());
}
