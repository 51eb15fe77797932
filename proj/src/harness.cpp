#include "tbound/harness.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tbound/error.hpp"
#include "tbound/gfunctional.hpp"
#include "tbound/series.hpp"

namespace tbound::harness {

namespace {

static_assert(std::endian::native == std::endian::little, "TBF1 I/O assumes a little-endian host");

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

[[noreturn]] void config_error(const std::string& what) { throw ConfigError(what, "config"); }

std::vector<double> parse_numbers(const std::string& key, const std::string& text) {
  std::string s = text;
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) config_error("'" + key + "': not a number: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  const auto v = parse_numbers(key, text);
  if (v.size() != 1) config_error("'" + key + "' expects one number, got '" + text + "'");
  return v[0];
}

int parse_int(const std::string& key, const std::string& text) {
  const double v = parse_double(key, text);
  if (v != std::floor(v) || std::abs(v) > 1e9) config_error("'" + key + "' expects an integer, got '" + text + "'");
  return static_cast<int>(v);
}

Vector3 parse_vector3(const std::string& key, const std::string& text, bool allow_scalar) {
  const auto v = parse_numbers(key, text);
  if (allow_scalar && v.size() == 1) return Vector3::Constant(v[0]);
  if (v.size() != 3) config_error("'" + key + "' expects three numbers, got '" + text + "'");
  return Vector3(v[0], v[1], v[2]);
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd json_matrix(const Json& j, int rows, int cols, const std::string& what) {
  if (!j.is_array() || int(j.size()) != rows) config_error("response '" + what + "' has the wrong shape");
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || int(j[i].size()) != cols) config_error("response '" + what + "' has the wrong shape");
    for (int k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

Json vector_json(const Vector3& v) { return Json::array({v(0), v(1), v(2)}); }

Json bound_json(const bounds::Bound& b) {
  Json j;
  j["value"] = b.value;
  j["raw"] = b.raw;
  j["clamped"] = b.clamped;
  if (!b.note.empty()) j["note"] = b.note;
  return j;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

// Membership of a cell centre in the configured inclusion.
bool inside(const ScenarioConfig& cfg, const Vector3& x) {
  if (cfg.shape == "sphere") return (x - cfg.center).norm() < cfg.radius;
  if (cfg.shape == "ellipsoid") return (x - cfg.center).cwiseQuotient(cfg.semi_axes).squaredNorm() < 1.0;
  if (cfg.shape == "multi_sphere") {
    for (const Ball& b : cfg.spheres)
      if ((x - b.center).norm() < b.radius) return true;
    return false;
  }
  return false;
}

// |c| + extent < L/2 on every axis (box centred at the origin).
void check_strictly_inside(const ScenarioConfig& cfg, const Vector3& c, const Vector3& extent,
                           const std::string& what) {
  for (int a = 0; a < 3; ++a)
    if (!(std::abs(c(a)) + extent(a) < 0.5 * cfg.size(a)))
      config_error(what + " touches or leaves the box on axis " + std::to_string(a));
}

void write_tbf1(const std::string& path, const std::array<int, 3>& dims, const std::array<double, 3>& spacing,
                const std::vector<const std::vector<double>*>& blocks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'", "output");
  out.write("TBF1", 4);
  for (int d : dims) {
    const std::uint32_t v = static_cast<std::uint32_t>(d);
    out.write(reinterpret_cast<const char*>(&v), 4);
  }
  out.write(reinterpret_cast<const char*>(spacing.data()), 24);
  const std::uint32_t count = static_cast<std::uint32_t>(blocks.size());
  out.write(reinterpret_cast<const char*>(&count), 4);
  for (const auto* b : blocks) out.write(reinterpret_cast<const char*>(b->data()), std::streamsize(b->size() * 8));
  if (!out) throw ConfigError("short write to '" + path + "'", "output");
}

}  // namespace

// ---------------------------------------------------------------- config

pde::Grid ScenarioConfig::grid() const { return pde::Grid::box(cells, size); }

pde::SolverOptions ScenarioConfig::solver_options() const {
  pde::SolverOptions o;
  o.tolerance = tolerance;
  o.max_iterations = max_iterations;
  o.threads = threads;
  return o;
}

void ScenarioConfig::validate() const {
  if (!(sigma2 > 0.0)) config_error("sigma2 must be > 0");
  if (!(sigma1 > sigma2)) config_error("sigma1 must be > sigma2");
  for (int a = 0; a < 3; ++a) {
    if (cells[a] < 4) config_error("grid must have at least 4 cells per axis");
    if (!(size(a) > 0.0)) config_error("box size must be positive");
  }
  if (!(tolerance > 0.0)) config_error("solver tolerance must be > 0");
  if (max_iterations < 1) config_error("max_iterations must be >= 1");
  if (threads < 1) config_error("threads must be >= 1");
  if (scan_points < 2) config_error("scan_points must be >= 2");
  if (!(bisection_tolerance > 0.0) || !(epsilon_scale >= 0.0)) config_error("bad feasibility tolerances");

  if (shape == "sphere") {
    if (!(radius >= 0.0)) config_error("radius must be >= 0");
    if (radius > 0.0) check_strictly_inside(*this, center, Vector3::Constant(radius), "sphere");
  } else if (shape == "ellipsoid") {
    if (!(semi_axes.minCoeff() > 0.0)) config_error("semi_axes must be positive");
    check_strictly_inside(*this, center, semi_axes, "ellipsoid");
  } else if (shape == "multi_sphere") {
    if (spheres.empty()) config_error("multi_sphere needs at least one sphere");
    for (const Ball& b : spheres) {
      if (!(b.radius > 0.0)) config_error("multi_sphere radii must be positive");
      check_strictly_inside(*this, b.center, Vector3::Constant(b.radius), "sphere");
    }
  } else if (shape == "mask_file") {
    if (mask_path.empty()) config_error("mask_file needs inclusion.mask");
  } else {
    config_error("unknown inclusion shape '" + shape + "'");
  }

  if (dirichlet != "affine_dirichlet" && dirichlet != "dirichlet_expr" && dirichlet != "none")
    config_error("unknown boundary.dirichlet '" + dirichlet + "'");
  if (neumann != "special_neumann" && neumann != "neumann_potentials" && neumann != "none")
    config_error("unknown boundary.neumann '" + neumann + "'");
  if (dirichlet == "none" && neumann == "none") config_error("no boundary data selected");
  if (dirichlet == "dirichlet_expr")
    for (int i = 0; i < 3; ++i) {
      if (v0[i].empty()) config_error("dirichlet_expr needs v1, v2, v3");
      expr::Series::parse(v0[i]);
    }
  if (neumann == "neumann_potentials") {
    if (expr::Series::parse(alpha).empty() && expr::Series::parse(beta).empty() && !J0)
      config_error("neumann_potentials needs alpha, beta or J0");
  }
}

Json ScenarioConfig::to_json() const {
  Json j;
  j["domain"] = {{"size", vector_json(size)}, {"cells", Json::array({cells[0], cells[1], cells[2]})}};
  j["materials"] = {{"sigma1", sigma1}, {"sigma2", sigma2}};
  Json inc;
  inc["shape"] = shape;
  if (shape == "sphere") {
    inc["center"] = vector_json(center);
    inc["radius"] = radius;
  } else if (shape == "ellipsoid") {
    inc["center"] = vector_json(center);
    inc["semi_axes"] = vector_json(semi_axes);
  } else if (shape == "multi_sphere") {
    Json s = Json::array();
    for (const Ball& b : spheres) s.push_back({{"center", vector_json(b.center)}, {"radius", b.radius}});
    inc["spheres"] = s;
  } else {
    inc["mask"] = mask_path;
  }
  j["inclusion"] = inc;
  Json bc;
  bc["dirichlet"] = dirichlet;
  if (dirichlet == "dirichlet_expr") bc["v0"] = Json::array({v0[0], v0[1], v0[2]});
  bc["neumann"] = neumann;
  if (neumann == "neumann_potentials") {
    bc["alpha"] = alpha;
    bc["beta"] = beta;
    if (J0)
      bc["J0"] = matrix_json(*J0);
    else
      bc["J0"] = "auto";
  }
  j["boundary"] = bc;
  j["bounds"] = {{"scan_points", scan_points},
                 {"bisection_tolerance", bisection_tolerance},
                 {"epsilon_scale", epsilon_scale}};
  j["solver"] = {{"tolerance", tolerance}, {"max_iterations", max_iterations}, {"threads", threads}};
  j["output"] = {{"report", report_path}, {"dump", dump_path}};
  return j;
}

std::array<int, 3> parse_grid(const std::string& text) {
  std::string s = text;
  for (char& c : s)
    if (c == 'x' || c == 'X') c = ' ';
  const auto v = parse_numbers("grid", s);
  std::array<int, 3> out{};
  if (v.size() == 1) {
    out.fill(static_cast<int>(v[0]));
  } else if (v.size() == 3) {
    for (int a = 0; a < 3; ++a) out[a] = static_cast<int>(v[a]);
  } else {
    config_error("grid must be N or NxNxN, got '" + text + "'");
  }
  for (int a = 0; a < 3; ++a)
    if (out[a] < 4 || double(out[a]) != (v.size() == 1 ? v[0] : v[a])) config_error("bad grid '" + text + "'");
  return out;
}

ScenarioConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    config_error(std::string("config syntax: ") + e.what());
  }
  static const std::map<std::string, std::set<std::string>> known = {
      {"domain", {"size", "cells"}},
      {"materials", {"sigma1", "sigma2"}},
      {"inclusion", {"shape", "center", "radius", "semi_axes", "spheres", "mask"}},
      {"boundary", {"dirichlet", "neumann", "v1", "v2", "v3", "alpha", "beta", "J0"}},
      {"bounds", {"scan_points", "bisection_tolerance", "epsilon_scale"}},
      {"solver", {"tolerance", "max_iterations", "threads"}},
      {"output", {"report", "dump"}},
  };
  ScenarioConfig c;
  for (const auto& [section, body] : tree) {
    const auto it = known.find(section);
    if (it == known.end()) config_error("unknown section [" + section + "]");
    if (!body.data().empty()) config_error("key '" + section + "' outside a section");
    for (const auto& [key, node] : body) {
      if (!it->second.count(key)) config_error("unknown key '" + key + "' in [" + section + "]");
      const std::string v = node.get_value<std::string>();
      const std::string name = section + "." + key;
      if (name == "domain.size") c.size = parse_vector3(name, v, true);
      else if (name == "domain.cells") c.cells = parse_grid(v);
      else if (name == "materials.sigma1") c.sigma1 = parse_double(name, v);
      else if (name == "materials.sigma2") c.sigma2 = parse_double(name, v);
      else if (name == "inclusion.shape") c.shape = v;
      else if (name == "inclusion.center") c.center = parse_vector3(name, v, false);
      else if (name == "inclusion.radius") c.radius = parse_double(name, v);
      else if (name == "inclusion.semi_axes") c.semi_axes = parse_vector3(name, v, false);
      else if (name == "inclusion.mask") c.mask_path = v;
      else if (name == "inclusion.spheres") {
        std::istringstream parts(v);
        std::string part;
        while (std::getline(parts, part, ';')) {
          const auto n = parse_numbers(name, part);
          if (n.empty()) continue;
          if (n.size() != 4) config_error("each sphere is 'x y z r'");
          c.spheres.push_back({Vector3(n[0], n[1], n[2]), n[3]});
        }
      }
      else if (name == "boundary.dirichlet") c.dirichlet = v;
      else if (name == "boundary.neumann") c.neumann = v;
      else if (name == "boundary.v1") c.v0[0] = v;
      else if (name == "boundary.v2") c.v0[1] = v;
      else if (name == "boundary.v3") c.v0[2] = v;
      else if (name == "boundary.alpha") c.alpha = v;
      else if (name == "boundary.beta") c.beta = v;
      else if (name == "boundary.J0") {
        if (v == "auto") {
          c.J0.reset();
        } else {
          const auto n = parse_numbers(name, v);
          if (n.size() != 9) config_error("J0 is 'auto' or 9 numbers, row-major");
          Matrix3 m;
          for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = n[i];
          c.J0 = m;
        }
      }
      else if (name == "bounds.scan_points") c.scan_points = parse_int(name, v);
      else if (name == "bounds.bisection_tolerance") c.bisection_tolerance = parse_double(name, v);
      else if (name == "bounds.epsilon_scale") c.epsilon_scale = parse_double(name, v);
      else if (name == "solver.tolerance") c.tolerance = parse_double(name, v);
      else if (name == "solver.max_iterations") c.max_iterations = parse_int(name, v);
      else if (name == "solver.threads") c.threads = parse_int(name, v);
      else if (name == "output.report") c.report_path = v;
      else if (name == "output.dump") c.dump_path = v;
    }
  }
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config '" + path + "'");
  return parse_config(in);
}

// ---------------------------------------------------------------- geometry

pde::ConductivityField build_geometry(const ScenarioConfig& cfg) {
  cfg.validate();
  const pde::Grid g = cfg.grid();
  if (cfg.shape == "mask_file") {
    pde::ConductivityField f = load_mask(cfg.mask_path);
    if (f.grid.cells != g.cells) config_error("mask dimensions do not match domain.cells");
    f.grid = g;
    f.sigma1 = cfg.sigma1;
    f.sigma2 = cfg.sigma2;
    f.validate();
    return f;
  }
  auto f = pde::ConductivityField::homogeneous(g, 2, cfg.sigma1, cfg.sigma2);
  for (int k = 0; k < g.cells[2]; ++k)
    for (int j = 0; j < g.cells[1]; ++j)
      for (int i = 0; i < g.cells[0]; ++i)
        if (inside(cfg, g.cell_center(i, j, k))) f.phase[g.cell_index(i, j, k)] = 1;
  return f;
}

double interface_fraction(const pde::ConductivityField& f) {
  const pde::Grid& g = f.grid;
  std::size_t n = 0;
  for (int k = 0; k < g.cells[2]; ++k)
    for (int j = 0; j < g.cells[1]; ++j)
      for (int i = 0; i < g.cells[0]; ++i) {
        const auto p = f.phase[g.cell_index(i, j, k)];
        const std::array<int, 3> c{i, j, k};
        bool mixed = false;
        for (int a = 0; a < 3 && !mixed; ++a)
          for (int d : {-1, 1}) {
            auto q = c;
            q[a] += d;
            if (q[a] < 0 || q[a] >= g.cells[a]) continue;
            if (f.phase[g.cell_index(q[0], q[1], q[2])] != p) {
              mixed = true;
              break;
            }
          }
        n += mixed;
      }
  return double(n) / double(g.cell_count());
}

void save_mask(const std::string& path, const pde::ConductivityField& f) {
  std::vector<double> v(f.phase.begin(), f.phase.end());
  write_tbf1(path, f.grid.cells, f.grid.spacing, {&v});
}

pde::ConductivityField load_mask(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot open mask '" + path + "'");
  char magic[4];
  std::uint32_t dims[3], count = 0;
  std::array<double, 3> spacing{};
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(dims), 12);
  in.read(reinterpret_cast<char*>(spacing.data()), 24);
  in.read(reinterpret_cast<char*>(&count), 4);
  if (!in || std::memcmp(magic, "TBF1", 4) != 0) config_error("'" + path + "' is not a TBF1 file");
  if (count != 1) config_error("mask file must hold exactly one array");
  pde::Grid g;
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 4 || dims[a] > 4096) config_error("mask dimensions out of range");
    g.cells[a] = int(dims[a]);
    g.spacing[a] = spacing[a];
  }
  g.origin = Vector3(-0.5 * g.length(0), -0.5 * g.length(1), -0.5 * g.length(2));
  std::vector<double> v(g.cell_count());
  in.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * 8));
  if (!in) config_error("mask file '" + path + "' is truncated");
  pde::ConductivityField f = pde::ConductivityField::homogeneous(g, 2, 2.0, 1.0);
  for (std::size_t c = 0; c < v.size(); ++c) {
    if (v[c] != 1.0 && v[c] != 2.0) config_error("mask labels must be 1 or 2");
    f.phase[c] = static_cast<std::uint8_t>(v[c]);
  }
  return f;
}

void save_potentials(const std::string& path, const pde::PotentialSet& ps) {
  const pde::Grid& g = ps.grid;
  std::array<std::vector<double>, 3> v;
  for (int c = 0; c < 3; ++c) {
    v[c].reserve(std::size_t(g.nodes(0)) * g.nodes(1) * g.nodes(2));
    for (int k = 0; k < g.nodes(2); ++k)
      for (int j = 0; j < g.nodes(1); ++j)
        for (int i = 0; i < g.nodes(0); ++i) v[c].push_back(ps.at(c, i, j, k));
  }
  write_tbf1(path, {g.nodes(0), g.nodes(1), g.nodes(2)}, g.spacing, {&v[0], &v[1], &v[2]});
}

// ---------------------------------------------------------------- pipeline

namespace {

BoundReport::SolverRun run_of(const std::string& branch, const pde::PotentialSet& ps) {
  BoundReport::SolverRun r;
  r.branch = branch;
  for (int c = 0; c < 3; ++c) {
    r.iterations[c] = ps.stats[c].iterations;
    r.residual[c] = ps.stats[c].final_residual;
    r.seconds += ps.stats[c].seconds;
  }
  return r;
}

template <class F>
auto staged(const char* stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (Error& e) {
    if (e.stage().empty()) e.set_stage(stage);
    throw;
  }
}

void evaluate_bounds(BoundReport& r, double s1, double s2, const bounds::FeasibilityOptions& fo) {
  staged("bound", [&] {
    if (r.has_dirichlet) {
      const auto d = measure::diagonalize(r.A.value, r.M.value);
      r.response.A = d.A;
      r.response.lambda = d.lambda;
      r.response.R = d.R;
      r.response.M = d.M;
      r.upper_trace = bounds::upper_bound_trace(d.lambda, d.M, s1, s2);
      r.feasibility = bounds::feasibility_interval(d.A, d.M, s1, s2, fo);
      if (r.affine) {
        r.upper_special = bounds::upper_bound_special(r.A.value, s1, s2);
        r.upper_pairwise = bounds::pairwise_bound_affine(r.A.value, s1, s2, &r.M.value);
      }
    }
    if (r.has_neumann) {
      r.lower_general = bounds::lower_bound_general(r.Aprime.value.trace(), r.g_value, s1, s2);
      if (r.g_source == "special_neumann")
        r.lower_neumann = bounds::lower_bound_special_neumann(r.Aprime.value.inverse(), s1, s2);
    }
    double f1 = r.truth_f1;
    if (std::isnan(f1)) f1 = r.feasibility ? r.feasibility->f1_star : 0.5;
    const auto lt = tensor::limit_tensor(tensor::PhaseAverage{f1, s1, s2});
    r.limit_discrepancy = lt.discrepancy;
    r.limit_consistency = lt.richardson_consistency;
    return 0;
  });
}

bounds::FeasibilityOptions feasibility_options(const ScenarioConfig& cfg) {
  bounds::FeasibilityOptions fo;
  fo.scan_points = cfg.scan_points;
  fo.tolerance = cfg.bisection_tolerance;
  fo.epsilon_scale = cfg.epsilon_scale;
  return fo;
}

}  // namespace

BoundReport run_scenario(const ScenarioConfig& cfg) {
  const auto t0 = Clock::now();
  const pde::ConductivityField field = staged("config", [&] { return build_geometry(cfg); });
  const pde::Grid g = field.grid;
  const pde::SolverOptions opt = cfg.solver_options();

  BoundReport r;
  r.config = cfg.to_json();
  r.truth_f1 = field.f1();
  r.delta_grid = interface_fraction(field);

  std::optional<pde::FieldMatrix> e_for_attainability;

  if (cfg.dirichlet != "none") {
    r.has_dirichlet = true;
    r.affine = cfg.dirichlet == "affine_dirichlet";
    pde::BoundaryData bc;
    if (r.affine) {
      bc = pde::BoundaryData::affine_dirichlet();
    } else {
      std::array<pde::ScalarFn, 3> v;
      for (int i = 0; i < 3; ++i) {
        const expr::Series s = expr::Series::parse(cfg.v0[i]);
        v[i] = [s](const Vector3& x) { return s.value(x); };
      }
      bc = pde::BoundaryData::dirichlet(v);
    }
    const auto ps = staged("solve", [&] { return pde::solve(field, bc, pde::Mode::conduction, opt); });
    r.runs.push_back(run_of("dirichlet", ps));
    r.isa = ps.isa;
    const auto norm = staged("measure", [&] { return measure::normalize_mean(ps); });
    staged("measure", [&] {
      r.A = measure::compute_A(norm.potentials);
      r.M = measure::compute_M(norm.potentials);
      r.m_structure = measure::m_structure(r.M.value);
      return 0;
    });
    r.response.K = norm.K;
    r.response.A_route_gap = r.A.route_gap;
    r.response.A_asymmetry = r.A.asymmetry;
    r.response.M_route_gap = r.M.route_gap;
    e_for_attainability = pde::extract_fields(norm.potentials).E;
    if (!cfg.dump_path.empty()) save_potentials(cfg.dump_path, norm.potentials);
  }

  if (cfg.neumann != "none") {
    r.has_neumann = true;
    pde::BoundaryData bc;
    gfun::Potentials pot;
    if (cfg.neumann == "special_neumann") {
      bc = pde::BoundaryData::special_neumann();
      r.g_source = "special_neumann";
    } else {
      pot.alpha = expr::Series::parse(cfg.alpha);
      pot.beta = expr::Series::parse(cfg.beta);
      pot.J0 = cfg.J0 ? *cfg.J0 : gfun::normalized_J0(pot.alpha, pot.beta, g);
      bc = gfun::flux_from_potentials(pot);
      r.g_source = "potentials";
    }
    const auto ps = staged("solve", [&] { return pde::solve(field, bc, pde::Mode::conduction, opt); });
    r.runs.push_back(run_of("neumann", ps));
    r.isa = ps.isa;
    const auto norm = staged("measure", [&] { return measure::normalize_current(ps); });
    r.Aprime = staged("measure", [&] { return measure::compute_Aprime(norm.potentials); });
    r.response.Aprime = r.Aprime.value;
    r.response.Kprime = norm.K;
    r.response.Aprime_route_gap = r.Aprime.route_gap;
    r.response.Aprime_asymmetry = r.Aprime.asymmetry;
    r.g_value = r.g_source == "special_neumann"
                    ? gfun::g_special_neumann()
                    : staged("measure", [&] { return gfun::g_from_potentials(pot, bc, g).value; });
    if (!e_for_attainability) e_for_attainability = pde::extract_fields(norm.potentials).E;
  }

  r.attainability = measure::attainability_residual(*e_for_attainability, field);
  evaluate_bounds(r, cfg.sigma1, cfg.sigma2, feasibility_options(cfg));
  r.wall_seconds = seconds_since(t0);
  return r;
}

bool BoundReport::sandwich_ok(std::string* why) const {
  const double f1 = truth_f1;
  if (std::isnan(f1)) return true;
  std::ostringstream os;
  auto lower = [&](const char* name, double v) {
    if (v > f1 + delta_grid) os << name << " = " << v << " > f1 + delta = " << f1 + delta_grid << "; ";
  };
  auto upper = [&](const char* name, double v) {
    if (v < f1 - delta_grid) os << name << " = " << v << " < f1 - delta = " << f1 - delta_grid << "; ";
  };
  if (has_dirichlet) upper("upper_trace", upper_trace.bound.value);
  if (upper_special) upper("upper_special", upper_special->value);
  if (upper_pairwise) upper("upper_pairwise", upper_pairwise->value);
  if (feasibility) upper("feasible_f1_star", feasibility->f1_star);
  if (lower_general) lower("lower_general", lower_general->value);
  if (lower_neumann) {
    lower("lower_special_neumann", lower_neumann->lb18.value);
    lower("lower_milton", lower_neumann->lb19.value);
  }
  if (why) *why = os.str();
  return os.str().empty();
}

Json BoundReport::to_json(bool include_timing) const {
  Json j;
  j["config"] = config;
  j["truth_f1"] = std::isnan(truth_f1) ? Json(nullptr) : Json(truth_f1);
  j["delta_grid"] = delta_grid;

  Json resp;
  if (has_dirichlet) {
    resp["A"] = matrix_json(A.value);
    resp["K"] = matrix_json(response.K);
    resp["lambda"] = vector_json(response.lambda);
    resp["R"] = matrix_json(response.R);
    resp["M"] = matrix_json(M.value.entries);
    resp["M_structure"] = {{"zeros", m_structure.zeros},
                           {"antisymmetry", m_structure.antisymmetry},
                           {"symmetry", m_structure.symmetry}};
  }
  if (has_neumann) {
    resp["Aprime"] = matrix_json(Aprime.value);
    if (response.Kprime) resp["Kprime"] = matrix_json(*response.Kprime);
  }
  Json routes;
  if (has_dirichlet) {
    routes["A"] = {{"volume_vs_boundary", A.route_gap}, {"asymmetry", A.asymmetry}, {"warning", A.warning}};
    routes["M"] = {{"volume_vs_boundary", M.route_gap}, {"warning", M.warning}};
  }
  if (has_neumann)
    routes["Aprime"] = {
        {"volume_vs_boundary", Aprime.route_gap}, {"asymmetry", Aprime.asymmetry}, {"warning", Aprime.warning}};
  resp["route_residuals"] = routes;
  j["response"] = resp;

  Json b;
  if (has_dirichlet) {
    b["upper_trace"] = bound_json(upper_trace.bound);
    b["upper_trace"]["T"] = std::isinf(upper_trace.T) ? Json("inf") : Json(upper_trace.T);
    if (upper_special) b["upper_special"] = bound_json(*upper_special);
    if (upper_pairwise) b["upper_pairwise"] = bound_json(*upper_pairwise);
    if (feasibility) {
      Json fj;
      fj["lower"] = 0.0;
      fj["f1_star"] = feasibility->f1_star;
      fj["epsilon"] = feasibility->epsilon;
      fj["tolerance"] = feasibility->tolerance;
      fj["interval"] = feasibility->interval;
      Json runs = Json::array();
      for (const auto& [lo, hi] : feasibility->det_nonnegative) runs.push_back(Json::array({lo, hi}));
      fj["det_nonnegative"] = runs;
      if (!feasibility->warning.empty()) fj["warning"] = feasibility->warning;
      b["feasible_interval"] = fj;
    }
  }
  if (lower_general) b["lower_general"] = bound_json(*lower_general);
  if (lower_neumann) {
    b["lower_special_neumann"] = bound_json(lower_neumann->lb18);
    b["lower_milton"] = bound_json(lower_neumann->lb19);
    b["lower_milton"]["singular"] = lower_neumann->lb19_singular;
  }
  std::string why;
  b["sandwich_ok"] = sandwich_ok(&why);
  if (!why.empty()) b["sandwich_violation"] = why;
  j["bounds"] = b;

  if (has_neumann)
    j["g"] = {{"value", g_value}, {"source", g_source}};
  else
    j["g"] = nullptr;
  j["attainability"] = {{"r1", attainability.phase1_empty ? Json(nullptr) : Json(attainability.r1)},
                        {"r2", attainability.r2},
                        {"phase1_empty", attainability.phase1_empty}};
  j["limit_tensor"] = {{"discrepancy", limit_discrepancy}, {"richardson_consistency", limit_consistency}};

  Json s;
  s["isa"] = isa;
  Json runs_j = Json::array();
  for (const auto& run : runs) {
    runs_j.push_back({{"branch", run.branch},
                      {"iterations", Json::array({run.iterations[0], run.iterations[1], run.iterations[2]})},
                      {"residuals", Json::array({run.residual[0], run.residual[1], run.residual[2]})}});
  }
  s["runs"] = runs_j;
  if (include_timing) {
    Json t;
    for (const auto& run : runs) t[run.branch + "_solve_seconds"] = run.seconds;
    t["wall_seconds"] = wall_seconds;
    s["timing"] = t;
  }
  j["solver"] = s;
  return j;
}

Json response_json(const BoundReport& r, const ScenarioConfig& cfg) {
  Json j;
  j["format"] = "tbound-response-1";
  j["config"] = r.config;
  j["sigma1"] = cfg.sigma1;
  j["sigma2"] = cfg.sigma2;
  j["truth_f1"] = r.truth_f1;
  j["delta_grid"] = r.delta_grid;
  j["bounds_options"] = {{"scan_points", cfg.scan_points},
                         {"bisection_tolerance", cfg.bisection_tolerance},
                         {"epsilon_scale", cfg.epsilon_scale}};
  if (r.has_dirichlet) {
    j["dirichlet"] = {{"affine", r.affine},
                      {"A", matrix_json(r.A.value)},
                      {"A_route_gap", r.A.route_gap},
                      {"K", matrix_json(r.response.K)},
                      {"M", matrix_json(r.M.value.entries)},
                      {"M_route_gap", r.M.route_gap}};
  }
  if (r.has_neumann) {
    j["neumann"] = {{"Aprime", matrix_json(r.Aprime.value)},
                    {"Aprime_route_gap", r.Aprime.route_gap},
                    {"g", r.g_value},
                    {"g_source", r.g_source}};
  }
  j["attainability"] = {{"r1", r.attainability.r1},
                        {"r2", r.attainability.r2},
                        {"phase1_empty", r.attainability.phase1_empty}};
  return j;
}

BoundReport bounds_from_response(const Json& resp) {
  try {
    if (resp.value("format", std::string()) != "tbound-response-1") config_error("not a tbound response file");
    BoundReport r;
    r.config = resp.value("config", Json::object());
    const double s1 = resp.at("sigma1").get<double>(), s2 = resp.at("sigma2").get<double>();
    if (!(s1 > s2 && s2 > 0.0)) config_error("response needs sigma1 > sigma2 > 0");
    const Json& t = resp.at("truth_f1");
    r.truth_f1 = t.is_null() ? std::nan("") : t.get<double>();
    r.delta_grid = resp.value("delta_grid", 0.0);
    bounds::FeasibilityOptions fo;
    if (resp.contains("bounds_options")) {
      const Json& o = resp["bounds_options"];
      fo.scan_points = o.value("scan_points", fo.scan_points);
      fo.tolerance = o.value("bisection_tolerance", fo.tolerance);
      fo.epsilon_scale = o.value("epsilon_scale", fo.epsilon_scale);
    }
    if (resp.contains("dirichlet")) {
      const Json& d = resp["dirichlet"];
      r.has_dirichlet = true;
      r.affine = d.at("affine").get<bool>();
      r.A.value = json_matrix(d.at("A"), 3, 3, "A");
      r.A.boundary = r.A.volume = r.A.value;
      r.A.route_gap = d.value("A_route_gap", 0.0);
      r.response.K = json_matrix(d.at("K"), 3, 3, "K");
      r.M.value.entries = json_matrix(d.at("M"), 9, 9, "M");
      r.M.volume = r.M.boundary = r.M.value;
      r.M.route_gap = d.value("M_route_gap", 0.0);
      r.m_structure = measure::m_structure(r.M.value);
    }
    if (resp.contains("neumann")) {
      const Json& n = resp["neumann"];
      r.has_neumann = true;
      r.Aprime.value = json_matrix(n.at("Aprime"), 3, 3, "Aprime");
      r.Aprime.volume = r.Aprime.boundary = r.Aprime.value;
      r.Aprime.route_gap = n.value("Aprime_route_gap", 0.0);
      r.g_value = n.at("g").get<double>();
      r.g_source = n.at("g_source").get<std::string>();
      r.response.Aprime = r.Aprime.value;
    }
    if (!r.has_dirichlet && !r.has_neumann) config_error("response holds neither Dirichlet nor Neumann data");
    if (resp.contains("attainability")) {
      const Json& a = resp["attainability"];
      r.attainability.r1 = a.value("r1", 0.0);
      r.attainability.r2 = a.value("r2", 0.0);
      r.attainability.phase1_empty = a.value("phase1_empty", false);
    }
    evaluate_bounds(r, s1, s2, fo);
    return r;
  } catch (const Json::exception& e) {
    config_error(std::string("malformed response file: ") + e.what());
  }
}

// ---------------------------------------------------------------- sweep

SweepAxis parse_axis(const std::string& name) {
  if (name == "grid") return SweepAxis::grid;
  if (name == "radius") return SweepAxis::radius;
  if (name == "contrast") return SweepAxis::contrast;
  config_error("unknown sweep axis '" + name + "' (grid, radius, contrast)");
}

void sweep(const ScenarioConfig& base, SweepAxis axis, const std::vector<double>& values, std::ostream& csv) {
  csv << "axis,value,cells,radius,sigma1,sigma2,truth_f1,delta_grid,upper_trace,upper_special,upper_pairwise,"
         "f1_star,lower_general,lower_special_neumann,lower_milton,g,r1,r2,A_route_gap,M_route_gap,sandwich_ok,"
         "solve_seconds,error\n";
  const char* axis_name = axis == SweepAxis::grid ? "grid" : axis == SweepAxis::radius ? "radius" : "contrast";
  for (double v : values) {
    ScenarioConfig cfg = base;
    std::ostringstream row;
    std::string error;
    BoundReport r;
    bool ok = false;
    try {
      if (axis == SweepAxis::grid) {
        if (v != std::floor(v)) config_error("grid values must be integers");
        cfg.cells = {int(v), int(v), int(v)};
      } else if (axis == SweepAxis::radius) {
        cfg.radius = v;
      } else {
        cfg.sigma1 = v * cfg.sigma2;
      }
      r = run_scenario(cfg);
      ok = true;
    } catch (const std::exception& e) {
      error = e.what();
      for (char& c : error)
        if (c == ',' || c == '\n' || c == '"') c = ' ';
    }
    auto opt = [&](const auto& b) { return b ? fmt(b->value) : std::string(); };
    double solve_s = 0.0;
    for (const auto& run : r.runs) solve_s += run.seconds;
    row << axis_name << ',' << fmt(v) << ',' << cfg.cells[0] << 'x' << cfg.cells[1] << 'x' << cfg.cells[2] << ','
        << fmt(cfg.radius) << ',' << fmt(cfg.sigma1) << ',' << fmt(cfg.sigma2) << ',';
    if (ok) {
      row << fmt(r.truth_f1) << ',' << fmt(r.delta_grid) << ','
          << (r.has_dirichlet ? fmt(r.upper_trace.bound.value) : "") << ',' << opt(r.upper_special) << ','
          << opt(r.upper_pairwise) << ',' << (r.feasibility ? fmt(r.feasibility->f1_star) : "") << ','
          << opt(r.lower_general) << ',' << (r.lower_neumann ? fmt(r.lower_neumann->lb18.value) : "") << ','
          << (r.lower_neumann ? fmt(r.lower_neumann->lb19.value) : "") << ','
          << (r.has_neumann ? fmt(r.g_value) : "") << ','
          << (r.attainability.phase1_empty ? "" : fmt(r.attainability.r1)) << ',' << fmt(r.attainability.r2)
          << ',' << (r.has_dirichlet ? fmt(r.A.route_gap) : "") << ',' << (r.has_dirichlet ? fmt(r.M.route_gap) : "")
          << ',' << (r.sandwich_ok() ? 1 : 0) << ',' << fmt(solve_s) << ",\n";
    } else {
      row << std::string(16, ',') << error << '\n';
    }
    csv << row.str();
    csv.flush();
  }
}

}  // namespace tbound::harness
