#include "tbound/pde.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "quadrature.hpp"
#include "tbound/error.hpp"

namespace tbound::pde {

namespace {

// Forward half of the 27-point neighbourhood (positive linear offset).
std::array<std::array<int, 3>, simd::kHalfStencil> forward_dirs() {
  std::array<std::array<int, 3>, simd::kHalfStencil> d{};
  int o = 0;
  for (int dk = -1; dk <= 1; ++dk)
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        const bool forward = dk > 0 || (dk == 0 && dj > 0) || (dk == 0 && dj == 0 && di > 0);
        if (forward) d[o++] = {di, dj, dk};
      }
  return d;
}

int forward_slot(int di, int dj, int dk) {
  static const auto dirs = forward_dirs();
  for (int o = 0; o < simd::kHalfStencil; ++o)
    if (dirs[o][0] == di && dirs[o][1] == dj && dirs[o][2] == dk) return o;
  return -1;
}

// Q1 element stiffness entry for corners differing by d (each component 0/1
// in magnitude): sum over axes of K1 x M1 x M1.
double element_entry(const Grid& g, const int d[3]) {
  double s = 0.0;
  for (int a = 0; a < 3; ++a) {
    double t = (d[a] == 0 ? 1.0 : -1.0) / g.spacing[a];
    for (int b = 0; b < 3; ++b)
      if (b != a) t *= d[b] == 0 ? g.spacing[b] / 3.0 : g.spacing[b] / 6.0;
    s += t;
  }
  return s;
}

template <class F>
void parallel_ranges(int threads, std::size_t begin, std::size_t end, F&& fn) {
  if (threads <= 1 || end - begin < 4096) {
    fn(begin, end);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (end - begin + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::size_t b = begin + t * chunk;
    const std::size_t e = std::min(end, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& th : pool) th.join();
}

// Sum over fixed blocks, added in block order: the result does not depend on
// the thread count.
constexpr std::size_t kDotBlock = 16384;

double blocked_dot(const simd::KernelTable& kt, const double* a, const double* b,
                   std::size_t begin, std::size_t end, int threads) {
  const std::size_t nblocks = (end - begin + kDotBlock - 1) / kDotBlock;
  std::vector<double> partial(nblocks, 0.0);
  parallel_ranges(threads, 0, nblocks, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t blk = b0; blk < b1; ++blk) {
      const std::size_t s = begin + blk * kDotBlock;
      partial[blk] = kt.dot(a, b, s, std::min(end, s + kDotBlock));
    }
  });
  double sum = 0.0;
  for (double p : partial) sum += p;
  return sum;
}

}  // namespace

BoundaryData BoundaryData::dirichlet(std::array<ScalarFn, 3> v) {
  BoundaryData bc;
  bc.kind = BoundaryKind::dirichlet;
  bc.value = std::move(v);
  return bc;
}

BoundaryData BoundaryData::neumann(std::array<FluxFn, 3> q) {
  BoundaryData bc;
  bc.kind = BoundaryKind::neumann;
  bc.flux = std::move(q);
  return bc;
}

BoundaryData BoundaryData::affine_dirichlet(const Vector3& center) {
  std::array<ScalarFn, 3> v;
  for (int i = 0; i < 3; ++i) v[i] = [i, center](const Vector3& x) { return -(x(i) - center(i)); };
  return dirichlet(std::move(v));
}

BoundaryData BoundaryData::special_neumann() {
  std::array<FluxFn, 3> q;
  for (int i = 0; i < 3; ++i) q[i] = [i](const Vector3&, const Vector3& n) { return -n(i); };
  return neumann(std::move(q));
}

BoundaryData combine(const BoundaryData& bc, const Matrix3& k) {
  BoundaryData out;
  out.kind = bc.kind;
  for (int c = 0; c < 3; ++c) {
    const Vector3 w = k.col(c);
    if (bc.kind == BoundaryKind::dirichlet) {
      auto src = bc.value;
      out.value[c] = [src, w](const Vector3& x) {
        double s = 0.0;
        for (int a = 0; a < 3; ++a)
          if (w(a) != 0.0) s += src[a](x) * w(a);
        return s;
      };
    } else {
      auto src = bc.flux;
      out.flux[c] = [src, w](const Vector3& x, const Vector3& n) {
        double s = 0.0;
        for (int a = 0; a < 3; ++a)
          if (w(a) != 0.0) s += src[a](x, n) * w(a);
        return s;
      };
    }
  }
  return out;
}

PotentialSet combine(const PotentialSet& ps, const Matrix3& k) {
  PotentialSet out = ps;
  for (int c = 0; c < 3; ++c) {
    out.V[c].assign(ps.layout.size(), 0.0);
    out.flux[c].assign(ps.layout.size(), 0.0);
    for (std::size_t n = 0; n < ps.layout.size(); ++n) {
      double v = 0.0, f = 0.0;
      for (int a = 0; a < 3; ++a) {
        v += ps.V[a][n] * k(a, c);
        f += ps.flux[a][n] * k(a, c);
      }
      out.V[c][n] = v;
      out.flux[c][n] = f;
    }
  }
  return out;
}

Stencil::Stencil(const Grid& g, const std::vector<double>& cell_sigma) : grid_(g), layout_(g) {
  if (cell_sigma.size() != g.cell_count()) throw InvalidInput("sigma array does not match grid");
  dir_ = forward_dirs();
  for (int o = 0; o < simd::kHalfStencil; ++o) {
    offset_[o] = layout_.offset(dir_[o][0], dir_[o][1], dir_[o][2]);
    coeff_[o].assign(layout_.size(), 0.0);
  }
  diag_.assign(layout_.size(), 0.0);

  int d0[3] = {0, 0, 0};
  const double k0 = element_entry(g, d0);
  // pair (a,b) of cell corners with b - a forward: slot and entry
  struct Pair {
    int a, slot;
    double k;
  };
  std::vector<Pair> pairs;
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      const int d[3] = {(b & 1) - (a & 1), ((b >> 1) & 1) - ((a >> 1) & 1),
                        ((b >> 2) & 1) - ((a >> 2) & 1)};
      const int slot = forward_slot(d[0], d[1], d[2]);
      if (slot >= 0) pairs.push_back({a, slot, element_entry(g, d)});
    }
  const quad::CellRule rule(g, layout_);
  for (int k = 0; k < g.cells[2]; ++k)
    for (int j = 0; j < g.cells[1]; ++j)
      for (int i = 0; i < g.cells[0]; ++i) {
        const double s = cell_sigma[g.cell_index(i, j, k)];
        const std::size_t base = layout_.index(i, j, k);
        for (int c = 0; c < 8; ++c) diag_[base + rule.corner_offset[c]] += k0 * s;
        for (const auto& p : pairs) coeff_[p.slot][base + rule.corner_offset[p.a]] += p.k * s;
      }
}

simd::StencilView Stencil::view() const {
  simd::StencilView v;
  v.diag = diag_.data();
  for (int o = 0; o < simd::kHalfStencil; ++o) {
    v.coeff[o] = coeff_[o].data();
    v.offset[o] = offset_[o];
  }
  return v;
}

void Stencil::apply(const simd::KernelTable& kt, const NodeArray& x, NodeArray& y,
                    int threads) const {
  const auto v = view();
  parallel_ranges(threads, layout_.first(), layout_.end(),
                  [&](std::size_t b, std::size_t e) { kt.stencil_apply(v, x.data(), y.data(), b, e); });
}

Stencil Stencil::dirichlet_reduced() const {
  Stencil s = *this;
  const auto& n = layout_.nodes();
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        if (!layout_.is_boundary(i, j, k)) continue;
        const std::size_t idx = layout_.index(i, j, k);
        s.diag_[idx] = 1.0;
        for (int o = 0; o < simd::kHalfStencil; ++o) {
          s.coeff_[o][idx] = 0.0;
          s.coeff_[o][idx - offset_[o]] = 0.0;
        }
      }
  return s;
}

double Stencil::coupling(std::size_t n, int di, int dj, int dk) const {
  if (di == 0 && dj == 0 && dk == 0) return diag_[n];
  int slot = forward_slot(di, dj, dk);
  if (slot >= 0) return coeff_[slot][n];
  slot = forward_slot(-di, -dj, -dk);
  return coeff_[slot][n - offset_[slot]];
}

SolveStats pcg(const Stencil& a, const NodeArray& b, NodeArray& x, const SolverOptions& opt,
               const simd::KernelTable& kt) {
  const auto t0 = std::chrono::steady_clock::now();
  const NodeLayout& L = a.layout();
  const std::size_t lo = L.first(), hi = L.end();
  const int th = opt.threads;
  SolveStats st;

  NodeArray w(L.size(), 0.0), r(L.size(), 0.0), z(L.size(), 0.0), p(L.size(), 0.0),
      q(L.size(), 0.0);
  for (std::size_t n = lo; n < hi; ++n) {
    const double d = a.diagonal(n);
    w[n] = d != 0.0 ? 1.0 / d : 0.0;
  }
  x.resize(L.size(), 0.0);

  const double bnorm = std::sqrt(blocked_dot(kt, b.data(), b.data(), lo, hi, th));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    st.converged = true;
    return st;
  }
  a.apply(kt, x, q, th);
  for (std::size_t n = lo; n < hi; ++n) r[n] = b[n] - q[n];
  double rel = std::sqrt(blocked_dot(kt, r.data(), r.data(), lo, hi, th)) / bnorm;
  st.residual_history.push_back(rel);

  auto each = [&](auto&& f) { parallel_ranges(th, lo, hi, f); };
  each([&](std::size_t s, std::size_t e) { kt.scale(w.data(), r.data(), z.data(), s, e); });
  p = z;
  double rz = blocked_dot(kt, r.data(), z.data(), lo, hi, th);

  while (rel > opt.tolerance && st.iterations < opt.max_iterations) {
    a.apply(kt, p, q, th);
    const double pq = blocked_dot(kt, p.data(), q.data(), lo, hi, th);
    if (!(pq > 0.0)) break;
    const double alpha = rz / pq;
    each([&](std::size_t s, std::size_t e) {
      kt.axpy(alpha, p.data(), x.data(), s, e);
      kt.axpy(-alpha, q.data(), r.data(), s, e);
    });
    ++st.iterations;
    rel = std::sqrt(blocked_dot(kt, r.data(), r.data(), lo, hi, th)) / bnorm;
    st.residual_history.push_back(rel);
    if (rel <= opt.tolerance) break;
    each([&](std::size_t s, std::size_t e) { kt.scale(w.data(), r.data(), z.data(), s, e); });
    const double rz_new = blocked_dot(kt, r.data(), z.data(), lo, hi, th);
    const double beta = rz_new / rz;
    rz = rz_new;
    each([&](std::size_t s, std::size_t e) { kt.xpay(z.data(), beta, p.data(), s, e); });
  }
  st.final_residual = rel;
  st.converged = rel <= opt.tolerance;
  st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return st;
}

namespace {

NodeArray trapezoid_weights(const Grid& g, const NodeLayout& L) {
  NodeArray w(L.size(), 0.0);
  const auto& n = L.nodes();
  auto w1 = [&](int i, int a) { return (i == 0 || i == n[a] - 1 ? 0.5 : 1.0) * g.spacing[a]; };
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) w[L.index(i, j, k)] = w1(i, 0) * w1(j, 1) * w1(k, 2);
  return w;
}

template <class F>
void for_each_node(const NodeLayout& L, F&& fn) {
  const auto& n = L.nodes();
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) fn(i, j, k, L.index(i, j, k));
}

[[noreturn]] void solver_failure(int comp, const SolveStats& st) {
  throw SolverError("PCG did not converge for potential " + std::to_string(comp + 1) + " after " +
                        std::to_string(st.iterations) + " iterations (relative residual " +
                        std::to_string(st.final_residual) + ")",
                    st.residual_history);
}

}  // namespace

PotentialSet solve(const ConductivityField& field, const BoundaryData& bc, Mode mode,
                   const SolverOptions& opt) {
  field.validate();
  const Grid& g = field.grid;
  PotentialSet ps;
  ps.grid = g;
  ps.layout = NodeLayout(g);
  ps.kind = bc.kind;
  ps.mode = mode;
  ps.sigma = mode == Mode::laplace ? std::vector<double>(g.cell_count(), 1.0) : field.cell_sigma();
  const simd::Isa isa = opt.isa ? *opt.isa : simd::detect_isa();
  const simd::KernelTable& kt = simd::kernels_for(isa);
  ps.isa = std::string(simd::to_string(isa));

  const NodeLayout& L = ps.layout;
  const Stencil full(g, ps.sigma);

  if (bc.kind == BoundaryKind::dirichlet) {
    for (int c = 0; c < 3; ++c)
      if (!bc.value[c]) throw InvalidInput("dirichlet data missing component " + std::to_string(c + 1));
    const Stencil reduced = full.dirichlet_reduced();
    for (int c = 0; c < 3; ++c) {
      NodeArray gval(L.size(), 0.0), kg(L.size(), 0.0), rhs(L.size(), 0.0), x(L.size(), 0.0);
      for_each_node(L, [&](int i, int j, int k, std::size_t n) {
        if (L.is_boundary(i, j, k)) gval[n] = bc.value[c](g.node_position(i, j, k));
      });
      full.apply(kt, gval, kg, opt.threads);
      for_each_node(L, [&](int i, int j, int k, std::size_t n) {
        if (!L.is_boundary(i, j, k)) rhs[n] = -kg[n];
      });
      ps.stats[c] = pcg(reduced, rhs, x, opt, kt);
      if (!ps.stats[c].converged) solver_failure(c, ps.stats[c]);
      ps.V[c].assign(L.size(), 0.0);
      for_each_node(L, [&](int, int, int, std::size_t n) { ps.V[c][n] = gval[n] + x[n]; });
      ps.flux[c].assign(L.size(), 0.0);
      full.apply(kt, ps.V[c], ps.flux[c], opt.threads);
    }
  } else {
    for (int c = 0; c < 3; ++c)
      if (!bc.flux[c]) throw InvalidInput("neumann data missing component " + std::to_string(c + 1));
    std::array<NodeArray, 3> load;
    for (auto& l : load) l.assign(L.size(), 0.0);
    quad::for_each_face_point(g, L, [&](const quad::FacePoint& fp) {
      for (int c = 0; c < 3; ++c) {
        const double q = bc.flux[c](fp.x, fp.n) * fp.weight;
        for (int m = 0; m < 4; ++m) load[c][fp.node[m]] += q * fp.phi[m];
      }
    });
    const NodeArray tw = trapezoid_weights(g, L);
    double wsum = 0.0;
    for_each_node(L, [&](int, int, int, std::size_t n) { wsum += tw[n]; });
    for (int c = 0; c < 3; ++c) {
      double net = 0.0, mag = 0.0;
      std::size_t nb = 0;
      for_each_node(L, [&](int i, int j, int k, std::size_t n) {
        net += load[c][n];
        mag += std::abs(load[c][n]);
        nb += L.is_boundary(i, j, k);
      });
      if (mag > 0.0 && std::abs(net) > 1e-6 * mag)
        throw InvalidInput("incompatible neumann data: component " + std::to_string(c + 1) +
                           " has net flux " + std::to_string(net) + " (total |flux| " +
                           std::to_string(mag) + ")");
      for_each_node(L, [&](int i, int j, int k, std::size_t n) {
        if (L.is_boundary(i, j, k)) load[c][n] -= net / double(nb);
      });
      NodeArray x(L.size(), 0.0);
      ps.stats[c] = pcg(full, load[c], x, opt, kt);
      ps.stats[c].removed_flux = net;
      if (!ps.stats[c].converged) solver_failure(c, ps.stats[c]);
      double mean = 0.0;
      for_each_node(L, [&](int, int, int, std::size_t n) { mean += tw[n] * x[n]; });
      mean /= wsum;
      for_each_node(L, [&](int, int, int, std::size_t n) { x[n] -= mean; });
      ps.V[c] = std::move(x);
      ps.flux[c] = load[c];
    }
  }
  return ps;
}

}  // namespace tbound::pde
