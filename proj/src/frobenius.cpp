#include "streamline/frobenius.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "streamline/parallel.hpp"

namespace streamline {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool regular(const PointRecord& rec) {
  return (rec.regime == Regime::Elliptic || rec.regime == Regime::Hyperbolic) &&
         !rec.has(Gamma0 | GammaInf | OutsideOmegaF | DriveUndefined) && std::isfinite(rec.Q);
}

PointWitness undefined_witness(const DriveSample& s, const DriveField& d, const Tolerances& tol) {
  PointWitness pw;
  pw.gamma_g = d.has_potential() && std::sqrt(s.xi) <= tol.eps_grad &&
               std::fabs(s.laplacian_f) > tol.eps_grad;
  return pw;
}

// Central-difference curl of a pointwise vector function.
std::optional<double> fd_curl(const WitnessFunction& G, const Vec& x, int n, double step) {
  Mat dG{};
  for (int i = 0; i < n; ++i) {
    Vec xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    auto gp = G(xp);
    auto gm = G(xm);
    if (!gp || !gm) return std::nullopt;
    for (int j = 0; j < n; ++j) dG[i][j] = ((*gp)[j] - (*gm)[j]) / (2.0 * step);
  }
  double r = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) r = std::max(r, std::fabs(dG[i][j] - dG[j][i]));
  return r;
}

double default_step(const GridSpec& grid) {
  double extent = 1.0;
  for (int i = 0; i < grid.dim; ++i) extent = std::max(extent, grid.hi[i] - grid.lo[i]);
  return 1e-5 * extent;
}

std::string format_point(const Vec& x, int n) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (int i = 0; i < n; ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

WitnessSystem system_for(const DriveField& d) {
  return d.divergence_free() ? WitnessSystem::Curl : WitnessSystem::Divergence;
}

std::optional<FieldJet> field_jet(const DensityModel& model, const DriveSample& s,
                                  const PointRecord& rec) {
  if (!regular(rec)) return std::nullopt;
  const auto rj = model.rho_jet(rec.Q);
  const auto dphi = model.phi_prime(rec.Q);
  if (!rj || !dphi || rj->value == 0.0 || *dphi == 0.0) return std::nullopt;
  FieldJet j;
  j.n = s.n;
  j.a = s.a;
  j.rho = rj->value;
  const double c = rj->d1 / *dphi;
  for (int i = 0; i < s.n; ++i) {
    j.grad_rho[i] = c * s.grad_xi[i];
    j.w[i] = s.a[i] / j.rho;
  }
  for (int i = 0; i < s.n; ++i)
    for (int k = 0; k < s.n; ++k)
      j.dw[i][k] = s.jacobian[i][k] / j.rho - s.a[k] * j.grad_rho[i] / (j.rho * j.rho);
  for (int i = 0; i < s.n; ++i)
    if (!std::isfinite(j.grad_rho[i])) return std::nullopt;
  return j;
}

double frobenius_defect(const FieldJet& j, const Vec& G, WitnessSystem system) {
  const int n = j.n;
  if (system == WitnessSystem::Divergence) {
    double div = 0.0;
    for (int i = 0; i < n; ++i) div += j.dw[i][i];
    return std::fabs(div - dot(G, j.w, n));
  }
  double r = 0.0;
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k)
      r = std::max(r, std::fabs((j.dw[i][k] - j.dw[k][i]) - (G[i] * j.w[k] - G[k] * j.w[i])));
  return r;
}

PointWitness witness_2d(const DensityModel& model, const DriveField& d, const PointRecord& rec,
                        const Vec& x, const Tolerances& tol) {
  if (d.dim() != 2 || !d.divergence_free())
    throw std::invalid_argument("witness_2d needs a divergence-free drive in two dimensions");
  auto s = d.at(x);
  if (!s) return {};
  if (std::sqrt(s->xi) <= tol.eps_grad) return undefined_witness(*s, d, tol);
  auto jet = field_jet(model, *s, rec);
  if (!jet) return {};
  PointWitness pw;
  pw.defined = true;
  const double m12 = s->jacobian[0][1] - s->jacobian[1][0];
  const Vec H{m12 * s->a[1] / s->xi, -m12 * s->a[0] / s->xi, 0.0, 0.0};
  for (int i = 0; i < 2; ++i) {
    pw.G1[i] = -H[i];
    pw.G[i] = H[i] - jet->grad_rho[i] / jet->rho;
  }
  pw.solvability_residual = 0.0;
  pw.defining_residual = frobenius_defect(*jet, pw.G, WitnessSystem::Curl);
  return pw;
}

PointWitness witness_nd(const DensityModel& model, const DriveField& d, const PointRecord& rec,
                        const Vec& x, const Tolerances& tol) {
  if (!d.divergence_free()) throw std::invalid_argument("witness_nd needs a divergence-free drive");
  const int n = d.dim();
  auto s = d.at(x);
  if (!s) return {};
  if (std::sqrt(s->xi) <= tol.eps_grad) return undefined_witness(*s, d, tol);
  auto jet = field_jet(model, *s, rec);
  if (!jet) return {};
  Mat M{};
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) M[i][k] = s->jacobian[i][k] - s->jacobian[k][i];
  Vec H{};
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) H[i] += M[i][k] * s->a[k];
    H[i] /= s->xi;
  }
  PointWitness pw;
  pw.defined = true;
  for (int i = 0; i < n; ++i) {
    pw.G1[i] = -H[i];
    pw.G[i] = H[i] - jet->grad_rho[i] / jet->rho;
  }
  double solv = 0.0;
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k)
      solv = std::max(solv, std::fabs(M[i][k] - (H[i] * s->a[k] - H[k] * s->a[i])));
  pw.solvability_residual = solv;
  pw.defining_residual = frobenius_defect(*jet, pw.G, WitnessSystem::Curl);
  return pw;
}

PointWitness witness_gradient(const DensityModel& model, const DriveField& d,
                              const PointRecord& rec, const Vec& x, const Tolerances& tol) {
  if (d.divergence_free()) throw std::invalid_argument("witness_gradient needs a curl-free drive");
  const int n = d.dim();
  auto s = d.at(x);
  if (!s) return {};
  if (std::sqrt(s->xi) <= tol.eps_grad) return undefined_witness(*s, d, tol);
  auto jet = field_jet(model, *s, rec);
  if (!jet) return {};
  PointWitness pw;
  pw.defined = true;
  const double chain = dot(s->a, jet->grad_rho, n) / jet->rho;
  for (int i = 0; i < n; ++i) {
    pw.G1[i] = -s->divergence * s->a[i] / s->xi;
    pw.G[i] = (s->divergence - chain) * s->a[i] / s->xi;
  }
  pw.solvability_residual = 0.0;
  pw.defining_residual = frobenius_defect(*jet, pw.G, WitnessSystem::Divergence);
  return pw;
}

PointWitness witness_at(const DensityModel& model, const DriveField& d, const BranchPolicy& policy,
                        const Vec& x, const SynthOptions& opts) {
  const PointRecord rec = synthesize_point(model, d, policy, x, opts);
  if (!d.divergence_free()) return witness_gradient(model, d, rec, x, opts.tol);
  if (d.dim() == 2) return witness_2d(model, d, rec, x, opts.tol);
  return witness_nd(model, d, rec, x, opts.tol);
}

FrobeniusWitness witness_from_function(const GridSpec& grid, WitnessSystem system,
                                       const WitnessFunction& G, int threads) {
  FrobeniusWitness w;
  w.grid = grid;
  w.system = system;
  w.fd_step = default_step(grid);
  const std::size_t count = grid.point_count();
  w.defined.assign(count, 0);
  w.G.assign(count, Vec{});
  w.G1.assign(count, Vec{});
  w.defining_residual.assign(count, kNaN);
  w.solvability_residual.assign(count, kNaN);
  w.curl_residual.assign(count, kNaN);
  parallel_for(count, threads, [&](std::size_t p) {
    const Vec x = grid.point(p);
    auto g = G(x);
    if (!g) return;
    w.defined[p] = 1;
    w.G[p] = *g;
    if (auto c = fd_curl(G, x, grid.dim, w.fd_step)) w.curl_residual[p] = *c;
  });
  return w;
}

FrobeniusWitness compute_witness(const DensityModel& model, const DriveField& d,
                                 const BranchPolicy& policy, const GridSpec& grid,
                                 const SynthOptions& opts) {
  if (grid.dim != d.dim()) throw std::invalid_argument("grid and drive dimensions differ");
  WitnessFunction G = [&](const Vec& x) -> std::optional<Vec> {
    auto pw = witness_at(model, d, policy, x, opts);
    if (!pw.defined) return std::nullopt;
    return pw.G;
  };
  FrobeniusWitness w;
  w.grid = grid;
  w.system = system_for(d);
  w.fd_step = default_step(grid);
  const std::size_t count = grid.point_count();
  w.defined.assign(count, 0);
  w.G.assign(count, Vec{});
  w.G1.assign(count, Vec{});
  w.defining_residual.assign(count, kNaN);
  w.solvability_residual.assign(count, kNaN);
  w.curl_residual.assign(count, kNaN);
  parallel_for(count, opts.threads, [&](std::size_t p) {
    const Vec x = grid.point(p);
    const PointWitness pw = witness_at(model, d, policy, x, opts);
    if (!pw.defined) return;
    w.defined[p] = 1;
    w.G[p] = pw.G;
    w.G1[p] = pw.G1;
    w.defining_residual[p] = pw.defining_residual;
    w.solvability_residual[p] = pw.solvability_residual;
    if (auto c = fd_curl(G, x, grid.dim, w.fd_step)) w.curl_residual[p] = *c;
  });
  return w;
}

EtaResult recover_eta(const FrobeniusWitness& witness, const FieldSolution& solution,
                      const Vec& anchor, const EtaOptions& options) {
  const GridSpec& grid = witness.grid;
  const int n = grid.dim;
  if (solution.grid.dim != n || solution.grid.cells != grid.cells ||
      solution.points.size() != witness.G.size())
    throw std::invalid_argument("recover_eta: witness and solution grids differ");
  const std::size_t count = grid.point_count();
  EtaResult r;
  r.eta.assign(count, kNaN);

  bool any = false;
  for (std::size_t p = 0; p < count; ++p) {
    if (!witness.defined[p] || !std::isfinite(witness.curl_residual[p])) continue;
    any = true;
    if (witness.curl_residual[p] > r.max_curl) {
      r.max_curl = witness.curl_residual[p];
      r.max_curl_location = grid.point(p);
    }
  }
  if (!any) {
    r.message = "witness is undefined on the whole grid";
    return r;
  }
  if (r.max_curl >= options.tol_conservative) {
    std::ostringstream os;
    os.precision(17);
    os << "G is not conservative: curl residual " << r.max_curl << " at "
       << format_point(r.max_curl_location, n) << " exceeds " << options.tol_conservative;
    r.message = os.str();
    return r;
  }

  std::array<int, max_dim> a{};
  for (int i = 0; i < n; ++i) {
    const double t = std::round((anchor[i] - grid.lo[i]) / grid.spacing(i));
    a[i] = static_cast<int>(std::clamp(t, 0.0, static_cast<double>(grid.cells[i])));
  }
  const std::size_t pa = grid.linear_index(a);
  if (!witness.defined[pa]) {
    r.message = "witness is undefined at the anchor " + format_point(grid.point(pa), n);
    return r;
  }
  r.eta[pa] = 0.0;

  auto G = [&](std::size_t p, int axis) { return witness.G[p][axis]; };
  // Composite trapezoid rule for G_axis between neighbouring nodes.
  auto segment = [&](std::size_t p0, std::size_t p1, int axis, int dir) {
    return dir * 0.5 * grid.spacing(axis) * (G(p0, axis) + G(p1, axis));
  };
  for (int k = 0; k < n; ++k) {
    const std::size_t stride = grid.stride(k);
    for (std::size_t p = 0; p < count; ++p) {
      const auto m = grid.multi_index(p);
      bool on_slab = m[k] == a[k];
      for (int j = k + 1; j < n && on_slab; ++j) on_slab = m[j] == a[j];
      if (!on_slab || !std::isfinite(r.eta[p])) continue;
      for (int dir : {1, -1}) {
        std::size_t cur = p;
        int idx = m[k];
        while (true) {
          const int next_idx = idx + dir;
          if (next_idx < 0 || next_idx > grid.cells[k]) break;
          const std::size_t next = dir > 0 ? cur + stride : cur - stride;
          if (!witness.defined[next]) break;
          r.eta[next] = r.eta[cur] + segment(cur, next, k, dir);
          cur = next;
          idx = next_idx;
        }
      }
    }
  }

  if (n >= 2 && options.loops > 0) {
    std::mt19937_64 rng(options.seed);
    int done = 0;
    for (int attempt = 0; attempt < 1000 * options.loops && done < options.loops; ++attempt) {
      int i = std::uniform_int_distribution<int>(0, n - 2)(rng);
      int j = std::uniform_int_distribution<int>(i + 1, n - 1)(rng);
      auto base = grid.multi_index(std::uniform_int_distribution<std::size_t>(0, count - 1)(rng));
      auto pick = [&](int axis) {
        int u = std::uniform_int_distribution<int>(0, grid.cells[axis])(rng);
        int v = std::uniform_int_distribution<int>(0, grid.cells[axis])(rng);
        if (u > v) std::swap(u, v);
        return std::pair{u, v};
      };
      auto [i0, i1] = pick(i);
      auto [j0, j1] = pick(j);
      if (i0 == i1 || j0 == j1) continue;
      // Counter-clockwise in the (i, j) plane.
      std::vector<std::array<int, max_dim>> path;
      auto node = [&](int u, int v) {
        auto m = base;
        m[i] = u;
        m[j] = v;
        return m;
      };
      for (int u = i0; u < i1; ++u) path.push_back(node(u, j0));
      for (int v = j0; v < j1; ++v) path.push_back(node(i1, v));
      for (int u = i1; u > i0; --u) path.push_back(node(u, j1));
      for (int v = j1; v > j0; --v) path.push_back(node(i0, v));
      path.push_back(node(i0, j0));
      bool ok = true;
      double integral = 0.0;
      for (std::size_t s = 0; s + 1 < path.size() && ok; ++s) {
        const std::size_t p0 = grid.linear_index(path[s]);
        const std::size_t p1 = grid.linear_index(path[s + 1]);
        ok = witness.defined[p0] && witness.defined[p1];
        if (!ok) break;
        const int axis = path[s][i] != path[s + 1][i] ? i : j;
        const int sign = path[s + 1][axis] > path[s][axis] ? 1 : -1;
        integral += segment(p0, p1, axis, sign);
      }
      if (!ok) continue;
      ++done;
      r.max_loop = std::max(r.max_loop, std::fabs(integral));
    }
    if (r.max_loop >= 10.0 * options.tol_conservative) {
      std::ostringstream os;
      os.precision(17);
      os << "path dependence: loop integral " << r.max_loop << " exceeds "
         << 10.0 * options.tol_conservative;
      r.message = os.str();
      return r;
    }
  }

  // exp(-eta) w must be closed.
  auto usable = [&](std::size_t p) {
    const PointRecord& rec = solution.points[p];
    if (!std::isfinite(r.eta[p]) || rec.has(kSingularFlags) || !rec.w_defined()) return false;
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(rec.w[i])) return false;
    return true;
  };
  auto F = [&](std::size_t p, int j) { return std::exp(-r.eta[p]) * solution.points[p].w[j]; };
  double worst = -1.0;
  for (std::size_t p = 0; p < count; ++p) {
    const auto m = grid.multi_index(p);
    bool ok = usable(p);
    for (int i = 0; i < n && ok; ++i) {
      ok = m[i] > 0 && m[i] < grid.cells[i] && usable(p + grid.stride(i)) &&
           usable(p - grid.stride(i));
    }
    if (!ok) continue;
    // Fourth-order differences where the wider stencils are usable.
    auto D = [&](int i, int j) {
      const std::size_t s = grid.stride(i);
      const double h = grid.spacing(i);
      const int c = grid.cells[i];
      if (m[i] >= 2 && m[i] + 2 <= c && usable(p + 2 * s) && usable(p - 2 * s))
        return (-F(p + 2 * s, j) + 8.0 * F(p + s, j) - 8.0 * F(p - s, j) + F(p - 2 * s, j)) /
               (12.0 * h);
      if (m[i] + 3 <= c && usable(p + 2 * s) && usable(p + 3 * s))
        return (-3.0 * F(p - s, j) - 10.0 * F(p, j) + 18.0 * F(p + s, j) - 6.0 * F(p + 2 * s, j) +
                F(p + 3 * s, j)) /
               (12.0 * h);
      if (m[i] >= 3 && usable(p - 2 * s) && usable(p - 3 * s))
        return (3.0 * F(p + s, j) + 10.0 * F(p, j) - 18.0 * F(p - s, j) + 6.0 * F(p - 2 * s, j) -
                F(p - 3 * s, j)) /
               (12.0 * h);
      return (F(p + s, j) - F(p - s, j)) / (2.0 * h);
    };
    double res = 0.0;
    if (witness.system == WitnessSystem::Divergence) {
      for (int i = 0; i < n; ++i) res += D(i, i);
      res = std::fabs(res);
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) res = std::max(res, std::fabs(D(i, j) - D(j, i)));
    }
    worst = std::max(worst, res);
  }
  if (worst < 0.0) {
    r.message = "no interior point with a full stencil to check exp(-eta) w";
    return r;
  }
  r.exactness_residual = worst;
  if (worst >= options.tol_exactness) {
    std::ostringstream os;
    os.precision(17);
    os << "exp(-eta) w is not closed: residual " << worst << " exceeds " << options.tol_exactness;
    r.message = os.str();
    return r;
  }
  r.ok = true;
  r.message = "ok";
  return r;
}

}  // namespace streamline
