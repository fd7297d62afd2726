#include "streamline/verify.hpp"

#include <cmath>

namespace streamline {

namespace {

constexpr double kRoundoff = 1e-10;

double pairwise(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise(v, half) + pairwise(v + half, n - half);
}

ResidualReport summarize(ResidualKind kind, const GridSpec& grid,
                         const std::vector<std::uint8_t>& mask, const std::vector<double>& r,
                         double scale) {
  ResidualReport rep;
  rep.kind = kind;
  rep.h = grid.max_spacing();
  rep.scale = scale;
  std::vector<double> sq;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (!mask[p]) continue;
    rep.max_norm = std::max(rep.max_norm, r[p]);
    sq.push_back(r[p] * r[p]);
  }
  rep.evaluated = sq.size();
  if (rep.evaluated < 3)
    throw DomainError("residual needs at least 3 unmasked interior points, found " +
                      std::to_string(rep.evaluated));
  rep.l2_norm = std::sqrt(pairwise_sum(sq) / static_cast<double>(sq.size()));
  rep.masked_fraction = 1.0 - static_cast<double>(rep.evaluated) / static_cast<double>(mask.size());
  return rep;
}

// rho(Q) w at every point with a defined Q; NaN elsewhere.
std::vector<Vec> rho_w(const FieldSolution& s, const DensityModel& model,
                       std::vector<std::uint8_t>& ok) {
  const int n = s.grid.dim;
  std::vector<Vec> F(s.points.size());
  for (std::size_t p = 0; p < s.points.size(); ++p) {
    if (!ok[p]) continue;
    auto rho = model.rho(s.points[p].Q);
    if (!rho) {
      ok[p] = 0;
      continue;
    }
    for (int i = 0; i < n; ++i) F[p][i] = *rho * s.points[p].w[i];
  }
  return F;
}

double central(const GridSpec& g, const std::vector<Vec>& F, std::size_t p, int i, int j) {
  return (F[p + g.stride(i)][j] - F[p - g.stride(i)][j]) / (2.0 * g.spacing(i));
}

double max_magnitude(const std::vector<Vec>& F, const std::vector<std::uint8_t>& mask, int n) {
  double m = 0.0;
  for (std::size_t p = 0; p < mask.size(); ++p)
    if (mask[p]) m = std::max(m, std::sqrt(norm2(F[p], n)));
  return m;
}

}  // namespace

std::string to_string(ResidualKind k) {
  switch (k) {
    case ResidualKind::DivergenceOfRhoW: return "divergence";
    case ResidualKind::MinorSystemOfRhoW: return "minor";
    case ResidualKind::FrobeniusDefect: return "frobenius";
    case ResidualKind::ExactnessDefect: return "exactness";
    case ResidualKind::CodifferentialDefect: return "codifferential";
  }
  return "unknown";
}

double pairwise_sum(const std::vector<double>& v) { return pairwise(v.data(), v.size()); }

std::vector<std::uint8_t> solution_ok(const FieldSolution& s) {
  const int n = s.grid.dim;
  std::vector<std::uint8_t> ok(s.points.size(), 0);
  for (std::size_t p = 0; p < s.points.size(); ++p) {
    const PointRecord& r = s.points[p];
    bool good = !r.has(kSingularFlags) && r.w_defined() && std::isfinite(r.Q);
    for (int i = 0; i < n && good; ++i) good = std::isfinite(r.w[i]);
    ok[p] = good;
  }
  return ok;
}

std::vector<std::uint8_t> stencil_mask(const GridSpec& grid,
                                       const std::vector<std::uint8_t>& point_ok) {
  std::vector<std::uint8_t> mask(point_ok.size(), 0);
  for (std::size_t p = 0; p < point_ok.size(); ++p) {
    if (!point_ok[p]) continue;
    const auto m = grid.multi_index(p);
    bool good = true;
    for (int i = 0; i < grid.dim && good; ++i)
      good = m[i] > 0 && m[i] < grid.cells[i] && point_ok[p + grid.stride(i)] &&
             point_ok[p - grid.stride(i)];
    mask[p] = good;
  }
  return mask;
}

ResidualReport divergence_residual(const FieldSolution& s, const DensityModel& model) {
  const GridSpec& g = s.grid;
  auto ok = solution_ok(s);
  const auto F = rho_w(s, model, ok);
  const auto mask = stencil_mask(g, ok);
  std::vector<double> r(s.points.size(), 0.0);
  for (std::size_t p = 0; p < r.size(); ++p) {
    if (!mask[p]) continue;
    double div = 0.0;
    for (int i = 0; i < g.dim; ++i) div += central(g, F, p, i, i);
    r[p] = std::fabs(div);
  }
  return summarize(ResidualKind::DivergenceOfRhoW, g, mask, r, max_magnitude(F, mask, g.dim));
}

ResidualReport minor_residual(const FieldSolution& s, const DensityModel& model) {
  const GridSpec& g = s.grid;
  auto ok = solution_ok(s);
  const auto F = rho_w(s, model, ok);
  const auto mask = stencil_mask(g, ok);
  std::vector<double> r(s.points.size(), 0.0);
  for (std::size_t p = 0; p < r.size(); ++p) {
    if (!mask[p]) continue;
    double m = 0.0;
    for (int i = 0; i < g.dim; ++i)
      for (int j = i + 1; j < g.dim; ++j)
        m = std::max(m, std::fabs(central(g, F, p, i, j) - central(g, F, p, j, i)));
    r[p] = m;
  }
  return summarize(ResidualKind::MinorSystemOfRhoW, g, mask, r, max_magnitude(F, mask, g.dim));
}

ResidualReport frobenius_residual(const FieldSolution& s, const FrobeniusWitness& witness) {
  const GridSpec& g = s.grid;
  if (witness.G.size() != s.points.size())
    throw std::invalid_argument("frobenius_residual: witness grid differs from the solution grid");
  auto ok = solution_ok(s);
  for (std::size_t p = 0; p < ok.size(); ++p) ok[p] = ok[p] && witness.defined[p];
  const auto mask = stencil_mask(g, ok);
  std::vector<Vec> W(s.points.size());
  for (std::size_t p = 0; p < W.size(); ++p) W[p] = s.points[p].w;
  std::vector<double> r(s.points.size(), 0.0);
  for (std::size_t p = 0; p < r.size(); ++p) {
    if (!mask[p]) continue;
    const Vec& G = witness.G[p];
    const Vec& w = W[p];
    if (witness.system == WitnessSystem::Divergence) {
      double div = 0.0;
      for (int i = 0; i < g.dim; ++i) div += central(g, W, p, i, i);
      r[p] = std::fabs(div - dot(G, w, g.dim));
    } else {
      double m = 0.0;
      for (int i = 0; i < g.dim; ++i)
        for (int j = i + 1; j < g.dim; ++j)
          m = std::max(m, std::fabs((central(g, W, p, i, j) - central(g, W, p, j, i)) -
                                    (G[i] * w[j] - G[j] * w[i])));
      r[p] = m;
    }
  }
  return summarize(ResidualKind::FrobeniusDefect, g, mask, r, max_magnitude(W, mask, g.dim));
}

ResidualReport codifferential_residual(const FormSolution& s, const DensityModel& model) {
  const GridSpec& g = s.grid;
  const int n = g.dim, k = s.k;
  if (k < 1) throw std::invalid_argument("codifferential residual needs k >= 1");
  const auto idx_k = multi_indices(n, k);
  std::vector<std::uint8_t> ok(s.points.size(), 0);
  // star(rho omega), an (n-k)-form, stored per point.
  std::vector<FormValues> S(s.points.size());
  double scale = 0.0;
  for (std::size_t p = 0; p < s.points.size(); ++p) {
    const FormRecord& fr = s.points[p];
    const PointRecord& r = fr.record;
    if (r.has(kSingularFlags) || !r.w_defined() || !std::isfinite(r.Q)) continue;
    auto rho = model.rho(r.Q);
    if (!rho) continue;
    FormValues scaled = fr.omega;
    bool finite = true;
    for (MultiIndex I : idx_k) {
      scaled.c[I] *= *rho;
      finite = finite && std::isfinite(scaled.c[I]);
    }
    if (!finite) continue;
    ok[p] = 1;
    S[p] = hodge_star(scaled);
  }
  const auto mask = stencil_mask(g, ok);
  const int sign = codifferential_sign(n, k);
  std::vector<double> res(s.points.size(), 0.0);
  for (std::size_t p = 0; p < res.size(); ++p) {
    if (!mask[p]) continue;
    FormValues d{};
    d.n = n;
    d.k = n - k + 1;
    for (MultiIndex I : multi_indices(n, n - k))
      for (int i = 0; i < n; ++i)
        if (int sg = wedge_sign(i, I)) {
          const double D =
              (S[p + g.stride(i)].c[I] - S[p - g.stride(i)].c[I]) / (2.0 * g.spacing(i));
          d.c[I | (1u << i)] += sg * D;
        }
    const FormValues delta = hodge_star(d);
    double m = 0.0;
    for (MultiIndex J : multi_indices(n, k - 1)) m = std::max(m, std::fabs(sign * delta.c[J]));
    res[p] = m;
    scale = std::max(scale, std::sqrt(S[p].norm2()));
  }
  return summarize(ResidualKind::CodifferentialDefect, g, mask, res, scale);
}

double fit_order(const std::vector<std::pair<double, double>>& hs) {
  if (hs.size() < 2) throw std::invalid_argument("order fit needs at least two levels");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(hs.size());
  for (const auto& [h, e] : hs) {
    const double x = std::log(h), y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

ResidualReport convergence_study(int levels, const std::function<ResidualReport(int)>& level) {
  if (levels < 3) throw std::invalid_argument("convergence study needs at least 3 levels");
  ResidualReport last;
  std::vector<std::pair<double, double>> hs;
  bool all_roundoff = true, any_roundoff = false;
  for (int l = 0; l < levels; ++l) {
    last = level(l);
    hs.emplace_back(last.h, last.max_norm);
    const bool roundoff = last.max_norm < kRoundoff * std::max(1.0, last.scale);
    all_roundoff = all_roundoff && roundoff;
    any_roundoff = any_roundoff || roundoff;
  }
  last.convergence = hs;
  last.exact = all_roundoff;
  if (!any_roundoff) last.order = fit_order(hs);
  return last;
}

EnergyReport energy(const DensityModel& model, const FieldSolution& s, const Expression* region) {
  const GridSpec& g = s.grid;
  std::vector<double> terms;
  terms.reserve(s.points.size());
  std::size_t masked = 0;
  for (std::size_t p = 0; p < s.points.size(); ++p) {
    const PointRecord& r = s.points[p];
    const Vec x = g.point(p);
    if (region) {
      auto v = region->eval(std::span<const double>(x.data(), g.dim));
      if (!v || *v <= 0.0) continue;
    }
    if (r.has(kSingularFlags) || !std::isfinite(r.Q)) {
      ++masked;
      continue;
    }
    auto e = model.energy_density(r.Q);
    if (!e) throw DomainError("energy: Q outside the domain of " + model.name());
    const auto m = g.multi_index(p);
    double vol = 1.0;
    for (int i = 0; i < g.dim; ++i)
      vol *= g.spacing(i) * ((m[i] == 0 || m[i] == g.cells[i]) ? 0.5 : 1.0);
    terms.push_back(*e * vol);
  }
  EnergyReport out;
  out.energy = pairwise_sum(terms);
  out.used = terms.size();
  const double total = static_cast<double>(terms.size() + masked);
  out.masked_fraction = total > 0 ? static_cast<double>(masked) / total : 0.0;
  return out;
}

}  // namespace streamline
