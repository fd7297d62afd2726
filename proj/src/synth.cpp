#include "streamline/synth.hpp"

#include <cmath>

#include "streamline/parallel.hpp"

namespace streamline {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRhoFloor = 1e-12;

Vec nan_vec() {
  Vec v;
  v.fill(kNaN);
  return v;
}

std::vector<int> candidates(const DensityModel& model, const BranchPolicy& policy, const Vec& x,
                            int n, bool allow_nonphysical) {
  const auto& bs = model.branches();
  std::vector<int> out;
  auto admitted = [&](int id) {
    return id >= 0 && id < static_cast<int>(bs.size()) &&
           (allow_nonphysical || !bs[id].nonphysical);
  };
  switch (policy.mode) {
    case PolicyMode::PreferType1:
    case PolicyMode::PreferType2: {
      const Orientation first =
          policy.mode == PolicyMode::PreferType1 ? Orientation::Type1 : Orientation::Type2;
      for (bool nonphysical : {false, true})
        for (bool preferred : {true, false})
          for (const auto& b : bs)
            if (b.nonphysical == nonphysical && (b.orientation == first) == preferred &&
                admitted(b.id))
              out.push_back(b.id);
      break;
    }
    case PolicyMode::SingleBranch:
      if (admitted(policy.branch)) out.push_back(policy.branch);
      break;
    case PolicyMode::RegionMap: {
      int chosen = policy.branch;
      for (const auto& r : policy.regions) {
        auto v = r.predicate.eval(std::span<const double>(x.data(), n));
        if (v && *v > 0.0) {
          chosen = r.branch;
          break;
        }
      }
      if (admitted(chosen)) out.push_back(chosen);
      break;
    }
  }
  return out;
}

// Q-endpoint reached as xi tends to an open, finite image endpoint.
std::optional<double> limit_q(const PhiBranch& b, double xi) {
  const bool up = b.elliptic();
  std::optional<double> q;
  if (!b.image.lo_closed && xi == b.image.lo) q = up ? b.q_interval.lo : b.q_interval.hi;
  if (!b.image.hi_closed && xi == b.image.hi) q = up ? b.q_interval.hi : b.q_interval.lo;
  if (q && !std::isfinite(*q)) return std::nullopt;
  return q;
}

}  // namespace

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Elliptic: return "elliptic";
    case Regime::Hyperbolic: return "hyperbolic";
    case Regime::Sonic: return "sonic";
    case Regime::Undefined: return "undefined";
  }
  return "undefined";
}

Vec alternate_formula(const Vec& a, int n, double Q, double rho_sign) {
  Vec w{};
  const double len = std::sqrt(norm2(a, n));
  if (len == 0.0 || Q <= 0.0) return w;
  const double s = (rho_sign < 0.0 ? -1.0 : 1.0) * std::sqrt(Q) / len;
  for (int i = 0; i < n; ++i) w[i] = s * a[i];
  return w;
}

Scaling synthesize_scaling(const DensityModel& model, const BranchPolicy& policy, const Vec& x,
                           int n, double xi, const SynthOptions& opts) {
  Scaling out;
  PointRecord& rec = out.record;
  rec.w = nan_vec();
  rec.xi = xi;

  const PhiBranch* chosen = nullptr;
  bool sonic_limit = false;
  double q = kNaN;
  for (int id : candidates(model, policy, x, n, opts.allow_nonphysical)) {
    const PhiBranch& b = model.branch(id);
    if (b.image.contains(xi)) {
      try {
        q = model.invert(b, xi);
      } catch (const RangeError&) {
        continue;
      }
      chosen = &b;
      break;
    }
    if (auto lq = limit_q(b, xi)) {
      q = *lq;
      chosen = &b;
      sonic_limit = true;
      break;
    }
  }
  if (!chosen) {
    rec.flags |= OutsideOmegaF;
    return out;
  }

  rec.branch = chosen->id;
  rec.Q = q;
  rec.regime = sonic_limit ? Regime::Sonic
                           : (chosen->elliptic() ? Regime::Elliptic : Regime::Hyperbolic);
  if (sonic_limit) rec.flags |= GammaS;
  if (chosen->nonphysical) rec.flags |= NonphysicalRho;

  const auto dphi = model.phi_prime(q);
  if (!dphi || std::fabs(*dphi) < opts.tol.eps_phi_prime) rec.flags |= GammaS;

  const double len = std::sqrt(xi);
  auto alternate = [&](double rho_sign) {
    return len == 0.0 || q <= 0.0 ? 0.0 : (rho_sign < 0.0 ? -1.0 : 1.0) * std::sqrt(q) / len;
  };
  const auto rho = model.rho(q);
  const bool q_small = std::fabs(q) <= opts.tol.eps_rho;
  if (!rho) {
    rec.flags |= GammaInf;
    if (q_small)
      out.scale = alternate(1.0);
    else
      rec.regime = Regime::Undefined;
    return out;
  }
  if (*rho < 0.0) rec.flags |= NonphysicalRho;
  if (std::fabs(*rho) < opts.tol.eps_rho && q > opts.tol.eps_rho) {
    // phi' = rho (rho + 2 Q rho') vanishes with rho.
    rec.flags |= Gamma0 | GammaS;
    rec.regime = Regime::Undefined;
    return out;
  }
  out.scale = std::fabs(*rho) < kRhoFloor ? alternate(*rho) : 1.0 / *rho;
  return out;
}

PointRecord synthesize_vector(const DensityModel& model, const BranchPolicy& policy, const Vec& x,
                              const Vec& a, int n, const SynthOptions& opts) {
  Scaling s = synthesize_scaling(model, policy, x, n, norm2(a, n), opts);
  if (std::isfinite(s.scale)) {
    s.record.w = Vec{};
    for (int i = 0; i < n; ++i) s.record.w[i] = s.scale * a[i];
  }
  return s.record;
}

PointRecord synthesize_point(const DensityModel& model, const DriveField& d,
                             const BranchPolicy& policy, const Vec& x, const SynthOptions& opts) {
  auto s = d.at(x);
  if (!s) {
    PointRecord rec;
    rec.w = nan_vec();
    rec.flags = DriveUndefined;
    return rec;
  }
  PointRecord rec = synthesize_vector(model, policy, x, s->a, d.dim(), opts);
  if (d.has_potential() && std::sqrt(s->xi) < opts.tol.eps_grad &&
      std::fabs(s->laplacian_f) > opts.tol.eps_grad)
    rec.flags |= GammaG;
  return rec;
}

FieldSolution synthesize(const DensityModel& model, const DriveField& d, const BranchPolicy& policy,
                         const GridSpec& grid, const SynthOptions& opts) {
  grid.validate();
  if (grid.dim != d.dim()) throw std::invalid_argument("grid and drive dimensions differ");
  FieldSolution sol;
  sol.grid = grid;
  sol.points.resize(grid.point_count());
  parallel_for(sol.points.size(), opts.threads, [&](std::size_t p) {
    sol.points[p] = synthesize_point(model, d, policy, grid.point(p), opts);
  });
  return sol;
}

std::optional<Vec> normalized_field(const DriveField& d, const Vec& x) {
  auto s = d.at(x);
  if (!s || s->xi == 0.0) return std::nullopt;
  const double len = std::sqrt(s->xi);
  Vec u{};
  for (int i = 0; i < d.dim(); ++i) u[i] = s->a[i] / len;
  return u;
}

}  // namespace streamline
