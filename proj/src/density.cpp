#include "streamline/density.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

namespace streamline {

namespace {

constexpr double kFold = 2.0 / 3.0;
constexpr double kFoldImage = 8.0 / 27.0;

Interval make_interval(double lo, bool lo_closed, double hi, bool hi_closed) {
  return Interval{lo, hi, lo_closed, hi_closed};
}

PhiBranch make_branch(int id, std::string label, Interval q, Orientation o, Interval image,
                      InverseKind kind, int cubic = 0, bool nonphysical = false) {
  PhiBranch b;
  b.id = id;
  b.label = std::move(label);
  b.q_interval = q;
  b.orientation = o;
  b.image = image;
  b.inverse_kind = kind;
  b.cubic_index = cubic;
  b.nonphysical = nonphysical;
  return b;
}

std::string format(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

double shallow_cubic_root(int index, double xi) {
  // Q^3 - 4Q^2 + 4Q - 4xi = 0 with Q = u + 4/3 gives u^3 - (4/3)u + (16/27 - 4xi) = 0.
  if (xi <= kFoldImage) {
    const double c = std::clamp(27.0 * xi / 4.0 - 1.0, -1.0, 1.0);
    const double theta = std::acos(c);
    const int k = index == 3 ? 0 : (index == 2 ? 1 : 2);
    return 4.0 / 3.0 + (4.0 / 3.0) * std::cos(theta / 3.0 - 2.0 * std::numbers::pi * k / 3.0);
  }
  if (index != 3) throw RangeError("shallow-water branch " + std::to_string(index) +
                                   " has no root for xi=" + format(xi));
  const double q = 16.0 / 27.0 - 4.0 * xi;
  const double p3 = -4.0 / 9.0;
  const double disc = std::sqrt(q * q / 4.0 + p3 * p3 * p3);
  // -q/2 > 0 here; the second cube root follows from A*B = 4/9 without cancellation.
  const double a = std::cbrt(-q / 2.0 + disc);
  double root = 4.0 / 3.0 + a + (4.0 / 9.0) / a;
  for (int i = 0; i < 2; ++i) {
    const double r = 1.0 - root / 2.0;
    const double d = r * (1.0 - 1.5 * root);
    if (d == 0.0) break;
    root -= (root * r * r - xi) / d;
  }
  return root;
}

DensityModel DensityModel::extremal() {
  DensityModel m;
  m.kind_ = DensityKind::Extremal;
  m.name_ = "extremal";
  m.branches_ = {
      make_branch(0, "space-like", make_interval(0.0, true, 1.0, false), Orientation::Type1,
                  make_interval(0.0, true, inf, false), InverseKind::AnalyticExtremalSpace),
      make_branch(1, "time-like", make_interval(1.0, false, inf, false), Orientation::Type2,
                  make_interval(1.0, false, inf, false), InverseKind::AnalyticExtremalTime),
  };
  return m;
}

DensityModel DensityModel::born_infeld() {
  DensityModel m = extremal();
  m.kind_ = DensityKind::BornInfeld;
  m.name_ = "born-infeld";
  return m;
}

DensityModel DensityModel::shallow_water() {
  DensityModel m;
  m.kind_ = DensityKind::ShallowWater;
  m.name_ = "shallow-water";
  m.branches_ = {
      make_branch(0, "tranquil", make_interval(0.0, true, kFold, false), Orientation::Type1,
                  make_interval(0.0, true, kFoldImage, false), InverseKind::CubicShallow, 1),
      make_branch(1, "shooting", make_interval(kFold, false, 2.0, false), Orientation::Type2,
                  make_interval(0.0, false, kFoldImage, false), InverseKind::CubicShallow, 2),
      make_branch(2, "negative-depth", make_interval(2.0, false, inf, false), Orientation::Type1,
                  make_interval(0.0, false, inf, false), InverseKind::CubicShallow, 3, true),
  };
  return m;
}

DensityModel DensityModel::caustic(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("caustic model needs tau > 0");
  DensityModel m;
  m.kind_ = DensityKind::Caustic;
  m.name_ = "caustic";
  m.tau_ = tau;
  const double t2 = tau * tau;
  m.branches_ = {
      make_branch(0, "shadow", make_interval(t2, true, inf, false), Orientation::Type1,
                  make_interval(0.0, true, inf, false), InverseKind::AnalyticCausticShadow),
      make_branch(1, "illuminated", make_interval(0.0, false, t2, true), Orientation::Type2,
                  make_interval(0.0, true, t2, false), InverseKind::AnalyticCausticLight),
  };
  return m;
}

DensityModel DensityModel::custom(const Expression& rho, const CustomDensityOptions& options) {
  if (rho.variables().size() != 1) throw std::invalid_argument("custom density must depend on Q only");
  if (!rho.unbound().empty())
    throw std::invalid_argument("custom density has unbound parameter '" + rho.unbound().front() +
                                "'");
  DensityModel m;
  m.kind_ = DensityKind::Custom;
  m.name_ = "custom";
  m.rho_expr_ = rho;
  m.detect_branches(options);
  return m;
}

const PhiBranch& DensityModel::branch(int id) const {
  if (id < 0 || id >= static_cast<int>(branches_.size()))
    throw std::out_of_range("no branch " + std::to_string(id) + " in model " + name_);
  return branches_[id];
}

bool DensityModel::in_domain(double q) const {
  if (!(q >= 0.0) || !std::isfinite(q)) return false;
  switch (kind_) {
    case DensityKind::Extremal:
    case DensityKind::BornInfeld: return q != 1.0;
    case DensityKind::ShallowWater: return true;
    case DensityKind::Caustic: return q > 0.0;
    case DensityKind::Custom: return rho(q).has_value();
  }
  return false;
}

std::optional<double> DensityModel::rho(double q) const {
  if (!(q >= 0.0) || !std::isfinite(q)) return std::nullopt;
  switch (kind_) {
    case DensityKind::Extremal:
    case DensityKind::BornInfeld:
      if (q == 1.0) return std::nullopt;
      return 1.0 / std::sqrt(std::fabs(1.0 - q));
    case DensityKind::ShallowWater: return 1.0 - q / 2.0;
    case DensityKind::Caustic:
      if (q == 0.0) return std::nullopt;
      return std::sqrt(std::fabs(1.0 - tau_ * tau_ / q));
    case DensityKind::Custom: {
      const double x[1] = {q};
      return rho_expr_.eval(x);
    }
  }
  return std::nullopt;
}

std::optional<RhoJet> DensityModel::rho_jet(double q) const {
  auto r = rho(q);
  if (!r) return std::nullopt;
  RhoJet j;
  j.value = *r;
  switch (kind_) {
    case DensityKind::Extremal:
    case DensityKind::BornInfeld: {
      const double d = 1.0 - q;
      j.d1 = 0.5 * (d > 0.0 ? 1.0 : -1.0) / std::pow(std::fabs(d), 1.5);
      return j;
    }
    case DensityKind::ShallowWater: j.d1 = -0.5; return j;
    case DensityKind::Caustic: {
      const double t2 = tau_ * tau_;
      if (*r == 0.0) return std::nullopt;
      const double s = (1.0 - t2 / q) > 0.0 ? 1.0 : -1.0;
      j.d1 = s * t2 / (q * q) / (2.0 * *r);
      return j;
    }
    case DensityKind::Custom: {
      const double x[1] = {q};
      auto jet = rho_expr_.eval_jet2(x);
      if (!jet) return std::nullopt;
      j.d1 = jet->grad(0);
      return j;
    }
  }
  return std::nullopt;
}

double DensityModel::phi(double q) const {
  if (!in_domain(q)) throw DomainError("Q=" + format(q) + " is outside the domain of " + name_);
  switch (kind_) {
    case DensityKind::Extremal:
    case DensityKind::BornInfeld: return q / std::fabs(1.0 - q);
    case DensityKind::ShallowWater: {
      const double r = 1.0 - q / 2.0;
      return q * r * r;
    }
    case DensityKind::Caustic: return std::fabs(q - tau_ * tau_);
    case DensityKind::Custom: {
      const double r = *rho(q);
      return q * r * r;
    }
  }
  return 0.0;
}

std::optional<double> DensityModel::phi_prime(double q) const {
  if (!in_domain(q)) return std::nullopt;
  switch (kind_) {
    case DensityKind::Extremal:
    case DensityKind::BornInfeld: {
      const double d = 1.0 - q;
      return (d > 0.0 ? 1.0 : -1.0) / (d * d);
    }
    case DensityKind::ShallowWater: return (1.0 - q / 2.0) * (1.0 - 1.5 * q);
    case DensityKind::Caustic: {
      const double d = q - tau_ * tau_;
      if (d == 0.0) return std::nullopt;
      return d > 0.0 ? 1.0 : -1.0;
    }
    case DensityKind::Custom: {
      auto j = rho_jet(q);
      if (!j) return std::nullopt;
      const double v = j->value * (j->value + 2.0 * q * j->d1);
      if (!std::isfinite(v)) return std::nullopt;
      return v;
    }
  }
  return std::nullopt;
}

double DensityModel::invert(const PhiBranch& b, double xi) const {
  if (!b.image.contains(xi))
    throw RangeError("xi=" + format(xi) + " is outside the image of branch " + b.label);
  switch (b.inverse_kind) {
    case InverseKind::AnalyticExtremalSpace: return xi / (xi + 1.0);
    case InverseKind::AnalyticExtremalTime: return xi / (xi - 1.0);
    case InverseKind::AnalyticCausticShadow: return xi + tau_ * tau_;
    case InverseKind::AnalyticCausticLight: return tau_ * tau_ - xi;
    case InverseKind::CubicShallow: {
      if (xi == 0.0 && b.cubic_index == 1) return 0.0;
      return polish(b, shallow_cubic_root(b.cubic_index, xi), xi);
    }
    case InverseKind::Numeric: return invert_numeric(b, xi);
  }
  return 0.0;
}

// Newton steps on phi(q) = xi, kept only while they reduce the defect and
// stay inside the branch.
double DensityModel::polish(const PhiBranch& b, double q, double xi) const {
  if (!in_domain(q)) return q;
  double defect = std::fabs(phi(q) - xi);
  for (int it = 0; it < 4 && defect > 0.0; ++it) {
    auto d = phi_prime(q);
    if (!d || *d == 0.0) break;
    const double next = q - (phi(q) - xi) / *d;
    if (!b.q_interval.contains(next) || !in_domain(next)) break;
    const double nd = std::fabs(phi(next) - xi);
    if (nd >= defect) break;
    q = next;
    defect = nd;
  }
  return q;
}

double DensityModel::invert_numeric(const PhiBranch& b, double xi) const {
  const bool up = b.elliptic();
  if (xi == b.image.lo && b.image.lo_closed) return up ? b.q_interval.lo : b.q_interval.hi;
  if (xi == b.image.hi && b.image.hi_closed) return up ? b.q_interval.hi : b.q_interval.lo;
  double a = b.q_interval.lo;
  double c = b.q_interval.hi;
  // below(q): phi(q) lies on the low-q side of xi.
  auto below = [&](double q) { return up ? phi(q) < xi : phi(q) > xi; };
  if (!std::isfinite(c)) {
    c = std::max(2.0 * a, a + 1.0);
    int guard = 0;
    while (below(c)) {
      c *= 2.0;
      if (++guard > 2000 || !std::isfinite(c))
        throw RangeError("could not bracket xi=" + format(xi) + " on branch " + b.label);
    }
  }
  double m = 0.5 * (a + c);
  for (int it = 0; it < 400; ++it) {
    m = 0.5 * (a + c);
    if (m <= a || m >= c) break;
    if (below(m))
      a = m;
    else
      c = m;
  }
  return polish(b, m, xi);
}

void DensityModel::detect_branches(const CustomDensityOptions& options) {
  if (!(options.q_floor > 0.0) || !(options.q_max > options.q_floor) ||
      options.samples_per_decade < 1)
    throw std::invalid_argument("invalid custom density sampling options");

  auto state = [&](double q) -> int {
    auto d = phi_prime(q);
    if (!d || *d == 0.0) return 0;
    return *d > 0.0 ? 1 : -1;
  };

  std::vector<double> qs;
  qs.push_back(0.0);
  const double decades = std::log10(options.q_max / options.q_floor);
  const long count = static_cast<long>(std::ceil(decades * options.samples_per_decade));
  for (long i = 0; i <= count; ++i)
    qs.push_back(options.q_floor * std::pow(10.0, decades * static_cast<double>(i) / count));
  std::vector<int> st(qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i) st[i] = state(qs[i]);

  // Bisect between an inside sample and an outside sample; returns the
  // boundary estimate and the innermost point that still carries the sign.
  auto boundary = [&](double inside, double outside, int s) {
    for (int it = 0; it < 200; ++it) {
      const double m = 0.5 * (inside + outside);
      if (m == inside || m == outside) break;
      if (state(m) == s)
        inside = m;
      else
        outside = m;
    }
    return std::pair{outside, inside};
  };

  auto phi_limit_at_infinity = [&](double start) {
    double prev = phi(start);
    for (double e = std::ceil(std::log10(start)) + 10.0; e <= 300.0; e += 10.0) {
      const double q = std::pow(10.0, e);
      if (!in_domain(q)) break;
      const double v = phi(q);
      if (!std::isfinite(v) || std::fabs(v) > 1e15 || std::fabs(v) > 1.5 * std::fabs(prev) + 1.0)
        return inf;
      prev = v;
    }
    return prev;
  };

  std::size_t i = 0;
  while (i < qs.size()) {
    if (st[i] == 0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < qs.size() && st[j + 1] == st[i]) ++j;
    const int s = st[i];
    if (j > i) {
      Interval q;
      double phi_lo, phi_hi;
      bool lo_unbounded = false;
      if (i == 0) {
        q.lo = 0.0;
        q.lo_closed = true;
        phi_lo = phi(0.0);
      } else {
        auto [edge, in] = boundary(qs[i], qs[i - 1], s);
        q.lo = edge;
        phi_lo = phi(in);
        lo_unbounded = std::fabs(phi_lo) > 1e15;
      }
      if (j + 1 == qs.size()) {
        q.hi = inf;
        phi_hi = phi_limit_at_infinity(qs[j]);
      } else {
        auto [edge, in] = boundary(qs[j], qs[j + 1], s);
        q.hi = edge;
        phi_hi = phi(in);
        if (std::fabs(phi_hi) > 1e15) phi_hi = inf;
      }
      if (lo_unbounded) phi_lo = inf;
      PhiBranch b;
      b.id = static_cast<int>(branches_.size());
      b.label = "branch" + std::to_string(b.id);
      b.q_interval = q;
      b.orientation = s > 0 ? Orientation::Type1 : Orientation::Type2;
      b.inverse_kind = InverseKind::Numeric;
      const auto r = rho(q.lo_closed ? q.lo : 0.5 * (q.lo + std::min(q.hi, 2.0 * q.lo + 1.0)));
      b.nonphysical = r && *r < 0.0;
      if (s > 0)
        b.image = make_interval(phi_lo, q.lo_closed, phi_hi, false);
      else
        b.image = make_interval(phi_hi, false, phi_lo, q.lo_closed);
      branches_.push_back(b);
    }
    i = j + 1;
  }
  if (branches_.empty()) {
    std::size_t undefined = 0;
    for (int s : st) undefined += s == 0;
    throw DomainError("custom density: no sign-definite interval of phi' found among " +
                      std::to_string(qs.size()) + " samples on [0, " + format(options.q_max) +
                      "] (" + std::to_string(undefined) + " undefined or zero)");
  }
}

std::optional<double> DensityModel::energy_density(double q) const {
  if (!in_domain(q) && !(q == 0.0)) return std::nullopt;
  if (q == 0.0) return 0.0;
  switch (kind_) {
    case DensityKind::Extremal:
    case DensityKind::BornInfeld:
      if (q < 1.0) return 1.0 - std::sqrt(1.0 - q);
      return 1.0 + std::sqrt(q - 1.0);
    case DensityKind::ShallowWater: return 0.5 * (q - q * q / 4.0);
    case DensityKind::Caustic: {
      const double t2 = tau_ * tau_;
      double integral;
      if (q <= t2)
        integral = std::sqrt(q * (t2 - q)) + t2 * std::asin(std::min(1.0, std::sqrt(q) / tau_));
      else
        integral = t2 * std::numbers::pi / 2.0 + std::sqrt(q * (q - t2)) -
                   t2 * std::log((std::sqrt(q) + std::sqrt(q - t2)) / tau_);
      return 0.5 * integral;
    }
    case DensityKind::Custom: break;
  }

  // Adaptive Simpson on rho over [0, q].
  bool ok = true;
  auto f = [&](double s) {
    auto r = rho(s);
    if (!r) ok = false;
    return r.value_or(0.0);
  };
  std::function<double(double, double, double, double, double, double, int)> rec =
      [&](double a, double b, double fa, double fm, double fb, double whole, int depth) {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        const double flm = f(lm), frm = f(rm);
        const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        const double tol = 1e-10 * std::max(1.0, std::fabs(whole));
        if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
          return left + right + (left + right - whole) / 15.0;
        return rec(a, m, fa, flm, fm, left, depth - 1) + rec(m, b, fm, frm, fb, right, depth - 1);
      };
  const double fa = f(0.0), fm = f(0.5 * q), fb = f(q);
  const double whole = q / 6.0 * (fa + 4.0 * fm + fb);
  const double integral = rec(0.0, q, fa, fm, fb, whole, 40);
  if (!ok) return std::nullopt;
  return 0.5 * integral;
}

}  // namespace streamline
