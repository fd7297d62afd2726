#include "streamline/forms.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>

#include "streamline/parallel.hpp"

namespace streamline {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MultiIndex full_mask(int n) { return (1u << n) - 1u; }

std::vector<std::string> coords(int n) {
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

FormValues zero_form(int n, int k) {
  FormValues f;
  f.n = n;
  f.k = k;
  return f;
}

FormValues nan_form(int n, int k) {
  FormValues f = zero_form(n, k);
  for (MultiIndex I : multi_indices(n, k)) f.c[I] = kNaN;
  return f;
}

}  // namespace

std::vector<MultiIndex> multi_indices(int n, int k) {
  std::vector<MultiIndex> out;
  for (MultiIndex I = 0; I <= full_mask(n); ++I)
    if (std::popcount(I) == k) out.push_back(I);
  std::sort(out.begin(), out.end(),
            [](MultiIndex a, MultiIndex b) { return index_name(a) < index_name(b); });
  return out;
}

std::string index_name(MultiIndex I) {
  if (I == 0) return "0";
  std::string s;
  for (int i = 0; i < max_dim; ++i)
    if (I & (1u << i)) s += static_cast<char>('1' + i);
  return s;
}

MultiIndex parse_index(const std::string& name, int n) {
  if (name == "0") return 0;
  MultiIndex I = 0;
  int last = 0;
  for (char ch : name) {
    const int i = ch - '0';
    if (i < 1 || i > n || i <= last)
      throw std::invalid_argument("invalid multi-index '" + name + "' for dimension " +
                                  std::to_string(n));
    I |= 1u << (i - 1);
    last = i;
  }
  if (name.empty()) throw std::invalid_argument("empty multi-index");
  return I;
}

int degree(MultiIndex I) { return std::popcount(I); }

int wedge_sign(int i, MultiIndex I) {
  if (I & (1u << i)) return 0;
  return std::popcount(I & ((1u << i) - 1u)) % 2 ? -1 : 1;
}

int star_sign(MultiIndex I, int n) {
  const MultiIndex C = full_mask(n) & ~I;
  int inversions = 0;
  for (int a = 0; a < n; ++a)
    if (I & (1u << a)) inversions += std::popcount(C & ((1u << a) - 1u));
  return inversions % 2 ? -1 : 1;
}

double FormValues::norm2() const {
  double s = 0.0;
  for (MultiIndex I : multi_indices(n, k)) s += c[I] * c[I];
  return s;
}

FormValues hodge_star(const FormValues& w) {
  FormValues r = zero_form(w.n, w.n - w.k);
  for (MultiIndex I : multi_indices(w.n, w.k))
    r.c[full_mask(w.n) & ~I] = star_sign(I, w.n) * w.c[I];
  return r;
}

FormValues wedge_1form(const Vec& g, const FormValues& w) {
  FormValues r = zero_form(w.n, w.k + 1);
  if (w.k >= w.n) return r;
  for (MultiIndex I : multi_indices(w.n, w.k))
    for (int i = 0; i < w.n; ++i)
      if (int s = wedge_sign(i, I)) r.c[I | (1u << i)] += s * g[i] * w.c[I];
  return r;
}

KForm KForm::make(int n, int k, const std::map<std::string, std::string>& coeffs,
                  const ParamMap& params) {
  if (n < 1 || n > max_dim || k < 0 || k > n)
    throw std::invalid_argument("form degree/dimension out of range");
  std::vector<std::string> pnames;
  for (const auto& [name, v] : params) pnames.push_back(name);
  KForm f;
  f.n = n;
  f.k = k;
  for (const auto& [name, text] : coeffs) {
    const MultiIndex I = parse_index(name, n);
    if (degree(I) != k)
      throw std::invalid_argument("multi-index '" + name + "' has the wrong degree");
    Expression e = Expression::parse(text, coords(n), pnames).bind(params);
    f.coeffs[I] = e;
  }
  return f;
}

std::optional<FormValues> KForm::at(const Vec& x) const {
  FormValues v = zero_form(n, k);
  for (const auto& [I, e] : coeffs) {
    auto c = e.eval(std::span<const double>(x.data(), n));
    if (!c) return std::nullopt;
    v.c[I] = *c;
  }
  return v;
}

std::optional<FormValues> exterior_d(const KForm& f, const Vec& x) {
  FormValues r = zero_form(f.n, f.k + 1);
  if (f.k >= f.n) return r;
  for (const auto& [I, e] : f.coeffs) {
    auto j = e.eval_jet2(std::span<const double>(x.data(), f.n));
    if (!j) return std::nullopt;
    for (int i = 0; i < f.n; ++i)
      if (int s = wedge_sign(i, I)) r.c[I | (1u << i)] += s * j->grad(i);
  }
  return r;
}

StreamForm StreamForm::potential(const KForm& f) {
  if (f.k >= f.n) throw std::invalid_argument("stream form degree must be below n");
  StreamForm s;
  s.form_ = f;
  s.potential_ = true;
  return s;
}

StreamForm StreamForm::raw(const KForm& alpha, const GridSpec& box) {
  if (alpha.k < 1) throw std::invalid_argument("raw stream form must have degree >= 1");
  std::mt19937_64 rng(20240611);
  std::size_t checked = 0;
  for (int t = 0; t < 1000; ++t) {
    Vec x{};
    for (int i = 0; i < alpha.n; ++i)
      x[i] = std::uniform_real_distribution<double>(box.lo[i], box.hi[i])(rng);
    auto d = exterior_d(alpha, x);
    if (!d) continue;
    ++checked;
    for (MultiIndex I : multi_indices(alpha.n, alpha.k + 1))
      if (std::fabs(d->c[I]) > 1e-8) {
        std::ostringstream os;
        os.precision(17);
        os << "raw stream form is not closed: (d alpha)_" << index_name(I) << " = " << d->c[I];
        throw std::invalid_argument(os.str());
      }
  }
  if (checked == 0) throw std::invalid_argument("raw stream form is undefined on the box");
  StreamForm s;
  s.form_ = alpha;
  s.potential_ = false;
  return s;
}

int StreamForm::k() const { return potential_ ? form_.n - form_.k - 1 : form_.n - form_.k; }

std::optional<FormJet> StreamForm::beta(const Vec& x) const {
  const int n = form_.n;
  const int q = potential_ ? form_.k + 1 : form_.k;  // degree of df or alpha
  FormJet src;
  src.value = zero_form(n, q);
  for (const auto& [I, e] : form_.coeffs) {
    auto j = e.eval_jet2(std::span<const double>(x.data(), n));
    if (!j) return std::nullopt;
    if (potential_) {
      for (int i = 0; i < n; ++i) {
        const int s = wedge_sign(i, I);
        if (!s) continue;
        const MultiIndex K = I | (1u << i);
        src.value.c[K] += s * j->grad(i);
        for (int m = 0; m < n; ++m) src.grad[K][m] += s * j->hess(m, i);
      }
    } else {
      src.value.c[I] = j->value();
      for (int m = 0; m < n; ++m) src.grad[I][m] = j->grad(m);
    }
  }
  FormJet out;
  out.value = zero_form(n, n - q);
  for (MultiIndex I : multi_indices(n, q)) {
    const MultiIndex C = full_mask(n) & ~I;
    const int s = star_sign(I, n);
    out.value.c[C] = s * src.value.c[I];
    for (int m = 0; m < n; ++m) out.grad[C][m] = s * src.grad[I][m];
  }
  return out;
}

FormRecord synthesize_form(const DensityModel& model, const StreamForm& f,
                           const BranchPolicy& policy, const Vec& x, const SynthOptions& opts) {
  FormRecord r;
  const int n = f.n(), k = f.k();
  r.omega = nan_form(n, k);
  auto jet = f.beta(x);
  if (!jet) {
    r.record.w.fill(kNaN);
    r.record.flags = DriveUndefined;
    return r;
  }
  Scaling s = synthesize_scaling(model, policy, x, n, jet->value.norm2(), opts);
  r.record = s.record;
  if (std::isfinite(s.scale))
    for (MultiIndex I : multi_indices(n, k)) r.omega.c[I] = s.scale * jet->value.c[I];
  return r;
}

FormSolution synthesize_forms(const DensityModel& model, const StreamForm& f,
                              const BranchPolicy& policy, const GridSpec& grid,
                              const SynthOptions& opts) {
  grid.validate();
  if (grid.dim != f.n()) throw std::invalid_argument("grid and form dimensions differ");
  FormSolution sol;
  sol.grid = grid;
  sol.k = f.k();
  sol.points.resize(grid.point_count());
  parallel_for(sol.points.size(), opts.threads, [&](std::size_t p) {
    sol.points[p] = synthesize_form(model, f, policy, grid.point(p), opts);
  });
  return sol;
}

GammaWitness gamma_witness(const DensityModel& model, const StreamForm& f, const FormRecord& rec,
                           const Vec& x, const Tolerances& tol) {
  GammaWitness gw;
  const int n = f.n(), k = f.k();
  const PointRecord& pr = rec.record;
  if (pr.regime != Regime::Elliptic && pr.regime != Regime::Hyperbolic) return gw;
  if (pr.has(Gamma0 | GammaInf | OutsideOmegaF | DriveUndefined)) return gw;
  auto jet = f.beta(x);
  if (!jet || std::sqrt(jet->value.norm2()) <= tol.eps_grad) return gw;
  const auto rj = model.rho_jet(pr.Q);
  const auto dphi = model.phi_prime(pr.Q);
  if (!rj || !dphi || rj->value == 0.0 || *dphi == 0.0) return gw;

  const FormValues& beta = jet->value;
  FormValues dbeta = zero_form(n, k + 1);
  if (k < n)
    for (MultiIndex J : multi_indices(n, k))
      for (int i = 0; i < n; ++i)
        if (int s = wedge_sign(i, J)) dbeta.c[J | (1u << i)] += s * jet->grad[J][i];

  const auto rows = k < n ? multi_indices(n, k + 1) : std::vector<MultiIndex>{};
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), n);
  Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
  std::array<int, 16> row_of{};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    row_of[rows[r]] = static_cast<int>(r);
    b[static_cast<Eigen::Index>(r)] = dbeta.c[rows[r]];
  }
  for (MultiIndex J : multi_indices(n, k))
    for (int i = 0; i < n; ++i)
      if (int s = wedge_sign(i, J)) A(row_of[J | (1u << i)], i) += s * beta.c[J];

  Vec g1{};
  if (!rows.empty()) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    cod.setThreshold(1e-12);
    const Eigen::VectorXd sol = cod.solve(b);
    for (int i = 0; i < n; ++i) g1[i] = sol[i];
    gw.rank_deficient = cod.rank() < std::min<Eigen::Index>(n - k, A.rows());
    gw.defect = (A * sol - b).cwiseAbs().maxCoeff();
  } else {
    gw.defect = 0.0;
  }

  Vec grad_xi{};
  for (MultiIndex J : multi_indices(n, k))
    for (int m = 0; m < n; ++m) grad_xi[m] += 2.0 * beta.c[J] * jet->grad[J][m];
  const double rho = rj->value;
  Vec grad_rho{};
  for (int m = 0; m < n; ++m) grad_rho[m] = rj->d1 / *dphi * grad_xi[m];
  for (int m = 0; m < n; ++m) {
    gw.gamma1[m] = g1[m];
    gw.gamma[m] = g1[m] - grad_rho[m] / rho;
  }

  // d omega against Gamma ^ omega with omega = beta / rho.
  FormValues omega = zero_form(n, k), domega = zero_form(n, k + 1);
  for (MultiIndex J : multi_indices(n, k)) {
    omega.c[J] = beta.c[J] / rho;
    if (k < n)
      for (int i = 0; i < n; ++i)
        if (int s = wedge_sign(i, J))
          domega.c[J | (1u << i)] +=
              s * (jet->grad[J][i] / rho - beta.c[J] * grad_rho[i] / (rho * rho));
  }
  const FormValues rhs = wedge_1form(gw.gamma, omega);
  double res = 0.0;
  for (MultiIndex K : rows) res = std::max(res, std::fabs(domega.c[K] - rhs.c[K]));
  gw.defining_residual = res;
  gw.defined = true;
  return gw;
}

int codifferential_sign(int n, int k) { return (n * (k + 1) + 1) % 2 ? -1 : 1; }

}  // namespace streamline
