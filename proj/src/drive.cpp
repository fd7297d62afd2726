#include "streamline/drive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace streamline {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Expression bound(const Expression& e, const ParamMap& params, int n) {
  if (e.variables() != DriveField::coordinate_names(n))
    throw std::invalid_argument("drive expression must be over x1..x" + std::to_string(n));
  Expression b = e.bind(params);
  if (auto u = b.unbound(); !u.empty())
    throw std::invalid_argument("drive expression has unbound parameter '" + u.front() + "'");
  return b;
}

void check_dim(int n) {
  if (n < 2 || n > max_dim) throw std::invalid_argument("drive dimension must be 2..4");
}

void finish(DriveSample& s, bool potential, double lap) {
  const int n = s.n;
  s.xi = 0.0;
  for (int j = 0; j < n; ++j) s.xi += s.a[j] * s.a[j];
  s.divergence = 0.0;
  for (int i = 0; i < n; ++i) {
    double g = 0.0;
    for (int j = 0; j < n; ++j) g += s.jacobian[i][j] * s.a[j];
    s.grad_xi[i] = 2.0 * g;
    s.divergence += s.jacobian[i][i];
  }
  s.laplacian_f = potential ? lap : kNaN;
}

}  // namespace

std::vector<std::string> DriveField::coordinate_names(int n) {
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

DriveField DriveField::scalar2d(const Expression& f, const ParamMap& params) {
  DriveField d;
  d.kind_ = DriveKind::Scalar2D;
  d.n_ = 2;
  d.exprs_ = {bound(f, params, 2)};
  return d;
}

DriveField DriveField::skew_matrix(int n, const std::vector<std::vector<Expression>>& upper,
                                   const ParamMap& params) {
  check_dim(n);
  DriveField d;
  d.kind_ = DriveKind::SkewMatrix;
  d.n_ = n;
  for (int i = 0; i < n && i < static_cast<int>(upper.size()); ++i)
    for (int j = i + 1; j < n && j < static_cast<int>(upper[i].size()); ++j) {
      if (upper[i][j].empty()) continue;
      d.exprs_.push_back(bound(upper[i][j], params, n));
      d.slots_.emplace_back(i, j);
    }
  return d;
}

DriveField DriveField::gradient(int n, const Expression& f, const ParamMap& params) {
  check_dim(n);
  DriveField d;
  d.kind_ = DriveKind::GradientDrive;
  d.n_ = n;
  d.closure_ = Closure::CurlFree;
  d.exprs_ = {bound(f, params, n)};
  return d;
}

DriveField DriveField::raw(int n, const std::vector<Expression>& alpha, Closure closure,
                           const GridSpec& box, const ParamMap& params) {
  check_dim(n);
  if (static_cast<int>(alpha.size()) != n)
    throw std::invalid_argument("raw drive needs " + std::to_string(n) + " components");
  DriveField d;
  d.kind_ = DriveKind::RawField;
  d.n_ = n;
  d.closure_ = closure;
  for (const auto& e : alpha) d.exprs_.push_back(bound(e, params, n));

  std::mt19937_64 rng(20240611);
  std::size_t checked = 0;
  for (int k = 0; k < 1000; ++k) {
    Vec x{};
    for (int i = 0; i < n; ++i)
      x[i] = std::uniform_real_distribution<double>(box.lo[i], box.hi[i])(rng);
    auto s = d.at(x);
    if (!s) continue;
    ++checked;
    double defect = 0.0;
    if (closure == Closure::DivergenceFree) {
      defect = std::fabs(s->divergence);
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          defect = std::max(defect, std::fabs(s->jacobian[i][j] - s->jacobian[j][i]));
    }
    if (defect > 1e-8) {
      std::ostringstream os;
      os.precision(17);
      os << "raw drive is not " << (closure == Closure::DivergenceFree ? "divergence" : "curl")
         << "-free: defect " << defect << " at (";
      for (int i = 0; i < n; ++i) os << (i ? "," : "") << x[i];
      os << ")";
      throw std::invalid_argument(os.str());
    }
  }
  if (checked == 0) throw std::invalid_argument("raw drive is undefined on the validation box");
  return d;
}

bool DriveField::divergence_free() const {
  switch (kind_) {
    case DriveKind::Scalar2D:
    case DriveKind::SkewMatrix: return true;
    case DriveKind::GradientDrive: return false;
    case DriveKind::RawField: return closure_ == Closure::DivergenceFree;
  }
  return true;
}

std::optional<DriveSample> DriveField::at(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_) throw std::invalid_argument("drive: point dimension mismatch");
  DriveSample s;
  s.n = n_;
  switch (kind_) {
    case DriveKind::Scalar2D: {
      auto f = exprs_[0].eval_jet2(x);
      if (!f) return std::nullopt;
      s.a = {-f->grad(1), f->grad(0)};
      for (int i = 0; i < 2; ++i) {
        s.jacobian[i][0] = -f->hess(i, 1);
        s.jacobian[i][1] = f->hess(i, 0);
      }
      finish(s, true, f->laplacian());
      return s;
    }
    case DriveKind::GradientDrive: {
      auto f = exprs_[0].eval_jet2(x);
      if (!f) return std::nullopt;
      for (int i = 0; i < n_; ++i) {
        s.a[i] = f->grad(i);
        for (int j = 0; j < n_; ++j) s.jacobian[i][j] = f->hess(i, j);
      }
      finish(s, true, f->laplacian());
      return s;
    }
    case DriveKind::SkewMatrix: {
      // a_i = sum_j d_j f_ij with f_ji = -f_ij.
      for (std::size_t e = 0; e < exprs_.size(); ++e) {
        auto f = exprs_[e].eval_jet2(x);
        if (!f) return std::nullopt;
        const auto [i, j] = slots_[e];
        s.a[i] += f->grad(j);
        s.a[j] -= f->grad(i);
        for (int k = 0; k < n_; ++k) {
          s.jacobian[k][i] += f->hess(k, j);
          s.jacobian[k][j] -= f->hess(k, i);
        }
      }
      finish(s, false, 0.0);
      return s;
    }
    case DriveKind::RawField: {
      for (int j = 0; j < n_; ++j) {
        auto f = exprs_[j].eval_jet2(x);
        if (!f) return std::nullopt;
        s.a[j] = f->value();
        for (int i = 0; i < n_; ++i) s.jacobian[i][j] = f->grad(i);
      }
      finish(s, false, 0.0);
      return s;
    }
  }
  return std::nullopt;
}

XiRange range_sigma(const DriveField& d, const GridSpec& grid) {
  XiRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0};
  const std::size_t count = grid.point_count();
  for (std::size_t p = 0; p < count; ++p) {
    const Vec x = grid.point(p);
    auto s = d.at(x);
    if (!s) continue;
    r.min = std::min(r.min, s->xi);
    r.max = std::max(r.max, s->xi);
    ++r.defined;
  }
  if (r.defined == 0) throw DomainError("drive is undefined at every grid point");
  return r;
}

}  // namespace streamline
