#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streamline/expr.hpp"
#include "streamline/grid.hpp"

namespace streamline {

enum class DriveKind { Scalar2D, SkewMatrix, GradientDrive, RawField };
enum class Closure { DivergenceFree, CurlFree };

struct DriveSample {
  int n = 0;
  Vec a{};
  double xi = 0.0;
  Mat jacobian{};  // jacobian[i][j] = d_i a_j
  double laplacian_f = 0.0;  // NaN unless the drive has a scalar potential
  Vec grad_xi{};
  double divergence = 0.0;
};


class DriveField {
 public:
  static std::vector<std::string> coordinate_names(int n);

  // Expressions are over coordinate_names(n); parameters are bound here.
  static DriveField scalar2d(const Expression& f, const ParamMap& params = {});
  // upper[i][j] for i < j holds f_ij; other entries are ignored.
  static DriveField skew_matrix(int n, const std::vector<std::vector<Expression>>& upper,
                                const ParamMap& params = {});
  static DriveField gradient(int n, const Expression& f, const ParamMap& params = {});
  // Validates the closure condition at 1000 points of the box; throws
  // std::invalid_argument when it fails by more than 1e-8.
  static DriveField raw(int n, const std::vector<Expression>& alpha, Closure closure,
                        const GridSpec& validation_box, const ParamMap& params = {});

  int dim() const { return n_; }
  DriveKind kind() const { return kind_; }
  Closure closure() const { return closure_; }
  bool has_potential() const {
    return kind_ == DriveKind::Scalar2D || kind_ == DriveKind::GradientDrive;
  }
  // Divergence-free drives feed the 1-form (curl) system, curl-free drives
  // the divergence system.
  bool divergence_free() const;

  std::optional<DriveSample> at(std::span<const double> x) const;
  std::optional<DriveSample> at(const Vec& x) const { return at(std::span<const double>(x.data(), n_)); }

  const std::vector<Expression>& expressions() const { return exprs_; }

 private:
  DriveKind kind_ = DriveKind::Scalar2D;
  Closure closure_ = Closure::DivergenceFree;
  int n_ = 2;
  std::vector<Expression> exprs_;  // potential, upper-triangle entries, or alpha
  std::vector<std::pair<int, int>> slots_;  // (i, j) index of each skew entry
};

struct XiRange {
  double min = 0.0;
  double max = 0.0;
  std::size_t defined = 0;
};

// Sampled range of xi over the grid. Throws DomainError if no point is defined.
XiRange range_sigma(const DriveField& d, const GridSpec& grid);

}  // namespace streamline
