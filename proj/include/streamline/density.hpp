#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "streamline/expr.hpp"

namespace streamline {

inline constexpr double inf = std::numeric_limits<double>::infinity();

enum class DensityKind { Extremal, BornInfeld, ShallowWater, Caustic, Custom };
enum class Orientation { Type1, Type2 };
enum class InverseKind {
  AnalyticExtremalSpace,
  AnalyticExtremalTime,
  AnalyticCausticShadow,
  AnalyticCausticLight,
  CubicShallow,
  Numeric
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_closed = false;
  bool hi_closed = false;

  bool contains(double x) const {
    return (x > lo || (lo_closed && x == lo)) && (x < hi || (hi_closed && x == hi));
  }
  bool interior(double x) const { return x > lo && x < hi; }
};

struct PhiBranch {
  int id = 0;
  std::string label;
  Interval q_interval;
  Orientation orientation = Orientation::Type1;
  Interval image;
  InverseKind inverse_kind = InverseKind::Numeric;
  int cubic_index = 0;  // 1..3 for the shallow-water cubic
  bool nonphysical = false;

  bool elliptic() const { return orientation == Orientation::Type1; }
};

struct CustomDensityOptions {
  double q_floor = 1e-8;  // smallest positive sample
  double q_max = 1e6;     // last sample; the final branch extends to infinity
  int samples_per_decade = 4096;
};

// rho and its first derivative at Q.
struct RhoJet {
  double value = 0.0;
  double d1 = 0.0;
};

class DensityModel {
 public:
  static DensityModel extremal();
  static DensityModel born_infeld();
  static DensityModel shallow_water();
  static DensityModel caustic(double tau);
  // rho is an expression over the single variable "Q" with parameters bound.
  static DensityModel custom(const Expression& rho, const CustomDensityOptions& options = {});

  DensityKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double tau() const { return tau_; }

  bool in_domain(double q) const;
  std::optional<double> rho(double q) const;
  std::optional<RhoJet> rho_jet(double q) const;
  // Throws DomainError when q is outside the Q-domain.
  double phi(double q) const;
  std::optional<double> phi_prime(double q) const;

  const std::vector<PhiBranch>& branches() const { return branches_; }
  const PhiBranch& branch(int id) const;

  // psi on the branch. Throws RangeError when xi is outside the branch image.
  double invert(const PhiBranch& b, double xi) const;

  // e(Q) = 1/2 * integral of rho from 0 to Q.
  std::optional<double> energy_density(double q) const;

 private:
  DensityModel() = default;
  void detect_branches(const CustomDensityOptions& options);
  double invert_numeric(const PhiBranch& b, double xi) const;
  double polish(const PhiBranch& b, double q, double xi) const;

  DensityKind kind_ = DensityKind::Custom;
  std::string name_;
  double tau_ = 0.0;
  Expression rho_expr_;
  std::vector<PhiBranch> branches_;
};

// The shallow-water cubic: root of Q(1 - Q/2)^2 = xi on branch index 1..3.
double shallow_cubic_root(int index, double xi);

}  // namespace streamline
