#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "streamline/density.hpp"
#include "streamline/drive.hpp"
#include "streamline/grid.hpp"

namespace streamline {

// Bit order is part of the CSV format.
enum Flag : std::uint32_t {
  OutsideOmegaF = 1u << 0,
  Gamma0 = 1u << 1,
  GammaS = 1u << 2,
  GammaInf = 1u << 3,
  GammaG = 1u << 4,
  NonphysicalRho = 1u << 5,
  DriveUndefined = 1u << 6,
};

// Flags that exclude a point from residual stencils.
inline constexpr std::uint32_t kSingularFlags =
    OutsideOmegaF | Gamma0 | GammaS | GammaInf | GammaG | DriveUndefined;

enum class Regime { Elliptic, Hyperbolic, Sonic, Undefined };
std::string to_string(Regime r);

struct Tolerances {
  double eps_phi_prime = 1e-6;
  double eps_rho = 1e-6;
  double eps_grad = 1e-8;
};

enum class PolicyMode { PreferType1, PreferType2, RegionMap, SingleBranch };

struct Region {
  Expression predicate;  // over x1..xn; the region is predicate > 0
  int branch = 0;
};

struct BranchPolicy {
  PolicyMode mode = PolicyMode::PreferType1;
  int branch = 0;  // SingleBranch id, or the RegionMap default
  std::vector<Region> regions;

  static BranchPolicy prefer_type1() { return {}; }
  static BranchPolicy prefer_type2() { return {PolicyMode::PreferType2, 0, {}}; }
  static BranchPolicy single(int id) { return {PolicyMode::SingleBranch, id, {}}; }
  static BranchPolicy region_map(std::vector<Region> regions, int fallback) {
    return {PolicyMode::RegionMap, fallback, std::move(regions)};
  }
};

struct SynthOptions {
  bool allow_nonphysical = false;
  Tolerances tol;
  int threads = 1;
};

struct PointRecord {
  Vec w{};
  double Q = std::numeric_limits<double>::quiet_NaN();
  double xi = std::numeric_limits<double>::quiet_NaN();
  Regime regime = Regime::Undefined;
  int branch = -1;
  std::uint32_t flags = 0;

  bool has(std::uint32_t f) const { return (flags & f) != 0; }
  bool w_defined() const { return regime != Regime::Undefined; }
};

struct FieldSolution {
  GridSpec grid;
  std::vector<PointRecord> points;
};

// Branch selection and classification for |a|^2 = xi; the synthesized
// field is scale * a. scale is NaN where the field is undefined.
struct Scaling {
  PointRecord record;
  double scale = std::numeric_limits<double>::quiet_NaN();
};
Scaling synthesize_scaling(const DensityModel& model, const BranchPolicy& policy, const Vec& x,
                           int n, double xi, const SynthOptions& opts);

// Synthesis from a drive vector already evaluated at x. The region map is
// evaluated at x; GammaG and DriveUndefined are left to the caller.
PointRecord synthesize_vector(const DensityModel& model, const BranchPolicy& policy, const Vec& x,
                              const Vec& a, int n, const SynthOptions& opts);

PointRecord synthesize_point(const DensityModel& model, const DriveField& d,
                             const BranchPolicy& policy, const Vec& x, const SynthOptions& opts);

FieldSolution synthesize(const DensityModel& model, const DriveField& d, const BranchPolicy& policy,
                         const GridSpec& grid, const SynthOptions& opts);

// a/|a|; nullopt when a = 0.
std::optional<Vec> normalized_field(const DriveField& d, const Vec& x);

// sign(rho) * (a/|a|) * sqrt(Q); zero when a = 0.
Vec alternate_formula(const Vec& a, int n, double Q, double rho_sign);

}  // namespace streamline
