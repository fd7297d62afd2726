#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "streamline/forms.hpp"
#include "streamline/frobenius.hpp"

namespace streamline {

enum class ResidualKind {
  DivergenceOfRhoW,
  MinorSystemOfRhoW,
  FrobeniusDefect,
  ExactnessDefect,
  CodifferentialDefect
};
std::string to_string(ResidualKind k);

struct ResidualReport {
  ResidualKind kind = ResidualKind::DivergenceOfRhoW;
  double h = 0.0;
  double max_norm = 0.0;
  double l2_norm = 0.0;  // root mean square over evaluated points
  double masked_fraction = 0.0;
  std::size_t evaluated = 0;
  double scale = 0.0;  // max |rho w| (or |w|) over evaluated points
  std::vector<std::pair<double, double>> convergence;  // (h, max_norm)
  std::optional<double> order;
  // Every level sits at round-off (max_norm < 1e-10 * scale): the scheme is
  // exact for this field and no order can be fitted.
  bool exact = false;
};

// usable[p]: p and its 2n neighbours are interior, unflagged and defined.
std::vector<std::uint8_t> stencil_mask(const GridSpec& grid,
                                       const std::vector<std::uint8_t>& point_ok);
std::vector<std::uint8_t> solution_ok(const FieldSolution& s);

ResidualReport divergence_residual(const FieldSolution& s, const DensityModel& model);
ResidualReport minor_residual(const FieldSolution& s, const DensityModel& model);
ResidualReport frobenius_residual(const FieldSolution& s, const FrobeniusWitness& witness);
ResidualReport codifferential_residual(const FormSolution& s, const DensityModel& model);

// Least-squares slope of log(max_norm) against log(h).
double fit_order(const std::vector<std::pair<double, double>>& hs);

// Runs level(0..levels-1) and fills convergence/order on the finest report.
ResidualReport convergence_study(int levels, const std::function<ResidualReport(int)>& level);

struct EnergyReport {
  double energy = 0.0;
  std::size_t used = 0;
  double masked_fraction = 0.0;
};

// Sum over unflagged nodes of e(Q) times the node's dual-cell volume
// (midpoint rule on the dual cells clipped to the box). When region is
// given only nodes with region > 0 count. Throws DomainError when an
// unflagged node has Q outside the model's domain.
EnergyReport energy(const DensityModel& model, const FieldSolution& s,
                    const Expression* region = nullptr);

double pairwise_sum(const std::vector<double>& v);

}  // namespace streamline
