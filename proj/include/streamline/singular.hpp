#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "streamline/synth.hpp"

namespace streamline {

using Polyline = std::vector<std::array<double, 2>>;

struct SingularReport {
  GridSpec grid;
  Tolerances tol;
  FieldSolution solution;
  std::vector<std::uint8_t> omega_f_complement, gamma_0, gamma_s, gamma_inf, gamma_G;
  // phi'(Q) at each point; NaN where Q or phi' is undefined.
  std::vector<double> sonic_indicator;
  // phi' = rho (rho + 2 Q rho'): the second factor, and rho itself. Their
  // zero sets split the sonic set into type changes with rho != 0 and the
  // curves of gamma_0.
  std::vector<double> sonic_factor, rho_value;
  // Points whose xi lies in the images of more than one admitted branch.
  std::size_t multi_branch_points = 0;
  std::vector<Polyline> sonic_contour;   // zero set of sonic_factor, 2D only
  std::vector<Polyline> gamma0_contour;  // zero set of rho_value, 2D only
};

SingularReport classify(const DensityModel& model, const DriveField& d, const BranchPolicy& policy,
                        const GridSpec& grid, const SynthOptions& opts);

// Builds the report from an existing solution.
SingularReport classify(const DensityModel& model, const FieldSolution& solution,
                        const SynthOptions& opts);

// Zero level sets of sonic_factor and rho_value by marching squares. Throws
// std::invalid_argument unless the grid is two-dimensional.
std::vector<Polyline> sonic_contour(const SingularReport& report);
std::vector<Polyline> gamma0_contour(const SingularReport& report);
std::vector<Polyline> zero_contour(const GridSpec& grid, const std::vector<double>& values);

}  // namespace streamline
