#pragma once

#include <string>

#include "streamline/drive.hpp"

namespace streamline::builtin {

// f = sign(r-1) log|r-1| with r = sqrt(x^2+y^2); |grad f| = 1/|r-1|.
DriveField radial_log();
// f = (t - t^2/(4R)) / (2 sqrt(R)) with t = x^2+y^2.
DriveField shallow_vortex(double R);
// Gradient drive f = 1/r in three dimensions.
DriveField coulomb();
// f = ftilde(g(x, y)); g over (x, y), ftilde over the single variable t.
DriveField radial_class(const std::string& g, const std::string& ftilde, const ParamMap& params = {});

std::string radial_log_expr();
std::string shallow_vortex_expr();  // uses parameter R
std::string coulomb_expr();

// Looks a built-in drive up by name; params supply R for shallow_vortex.
DriveField by_name(const std::string& name, const ParamMap& params);

}  // namespace streamline::builtin
