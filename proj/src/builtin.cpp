#include "streamline/builtin.hpp"

#include <stdexcept>

namespace streamline::builtin {

std::string radial_log_expr() {
  return "((sqrt(x^2+y^2)-1)/abs(sqrt(x^2+y^2)-1))*log(abs(sqrt(x^2+y^2)-1))";
}

std::string shallow_vortex_expr() { return "((x^2+y^2) - (x^2+y^2)^2/(4*R))/(2*sqrt(R))"; }

std::string coulomb_expr() { return "1/sqrt(x^2+y^2+z^2)"; }

DriveField radial_log() {
  return DriveField::scalar2d(Expression::parse(radial_log_expr(), DriveField::coordinate_names(2)));
}

DriveField shallow_vortex(double R) {
  if (!(R > 0.0)) throw std::invalid_argument("shallow_vortex needs R > 0");
  return DriveField::scalar2d(
      Expression::parse(shallow_vortex_expr(), DriveField::coordinate_names(2), {"R"}),
      {{"R", R}});
}

DriveField coulomb() {
  return DriveField::gradient(3, Expression::parse(coulomb_expr(), DriveField::coordinate_names(3)));
}

DriveField radial_class(const std::string& g, const std::string& ftilde, const ParamMap& params) {
  std::vector<std::string> pnames;
  for (const auto& [k, v] : params) pnames.push_back(k);
  const auto inner = Expression::parse(g, DriveField::coordinate_names(2), pnames);
  const auto outer = Expression::parse(ftilde, {"t"}, pnames);
  return DriveField::scalar2d(outer.compose({inner}), params);
}

DriveField by_name(const std::string& name, const ParamMap& params) {
  if (name == "radial_log") return radial_log();
  if (name == "shallow_vortex") {
    auto it = params.find("R");
    return shallow_vortex(it == params.end() ? 1.0 : it->second);
  }
  if (name == "coulomb") return coulomb();
  throw std::invalid_argument("unknown built-in drive '" + name + "'");
}

}  // namespace streamline::builtin
