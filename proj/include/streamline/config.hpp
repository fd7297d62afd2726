#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "streamline/forms.hpp"
#include "streamline/frobenius.hpp"
#include "streamline/singular.hpp"
#include "streamline/verify.hpp"

namespace streamline {

struct FrobeniusConfig {
  bool enabled = true;
  std::optional<Vec> anchor;
  double tol_conservative = 1e-6;
  bool recover_eta = false;
  // Expected G, compared modulo the gauge that leaves the system unchanged.
  std::vector<Expression> reference_G;
  double reference_tol = 1e-8;
};

struct FormsConfig {
  int n = 0;
  int k = 0;  // degree of the synthesized form
  bool raw = false;
  bool gamma = false;
  std::map<std::string, std::string> coeffs;
};

struct VerifyConfig {
  std::vector<std::string> residuals;
  int levels = 3;
  double threshold = inf;
  std::vector<GridSpec> grids;  // empty: use the main grid
  std::vector<Expression> reference;  // expected w components
  double reference_tol = 1e-12;
  bool energy = false;
  std::optional<Expression> energy_region;
};

struct OutputConfig {
  std::string dir = "out";
  bool csv = true;
  bool json = true;
};

// A schema-validated run description. Construction throws ConfigError.
struct RunConfig {
  std::string name;
  nlohmann::json source;

  std::optional<DensityModel> density;
  SynthOptions synth;
  std::optional<DriveField> drive;
  std::optional<GridSpec> grid;
  BranchPolicy policy;
  FrobeniusConfig frobenius;
  std::optional<FormsConfig> forms;
  VerifyConfig verify;
  OutputConfig output;
  ParamMap params;

  static RunConfig from_json(const nlohmann::json& j, const std::string& name = "config");
  static RunConfig from_file(const std::string& path);

  int dim() const;
  const DensityModel& model() const;
  const DriveField& require_drive() const;
  const GridSpec& require_grid() const;
  StreamForm stream_form(const GridSpec& box) const;
};

}  // namespace streamline
