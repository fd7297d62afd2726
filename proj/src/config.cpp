#include "streamline/config.hpp"

#include "streamline/builtin.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace streamline {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + path + "." + key + "'");
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return v.get<int>();
}

bool boolean(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path + ": expected true or false");
  return v.get<bool>();
}

std::string text(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected a string");
  return v.get<std::string>();
}

Vec vec(const json& v, int n, const std::string& path) {
  if (!v.is_array() || static_cast<int>(v.size()) != n)
    throw ConfigError(path + ": expected an array of " + std::to_string(n) + " numbers");
  Vec x{};
  for (int i = 0; i < n; ++i) x[i] = number(v[i], path + "[" + std::to_string(i) + "]");
  return x;
}

std::vector<std::string> param_names(const ParamMap& params) {
  std::vector<std::string> names;
  for (const auto& [k, v] : params) names.push_back(k);
  return names;
}

Expression expression(const json& v, int n, const ParamMap& params, const std::string& path) {
  const std::string s = text(v, path);
  try {
    return Expression::parse(s, DriveField::coordinate_names(n), param_names(params)).bind(params);
  } catch (const ParseError& e) {
    throw ConfigError(path + ": " + e.what() + " in \"" + s + "\"");
  }
}

GridSpec grid_from(const json& g, int n, const std::string& path) {
  check_keys(g, {"lo", "hi", "cells"}, path);
  if (!g.contains("lo") || !g.contains("hi") || !g.contains("cells"))
    throw ConfigError(path + ": lo, hi and cells are required");
  GridSpec spec;
  spec.dim = n;
  spec.lo = vec(g["lo"], n, path + ".lo");
  spec.hi = vec(g["hi"], n, path + ".hi");
  if (g["cells"].is_number_integer()) {
    for (int i = 0; i < n; ++i) spec.cells[i] = g["cells"].get<int>();
  } else {
    const Vec c = vec(g["cells"], n, path + ".cells");
    for (int i = 0; i < n; ++i) {
      if (c[i] != std::floor(c[i])) throw ConfigError(path + ".cells: expected integers");
      spec.cells[i] = static_cast<int>(c[i]);
    }
  }
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return spec;
}

DensityModel density_from(const json& d, SynthOptions& synth) {
  check_keys(d, {"kind", "tau", "expr", "allow_nonphysical", "q_max", "q_floor",
                 "samples_per_decade"},
             "density");
  if (!d.contains("kind")) throw ConfigError("density.kind is required");
  const std::string kind = text(d["kind"], "density.kind");
  if (d.contains("allow_nonphysical"))
    synth.allow_nonphysical = boolean(d["allow_nonphysical"], "density.allow_nonphysical");
  if (kind == "extremal") return DensityModel::extremal();
  if (kind == "born-infeld") return DensityModel::born_infeld();
  if (kind == "shallow-water") return DensityModel::shallow_water();
  if (kind == "caustic") {
    if (!d.contains("tau")) throw ConfigError("density.tau is required for the caustic model");
    const double tau = number(d["tau"], "density.tau");
    if (!(tau > 0.0)) throw ConfigError("density.tau must be positive");
    return DensityModel::caustic(tau);
  }
  if (kind == "custom") {
    if (!d.contains("expr")) throw ConfigError("density.expr is required for a custom model");
    CustomDensityOptions opts;
    if (d.contains("q_max")) opts.q_max = number(d["q_max"], "density.q_max");
    if (d.contains("q_floor")) opts.q_floor = number(d["q_floor"], "density.q_floor");
    if (d.contains("samples_per_decade"))
      opts.samples_per_decade = integer(d["samples_per_decade"], "density.samples_per_decade");
    const std::string s = text(d["expr"], "density.expr");
    try {
      return DensityModel::custom(Expression::parse(s, {"Q"}), opts);
    } catch (const ParseError& e) {
      throw ConfigError(std::string("density.expr: ") + e.what());
    } catch (const std::exception& e) {
      throw ConfigError(std::string("density: ") + e.what());
    }
  }
  throw ConfigError("density.kind: unknown model '" + kind + "'");
}

int drive_dim(const json& d) {
  if (d.contains("dim")) return integer(d["dim"], "drive.dim");
  const std::string kind = d.contains("kind") ? text(d["kind"], "drive.kind") : "";
  if (kind == "scalar2d") return 2;
  if (d.contains("builtin")) {
    const std::string b = text(d["builtin"], "drive.builtin");
    return b == "coulomb" ? 3 : 2;
  }
  if (d.contains("alpha") && d["alpha"].is_array()) return static_cast<int>(d["alpha"].size());
  if (d.contains("F") && d["F"].is_array()) return static_cast<int>(d["F"].size());
  throw ConfigError("drive.dim is required");
}

}  // namespace

RunConfig RunConfig::from_json(const json& j, const std::string& name) {
  RunConfig c;
  c.name = name;
  c.source = j;
  check_keys(j, {"name", "description", "density", "drive", "grid", "policy", "tol", "frobenius",
                 "forms", "verify", "output"},
             "config");
  if (j.contains("name")) c.name = text(j["name"], "name");
  if (j.contains("description")) text(j["description"], "description");

  if (j.contains("tol")) {
    const json& t = j["tol"];
    check_keys(t, {"eps_phi_prime", "eps_rho", "eps_grad"}, "tol");
    if (t.contains("eps_phi_prime")) c.synth.tol.eps_phi_prime = number(t["eps_phi_prime"], "tol.eps_phi_prime");
    if (t.contains("eps_rho")) c.synth.tol.eps_rho = number(t["eps_rho"], "tol.eps_rho");
    if (t.contains("eps_grad")) c.synth.tol.eps_grad = number(t["eps_grad"], "tol.eps_grad");
  }
  if (!j.contains("density")) throw ConfigError("density section is required");
  c.density = density_from(j["density"], c.synth);

  int n = 0;
  if (j.contains("drive")) {
    const json& d = j["drive"];
    check_keys(d, {"kind", "dim", "f", "F", "alpha", "closure", "params", "builtin"}, "drive");
    if (d.contains("params")) {
      if (!d["params"].is_object()) throw ConfigError("drive.params must be an object");
    }
    n = drive_dim(d);
    if (n < 2 || n > max_dim) throw ConfigError("drive.dim must be 2, 3 or 4");
  }
  if (j.contains("forms")) {
    const json& f = j["forms"];
    check_keys(f, {"n", "k", "raw", "gamma", "coeffs"}, "forms");
    FormsConfig fc;
    if (!f.contains("n") || !f.contains("k")) throw ConfigError("forms.n and forms.k are required");
    fc.n = integer(f["n"], "forms.n");
    fc.k = integer(f["k"], "forms.k");
    if (fc.n < 2 || fc.n > max_dim) throw ConfigError("forms.n must be 2, 3 or 4");
    if (fc.k < 1 || fc.k > fc.n - 1) throw ConfigError("forms.k must be in 1..n-1");
    if (f.contains("raw")) fc.raw = boolean(f["raw"], "forms.raw");
    if (f.contains("gamma")) fc.gamma = boolean(f["gamma"], "forms.gamma");
    if (!f.contains("coeffs") || !f["coeffs"].is_object())
      throw ConfigError("forms.coeffs must be an object keyed by multi-index");
    for (const auto& [key, value] : f["coeffs"].items())
      fc.coeffs[key] = text(value, "forms.coeffs." + key);
    if (n != 0 && n != fc.n) throw ConfigError("forms.n differs from the drive dimension");
    n = fc.n;
    c.forms = fc;
  }
  if (n == 0) throw ConfigError("a drive or forms section is required");

  // Parameters, scanned before any expression is parsed.
  if (j.contains("drive") && j["drive"].contains("params")) {
    for (const auto& [key, value] : j["drive"]["params"].items())
      c.params[key] = number(value, "drive.params." + key);
  }

  if (j.contains("drive")) {
    const json& d = j["drive"];
    const std::string path = "drive";
    try {
      if (d.contains("builtin")) {
        c.drive = builtin::by_name(text(d["builtin"], "drive.builtin"), c.params);
      } else {
        if (!d.contains("kind")) throw ConfigError("drive.kind is required");
        const std::string kind = text(d["kind"], "drive.kind");
        if (kind == "scalar2d") {
          if (!d.contains("f")) throw ConfigError("drive.f is required");
          c.drive = DriveField::scalar2d(expression(d["f"], 2, c.params, "drive.f"));
        } else if (kind == "gradient") {
          if (!d.contains("f")) throw ConfigError("drive.f is required");
          c.drive = DriveField::gradient(n, expression(d["f"], n, c.params, "drive.f"));
        } else if (kind == "skew") {
          if (!d.contains("F") || !d["F"].is_array() || static_cast<int>(d["F"].size()) != n)
            throw ConfigError("drive.F must be an n x n array of strings");
          std::vector<std::vector<Expression>> upper(n, std::vector<Expression>(n));
          for (int r = 0; r < n; ++r) {
            const json& row = d["F"][r];
            if (!row.is_array() || static_cast<int>(row.size()) != n)
              throw ConfigError("drive.F must be an n x n array of strings");
            for (int s = 0; s < n; ++s) {
              const std::string p = "drive.F[" + std::to_string(r) + "][" + std::to_string(s) + "]";
              const std::string v = text(row[s], p);
              if (s <= r) {
                if (!(v.empty() || v == "0"))
                  throw ConfigError(p + ": only entries above the diagonal are stored; use \"\"");
                continue;
              }
              if (!v.empty()) upper[r][s] = expression(row[s], n, c.params, p);
            }
          }
          c.drive = DriveField::skew_matrix(n, upper);
        } else if (kind == "raw") {
          if (!d.contains("alpha") || !d["alpha"].is_array() ||
              static_cast<int>(d["alpha"].size()) != n)
            throw ConfigError("drive.alpha must list n expressions");
          std::vector<Expression> alpha;
          for (int i = 0; i < n; ++i)
            alpha.push_back(
                expression(d["alpha"][i], n, c.params, "drive.alpha[" + std::to_string(i) + "]"));
          const std::string closure =
              d.contains("closure") ? text(d["closure"], "drive.closure") : "divergence-free";
          Closure cl;
          if (closure == "divergence-free")
            cl = Closure::DivergenceFree;
          else if (closure == "curl-free")
            cl = Closure::CurlFree;
          else
            throw ConfigError("drive.closure must be divergence-free or curl-free");
          if (!j.contains("grid")) throw ConfigError("a raw drive needs grid for validation");
          c.drive = DriveField::raw(n, alpha, cl, grid_from(j["grid"], n, "grid"));
        } else {
          throw ConfigError("drive.kind: unknown kind '" + kind + "'");
        }
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
    if (c.drive->dim() != n) throw ConfigError("drive.dim does not match the drive");
  }

  if (j.contains("grid")) c.grid = grid_from(j["grid"], n, "grid");

  if (j.contains("policy")) {
    const json& p = j["policy"];
    check_keys(p, {"mode", "branch", "regions", "default"}, "policy");
    const std::string mode = p.contains("mode") ? text(p["mode"], "policy.mode") : "prefer-type1";
    const int nb = static_cast<int>(c.density->branches().size());
    auto branch_id = [&](const json& v, const std::string& path) {
      const int b = integer(v, path);
      if (b < 0 || b >= nb)
        throw ConfigError(path + ": branch " + std::to_string(b) + " does not exist (model has " +
                          std::to_string(nb) + ")");
      return b;
    };
    if (mode == "prefer-type1") {
      c.policy = BranchPolicy::prefer_type1();
    } else if (mode == "prefer-type2") {
      c.policy = BranchPolicy::prefer_type2();
    } else if (mode == "single-branch") {
      if (!p.contains("branch")) throw ConfigError("policy.branch is required");
      c.policy = BranchPolicy::single(branch_id(p["branch"], "policy.branch"));
    } else if (mode == "region-map") {
      if (!p.contains("default")) throw ConfigError("policy.default is required for region-map");
      std::vector<Region> regions;
      if (p.contains("regions")) {
        if (!p["regions"].is_array()) throw ConfigError("policy.regions must be an array");
        for (std::size_t i = 0; i < p["regions"].size(); ++i) {
          const std::string path = "policy.regions[" + std::to_string(i) + "]";
          const json& r = p["regions"][i];
          check_keys(r, {"when", "branch"}, path);
          if (!r.contains("when") || !r.contains("branch"))
            throw ConfigError(path + ": when and branch are required");
          regions.push_back({expression(r["when"], n, c.params, path + ".when"),
                             branch_id(r["branch"], path + ".branch")});
        }
      }
      c.policy = BranchPolicy::region_map(std::move(regions), branch_id(p["default"], "policy.default"));
    } else {
      throw ConfigError("policy.mode: unknown mode '" + mode + "'");
    }
  }

  if (j.contains("frobenius")) {
    const json& f = j["frobenius"];
    check_keys(f, {"enabled", "anchor", "tol_conservative", "recover_eta", "reference_G",
                   "reference_tol"},
               "frobenius");
    if (f.contains("enabled")) c.frobenius.enabled = boolean(f["enabled"], "frobenius.enabled");
    if (f.contains("anchor")) c.frobenius.anchor = vec(f["anchor"], n, "frobenius.anchor");
    if (f.contains("tol_conservative"))
      c.frobenius.tol_conservative = number(f["tol_conservative"], "frobenius.tol_conservative");
    if (f.contains("recover_eta"))
      c.frobenius.recover_eta = boolean(f["recover_eta"], "frobenius.recover_eta");
    if (f.contains("reference_tol"))
      c.frobenius.reference_tol = number(f["reference_tol"], "frobenius.reference_tol");
    if (f.contains("reference_G")) {
      if (!f["reference_G"].is_array() || static_cast<int>(f["reference_G"].size()) != n)
        throw ConfigError("frobenius.reference_G must list n expressions");
      for (int i = 0; i < n; ++i)
        c.frobenius.reference_G.push_back(expression(
            f["reference_G"][i], n, c.params, "frobenius.reference_G[" + std::to_string(i) + "]"));
    }
  }

  if (j.contains("verify")) {
    const json& v = j["verify"];
    check_keys(v, {"residuals", "levels", "threshold", "grid", "grids", "reference",
                   "reference_tol", "energy", "energy_region"},
               "verify");
    if (v.contains("residuals")) {
      if (!v["residuals"].is_array()) throw ConfigError("verify.residuals must be an array");
      static const std::set<std::string> known = {"divergence", "minor", "frobenius",
                                                  "codifferential"};
      for (const auto& r : v["residuals"]) {
        const std::string s = text(r, "verify.residuals");
        if (!known.count(s)) throw ConfigError("verify.residuals: unknown residual '" + s + "'");
        c.verify.residuals.push_back(s);
      }
    }
    if (v.contains("levels")) c.verify.levels = integer(v["levels"], "verify.levels");
    if (v.contains("threshold")) c.verify.threshold = number(v["threshold"], "verify.threshold");
    if (v.contains("grid")) c.verify.grids.push_back(grid_from(v["grid"], n, "verify.grid"));
    if (v.contains("grids")) {
      if (!v["grids"].is_array()) throw ConfigError("verify.grids must be an array");
      for (std::size_t i = 0; i < v["grids"].size(); ++i)
        c.verify.grids.push_back(
            grid_from(v["grids"][i], n, "verify.grids[" + std::to_string(i) + "]"));
    }
    if (v.contains("reference")) {
      const json& r = v["reference"];
      const int m = c.forms ? static_cast<int>(multi_indices(n, c.forms->k).size()) : n;
      if (!r.is_array() || static_cast<int>(r.size()) != m)
        throw ConfigError("verify.reference must list " + std::to_string(m) + " expressions");
      for (int i = 0; i < m; ++i)
        c.verify.reference.push_back(
            expression(r[i], n, c.params, "verify.reference[" + std::to_string(i) + "]"));
    }
    if (v.contains("reference_tol"))
      c.verify.reference_tol = number(v["reference_tol"], "verify.reference_tol");
    if (v.contains("energy")) c.verify.energy = boolean(v["energy"], "verify.energy");
    if (v.contains("energy_region"))
      c.verify.energy_region = expression(v["energy_region"], n, c.params, "verify.energy_region");
  }

  if (j.contains("output")) {
    const json& o = j["output"];
    check_keys(o, {"dir", "csv", "json"}, "output");
    if (o.contains("dir")) c.output.dir = text(o["dir"], "output.dir");
    if (o.contains("csv")) c.output.csv = boolean(o["csv"], "output.csv");
    if (o.contains("json")) c.output.json = boolean(o["json"], "output.json");
  }

  if (c.forms) {
    try {
      (void)c.stream_form(c.grid ? *c.grid : GridSpec::box(n, Vec{}, Vec{1, 1, 1, 1}, 2));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string("forms: ") + e.what());
    }
  }
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j, path);
}

int RunConfig::dim() const {
  if (drive) return drive->dim();
  if (forms) return forms->n;
  return 0;
}

const DensityModel& RunConfig::model() const { return *density; }

const DriveField& RunConfig::require_drive() const {
  if (!drive) throw ConfigError("this command needs a drive section");
  return *drive;
}

const GridSpec& RunConfig::require_grid() const {
  if (!grid) throw ConfigError("this command needs a grid section");
  return *grid;
}

StreamForm RunConfig::stream_form(const GridSpec& box) const {
  if (!forms) throw ConfigError("this command needs a forms section");
  const int n = forms->n;
  const int degree = forms->raw ? n - forms->k : n - forms->k - 1;
  KForm f = KForm::make(n, degree, forms->coeffs, params);
  return forms->raw ? StreamForm::raw(f, box) : StreamForm::potential(f);
}

}  // namespace streamline
