#include "streamline/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "streamline/config.hpp"
#include "streamline/examples.hpp"

namespace streamline {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  std::string config;
  std::string example;
  std::string out;
  int levels = 0;
  int threads = 0;
};

// Failure with a specific exit code.
struct Exit : std::runtime_error {
  int code;
  Exit(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

json number_json(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw Exit(ExitFailure, "cannot write " + path.string());
  return f;
}

void write_json(const fs::path& path, const json& j) {
  auto f = open_output(path);
  f << j.dump(2) << "\n";
}

std::string coordinate_header(int n, const std::string& prefix) {
  std::string s;
  for (int i = 0; i < n; ++i) s += (i ? "," : "") + prefix + std::to_string(i + 1);
  return s;
}

void write_coordinates(std::ostream& f, const Vec& x, int n) {
  for (int i = 0; i < n; ++i) f << (i ? "," : "") << format_number(x[i]);
}

std::string describe(const Interval& iv) {
  return std::string(iv.lo_closed ? "[" : "(") + format_number(iv.lo) + ", " +
         format_number(iv.hi) + (iv.hi_closed ? "]" : ")");
}

json report_json(const ResidualReport& r) {
  json conv = json::array();
  for (const auto& [h, m] : r.convergence) conv.push_back({number_json(h), number_json(m)});
  return {{"kind", to_string(r.kind)},
          {"h", number_json(r.h)},
          {"max_norm", number_json(r.max_norm)},
          {"l2_norm", number_json(r.l2_norm)},
          {"masked_fraction", number_json(r.masked_fraction)},
          {"evaluated", r.evaluated},
          {"scale", number_json(r.scale)},
          {"order", r.order ? number_json(*r.order) : json(nullptr)},
          {"exact", r.exact},
          {"convergence", conv}};
}

class Runner {
 public:
  Runner(RunConfig cfg, const Options& opt, std::ostream& out)
      : cfg_(std::move(cfg)), out_(out) {
    if (opt.threads > 0) cfg_.synth.threads = opt.threads;
    if (opt.levels > 0) cfg_.verify.levels = opt.levels;
    dir_ = opt.out.empty() ? fs::path(cfg_.output.dir) : fs::path(opt.out);
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Exit(ExitFailure, "cannot create output directory " + dir_.string());
  }

  int synth() {
    if (cfg_.forms && !cfg_.drive) return forms();
    const auto& grid = cfg_.require_grid();
    FieldSolution s = synthesize(cfg_.model(), cfg_.require_drive(), cfg_.policy, grid, cfg_.synth);
    std::size_t defined = 0;
    for (const auto& p : s.points) defined += p.w_defined();
    if (cfg_.output.csv) write_field(s, dir_ / "field.csv");
    json summary = {{"name", cfg_.name},
                    {"command", "synth"},
                    {"points", s.points.size()},
                    {"defined", defined},
                    {"h", grid.max_spacing()}};
    if (cfg_.output.json) write_json(dir_ / "report.json", summary);
    if (defined == 0) throw Exit(ExitEmpty, empty_message());
    out_ << "synth: " << defined << "/" << s.points.size() << " points defined\n";
    return ExitOk;
  }

  int singular() {
    const auto& grid = cfg_.require_grid();
    SingularReport r = classify(cfg_.model(), cfg_.require_drive(), cfg_.policy, grid, cfg_.synth);
    const int n = grid.dim;
    std::size_t counts[5] = {0, 0, 0, 0, 0};
    if (cfg_.output.csv) {
      auto f = open_output(dir_ / "masks.csv");
      f << coordinate_header(n, "x")
        << ",omega_f_complement,gamma_0,gamma_s,gamma_inf,gamma_G,sonic_indicator\n";
      for (std::size_t i = 0; i < grid.point_count(); ++i) {
        write_coordinates(f, grid.point(i), n);
        f << "," << int(r.omega_f_complement[i]) << "," << int(r.gamma_0[i]) << ","
          << int(r.gamma_s[i]) << "," << int(r.gamma_inf[i]) << "," << int(r.gamma_G[i]) << ","
          << format_number(r.sonic_indicator[i]) << "\n";
      }
    }
    for (std::size_t i = 0; i < grid.point_count(); ++i) {
      counts[0] += r.omega_f_complement[i];
      counts[1] += r.gamma_0[i];
      counts[2] += r.gamma_s[i];
      counts[3] += r.gamma_inf[i];
      counts[4] += r.gamma_G[i];
    }
    if (n == 2 && cfg_.output.csv) {
      auto f = open_output(dir_ / "sonic.csv");
      f << "segment,x,y\n";
      for (std::size_t s = 0; s < r.sonic_contour.size(); ++s)
        for (const auto& p : r.sonic_contour[s])
          f << s << "," << format_number(p[0]) << "," << format_number(p[1]) << "\n";
      auto g = open_output(dir_ / "gamma0.csv");
      g << "segment,x,y\n";
      for (std::size_t s = 0; s < r.gamma0_contour.size(); ++s)
        for (const auto& p : r.gamma0_contour[s])
          g << s << "," << format_number(p[0]) << "," << format_number(p[1]) << "\n";
    }
    json summary = {{"name", cfg_.name},
                    {"command", "singular"},
                    {"points", grid.point_count()},
                    {"omega_f_complement", counts[0]},
                    {"gamma_0", counts[1]},
                    {"gamma_s", counts[2]},
                    {"gamma_inf", counts[3]},
                    {"gamma_G", counts[4]},
                    {"multi_branch_points", r.multi_branch_points},
                    {"sonic_segments", r.sonic_contour.size()},
                    {"gamma0_segments", r.gamma0_contour.size()}};
    if (cfg_.output.json) write_json(dir_ / "report.json", summary);
    out_ << "singular: " << counts[2] << " sonic points, " << r.sonic_contour.size()
         << " sonic polylines\n";
    return ExitOk;
  }

  int frobenius() {
    const auto& grid = cfg_.require_grid();
    const auto& d = cfg_.require_drive();
    const int n = grid.dim;
    FrobeniusWitness w = compute_witness(cfg_.model(), d, cfg_.policy, grid, cfg_.synth);
    FieldSolution s = synthesize(cfg_.model(), d, cfg_.policy, grid, cfg_.synth);

    std::optional<EtaResult> eta;
    if (cfg_.frobenius.recover_eta) {
      Vec anchor = cfg_.frobenius.anchor ? *cfg_.frobenius.anchor : first_defined(w);
      EtaOptions eo;
      eo.tol_conservative = cfg_.frobenius.tol_conservative;
      eta = recover_eta(w, s, anchor, eo);
    }
    const bool solvability = system_for(d) == WitnessSystem::Curl && n > 2;

    double max_defect = 0.0, max_curl = 0.0, max_ref = 0.0;
    std::size_t defined = 0, compared = 0;
    for (std::size_t i = 0; i < grid.point_count(); ++i) {
      if (!w.defined[i]) continue;
      ++defined;
      if (std::isfinite(w.defining_residual[i]))
        max_defect = std::max(max_defect, w.defining_residual[i]);
      if (std::isfinite(w.curl_residual[i])) max_curl = std::max(max_curl, w.curl_residual[i]);
      if (!cfg_.frobenius.reference_G.empty() && !s.points[i].has(kSingularFlags)) {
        auto dev = reference_deviation(w, s.points[i], i);
        if (dev) {
          max_ref = std::max(max_ref, *dev);
          ++compared;
        }
      }
    }

    if (cfg_.output.csv) {
      auto f = open_output(dir_ / "witness.csv");
      f << coordinate_header(n, "x") << "," << coordinate_header(n, "G") << ",defect,curl_defect";
      if (solvability) f << ",solvability";
      if (eta) f << ",eta";
      f << "\n";
      for (std::size_t i = 0; i < grid.point_count(); ++i) {
        write_coordinates(f, grid.point(i), n);
        for (int k = 0; k < n; ++k)
          f << "," << format_number(w.defined[i] ? w.G[i][k] : std::nan(""));
        f << "," << format_number(w.defining_residual[i]) << ","
          << format_number(w.curl_residual[i]);
        if (solvability) f << "," << format_number(w.solvability_residual[i]);
        if (eta) f << "," << format_number(eta->eta[i]);
        f << "\n";
      }
    }
    json summary = {{"name", cfg_.name},
                    {"command", "frobenius"},
                    {"system", system_for(d) == WitnessSystem::Curl ? "curl" : "divergence"},
                    {"defined", defined},
                    {"max_defect", number_json(max_defect)},
                    {"max_curl_defect", number_json(max_curl)}};
    if (!cfg_.frobenius.reference_G.empty())
      summary["reference_G"] = {{"compared", compared},
                                {"max_deviation", number_json(max_ref)},
                                {"tol", cfg_.frobenius.reference_tol},
                                {"pass", compared > 0 && max_ref <= cfg_.frobenius.reference_tol}};
    if (eta)
      summary["eta"] = {{"ok", eta->ok},
                        {"message", eta->message},
                        {"max_curl", number_json(eta->max_curl)},
                        {"max_loop", number_json(eta->max_loop)},
                        {"exactness_residual", number_json(eta->exactness_residual)}};
    if (cfg_.output.json) write_json(dir_ / "report.json", summary);
    out_ << "frobenius: " << defined << " witness points, max defect "
         << format_number(max_defect) << "\n";
    return ExitOk;
  }

  int forms() {
    if (!cfg_.forms) throw ConfigError("this command needs a forms section");
    const auto& grid = cfg_.require_grid();
    const int n = grid.dim;
    StreamForm sf = cfg_.stream_form(grid);
    FormSolution s = synthesize_forms(cfg_.model(), sf, cfg_.policy, grid, cfg_.synth);
    const auto idx = multi_indices(n, s.k);
    std::size_t defined = 0;
    double max_gamma_defect = 0.0;
    std::size_t deficient = 0;
    std::ofstream f;
    if (cfg_.output.csv) {
      f = open_output(dir_ / "forms.csv");
      f << coordinate_header(n, "x");
      for (auto I : idx) f << "," << index_name(I);
      f << ",Q,regime,branch,flags";
      if (cfg_.forms->gamma) f << "," << coordinate_header(n, "Gamma") << ",gamma_defect";
      f << "\n";
    }
    for (std::size_t i = 0; i < grid.point_count(); ++i) {
      const auto& rec = s.points[i];
      const Vec x = grid.point(i);
      const bool ok = rec.record.w_defined();
      defined += ok;
      std::optional<GammaWitness> gw;
      if (cfg_.forms->gamma && ok && !rec.record.has(kSingularFlags)) {
        gw = gamma_witness(cfg_.model(), sf, rec, x, cfg_.synth.tol);
        if (gw->defined && std::isfinite(gw->defining_residual))
          max_gamma_defect = std::max(max_gamma_defect, gw->defining_residual);
        deficient += gw->rank_deficient;
      }
      if (!cfg_.output.csv) continue;
      write_coordinates(f, x, n);
      for (auto I : idx) f << "," << format_number(ok ? rec.omega.c[I] : std::nan(""));
      f << "," << format_number(rec.record.Q) << "," << to_string(rec.record.regime) << ","
        << rec.record.branch << "," << rec.record.flags;
      if (cfg_.forms->gamma) {
        const bool g = gw && gw->defined;
        for (int k = 0; k < n; ++k) f << "," << format_number(g ? gw->gamma[k] : std::nan(""));
        f << "," << format_number(g ? gw->defining_residual : std::nan(""));
      }
      f << "\n";
    }
    json summary = {{"name", cfg_.name},
                    {"command", "forms"},
                    {"n", n},
                    {"k", s.k},
                    {"columns", idx.size()},
                    {"points", grid.point_count()},
                    {"defined", defined}};
    if (cfg_.forms->gamma)
      summary["gamma"] = {{"max_defect", number_json(max_gamma_defect)},
                          {"rank_deficient_points", deficient}};
    if (cfg_.output.json) write_json(dir_ / "report.json", summary);
    if (defined == 0) throw Exit(ExitEmpty, empty_message());
    out_ << "forms: " << idx.size() << " coefficient columns, " << defined << "/"
         << grid.point_count() << " points defined\n";
    return ExitOk;
  }

  int verify() {
    const auto& cfg = cfg_.verify;
    std::vector<GridSpec> grids = cfg.grids;
    if (grids.empty()) grids.push_back(cfg_.require_grid());
    if (cfg.levels < 3) throw ConfigError("verify.levels must be at least 3");
    std::vector<std::string> residuals = cfg.residuals;
    if (residuals.empty()) residuals.push_back(cfg_.forms ? "codifferential" : "divergence");

    json reports = json::array();
    bool pass = true;
    for (std::size_t g = 0; g < grids.size(); ++g) {
      for (const auto& name : residuals) {
        ResidualReport r = convergence_study(cfg.levels, [&](int level) {
          return residual(name, grids[g].refined(1 << level));
        });
        json j = report_json(r);
        j["grid"] = g;
        j["pass"] = r.max_norm < cfg.threshold;
        pass = pass && r.max_norm < cfg.threshold;
        reports.push_back(j);
        out_ << "verify: " << name << " grid " << g << " max " << format_number(r.max_norm)
             << " order " << (r.order ? format_number(*r.order) : (r.exact ? "exact" : "n/a"))
             << "\n";
      }
    }
    json summary = {{"name", cfg_.name},
                    {"command", "verify"},
                    {"threshold", number_json(cfg.threshold)},
                    {"levels", cfg.levels},
                    {"residuals", reports}};
    if (!cfg.reference.empty()) {
      json ref = reference_report();
      pass = pass && ref["pass"].get<bool>();
      summary["reference"] = ref;
    }
    if (cfg.energy && cfg_.drive) {
      FieldSolution s =
          synthesize(cfg_.model(), *cfg_.drive, cfg_.policy, cfg_.require_grid(), cfg_.synth);
      auto e = streamline::energy(cfg_.model(), s, cfg.energy_region ? &*cfg.energy_region : nullptr);
      summary["energy"] = {{"value", number_json(e.energy)},
                           {"used", e.used},
                           {"masked_fraction", number_json(e.masked_fraction)}};
    }
    summary["pass"] = pass;
    if (cfg_.output.json) write_json(dir_ / "report.json", summary);
    if (!pass) throw Exit(ExitThreshold, "verify: threshold breached (see report.json)");
    return ExitOk;
  }

 private:
  ResidualReport residual(const std::string& name, const GridSpec& grid) const {
    if (name == "codifferential") {
      StreamForm sf = cfg_.stream_form(grid);
      return codifferential_residual(
          synthesize_forms(cfg_.model(), sf, cfg_.policy, grid, cfg_.synth), cfg_.model());
    }
    const auto& d = cfg_.require_drive();
    FieldSolution s = synthesize(cfg_.model(), d, cfg_.policy, grid, cfg_.synth);
    if (name == "divergence") return divergence_residual(s, cfg_.model());
    if (name == "minor") return minor_residual(s, cfg_.model());
    if (name == "frobenius")
      return frobenius_residual(s, compute_witness(cfg_.model(), d, cfg_.policy, grid, cfg_.synth));
    throw ConfigError("unknown residual '" + name + "'");
  }

  // Compares synthesized values with verify.reference on the main grid and
  // the verify grids, relative to max(1, |reference|).
  json reference_report() const {
    std::vector<GridSpec> grids;
    if (cfg_.grid) grids.push_back(*cfg_.grid);
    for (const auto& g : cfg_.verify.grids) grids.push_back(g);
    double worst = 0.0;
    std::size_t compared = 0;
    Vec worst_at{};
    for (const auto& grid : grids) {
      const int n = grid.dim;
      std::vector<std::vector<double>> values;
      std::vector<std::uint8_t> ok;
      if (cfg_.forms) {
        StreamForm sf = cfg_.stream_form(grid);
        FormSolution s = synthesize_forms(cfg_.model(), sf, cfg_.policy, grid, cfg_.synth);
        for (const auto& p : s.points) {
          std::vector<double> v;
          for (auto I : multi_indices(n, s.k)) v.push_back(p.omega.c[I]);
          values.push_back(v);
          ok.push_back(p.record.w_defined() && !p.record.has(kSingularFlags));
        }
      } else {
        FieldSolution s = synthesize(cfg_.model(), cfg_.require_drive(), cfg_.policy, grid, cfg_.synth);
        for (const auto& p : s.points) {
          values.emplace_back(p.w.begin(), p.w.begin() + n);
          ok.push_back(p.w_defined() && !p.has(kSingularFlags));
        }
      }
      for (std::size_t i = 0; i < grid.point_count(); ++i) {
        if (!ok[i]) continue;
        const Vec x = grid.point(i);
        bool all = true;
        double dev = 0.0;
        for (std::size_t c = 0; c < cfg_.verify.reference.size(); ++c) {
          auto r = cfg_.verify.reference[c].eval(std::span<const double>(x.data(), n));
          if (!r) {
            all = false;
            break;
          }
          dev = std::max(dev, std::fabs(values[i][c] - *r) / std::max(1.0, std::fabs(*r)));
        }
        if (!all) continue;
        ++compared;
        if (dev > worst) {
          worst = dev;
          worst_at = x;
        }
      }
    }
    json at = json::array();
    for (int i = 0; i < cfg_.dim(); ++i) at.push_back(worst_at[i]);
    return {{"compared", compared},
            {"max_relative_deviation", number_json(worst)},
            {"worst_point", at},
            {"tol", cfg_.verify.reference_tol},
            {"pass", compared > 0 && worst <= cfg_.verify.reference_tol}};
  }

  // Deviation of G from the reference modulo the gauge of the system: the
  // component along w for the curl system, the component across w for the
  // divergence system, are free.
  std::optional<double> reference_deviation(const FrobeniusWitness& w, const PointRecord& rec,
                                            std::size_t i) const {
    const int n = w.grid.dim;
    const Vec x = w.grid.point(i);
    Vec diff{};
    for (int k = 0; k < n; ++k) {
      auto r = cfg_.frobenius.reference_G[k].eval(std::span<const double>(x.data(), n));
      if (!r) return std::nullopt;
      diff[k] = w.G[i][k] - *r;
    }
    const double wn = std::sqrt(norm2(rec.w, n));
    if (!(wn > 0.0)) return std::nullopt;
    double along = 0.0;
    for (int k = 0; k < n; ++k) along += diff[k] * rec.w[k] / wn;
    if (w.system == WitnessSystem::Divergence) return std::fabs(along);
    double perp = 0.0;
    for (int k = 0; k < n; ++k) {
      const double c = diff[k] - along * rec.w[k] / wn;
      perp += c * c;
    }
    return std::sqrt(perp);
  }

  static Vec first_defined(const FrobeniusWitness& w) {
    for (std::size_t i = 0; i < w.grid.point_count(); ++i)
      if (w.defined[i]) return w.grid.point(i);
    return w.grid.point(0);
  }

  void write_field(const FieldSolution& s, const fs::path& path) const {
    const int n = s.grid.dim;
    auto f = open_output(path);
    f << coordinate_header(n, "x") << "," << coordinate_header(n, "w") << ",Q,regime,branch,flags\n";
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      const auto& p = s.points[i];
      write_coordinates(f, s.grid.point(i), n);
      for (int k = 0; k < n; ++k) f << "," << format_number(p.w_defined() ? p.w[k] : std::nan(""));
      f << "," << format_number(p.Q) << "," << to_string(p.regime) << "," << p.branch << ","
        << p.flags << "\n";
    }
  }

  std::string empty_message() const {
    std::ostringstream m;
    m << "no grid point admits a solution: Sigma_f";
    if (cfg_.drive) {
      XiRange r = range_sigma(*cfg_.drive, cfg_.require_grid());
      if (r.defined > 0)
        m << " = [" << format_number(r.min) << ", " << format_number(r.max) << "]";
    }
    m << " does not meet Im(phi) of any admitted branch;";
    for (const auto& b : cfg_.model().branches()) {
      m << " " << b.label << " " << describe(b.image);
      if (b.nonphysical && !cfg_.synth.allow_nonphysical) m << " (nonphysical, not allowed)";
      m << ";";
    }
    std::string s = m.str();
    s.pop_back();
    return s;
  }

  RunConfig cfg_;
  std::ostream& out_;
  fs::path dir_;
};

RunConfig load(const Options& opt) {
  if (!opt.config.empty() && !opt.example.empty())
    throw ConfigError("--config and --example are mutually exclusive");
  if (!opt.example.empty()) return RunConfig::from_json(example_config(opt.example), opt.example);
  if (!opt.config.empty()) return RunConfig::from_file(opt.config);
  throw ConfigError("one of --config PATH or --example NAME is required");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthesis and verification of stream-function solutions of div(rho(|w|^2) w) = 0"};
  app.name("streamline");
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  bool list = false;
  app.add_option("--config", opt.config, "JSON run configuration");
  app.add_option("--example", opt.example, "built-in example name");
  app.add_option("--out", opt.out, "output directory (overrides output.dir)");
  app.add_option("--levels", opt.levels, "grid levels for verify")->check(CLI::Range(3, 12));
  app.add_option("--threads", opt.threads, "worker threads")->check(CLI::Range(1, 256));
  app.add_flag("--list-examples", list, "print the built-in example names");
  std::string command;
  const std::pair<const char*, const char*> commands[] = {
      {"synth", "synthesize w on the grid (field.csv)"},
      {"singular", "singular sets and sonic contours (masks.csv, sonic.csv, gamma0.csv)"},
      {"frobenius", "Frobenius witness G and integrating factor (witness.csv)"},
      {"forms", "k-form synthesis (forms.csv)"},
      {"verify", "residual convergence, references and energy (report.json)"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->callback([&command, name] { command = name; });
  }
  if (std::find(args.begin(), args.end(), "--list-examples") != args.end()) {
    for (const auto& n : example_names()) out << n << "\n";
    return ExitOk;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ExitOk;
  } catch (const CLI::ParseError& e) {
    err << "streamline: " << e.what() << "\n";
    return ExitConfig;
  }

  try {
    Runner runner(load(opt), opt, out);
    if (command == "synth") return runner.synth();
    if (command == "singular") return runner.singular();
    if (command == "frobenius") return runner.frobenius();
    if (command == "forms") return runner.forms();
    return runner.verify();
  } catch (const ConfigError& e) {
    err << "streamline: config error: " << e.what() << "\n";
    return ExitConfig;
  } catch (const Exit& e) {
    err << "streamline: " << e.what() << "\n";
    return e.code;
  } catch (const std::exception& e) {
    err << "streamline: " << e.what() << "\n";
    return ExitFailure;
  }
}

}  // namespace streamline
