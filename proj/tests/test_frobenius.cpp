#include <doctest.h>

#include <cmath>
#include <random>

#include "streamline/builtin.hpp"
#include "streamline/frobenius.hpp"

using namespace streamline;

namespace {

Expression ex(const std::string& s, int n = 2) {
  return Expression::parse(s, DriveField::coordinate_names(n));
}

BranchPolicy vortex_policy(double R) {
  auto region = [&](const std::string& s) {
    return Expression::parse(s, {"x1", "x2"}, {"R"}).bind({{"R", R}});
  };
  return BranchPolicy::region_map({{region("2*R/3-(x^2+y^2)"), 0}, {region("2*R-(x^2+y^2)"), 1}},
                                  2);
}

SynthOptions nonphysical() {
  SynthOptions o;
  o.allow_nonphysical = true;
  return o;
}

// Finite-difference curl defect max_{i<j} |d_i w_j - d_j w_i - (G_i w_j - G_j w_i)|
// of the synthesized field, independent of the analytic jets.
double fd_curl_defect(const DensityModel& m, const DriveField& d, const BranchPolicy& p,
                      const SynthOptions& o, const Vec& x, const Vec& G) {
  const int n = d.dim();
  const double h = 1e-5;
  Mat dw{};
  for (int i = 0; i < n; ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    auto wp = synthesize_point(m, d, p, xp, o).w, wm = synthesize_point(m, d, p, xm, o).w;
    for (int j = 0; j < n; ++j) dw[i][j] = (wp[j] - wm[j]) / (2 * h);
  }
  const Vec w = synthesize_point(m, d, p, x, o).w;
  double e = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      e = std::max(e, std::fabs(dw[i][j] - dw[j][i] - (G[i] * w[j] - G[j] * w[i])));
  return e;
}

}  // namespace

TEST_SUITE("frobenius") {
  TEST_CASE("shallow vortex witness is grad log t") {
    for (double R : {1.0, 4.0}) {
      auto m = DensityModel::shallow_water();
      auto d = builtin::shallow_vortex(R);
      auto p = vortex_policy(R);
      for (double r : {0.3, 0.7, 1.2, 1.7, 2.3}) {
        const double rr = r * std::sqrt(R);
        const Vec x = {rr * 0.6, rr * 0.8};
        auto w = witness_at(m, d, p, x, nonphysical());
        REQUIRE(w.defined);
        CHECK(w.defining_residual < 1e-9);
        const double t = rr * rr;
        const Vec G = {2 * x[0] / t, 2 * x[1] / t};
        auto rec = synthesize_point(m, d, p, x, nonphysical());
        // Compare modulo the gauge G -> G + lambda w.
        const double cross = (w.G[0] - G[0]) * rec.w[1] - (w.G[1] - G[1]) * rec.w[0];
        CHECK(std::fabs(cross) < 1e-9);
        CHECK(fd_curl_defect(m, d, p, nonphysical(), x, G) < 1e-6);
      }
    }
  }

  TEST_CASE("witness with an extra 1/sqrt(R) factor fails for R = 4") {
    const double R = 4.0;
    auto m = DensityModel::shallow_water();
    auto d = builtin::shallow_vortex(R);
    auto p = vortex_policy(R);
    const Vec x = {0.6, 0.8};  // t = 1
    auto s = d.at(x).value();
    auto rec = synthesize_point(m, d, p, x, nonphysical());
    auto jet = field_jet(m, s, rec).value();
    const Vec good = {2 * x[0], 2 * x[1]};
    const Vec scaled = {good[0] / std::sqrt(R), good[1] / std::sqrt(R)};
    CHECK(frobenius_defect(jet, good, WitnessSystem::Curl) < 1e-12);
    CHECK(frobenius_defect(jet, scaled, WitnessSystem::Curl) >=
          0.5 * std::fabs(2 / std::sqrt(R) - 2 / R));
  }

  TEST_CASE("two-dimensional witness matches finite differences") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.2, 0.9);
    auto d = DriveField::scalar2d(ex("sin(x)*exp(y/2)+x*y"));
    for (const auto& m : {DensityModel::extremal(), DensityModel::caustic(1.0)}) {
      for (int k = 0; k < 10; ++k) {
        const Vec x = {u(rng), u(rng)};
        auto w = witness_at(m, d, {}, x, {});
        REQUIRE(w.defined);
        CHECK(w.defining_residual < 1e-10);
        CHECK(fd_curl_defect(m, d, {}, {}, x, w.G) < 1e-6);
        // G1 = -lap f grad f / |grad f|^2 for the raw drive.
        auto s = d.at(x).value();
        const Vec gf = {s.a[1], -s.a[0]};
        for (int i = 0; i < 2; ++i)
          CHECK(w.G1[i] == doctest::Approx(-s.laplacian_f * gf[i] / s.xi).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("n-dimensional solvability detects helicity") {
    auto box = GridSpec::box(3, Vec{-1, -1, -1}, Vec{1, 1, 1}, 4);
    auto m = DensityModel::extremal();
    auto flat = DriveField::raw(3, {ex("-y*(1+z^2)", 3), ex("x*(1+z^2)", 3), ex("0", 3)},
                                Closure::DivergenceFree, box);
    auto twisted =
        DriveField::raw(3, {ex("-y", 3), ex("x", 3), ex("1", 3)}, Closure::DivergenceFree, box);
    const Vec x = {0.3, 0.4, 0.2};
    auto wf = witness_at(m, flat, {}, x, {});
    REQUIRE(wf.defined);
    CHECK(wf.solvability_residual < 1e-12);
    CHECK(wf.defining_residual < 1e-12);
    CHECK(fd_curl_defect(m, flat, {}, {}, x, wf.G) < 1e-6);
    auto wt = witness_at(m, twisted, {}, x, {});
    REQUIRE(wt.defined);
    CHECK(wt.solvability_residual > 0.1);
  }

  TEST_CASE("Born-Infeld fundamental solution witness") {
    auto d = builtin::coulomb();
    CHECK(system_for(d) == WitnessSystem::Divergence);
    for (int b = 0; b < 2; ++b) {
      auto m = DensityModel::born_infeld();
      for (double r : {0.3, 0.6, 0.9, 1.2, 2.0}) {
        if ((b == 1) != (r < 1.0)) continue;
        const Vec x = {r * 0.48, r * 0.6, r * 0.64};
        auto w = witness_at(m, d, BranchPolicy::single(b), x, {});
        REQUIRE(w.defined);
        CHECK(w.defining_residual < 1e-8);
        const double r4 = std::pow(r, 4);
        const double s = b == 0 ? 1.0 + r4 : 1.0 - r4;
        for (int i = 0; i < 3; ++i)
          CHECK(w.G[i] == doctest::Approx(2 * x[i] / (r * r * s)).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("integrating factor on an annulus") {
    const double R = 1.0;
    auto m = DensityModel::shallow_water();
    auto d = builtin::shallow_vortex(R);
    auto p = BranchPolicy::prefer_type1();
    auto g = GridSpec::box(2, Vec{0.3, 0.3}, Vec{0.5, 0.5}, 128);
    auto wit = compute_witness(m, d, p, g, {});
    auto sol = synthesize(m, d, p, g, {});
    auto res = recover_eta(wit, sol, Vec{0.3, 0.3});
    CHECK(res.ok);
    CHECK(res.max_curl < 1e-6);
    CHECK(res.exactness_residual < 1e-5);
    // eta = log t up to a constant: compare differences.
    const double eta0 = res.eta[0];
    const double t0 = 0.18;
    for (std::size_t i = 0; i < g.point_count(); i += 97) {
      const Vec x = g.point(i);
      CHECK(res.eta[i] - eta0 ==
            doctest::Approx(std::log((x[0] * x[0] + x[1] * x[1]) / t0)).epsilon(1e-4).scale(1.0));
    }
  }

  TEST_CASE("non-conservative witness is rejected") {
    auto g = GridSpec::box(2, Vec{0, 0}, Vec{1, 1}, 16);
    auto wit = witness_from_function(g, WitnessSystem::Curl, [](const Vec& x) {
      return std::optional<Vec>(Vec{-x[1], x[0]});
    });
    auto d = DriveField::scalar2d(ex("x+2*y"));
    auto sol = synthesize(DensityModel::extremal(), d, {}, g, {});
    auto res = recover_eta(wit, sol, Vec{0, 0});
    CHECK_FALSE(res.ok);
    CHECK(res.max_curl > 1.0);
    CHECK_FALSE(res.message.empty());
  }

  TEST_CASE("jets of w match finite differences") {
    auto m = DensityModel::extremal();
    auto d = DriveField::scalar2d(ex("x^2*y-cos(y)"));
    const Vec x = {0.4, 0.7};
    auto rec = synthesize_point(m, d, {}, x, {});
    auto jet = field_jet(m, d.at(x).value(), rec).value();
    const double h = 1e-6;
    for (int i = 0; i < 2; ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      auto wp = synthesize_point(m, d, {}, xp, {}).w, wm = synthesize_point(m, d, {}, xm, {}).w;
      for (int j = 0; j < 2; ++j)
        CHECK(jet.dw[i][j] == doctest::Approx((wp[j] - wm[j]) / (2 * h)).epsilon(1e-6));
    }
  }
}
