#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "streamline/builtin.hpp"
#include "streamline/synth.hpp"

using namespace streamline;

namespace {

Expression ex(const std::string& s, int n = 2) {
  return Expression::parse(s, DriveField::coordinate_names(n));
}

// Random polynomial of degree <= 3 in x, y with integer-ish coefficients.
std::string random_polynomial(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> c(-3, 3);
  std::string s = "0";
  const char* monomials[] = {"x", "y", "x^2", "x*y", "y^2", "x^3", "x^2*y", "y^3"};
  for (const char* m : monomials) s += "+(" + std::to_string(c(rng)) + ")*" + m;
  return s;
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("extremal space-like and time-like closed forms") {
    auto m = DensityModel::extremal();
    SynthOptions o;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 20; ++k) {
      auto d = DriveField::scalar2d(ex(random_polynomial(rng)));
      for (int p = 0; p < 20; ++p) {
        const Vec x = {u(rng), u(rng)};
        auto s = d.at(x).value();
        if (s.xi == 0.0) continue;
        auto ws = synthesize_point(m, d, BranchPolicy::single(0), x, o);
        REQUIRE(ws.w_defined());
        for (int i = 0; i < 2; ++i)
          CHECK(std::fabs(ws.w[i] - s.a[i] / std::sqrt(1 + s.xi)) < 1e-12);
        auto wt = synthesize_point(m, d, BranchPolicy::single(1), x, o);
        if (s.xi > 1.0) {
          REQUIRE(wt.w_defined());
          CHECK(wt.regime == Regime::Hyperbolic);
          for (int i = 0; i < 2; ++i)
            CHECK(std::fabs(wt.w[i] - s.a[i] / std::sqrt(s.xi - 1)) <
                  1e-12 * std::max(1.0, std::fabs(wt.w[i])));
        } else if (s.xi < 1.0) {
          CHECK(wt.has(OutsideOmegaF));
          CHECK_FALSE(wt.w_defined());
        }
      }
    }
  }

  TEST_CASE("caustic branches") {
    for (double tau : {1.0, 2.0}) {
      auto m = DensityModel::caustic(tau);
      auto d = DriveField::scalar2d(ex("0.4*sin(x)*exp(y/2)"));
      for (double x0 : {0.1, 0.5, 0.9}) {
        const Vec x = {x0, 0.3};
        auto s = d.at(x).value();
        const double len = std::sqrt(s.xi);
        auto sh = synthesize_point(m, d, BranchPolicy::single(0), x, {});
        auto li = synthesize_point(m, d, BranchPolicy::single(1), x, {});
        for (int i = 0; i < 2; ++i) {
          CHECK(std::fabs(sh.w[i] - std::sqrt(tau * tau + s.xi) * s.a[i] / len) < 1e-12);
          CHECK(std::fabs(li.w[i] - std::sqrt(tau * tau - s.xi) * s.a[i] / len) < 1e-12);
        }
      }
      // xi = tau^2 on the illuminated branch: Q = 0 and w = 0.
      auto rec = synthesize_vector(m, BranchPolicy::single(1), Vec{}, Vec{tau, 0.0}, 2, {});
      CHECK(rec.w_defined());
      CHECK(rec.Q == 0.0);
      CHECK(rec.has(GammaS));
      CHECK(rec.w[0] == 0.0);
      CHECK(rec.w[1] == 0.0);
    }
  }

  TEST_CASE("shallow vortex spans three branch regions") {
    const double R = 1.0;
    auto m = DensityModel::shallow_water();
    auto d = builtin::shallow_vortex(R);
    auto region = [&](const std::string& s) { return Expression::parse(s, {"x1", "x2"}, {"R"}).bind({{"R", R}}); };
    auto policy = BranchPolicy::region_map(
        {{region("2*R/3-(x^2+y^2)"), 0}, {region("2*R-(x^2+y^2)"), 1}}, 2);
    SynthOptions o;
    o.allow_nonphysical = true;
    int seen[3] = {0, 0, 0};
    for (double r : {0.3, 0.6, 1.0, 1.3, 1.6, 2.0}) {
      const Vec x = {r * 0.8, r * 0.6};
      auto rec = synthesize_point(m, d, policy, x, o);
      REQUIRE(rec.w_defined());
      ++seen[rec.branch];
      CHECK(std::fabs(rec.w[0] + x[1]) < 1e-10);
      CHECK(std::fabs(rec.w[1] - x[0]) < 1e-10);
      CHECK(rec.has(NonphysicalRho) == (rec.branch == 2));
    }
    CHECK(seen[0] > 0);
    CHECK(seen[1] > 0);
    CHECK(seen[2] > 0);
    o.allow_nonphysical = false;
    auto rec = synthesize_point(m, d, BranchPolicy::prefer_type1(), Vec{2.0, 0.0}, o);
    CHECK(rec.has(OutsideOmegaF));
  }

  TEST_CASE("preference policies") {
    auto m = DensityModel::shallow_water();
    auto t1 = synthesize_vector(m, BranchPolicy::prefer_type1(), Vec{}, Vec{0.3, 0.2}, 2, {});
    auto t2 = synthesize_vector(m, BranchPolicy::prefer_type2(), Vec{}, Vec{0.3, 0.2}, 2, {});
    CHECK(t1.branch == 0);
    CHECK(t1.regime == Regime::Elliptic);
    CHECK(t2.branch == 1);
    CHECK(t2.regime == Regime::Hyperbolic);
    // Beyond the fold only the nonphysical branch remains.
    SynthOptions o;
    o.allow_nonphysical = true;
    auto np = synthesize_vector(m, BranchPolicy::prefer_type1(), Vec{}, Vec{1.0, 0.0}, 2, o);
    CHECK(np.branch == 2);
    CHECK(np.has(NonphysicalRho));
  }

  TEST_CASE("sonic limit at the fold") {
    auto m = DensityModel::shallow_water();
    const double xi = 8.0 / 27.0;
    auto s = synthesize_scaling(m, BranchPolicy::single(0), Vec{}, 2, xi, {});
    CHECK(s.record.regime == Regime::Sonic);
    CHECK(s.record.has(GammaS));
    CHECK(s.record.Q == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(s.scale == doctest::Approx(1.5).epsilon(1e-12));
  }

  TEST_CASE("gamma_0 lies inside gamma_s") {
    auto m = DensityModel::shallow_water();
    SynthOptions o;
    o.allow_nonphysical = true;
    for (double xi : {0.0, 1e-12, 1e-3, 0.1}) {
      for (int b = 0; b < 3; ++b) {
        auto s = synthesize_scaling(m, BranchPolicy::single(b), Vec{}, 2, xi, o);
        if (s.record.has(Gamma0)) CHECK(s.record.has(GammaS));
      }
    }
    auto z = synthesize_scaling(m, BranchPolicy::single(2), Vec{}, 2, 0.0, o);
    CHECK(z.record.has(Gamma0));
    CHECK_FALSE(z.record.w_defined());
  }

  TEST_CASE("undefined drives and gamma_G") {
    auto m = DensityModel::born_infeld();
    auto c = synthesize_point(m, builtin::coulomb(), {}, Vec{0, 0, 0}, {});
    CHECK(c.has(DriveUndefined));
    CHECK_FALSE(c.w_defined());
    auto d = DriveField::scalar2d(ex("x^2+y^2"));
    auto g = synthesize_point(DensityModel::extremal(), d, {}, Vec{0, 0}, {});
    CHECK(g.has(GammaG));
    auto flat = synthesize_point(DensityModel::extremal(), DriveField::scalar2d(ex("x*y")), {},
                                 Vec{0, 0}, {});
    CHECK_FALSE(flat.has(GammaG));
  }

  TEST_CASE("normalized field does not depend on rho") {
    auto d = DriveField::scalar2d(ex("sin(x)*exp(y/2)"));
    std::vector<DensityModel> models = {DensityModel::extremal(), DensityModel::shallow_water(),
                                        DensityModel::caustic(1.0)};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (int k = 0; k < 50; ++k) {
      const Vec x = {u(rng), u(rng)};
      auto n = normalized_field(d, x).value();
      for (const auto& m : models) {
        auto rec = synthesize_point(m, d, {}, x, {});
        if (!rec.w_defined()) continue;
        const double len = std::sqrt(norm2(rec.w, 2));
        const double sign = *m.rho(rec.Q) < 0 ? -1.0 : 1.0;
        for (int i = 0; i < 2; ++i) CHECK(std::fabs(sign * rec.w[i] / len - n[i]) < 1e-14);
      }
    }
    CHECK_FALSE(normalized_field(DriveField::scalar2d(ex("x^2+y^2")), Vec{0, 0}));
  }

  TEST_CASE("primary and alternate formulas agree where rho is not small") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SynthOptions o;
    o.allow_nonphysical = true;
    std::vector<DensityModel> models = {DensityModel::extremal(), DensityModel::shallow_water(),
                                        DensityModel::caustic(1.0)};
    int checked = 0;
    for (const auto& m : models) {
      for (int b = 0; b < static_cast<int>(m.branches().size()); ++b) {
        for (int k = 0; k < 100; ++k) {
          const Vec a = {u(rng), 2 * u(rng)};
          auto rec = synthesize_vector(m, BranchPolicy::single(b), Vec{}, a, 2, o);
          if (!rec.w_defined()) continue;
          auto rho = m.rho(rec.Q);
          if (!rho || std::fabs(*rho) <= 1e-6) continue;
          const Vec alt = alternate_formula(a, 2, rec.Q, *rho);
          for (int i = 0; i < 2; ++i)
            CHECK(std::fabs(alt[i] - rec.w[i]) <= 1e-10 * std::max(1.0, std::fabs(rec.w[i])));
          ++checked;
        }
      }
    }
    CHECK(checked > 300);
  }

  TEST_CASE("threads do not change the result") {
    auto d = builtin::radial_log();
    auto g = GridSpec::box(2, Vec{-2, -2}, Vec{2, 2}, 40);
    SynthOptions one, many;
    many.threads = 3;
    auto policy = BranchPolicy::prefer_type2();
    auto a = synthesize(DensityModel::extremal(), d, policy, g, one);
    auto b = synthesize(DensityModel::extremal(), d, policy, g, many);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
      CHECK(a.points[i].flags == b.points[i].flags);
      CHECK(std::memcmp(&a.points[i].w, &b.points[i].w, sizeof(Vec)) == 0);
    }
  }
}
