#include <doctest.h>

#include <cmath>
#include <random>

#include "streamline/density.hpp"

using namespace streamline;

namespace {

// Bisection on phi over the open branch interval; independent of the
// model's inverse.
double bisect(const DensityModel& m, const PhiBranch& b, double xi) {
  double lo = b.q_interval.lo, hi = std::isfinite(b.q_interval.hi) ? b.q_interval.hi : 1e8;
  const double sign = b.elliptic() ? 1.0 : -1.0;
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double v = m.phi(std::clamp(mid, std::nextafter(b.q_interval.lo, inf),
                                      std::nextafter(b.q_interval.hi, -inf)));
    if (sign * (v - xi) > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Samples strictly inside the branch interval, log-spread on infinite ones.
std::vector<double> interior(const PhiBranch& b, int count) {
  std::vector<double> q;
  const double lo = b.q_interval.lo;
  for (int i = 1; i <= count; ++i) {
    const double t = static_cast<double>(i) / (count + 1);
    if (std::isfinite(b.q_interval.hi))
      q.push_back(lo + t * (b.q_interval.hi - lo));
    else
      q.push_back(lo + std::pow(10.0, -3.0 + 6.0 * t));
  }
  return q;
}

std::vector<DensityModel> builtins() {
  return {DensityModel::extremal(), DensityModel::born_infeld(), DensityModel::shallow_water(),
          DensityModel::caustic(1.0), DensityModel::caustic(2.0)};
}

}  // namespace

TEST_SUITE("density") {
  TEST_CASE("shallow-water branch geometry") {
    auto m = DensityModel::shallow_water();
    const auto& b = m.branches();
    REQUIRE(b.size() == 3);
    CHECK(b[0].q_interval.hi == 2.0 / 3.0);
    CHECK(b[1].q_interval.lo == 2.0 / 3.0);
    CHECK(b[1].q_interval.hi == 2.0);
    CHECK(b[2].q_interval.lo == 2.0);
    CHECK(std::fabs(m.phi(2.0 / 3.0) - std::pow(2.0 / 3.0, 3)) < 1e-15);
    CHECK(b[0].elliptic());
    CHECK_FALSE(b[1].elliptic());
    CHECK(b[2].nonphysical);
    CHECK(b[1].image.hi == doctest::Approx(8.0 / 27.0).epsilon(1e-15));
  }

  TEST_CASE("built-in branch tables") {
    auto e = DensityModel::extremal();
    REQUIRE(e.branches().size() == 2);
    CHECK(e.branches()[0].elliptic());
    CHECK(e.branches()[1].image.lo == 1.0);
    auto c = DensityModel::caustic(2.0);
    REQUIRE(c.branches().size() == 2);
    CHECK(c.branches()[0].q_interval.lo == 4.0);
    CHECK(c.branches()[1].image.hi == 4.0);
    CHECK_THROWS_AS(DensityModel::caustic(0.0), DomainError);
  }

  TEST_CASE("psi o phi and phi o psi are identities on every branch") {
    for (const auto& m : builtins()) {
      for (const auto& b : m.branches()) {
        for (double q : interior(b, 200)) {
          const double xi = m.phi(q);
          const double back = m.invert(b, xi);
          CHECK(std::fabs(back - q) <= 1e-10 * std::max(1.0, std::fabs(q)));
          const double xi2 = m.phi(back);
          CHECK(std::fabs(xi2 - xi) <= 1e-10 * std::max(1.0, std::fabs(xi)));
        }
      }
    }
  }

  TEST_CASE("shallow cubic roots match bisection") {
    auto m = DensityModel::shallow_water();
    for (int k = 1; k < 200; ++k) {
      const double xi = (8.0 / 27.0) * k / 200.0;
      for (int id = 0; id < 3; ++id) {
        const auto& b = m.branch(id);
        CHECK(std::fabs(m.invert(b, xi) - bisect(m, b, xi)) < 1e-10);
      }
    }
    // Cardano regime: only the negative-depth root is real.
    for (double xi : {0.3, 1.0, 10.0, 1e4}) {
      const auto& b = m.branch(2);
      CHECK(std::fabs(shallow_cubic_root(3, xi) - bisect(m, b, xi)) <
            1e-10 * std::max(1.0, bisect(m, b, xi)));
    }
  }

  TEST_CASE("phi_prime matches a finite difference of phi") {
    for (const auto& m : builtins()) {
      for (const auto& b : m.branches()) {
        for (double q : interior(b, 25)) {
          const double h = 1e-6 * std::max(1.0, q);
          if (!b.q_interval.interior(q - h) || !b.q_interval.interior(q + h)) continue;
          const double fd = (m.phi(q + h) - m.phi(q - h)) / (2 * h);
          CHECK(*m.phi_prime(q) == doctest::Approx(fd).epsilon(1e-5));
          CHECK((*m.phi_prime(q) > 0) == b.elliptic());
        }
      }
    }
  }

  TEST_CASE("domain and range errors") {
    auto e = DensityModel::extremal();
    CHECK_THROWS_AS(e.phi(1.0), DomainError);
    CHECK_THROWS_AS(e.phi(-0.5), DomainError);
    CHECK_THROWS_AS(e.invert(e.branch(1), 0.5), RangeError);
    CHECK_THROWS_AS(e.branch(2), std::out_of_range);
    auto s = DensityModel::shallow_water();
    CHECK_THROWS_AS(s.invert(s.branch(0), 0.3), RangeError);
    CHECK_FALSE(e.rho(1.0));
  }

  TEST_CASE("custom densities detect the built-in branch structure") {
    auto sw = DensityModel::custom(Expression::parse("1-Q/2", {"Q"}));
    const auto& b = sw.branches();
    REQUIRE(b.size() == 3);
    CHECK(b[0].q_interval.hi == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(b[1].q_interval.hi == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(b[0].elliptic());
    CHECK_FALSE(b[1].elliptic());
    CHECK(b[2].elliptic());
    auto ref = DensityModel::shallow_water();
    for (double xi : {0.01, 0.1, 0.25}) {
      CHECK(sw.invert(b[0], xi) == doctest::Approx(ref.invert(ref.branch(0), xi)).epsilon(1e-10));
      CHECK(sw.invert(b[1], xi) == doctest::Approx(ref.invert(ref.branch(1), xi)).epsilon(1e-10));
    }

    auto one = DensityModel::custom(Expression::parse("1", {"Q"}));
    REQUIRE(one.branches().size() == 1);
    CHECK(one.branches()[0].elliptic());
    CHECK(one.invert(one.branches()[0], 3.5) == doctest::Approx(3.5).epsilon(1e-12));

    auto bi = DensityModel::custom(Expression::parse("1/sqrt(abs(1-Q))", {"Q"}));
    REQUIRE(bi.branches().size() == 2);
    CHECK(bi.branches()[0].q_interval.hi == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(bi.invert(bi.branches()[1], 3.0) == doctest::Approx(1.5).epsilon(1e-10));

    CHECK_THROWS(DensityModel::custom(Expression::parse("Q*k", {"Q"}, {"k"})));
  }

  TEST_CASE("energy density against trapezoid quadrature") {
    std::vector<std::pair<DensityModel, std::vector<double>>> cases = {
        {DensityModel::shallow_water(), {0.1, 0.5, 1.5}},
        {DensityModel::extremal(), {0.2, 0.7}},
        {DensityModel::caustic(1.0), {0.3, 2.0, 5.0}},
        {DensityModel::custom(Expression::parse("1/(1+Q^2)", {"Q"})), {0.5, 2.0}},
    };
    for (const auto& [m, qs] : cases) {
      for (double q : qs) {
        // Midpoint rule in u = sqrt(s), which smooths the 1/sqrt(s) endpoint
        // singularity of the caustic density.
        const int n = 200000;
        const double umax = std::sqrt(q);
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
          const double u = (i + 0.5) * umax / n;
          sum += 2.0 * u * *m.rho(u * u);
        }
        const double oracle = 0.5 * sum * umax / n;
        CHECK(m.energy_density(q).value() == doctest::Approx(oracle).epsilon(1e-5));
      }
    }
    CHECK(DensityModel::shallow_water().energy_density(0.0).value() == 0.0);
    CHECK(DensityModel::custom(Expression::parse("1+0*Q", {"Q"})).energy_density(3.0).value() ==
          doctest::Approx(1.5).epsilon(1e-10));
  }
}
