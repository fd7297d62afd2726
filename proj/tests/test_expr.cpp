#include <doctest.h>

#include <cmath>
#include <random>

#include "streamline/expr.hpp"

using namespace streamline;

namespace {

double ev(const std::string& text, std::vector<double> x = {},
          std::vector<std::string> vars = {"x1", "x2", "x3"}) {
  x.resize(vars.size(), 0.0);
  auto v = Expression::parse(text, vars).eval(x);
  REQUIRE(v.has_value());
  return *v;
}

}  // namespace

TEST_SUITE("expr") {
  TEST_CASE("precedence and associativity") {
    CHECK(ev("2+3*4") == 14.0);
    CHECK(ev("(2+3)*4") == 20.0);
    CHECK(ev("2^3^2") == 512.0);
    CHECK(ev("-2^2") == -4.0);
    CHECK(ev("2^-1") == 0.5);
    CHECK(ev("8/4/2") == 1.0);
    CHECK(ev("1-2-3") == -4.0);
    CHECK(ev("1.5e2+2.5E-1") == 150.25);
    CHECK(ev("--3") == 3.0);
  }

  TEST_CASE("variables, aliases and functions") {
    CHECK(ev("x+2*y+3*z", {1, 2, 3}) == 14.0);
    CHECK(ev("x1*x2", {3, 4}) == 12.0);
    CHECK(ev("sin(x)^2+cos(x)^2", {0.7}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(ev("exp(log(x))", {2.5}) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(ev("sqrt(abs(x))", {-9}) == 3.0);
    CHECK(ev("Q*2", {4}, {"Q"}) == 8.0);
  }

  TEST_CASE("parse errors carry offsets") {
    auto offset = [](const std::string& s) {
      try {
        Expression::parse(s, {"x1", "x2"});
      } catch (const ParseError& e) {
        return static_cast<long>(e.offset());
      }
      return -1L;
    };
    CHECK(offset("") == 0);
    CHECK(offset("foo+1") == 0);
    CHECK(offset("1+bar") == 2);
    CHECK(offset("sin(x") >= 0);
    CHECK(offset("x)") >= 0);
    CHECK(offset("1+") >= 0);
    CHECK(offset("x $ y") == 2);
    CHECK(offset("()") >= 0);
    CHECK(offset("z") == 0);  // z needs x3
  }

  TEST_CASE("domain errors become nullopt") {
    const std::vector<std::string> v = {"x1"};
    auto at = [&](const std::string& s, double x) {
      const double p[1] = {x};
      return Expression::parse(s, v).eval(p);
    };
    CHECK_FALSE(at("log(x)", 0.0));
    CHECK_FALSE(at("log(x)", -1.0));
    CHECK_FALSE(at("sqrt(x)", -1e-300));
    CHECK_FALSE(at("1/x", 0.0));
    CHECK_FALSE(at("exp(x)", 1e6));
    CHECK(at("sqrt(x)", 0.0).value() == 0.0);
    CHECK(at("x^2", -3.0).value() == 9.0);
    CHECK_FALSE(at("x^0.5", -1.0));
  }

  TEST_CASE("parameters bind and report unbound names") {
    auto e = Expression::parse("R*x^2+c", {"x1"}, {"R", "c"});
    CHECK(e.unbound().size() == 2);
    const double p[1] = {3.0};
    CHECK_THROWS_AS(e.eval(p), std::invalid_argument);
    auto b = e.bind({{"R", 2.0}});
    CHECK(b.unbound() == std::vector<std::string>{"c"});
    auto all = b.bind({{"c", 1.0}});
    CHECK(all.unbound().empty());
    CHECK(all.eval(p).value() == 19.0);
  }

  TEST_CASE("wrong point dimension throws") {
    auto e = Expression::parse("x+y", {"x1", "x2"});
    const double p[1] = {1.0};
    CHECK_THROWS_AS(e.eval(p), std::invalid_argument);
  }

  TEST_CASE("to_string round-trips bit for bit") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (const char* s : {"x^2*sin(y)-3.25e-3/(1+x*y)", "-x^-2+exp(-y/3)", "sqrt(abs(x-y))*log(2+x)",
                          "(x+1)^(y/2)", "-(x)-(-y)"}) {
      auto e = Expression::parse(s, {"x1", "x2"});
      auto r = Expression::parse(e.to_string(), {"x1", "x2"});
      for (int k = 0; k < 20; ++k) {
        const double p[2] = {u(rng), u(rng)};
        CHECK(*e.eval(p) == *r.eval(p));
      }
    }
  }

  TEST_CASE("compose substitutes variables") {
    auto outer = Expression::parse("t^2+A*t", {"t"}, {"A"}).bind({{"A", 3.0}});
    auto inner = Expression::parse("x*y", {"x1", "x2"});
    auto c = outer.compose({inner});
    const double p[2] = {2.0, 5.0};
    CHECK(c.eval(p).value() == 130.0);
    CHECK(c.variables() == std::vector<std::string>{"x1", "x2"});
    auto id = Expression::parse("t", {"t"}).compose({inner});
    CHECK(id.eval(p).value() == 10.0);
  }

  TEST_CASE("jets match finite differences") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.2, 1.5);
    const std::vector<std::string> vars = {"x1", "x2", "x3"};
    for (const char* s : {"sin(x*y)*exp(z/2)", "x^3/(1+y^2)-sqrt(z+x)", "log(x+y)*cos(z)^2",
                          "x^y", "abs(x-3)*z^(-1.5)", "(x*x+y*y+z*z)^(-0.5)"}) {
      auto e = Expression::parse(s, vars);
      for (int k = 0; k < 10; ++k) {
        std::array<double, 3> x = {u(rng), u(rng), u(rng)};
        auto j = e.eval_jet2(x);
        REQUIRE(j.has_value());
        CHECK(j->value() == doctest::Approx(*e.eval(x)).epsilon(1e-14));
        const double h = 1e-4;
        for (int a = 0; a < 3; ++a) {
          auto xp = x, xm = x;
          xp[a] += h;
          xm[a] -= h;
          const double fd = (*e.eval(xp) - *e.eval(xm)) / (2 * h);
          CHECK(j->grad(a) == doctest::Approx(fd).epsilon(1e-6));
          for (int b = 0; b < 3; ++b) {
            auto jp = *e.eval_jet2(xp), jm = *e.eval_jet2(xm);
            const double fd2 = (jp.grad(b) - jm.grad(b)) / (2 * h);
            CHECK(j->hess(a, b) == doctest::Approx(fd2).epsilon(1e-6).scale(1.0));
          }
        }
      }
    }
  }

  TEST_CASE("jets reject non-differentiable points") {
    const std::vector<std::string> v = {"x1"};
    const double zero[1] = {0.0};
    CHECK_FALSE(Expression::parse("sqrt(x)", v).eval_jet2(zero));
    CHECK_FALSE(Expression::parse("abs(x)", v).eval_jet2(zero));
    const double neg[1] = {-2.0};
    CHECK_FALSE(Expression::parse("x^0.5", v).eval_jet2(neg));
    auto sq = Expression::parse("x^2", v).eval_jet2(neg);
    REQUIRE(sq);
    CHECK(sq->grad(0) == -4.0);
    CHECK(sq->hess(0, 0) == 2.0);
  }
}
