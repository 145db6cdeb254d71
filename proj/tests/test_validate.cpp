#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "obstakl/validate.hpp"

using namespace obstakl;

namespace {

ObstacleProblemSpec sane_spec() {
  ObstacleProblemSpec s;
  s.coeffs.a = [](double, double x) { return 1.0 + 0.5 * std::sin(x); };
  s.coeffs.b = [](double, double) { return 0.2; };
  s.coeffs.lambda = 0.5;
  s.coeffs.Lambda = 1.5;
  s.gen.f = [](double, double, double y, double) { return -0.5 * y + 1.0; };
  s.gen.g = [](double, double) { return 1.0; };
  s.gen.lipschitz_L = 0.5;
  // 1/(1+x^2) >= (1/2) e^{-x^2} everywhere, so phi clears the obstacle at T
  s.phi = [](double x) { return 1.0 / (1.0 + x * x); };
  s.h = [](double, double x) { return 0.5 * std::exp(-x * x); };
  s.T = 1.0;
  s.alpha = 1.0;
  return s;
}

Grid sane_grid() {
  Grid g;
  g.x_min = -4.0;
  g.x_max = 4.0;
  g.nx = 64;
  g.nt = 32;
  return g;
}

bool has_issue(const ValidationReport& r, const std::string& code) {
  for (const auto& i : r.issues)
    if (i.code == code) return true;
  return false;
}

}  // namespace

TEST_CASE("a consistent spec validates cleanly") {
  auto rep = validate_spec(sane_spec(), sane_grid());
  INFO(rep.summary());
  CHECK(rep.ok());
}

TEST_CASE("validation is deterministic in the seed") {
  auto s = sane_spec();
  s.coeffs.lambda = 1.2;  // a dips to 0.5, so the lower bound fails sometimes
  auto r1 = validate_spec(s, sane_grid(), 42);
  auto r2 = validate_spec(s, sane_grid(), 42);
  REQUIRE(r1.issues.size() == r2.issues.size());
  for (std::size_t i = 0; i < r1.issues.size(); ++i) {
    CHECK(r1.issues[i].code == r2.issues[i].code);
    CHECK(r1.issues[i].message == r2.issues[i].message);
  }
}

TEST_CASE("ellipticity violations are caught with a witness") {
  auto s = sane_spec();
  s.coeffs.lambda = 1.2;
  auto rep = validate_spec(s, sane_grid());
  CHECK(has_issue(rep, "ellipticity.lower"));

  s = sane_spec();
  s.coeffs.Lambda = 1.2;  // a reaches 1.5
  rep = validate_spec(s, sane_grid());
  CHECK(has_issue(rep, "ellipticity.upper"));
}

TEST_CASE("drift bound is checked against Lambda") {
  auto s = sane_spec();
  s.coeffs.b = [](double, double) { return 2.0; };
  auto rep = validate_spec(s, sane_grid());
  CHECK(has_issue(rep, "drift.bound"));
}

TEST_CASE("generator Lipschitz and growth claims are probed") {
  auto s = sane_spec();
  s.gen.lipschitz_L = 0.1;  // actual slope in y is 0.5
  auto rep = validate_spec(s, sane_grid());
  CHECK(has_issue(rep, "generator.lipschitz"));

  s = sane_spec();
  s.gen.g = [](double, double) { return 0.1; };  // |f(.,0,0)| = 1
  rep = validate_spec(s, sane_grid());
  CHECK(has_issue(rep, "generator.growth"));
}

TEST_CASE("terminal condition must dominate the obstacle at T") {
  auto s = sane_spec();
  s.phi = [](double) { return 0.0; };  // h(T,0) = 0.5 > 0
  auto rep = validate_spec(s, sane_grid());
  CHECK(has_issue(rep, "terminal.compatibility"));

  // an unconstrained problem has nothing to check there
  s.h = nullptr;
  rep = validate_spec(s, sane_grid());
  CHECK(rep.ok());
}

TEST_CASE("weight exponent must make rho^2 integrable") {
  auto s = sane_spec();
  s.alpha = 0.5;
  auto rep = validate_spec(s, sane_grid());
  CHECK(has_issue(rep, "weight.alpha"));
}

TEST_CASE("degenerate grids are rejected before sampling") {
  auto s = sane_spec();
  Grid g = sane_grid();
  g.x_min = g.x_max;
  CHECK(has_issue(validate_spec(s, g), "grid.domain"));
  g = sane_grid();
  g.nx = 2;
  CHECK(has_issue(validate_spec(s, g), "grid.nx"));
  g = sane_grid();
  g.nt = 1;
  CHECK(has_issue(validate_spec(s, g), "grid.nt"));
}
