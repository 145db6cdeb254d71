#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "obstakl/norms.hpp"
#include "obstakl/rng.hpp"
#include "obstakl/types.hpp"

using namespace obstakl;

TEST_CASE("weight function basics") {
  CHECK(rho(0.0, 1.0) == 1.0);
  CHECK(rho(2.0, 1.0) == Catch::Approx(1.0 / 5.0));
  CHECK(rho(3.0, 0.0) == 1.0);
  // even, decreasing in |x|
  CHECK(rho(-1.7, 0.8) == rho(1.7, 0.8));
  CHECK(rho(2.0, 1.0) < rho(1.0, 1.0));
}

TEST_CASE("unweighted norm of the unit function is the domain measure") {
  // With alpha = 0 and the domain sized so the interior cells tile [0,1]
  // exactly (nx dx = 1), the norm of v = 1 is 1 with no quadrature error.
  Grid g;
  g.nx = 50;
  g.x_min = 0.0;
  g.x_max = 51.0 / 50.0;
  std::vector<double> v(g.nx, 1.0);
  CHECK(weighted_l2_norm(v, g, 0.0) == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(weighted_lp_norm(v, g, 0.0, 1.0) == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("weighted L2 norm against a fixed quadrature value") {
  // integral of sin(x)^2 (1+x^2)^-2 over [-6,6], computed once with
  // adaptive quadrature at 30 digits: 0.465289119895702189...
  const double expected = std::sqrt(0.465289119895702189);
  Grid g;
  g.x_min = -6.0;
  g.x_max = 6.0;
  g.nx = 6000;
  std::vector<double> v(g.nx);
  for (std::size_t j = 0; j < g.nx; ++j) v[j] = std::sin(g.x(j));
  // midpoint-style node sum converges at O(dx^2); at dx = 2e-3 that is ~1e-6
  CHECK(weighted_l2_norm(v, g, 1.0) == Catch::Approx(expected).epsilon(1e-5));
}

TEST_CASE("lp and l2 agree at p = 2") {
  Grid g;
  g.x_min = -3.0;
  g.x_max = 4.0;
  g.nx = 137;
  RandomStream rng(7, 0);
  std::vector<double> v(g.nx);
  for (auto& x : v) x = rng.next_normal();
  CHECK(weighted_lp_norm(v, g, 1.3, 2.0) ==
        Catch::Approx(weighted_l2_norm(v, g, 1.3)).epsilon(1e-13));
}

TEST_CASE("norms decrease as the weight sharpens") {
  Grid g;
  g.x_min = -5.0;
  g.x_max = 5.0;
  g.nx = 211;
  RandomStream rng(11, 0);
  std::vector<double> v(g.nx);
  for (auto& x : v) x = 1.0 + rng.next_uniform();
  double n0 = weighted_l2_norm(v, g, 0.6);
  double n1 = weighted_l2_norm(v, g, 1.0);
  double n2 = weighted_l2_norm(v, g, 2.0);
  CHECK(n0 > n1);
  CHECK(n1 > n2);
}

TEST_CASE("potential norm splits into sup and energy parts") {
  // u(t,x) = x has unit difference quotients everywhere, including the one
  // sided edge stencils, so the energy part collapses to sqrt(T) ||1||.
  Grid g;
  g.x_min = 0.0;
  g.x_max = 1.0;
  g.nx = 40;
  g.nt = 17;
  double T = 0.9;
  DiscreteSolution sol(g, T);
  for (std::size_t k = 0; k <= g.nt; ++k)
    for (std::size_t j = 0; j < g.nx; ++j) sol.level(k)[j] = g.x(j);
  sol.refresh_gradient_all();

  std::vector<double> xs(g.nx), ones(g.nx, 1.0);
  for (std::size_t j = 0; j < g.nx; ++j) xs[j] = g.x(j);
  double expected =
      weighted_l2_norm(xs, g, 0.0) + std::sqrt(T) * weighted_l2_norm(ones, g, 0.0);
  CHECK(potential_norm(sol, 0.0) == Catch::Approx(expected).epsilon(1e-13));
}

TEST_CASE("gradient stencil is exact on affine levels and second order else") {
  Grid g;
  g.x_min = -1.0;
  g.x_max = 2.0;
  g.nt = 1;
  double worst_fine = 0.0, worst_coarse = 0.0;
  for (std::size_t nx : {100u, 200u}) {
    g.nx = nx;
    DiscreteSolution sol(g, 1.0);
    for (std::size_t j = 0; j < g.nx; ++j) sol.level(0)[j] = std::cos(g.x(j));
    sol.refresh_gradient(0);
    double worst = 0.0;
    // interior only; the one sided edges are first order by design
    for (std::size_t j = 1; j + 1 < g.nx; ++j)
      worst = std::max(worst, std::abs(sol.grad_level(0)[j] + std::sin(g.x(j))));
    (nx == 100u ? worst_coarse : worst_fine) = worst;
  }
  CHECK(worst_fine < worst_coarse / 3.5);  // ~4x for a second order stencil
}
