#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>

#include "obstakl/paths.hpp"
#include "obstakl/vi.hpp"

using namespace obstakl;

namespace {

ObstacleProblemSpec sine_diffusion_spec() {
  ObstacleProblemSpec spec;
  spec.coeffs.a = [](double, double x) { return 1.0 + 0.5 * std::sin(x); };
  spec.coeffs.b = [](double, double) { return 0.0; };
  spec.coeffs.da_dx = [](double, double x) { return 0.5 * std::cos(x); };
  spec.coeffs.lambda = 0.5;
  spec.coeffs.Lambda = 1.5;
  spec.gen.f = [](double, double, double, double) { return 0.0; };
  spec.gen.lipschitz_L = 0.0;
  spec.phi = [](double x) { return x; };
  spec.T = 1.0;
  spec.alpha = 1.0;
  return spec;
}

}  // namespace

TEST_CASE("unit diffusion reproduces Brownian statistics") {
  auto coeffs = CoefficientField::constant(1.0, 0.0);
  auto ens = simulate_paths(coeffs, 0.0, 0.0, 1.0, 100000, 8, 42);

  for (std::size_t p = 0; p < ens.n_paths; p += 997)
    REQUIRE(ens.path(p)[0] == 0.0);

  auto est = terminal_estimate(ens, [](double x) { return x; });
  REQUIRE(std::abs(est.mean) < 3.0 / std::sqrt(1e5));

  auto var = terminal_estimate(ens, [](double x) { return x * x; });
  REQUIRE(var.mean == Catch::Approx(1.0).margin(0.05));
  REQUIRE(est.se > 0.0);
}

TEST_CASE("scaled diffusion has variance a T") {
  auto coeffs = CoefficientField::constant(4.0, 0.0);
  auto ens = simulate_paths(coeffs, 0.0, 0.0, 1.0, 100000, 8, 7);
  auto var = terminal_estimate(ens, [](double x) { return x * x; });
  REQUIRE(var.mean == Catch::Approx(4.0).margin(0.2));
}

TEST_CASE("constant-sigma increments reconstruct the path exactly") {
  auto coeffs = CoefficientField::constant(4.0, 0.1);
  auto ens = simulate_paths(coeffs, 0.0, 0.5, 1.0, 16, 32, 3);
  double dt = ens.dt();
  for (std::size_t p = 0; p < ens.n_paths; ++p) {
    auto xs = ens.path(p);
    auto ws = ens.increments(p);
    for (std::size_t k = 0; k < ens.n_steps; ++k) {
      double step = xs[k] + 0.1 * dt + 2.0 * ws[k];
      REQUIRE(xs[k + 1] == step);
    }
  }
}

TEST_CASE("ensembles are bit-identical across seeds and thread counts") {
  auto spec = sine_diffusion_spec();
  PathOptions one, four;
  one.threads = 1;
  four.threads = 4;
  auto e1 = simulate_paths(spec.coeffs, 0.0, 0.3, 1.0, 20000, 25, 99, one);
  auto e4 = simulate_paths(spec.coeffs, 0.0, 0.3, 1.0, 20000, 25, 99, four);
  REQUIRE(e1.x == e4.x);
  REQUIRE(e1.dw == e4.dw);

  auto m1 = terminal_estimate(e1, [](double x) { return std::sin(x); }, 1);
  auto m4 = terminal_estimate(e4, [](double x) { return std::sin(x); }, 4);
  REQUIRE(m1.mean == m4.mean);
  REQUIRE(m1.se == m4.se);

  auto other = simulate_paths(spec.coeffs, 0.0, 0.3, 1.0, 20000, 25, 100, one);
  REQUIRE(e1.x != other.x);
}

TEST_CASE("divergence drift correction matches the PDE backend") {
  auto spec = sine_diffusion_spec();
  const double x0 = 0.3;

  Grid grid{-8.0, 8.0, 400, 200, Boundary::dirichlet_zero};
  auto pde = solve_lcp(spec, grid);
  REQUIRE(pde.report.converged);
  double u_pde = pde.sol.interp(0, x0);

  auto ens = simulate_paths(spec.coeffs, 0.0, x0, spec.T, 200000, 200, 2024);
  auto mc = terminal_estimate(ens, spec.phi);

  // this is exactly the test the Ito-vs-divergence drift distinction lives in:
  // without the 0.5 a_x term the mean would sit near x0 instead
  REQUIRE(std::abs(mc.mean - u_pde) < 3.0 * mc.se + 2e-3);

  PathOptions raw;
  raw.disable_drift_correction = true;
  auto plain = simulate_paths(spec.coeffs, 0.0, x0, spec.T, 200000, 200, 2024, raw);
  auto mc0 = terminal_estimate(plain, spec.phi);
  REQUIRE(std::abs(mc0.mean - x0) < 3.0 * mc0.se);
  REQUIRE(std::abs(mc.mean - mc0.mean) > 10.0 * (mc.se + mc0.se));
}

TEST_CASE("finite-difference div a fallback tracks the analytic derivative") {
  auto spec = sine_diffusion_spec();
  CoefficientField fd = spec.coeffs;
  fd.da_dx = nullptr;
  auto ea = simulate_paths(spec.coeffs, 0.0, 0.3, 1.0, 500, 50, 11);
  auto ef = simulate_paths(fd, 0.0, 0.3, 1.0, 500, 50, 11);
  double worst = 0.0;
  for (std::size_t i = 0; i < ea.x.size(); ++i)
    worst = std::max(worst, std::abs(ea.x[i] - ef.x[i]));
  REQUIRE(worst < 1e-6);
  REQUIRE(ea.dw == ef.dw);
}

TEST_CASE("terminal estimate recovers the second moment of Brownian motion") {
  auto coeffs = CoefficientField::constant(1.0, 0.0);
  auto ens = simulate_paths(coeffs, 0.25, 0.0, 1.25, 50000, 40, 5);
  auto est = terminal_estimate(ens, [](double x) { return x * x; });
  REQUIRE(std::abs(est.mean - 1.0) < 3.0 * est.se + 1e-3);
  REQUIRE(est.se < 0.01);
}
