#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "obstakl/kernel.hpp"

using namespace obstakl;

namespace {

ObstacleProblemSpec put_spec() {
  ObstacleProblemSpec spec;
  spec.coeffs = CoefficientField::constant(0.09, 0.0);
  spec.gen.f = [](double, double, double y, double) { return -0.05 * y; };
  spec.gen.lipschitz_L = 0.05;
  spec.phi = [](double x) { return std::max(1.0 - x, 0.0); };
  spec.h = [](double, double x) { return std::max(1.0 - x, 0.0); };
  spec.T = 1.0;
  spec.alpha = 1.0;
  return spec;
}

}  // namespace

TEST_CASE("kernel mass agrees with the Gaussian tail formula") {
  GaussianKernel kernel{0.09, 0.0};
  for (double t : {0.1, 0.5, 1.0}) {
    for (double x : {-0.5, 0.6, 1.3}) {
      double q = kernel_normalization(kernel, 0.0, x, t, -4.0, 4.0);
      double tail = kernel.tail_bound(0.0, x, t, -4.0, 4.0);
      REQUIRE(q == Catch::Approx(1.0 - tail).margin(1e-12));
      REQUIRE(tail < 1e-8);
    }
  }

  GaussianKernel drifted{1.0, 0.3};
  double mean = 0.0, dy = 24.0 / 20000;
  for (std::size_t i = 0; i < 20000; ++i) {
    double y = -12.0 + (i + 0.5) * dy;
    mean += y * drifted.density(0.0, 0.5, 2.0, y) * dy;
  }
  REQUIRE(mean == Catch::Approx(0.5 + 0.3 * 2.0).margin(1e-10));
}

TEST_CASE("representation formula constants") {
  GaussianKernel kernel{1.0, 0.0};
  DiscreteMeasure empty;
  empty.grid = Grid{-10.0, 10.0, 10, 10, Boundary::dirichlet_zero};
  empty.T = 1.0;

  double one = feynman_kac_linear([](double) { return 1.0; },
                                  [](double, double) { return 0.0; }, empty, kernel,
                                  0.0, 0.2, 1.0, -10.0, 10.0);
  REQUIRE(one == Catch::Approx(1.0).margin(1e-9));

  double lin = feynman_kac_linear([](double) { return 0.0; },
                                  [](double, double) { return 1.0; }, empty, kernel,
                                  0.25, 0.2, 1.0, -10.0, 10.0);
  REQUIRE(lin == Catch::Approx(0.75).margin(1e-9));

  REQUIRE(std::isnan(feynman_kac_linear([](double) { return 1.0; },
                                        [](double, double) { return 0.0; }, empty,
                                        kernel, 1.0, 0.0, 1.0, -10.0, 10.0)));
}

TEST_CASE("gaussian terminal data reproduces the closed-form convolution") {
  GaussianKernel kernel{1.0, 0.0};
  DiscreteMeasure empty;
  empty.grid = Grid{-12.0, 12.0, 10, 10, Boundary::dirichlet_zero};
  empty.T = 2.0;
  auto phi = [](double y) { return std::exp(-y * y); };
  for (double s : {0.0, 0.7, 1.5}) {
    for (double x : {-1.0, 0.0, 0.8}) {
      double got = feynman_kac_linear(phi, [](double, double) { return 0.0; }, empty,
                                      kernel, s, x, 2.0, -12.0, 12.0);
      double tau = 2.0 - s;
      double want = std::exp(-x * x / (1.0 + 2.0 * tau)) / std::sqrt(1.0 + 2.0 * tau);
      REQUIRE(got == Catch::Approx(want).margin(1e-8));
    }
  }
}

TEST_CASE("kernel representation reconstructs the obstacle solve") {
  auto spec = put_spec();
  Grid grid{-3.0, 5.0, 400, 400, Boundary::dirichlet_obstacle};
  auto lcp = solve_lcp(spec, grid);
  REQUIRE(lcp.report.converged);

  GaussianKernel kernel{0.09, 0.0};
  auto f_src = [&](double t, double x) {
    std::size_t k = static_cast<std::size_t>(
        std::min(t / lcp.sol.dt(), static_cast<double>(grid.nt)));
    return -0.05 * lcp.sol.interp(k, x);
  };
  double band = 5.0 * (grid.dx() + spec.T / static_cast<double>(grid.nt));
  for (double x : {0.4, 0.8, 1.0, 1.4}) {
    double rec = feynman_kac_linear(spec.phi, f_src, lcp.mu, kernel, 0.0, x, spec.T,
                                    -3.0, 5.0);
    REQUIRE(rec == Catch::Approx(lcp.sol.interp(0, x)).margin(std::max(2e-2, band)));
  }
}

namespace {

struct RevuzFixture {
  ObstacleProblemSpec spec;
  Grid grid;
  LcpResult lcp;
  PathEnsemble ens;
  RbsdeEnsemble rb;
  BsdeOptions opts;
};

// shared across the sections below; building it once keeps the suite quick
const RevuzFixture& revuz_fixture() {
  static const RevuzFixture fix = [] {
    RevuzFixture f;
    f.spec = put_spec();
    f.grid = Grid{-3.0, 5.0, 200, 200, Boundary::dirichlet_obstacle};
    f.lcp = solve_lcp(f.spec, f.grid);
    f.ens = simulate_paths(f.spec.coeffs, 0.0, 1.0, f.spec.T, 20000, 200, 271);
    f.opts.basis_degree = 6;
    f.rb = reflected_bsde(f.spec, f.ens, f.opts);
    return f;
  }();
  return fix;
}

}  // namespace

TEST_CASE("compensator average matches the kernel-weighted measure") {
  const RevuzFixture& fix = revuz_fixture();
  const auto& spec = fix.spec;
  const auto& grid = fix.grid;
  const auto& lcp = fix.lcp;
  const auto& ens = fix.ens;
  const auto& rb = fix.rb;
  const auto& opts = fix.opts;
  GaussianKernel kernel{0.09, 0.0};

  double band = 2.0 * (grid.dx() + spec.T / static_cast<double>(grid.nt));

  SECTION("zero test function is exact on both sides") {
    auto rep = revuz_check(lcp.mu, ens, rb, kernel,
                           [](double, double) { return 0.0; }, 0.0, 1.0);
    REQUIRE(rep.ok);
    REQUIRE(rep.lhs == 0.0);
    REQUIRE(rep.rhs == 0.0);
  }

  SECTION("constant and bump test functions agree within the band") {
    auto one = revuz_check(lcp.mu, ens, rb, kernel,
                           [](double, double) { return 1.0; }, 0.0, 1.0);
    REQUIRE(one.ok);
    REQUIRE(one.lhs > 0.0);
    REQUIRE(std::abs(one.difference) < 3.0 * one.se + band);

    auto bump = revuz_check(
        lcp.mu, ens, rb, kernel,
        [](double, double x) { return std::exp(-(x - 0.6) * (x - 0.6) / 0.05); }, 0.0,
        1.0);
    REQUIRE(bump.ok);
    REQUIRE(std::abs(bump.difference) < 3.0 * bump.se + band);
  }

  SECTION("unconstrained instance puts zero mass on both sides") {
    ObstacleProblemSpec free_spec = spec;
    free_spec.h = nullptr;
    auto free_lcp = solve_lcp(free_spec, grid);
    RbsdeEnsemble free_rb = reflected_bsde(free_spec, ens, opts);
    auto rep = revuz_check(free_lcp.mu, ens, free_rb, kernel,
                           [](double, double) { return 1.0; }, 0.0, 1.0);
    REQUIRE(rep.ok);
    REQUIRE(rep.lhs == 0.0);
    REQUIRE(rep.rhs == 0.0);
  }

  SECTION("mismatched shapes are refused") {
    auto small = simulate_paths(spec.coeffs, 0.0, 1.0, spec.T, 50, 10, 1);
    auto rep = revuz_check(lcp.mu, small, rb, kernel,
                           [](double, double) { return 1.0; }, 0.0, 1.0);
    REQUIRE_FALSE(rep.ok);
  }
}

TEST_CASE("admissibility diagnostic") {
  Grid grid{-8.0, 8.0, 160, 50, Boundary::neumann_zero};

  SECTION("nonpositive obstacles give zero exactly") {
    ObstacleProblemSpec spec;
    spec.coeffs = CoefficientField::constant(1.0, 0.0);
    spec.gen.f = [](double, double, double, double) { return 0.0; };
    spec.phi = [](double x) { return x * x; };
    spec.h = [](double, double x) { return -1.0 - x * x; };
    spec.T = 1.0;
    auto est = h3_estimator(spec, grid, 64, 16, 9);
    REQUIRE(est.value == 0.0);
    for (double v : est.values) REQUIRE(v == 0.0);
  }

  SECTION("constant obstacle reduces to the weight integral") {
    ObstacleProblemSpec spec;
    spec.coeffs = CoefficientField::constant(1.0, 0.0);
    spec.gen.f = [](double, double, double, double) { return 0.0; };
    spec.phi = [](double) { return 2.0; };
    spec.h = [](double, double) { return 1.0; };
    spec.T = 1.0;
    spec.alpha = 1.0;
    auto est = h3_estimator(spec, grid, 256, 16, 9);

    // max_k of a constant is deterministic, so the MC error vanishes and the
    // estimate is the plain weight sum; 1.56951825532505826 is the exact
    // integral of (1+x^2)^-2 over [-8,8], approached at O(dx^2)
    REQUIRE(est.se == 0.0);
    REQUIRE(est.value == Catch::Approx(1.56951825532505826).margin(2e-3));

    double riemann = 0.0;
    for (std::size_t j = 0; j < grid.nx; ++j) {
      double w = rho(grid.x(j), 1.0);
      riemann += w * w * grid.dx();
    }
    REQUIRE(est.value == riemann);
    for (std::size_t i = 0; i < est.values.size(); ++i)
      REQUIRE(est.values[i] == riemann);
  }

  SECTION("bounded obstacle estimate is stable under N doubling") {
    ObstacleProblemSpec spec;
    spec.coeffs = CoefficientField::constant(1.0, 0.0);
    spec.gen.f = [](double, double, double, double) { return 0.0; };
    spec.phi = [](double x) { return std::exp(-x * x); };
    spec.h = [](double t, double x) { return (0.5 + 0.2 * t) * std::exp(-x * x); };
    spec.T = 1.0;
    spec.alpha = 1.0;
    auto a = h3_estimator(spec, grid, 200, 24, 9);
    auto b = h3_estimator(spec, grid, 400, 24, 9);
    REQUIRE(a.value > 0.0);
    REQUIRE(std::abs(a.value - b.value) < 0.1 * std::max(a.value, b.value));
    REQUIRE(a.se > 0.0);
    REQUIRE(a.start_times.size() == 4);
  }
}
