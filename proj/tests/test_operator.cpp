#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "obstakl/operator.hpp"
#include "obstakl/rng.hpp"

using namespace obstakl;

namespace {

/** Dense Gaussian elimination with partial pivoting, the oracle for Thomas. */
std::vector<double> dense_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    std::swap(A[col], A[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      double m = A[r][col] / A[col][col];
      if (m == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) A[r][c] -= m * A[col][c];
      b[r] -= m * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < n; ++c) s -= A[r][c] * x[c];
    x[r] = s / A[r][r];
  }
  return x;
}

std::vector<std::vector<double>> to_dense(std::span<const double> lo,
                                          std::span<const double> di,
                                          std::span<const double> up) {
  std::size_t n = di.size();
  std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    A[j][j] = di[j];
    if (j > 0) A[j][j - 1] = lo[j];
    if (j + 1 < n) A[j][j + 1] = up[j];
  }
  return A;
}

}  // namespace

TEST_CASE("constant coefficient stencil entries") {
  Grid g;
  g.x_min = 0.0;
  g.x_max = 1.0;
  g.nx = 9;  // dx = 0.1
  auto m = assemble(CoefficientField::constant(1.0, 0.0), 0.0, g);
  double dx = g.dx();
  CHECK(m.diag[4] == Catch::Approx(-1.0 / (dx * dx)));
  CHECK(m.lower[4] == Catch::Approx(0.5 / (dx * dx)));
  CHECK(m.upper[4] == Catch::Approx(0.5 / (dx * dx)));
  CHECK(m.upwind_rows == 0);
  // Dirichlet closure moved the edge couplings out of the bands
  CHECK(m.lower[0] == 0.0);
  CHECK(m.upper[8] == 0.0);
  CHECK(m.boundary_left == Catch::Approx(0.5 / (dx * dx)));
}

TEST_CASE("driftless assembly is symmetric for variable diffusivity") {
  Grid g;
  g.x_min = -2.0;
  g.x_max = 2.0;
  g.nx = 57;
  CoefficientField c;
  c.a = [](double, double x) { return 1.0 + 0.8 * std::sin(3.0 * x); };
  c.b = [](double, double) { return 0.0; };
  c.lambda = 0.2;
  c.Lambda = 1.8;
  auto m = assemble(c, 0.3, g);
  for (std::size_t j = 0; j + 1 < g.nx; ++j) CHECK(m.upper[j] == m.lower[j + 1]);
}

TEST_CASE("zero flux closure conserves constants") {
  Grid g;
  g.x_min = -1.0;
  g.x_max = 3.0;
  g.nx = 33;
  g.boundary = Boundary::neumann_zero;
  CoefficientField c;
  c.a = [](double, double x) { return 1.5 + std::sin(x); };
  c.b = [](double, double) { return 0.0; };
  c.lambda = 0.5;
  c.Lambda = 2.5;
  auto m = assemble(c, 0.0, g);
  std::vector<double> ones(g.nx, 1.0);
  auto lu = apply_operator(m, ones);
  for (double v : lu) CHECK(std::abs(v) < 1e-11);
}

TEST_CASE("discrete operator converges to L u at second order") {
  // L u = (1/2)(a u')' + b u' with a = 1 + x^2/4, b = 0.3 cos x, u = sin x.
  CoefficientField c;
  c.a = [](double, double x) { return 1.0 + 0.25 * x * x; };
  c.da_dx = [](double, double x) { return 0.5 * x; };
  c.b = [](double, double x) { return 0.3 * std::cos(x); };
  c.lambda = 1.0;
  c.Lambda = 2.0;
  auto exact = [&](double x) {
    double a = 1.0 + 0.25 * x * x, ap = 0.5 * x, b = 0.3 * std::cos(x);
    return 0.5 * (-a * std::sin(x) + ap * std::cos(x)) + b * std::cos(x);
  };
  std::vector<double> errs;
  for (std::size_t nx : {100u, 200u, 400u}) {
    Grid g;
    g.x_min = -2.0;
    g.x_max = 2.0;
    g.nx = nx;
    auto m = assemble(c, 0.0, g);
    REQUIRE(m.upwind_rows == 0);
    std::vector<double> u(nx);
    for (std::size_t j = 0; j < nx; ++j) u[j] = std::sin(g.x(j));
    auto lu = apply_operator(m, u, std::sin(g.x_min), std::sin(g.x_max));
    double worst = 0.0;
    for (std::size_t j = 0; j < nx; ++j)
      worst = std::max(worst, std::abs(lu[j] - exact(g.x(j))));
    errs.push_back(worst);
  }
  double slope1 = std::log2(errs[0] / errs[1]);
  double slope2 = std::log2(errs[1] / errs[2]);
  CHECK(slope1 >= 1.9);
  CHECK(slope2 >= 1.9);
}

TEST_CASE("strong advection switches rows to upwind and keeps the sign pattern") {
  Grid g;
  g.x_min = 0.0;
  g.x_max = 1.0;
  g.nx = 20;  // dx large enough that |b| dx / lambda > 2
  CoefficientField c;
  c.a = [](double, double) { return 0.01; };
  c.b = [](double, double x) { return x < 0.5 ? 3.0 : -3.0; };
  c.lambda = 0.01;
  c.Lambda = 3.0;
  auto m = assemble(c, 0.0, g);
  CHECK(m.upwind_rows == g.nx);
  for (std::size_t j = 0; j < g.nx; ++j) {
    CHECK(m.lower[j] >= 0.0);
    CHECK(m.upper[j] >= 0.0);
    CHECK(m.diag[j] < 0.0);
  }
}

TEST_CASE("thomas solve matches dense LU on the implicit step matrix") {
  Grid g;
  g.x_min = -1.0;
  g.x_max = 1.0;
  g.nx = 80;
  CoefficientField c;
  c.a = [](double, double x) { return 1.0 + 0.5 * std::cos(2.0 * x); };
  c.b = [](double, double x) { return 0.4 * std::sin(x); };
  c.lambda = 0.5;
  c.Lambda = 1.5;
  auto m = assemble(c, 0.1, g);
  auto A = shifted_system(m, 1e-3);

  RandomStream rng(99, 0);
  std::vector<double> rhs(g.nx);
  for (auto& r : rhs) r = rng.next_normal();

  auto tr = solve_tridiagonal(A.lower, A.diag, A.upper, rhs);
  REQUIRE(tr.diag_dominant);
  CHECK(tr.residual_inf <= 1e-10);

  auto oracle = dense_solve(to_dense(A.lower, A.diag, A.upper), rhs);
  for (std::size_t j = 0; j < g.nx; ++j)
    CHECK(tr.x[j] == Catch::Approx(oracle[j]).margin(1e-10));
}

TEST_CASE("thomas on the identity returns the rhs and flags dominance") {
  std::vector<double> lo(5, 0.0), di(5, 1.0), up(5, 0.0), rhs{1, -2, 3, -4, 5};
  auto tr = solve_tridiagonal(lo, di, up, rhs);
  REQUIRE(tr.diag_dominant);
  CHECK(tr.residual_inf == 0.0);
  for (std::size_t j = 0; j < 5; ++j) CHECK(tr.x[j] == rhs[j]);

  // a non dominant system is still solved, but reported as such
  std::vector<double> lo2{0, 1, 1}, di2{1, 1, 1}, up2{1, 1, 0}, r2{1, 1, 1};
  CHECK_FALSE(solve_tridiagonal(lo2, di2, up2, r2).diag_dominant);
}

TEST_CASE("implicit step matrix is inverse positive") {
  // (I - dt L) with the M-matrix sign pattern maps nonnegative data to
  // nonnegative solutions and contracts the max norm (row sums are 1).
  Grid g;
  g.x_min = -2.0;
  g.x_max = 2.0;
  g.nx = 60;
  CoefficientField c;
  c.a = [](double, double x) { return 1.0 + 0.3 * std::sin(5.0 * x); };
  c.b = [](double, double x) { return 0.5 * std::cos(3.0 * x); };
  c.lambda = 0.7;
  c.Lambda = 1.3;
  auto m = assemble(c, 0.0, g);
  auto A = shifted_system(m, 0.05);
  RandomStream rng(123, 0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> rhs(g.nx);
    double mx = 0.0;
    for (auto& r : rhs) {
      r = rng.next_uniform();
      mx = std::max(mx, r);
    }
    auto tr = solve_tridiagonal(A.lower, A.diag, A.upper, rhs);
    for (double v : tr.x) {
      CHECK(v >= -1e-12);
      CHECK(v <= mx + 1e-12);
    }
  }
}
