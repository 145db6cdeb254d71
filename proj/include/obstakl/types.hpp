#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace obstakl {

/**
 * Problem data for the one dimensional obstacle problem in divergence form:
 *
 *   min( u - h, -du/dt - L_t u - f(t,x,u,sigma*du/dx) ) = 0,   u(T,.) = phi,
 *
 * with L_t u = (1/2) d/dx( a(t,x) du/dx ) + b(t,x) du/dx. The one-half sits
 * inside the operator, so the matching forward diffusion uses sigma^2 = a,
 * not a/2. Solutions are sought in weighted spaces with weight
 * rho(x) = (1+x^2)^{-alpha}; all norms use rho^2 as the integration density.
 */

/** Value of h used to mark "no obstacle below this node". */
inline constexpr double kNoObstacle = -1e300;

/** A time level at or below this is treated as unconstrained. */
inline bool is_unconstrained(double h_value) { return h_value <= 0.5 * kNoObstacle; }

using ScalarField2 = std::function<double(double t, double x)>;
using TerminalField = std::function<double(double x)>;
using Driver = std::function<double(double t, double x, double y, double z)>;

/**
 * Diffusion a and drift b with their uniform bounds:
 * lambda <= a(t,x) <= Lambda and |b(t,x)| <= Lambda everywhere.
 * da_dx is optional; when absent, div(a) corrections fall back to a central
 * finite difference of a.
 */
struct CoefficientField {
  ScalarField2 a;
  ScalarField2 b;
  ScalarField2 da_dx;  // may be null
  double lambda = 1.0;
  double Lambda = 1.0;

  static CoefficientField constant(double a0, double b0) {
    CoefficientField c;
    c.a = [a0](double, double) { return a0; };
    c.b = [b0](double, double) { return b0; };
    c.da_dx = [](double, double) { return 0.0; };
    c.lambda = a0;
    c.Lambda = std::max(a0, std::abs(b0));
    return c;
  }

  /** d(a)/dx at (t,x); analytic if provided, else central FD with step fd_step. */
  double div_a(double t, double x, double fd_step) const {
    if (da_dx) return da_dx(t, x);
    return (a(t, x + fd_step) - a(t, x - fd_step)) / (2.0 * fd_step);
  }
};

/**
 * Right-hand side f(t,x,y,z) together with its declared Lipschitz constant in
 * (y,z) and an integrability envelope g with |f(t,x,0,0)| <= g(t,x).
 */
struct GeneratorSpec {
  Driver f;
  ScalarField2 g;
  double lipschitz_L = 0.0;
};

enum class Boundary {
  dirichlet_obstacle,  // u = max(h, 0) on the cut
  dirichlet_zero,      // u = 0
  neumann_zero,        // zero flux
};

/** Uniform space-time grid on [0,T] x [x_min,x_max], interior nodes only. */
struct Grid {
  double x_min = -1.0;
  double x_max = 1.0;
  std::size_t nx = 100;  // interior nodes
  std::size_t nt = 100;  // time steps
  Boundary boundary = Boundary::dirichlet_obstacle;

  double dx() const { return (x_max - x_min) / static_cast<double>(nx + 1); }
  double x(std::size_t j) const { return x_min + static_cast<double>(j + 1) * dx(); }
};

struct ObstacleProblemSpec {
  CoefficientField coeffs;
  GeneratorSpec gen;
  TerminalField phi;
  ScalarField2 h;  // null means unconstrained
  double T = 1.0;
  double alpha = 1.0;

  bool has_obstacle() const { return static_cast<bool>(h); }

  /** Obstacle value with the unconstrained sentinel for a missing h. */
  double obstacle(double t, double x) const {
    return h ? h(t, x) : kNoObstacle;
  }
};

/**
 * Grid function u over all time levels, row k holding u(t_k, x_j) at interior
 * nodes, plus the spatial difference quotients grad_u maintained alongside.
 */
struct DiscreteSolution {
  Grid grid;
  double T = 1.0;
  std::vector<double> u;       // (nt+1) * nx, row-major in k
  std::vector<double> grad_u;  // same layout

  DiscreteSolution() = default;
  DiscreteSolution(const Grid& g, double T_) : grid(g), T(T_) {
    u.assign((g.nt + 1) * g.nx, 0.0);
    grad_u.assign((g.nt + 1) * g.nx, 0.0);
  }

  double dt() const { return T / static_cast<double>(grid.nt); }
  double t(std::size_t k) const { return static_cast<double>(k) * dt(); }

  std::span<double> level(std::size_t k) {
    return std::span<double>(u).subspan(k * grid.nx, grid.nx);
  }
  std::span<const double> level(std::size_t k) const {
    return std::span<const double>(u).subspan(k * grid.nx, grid.nx);
  }
  std::span<double> grad_level(std::size_t k) {
    return std::span<double>(grad_u).subspan(k * grid.nx, grid.nx);
  }
  std::span<const double> grad_level(std::size_t k) const {
    return std::span<const double>(grad_u).subspan(k * grid.nx, grid.nx);
  }

  /**
   * Refresh grad_u from u: central differences at interior nodes, one sided
   * at the two nodes next to the cut (boundary values are not stored).
   */
  void refresh_gradient(std::size_t k) {
    auto uk = level(k);
    auto gk = grad_level(k);
    std::size_t nx = grid.nx;
    double dx = grid.dx();
    if (nx == 1) {
      gk[0] = 0.0;
      return;
    }
    gk[0] = (uk[1] - uk[0]) / dx;
    for (std::size_t j = 1; j + 1 < nx; ++j) gk[j] = (uk[j + 1] - uk[j - 1]) / (2.0 * dx);
    gk[nx - 1] = (uk[nx - 1] - uk[nx - 2]) / dx;
  }
  void refresh_gradient_all() {
    for (std::size_t k = 0; k <= grid.nt; ++k) refresh_gradient(k);
  }

  /** Linear interpolation of u(t_k, .) at x, clamped to the node range. */
  double interp(std::size_t k, double x) const {
    auto uk = level(k);
    double dx = grid.dx();
    double s = (x - grid.x(0)) / dx;
    if (s <= 0.0) return uk[0];
    if (s >= static_cast<double>(grid.nx - 1)) return uk[grid.nx - 1];
    std::size_t j = static_cast<std::size_t>(s);
    double w = s - static_cast<double>(j);
    return (1.0 - w) * uk[j] + w * uk[j + 1];
  }
};

}  // namespace obstakl
