#pragma once

#include <cmath>
#include <span>

#include "obstakl/types.hpp"

namespace obstakl {

/** Weight rho(x) = (1 + x^2)^(-alpha). Integrable density rho^2 needs alpha > 1/2. */
inline double rho(double x, double alpha) {
  return std::pow(1.0 + x * x, -alpha);
}

/**
 * || v ||_{p,rho} = ( sum_j |v_j|^p rho(x_j)^2 dx )^(1/p) over interior nodes.
 * The density is rho squared for every p, matching the L_2 case exactly.
 */
inline double weighted_lp_norm(std::span<const double> v, const Grid& grid,
                               double alpha, double p) {
  double dx = grid.dx();
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    double w = rho(grid.x(j), alpha);
    s += std::pow(std::abs(v[j]), p) * w * w * dx;
  }
  return std::pow(s, 1.0 / p);
}

inline double weighted_l2_norm(std::span<const double> v, const Grid& grid,
                               double alpha) {
  double dx = grid.dx();
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    double w = rho(grid.x(j), alpha);
    s += v[j] * v[j] * w * w * dx;
  }
  return std::sqrt(s);
}

/**
 * Parabolic energy norm of a grid function:
 * max_k ||u(t_k)||_{2,rho} + sqrt( sum_{k<nt} ||grad u(t_k)||^2_{2,rho} dt ).
 * The time sum is the left rectangle rule, so nt terms cover [0,T].
 */
inline double potential_norm(const DiscreteSolution& sol, double alpha) {
  double sup = 0.0;
  double energy = 0.0;
  for (std::size_t k = 0; k <= sol.grid.nt; ++k) {
    double nk = weighted_l2_norm(sol.level(k), sol.grid, alpha);
    if (nk > sup) sup = nk;
    if (k < sol.grid.nt) {
      double gk = weighted_l2_norm(sol.grad_level(k), sol.grid, alpha);
      energy += gk * gk * sol.dt();
    }
  }
  return sup + std::sqrt(energy);
}

/** Supremum over all levels and nodes of |u1 - u2| (grids must match). */
inline double sup_distance(const DiscreteSolution& a, const DiscreteSolution& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.u.size(); ++i)
    m = std::max(m, std::abs(a.u[i] - b.u[i]));
  return m;
}

}  // namespace obstakl
