#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "obstakl/types.hpp"

namespace obstakl {

/**
 * Conservative three point discretization of
 *   L u = (1/2) d/dx( a du/dx ) + b du/dx
 * at one time level, with the boundary closure already folded in:
 *
 *   (L u)_j = lower_j u_{j-1} + diag_j u_j + upper_j u_{j+1}
 *
 * for interior nodes j = 0..nx-1. Face diffusivities are arithmetic means of
 * the node values. The advection term is centered unless the cell Peclet
 * number |b| dx / lambda exceeds 2 (or the face diffusivity is too small to
 * keep the off-diagonal signs), in which case that row switches to first
 * order upwinding; `upwind_rows` counts the switches for the solve report.
 *
 * Under a Dirichlet closure, lower_0 and upper_{nx-1} are zeroed and the
 * couplings to the boundary values are kept in boundary_left/right. Under
 * the zero flux closure the boundary face flux is dropped and the advection
 * ghost mirrors the edge node, which folds into diag.
 */
struct OperatorMatrix {
  std::vector<double> lower, diag, upper;
  double boundary_left = 0.0;   // coefficient of u(x_min) in row 0
  double boundary_right = 0.0;  // coefficient of u(x_max) in row nx-1
  std::size_t upwind_rows = 0;
  double dx = 0.0;

  std::size_t size() const { return diag.size(); }
};

inline OperatorMatrix assemble(const CoefficientField& coeffs, double t, const Grid& grid) {
  const std::size_t nx = grid.nx;
  const double dx = grid.dx();
  OperatorMatrix m;
  m.dx = dx;
  m.lower.assign(nx, 0.0);
  m.diag.assign(nx, 0.0);
  m.upper.assign(nx, 0.0);

  // Node diffusivities including the two boundary nodes, for face averages.
  std::vector<double> a_node(nx + 2);
  for (std::size_t i = 0; i < nx + 2; ++i)
    a_node[i] = coeffs.a(t, grid.x_min + static_cast<double>(i) * dx);

  for (std::size_t j = 0; j < nx; ++j) {
    double a_m = 0.5 * (a_node[j] + a_node[j + 1]);      // face x_{j-1/2}
    double a_p = 0.5 * (a_node[j + 1] + a_node[j + 2]);  // face x_{j+1/2}
    double b = coeffs.b(t, grid.x(j));
    double lo = 0.5 * a_m / (dx * dx);
    double up = 0.5 * a_p / (dx * dx);
    double di = -(lo + up);
    bool upwind = std::abs(b) * dx / coeffs.lambda > 2.0 ||
                  std::abs(b) * dx > std::min(a_m, a_p);
    if (!upwind) {
      lo -= b / (2.0 * dx);
      up += b / (2.0 * dx);
    } else {
      ++m.upwind_rows;
      if (b >= 0.0) {
        up += b / dx;
        di -= b / dx;
      } else {
        lo -= b / dx;
        di += b / dx;
      }
    }
    m.lower[j] = lo;
    m.diag[j] = di;
    m.upper[j] = up;
  }

  if (grid.boundary == Boundary::neumann_zero) {
    // Zero flux: drop the boundary face flux from the edge rows, and fold
    // the advective ghost coupling into diag (ghost mirrors the edge node).
    double a_m0 = 0.5 * (a_node[0] + a_node[1]);
    double a_pn = 0.5 * (a_node[nx] + a_node[nx + 1]);
    m.diag[0] += 0.5 * a_m0 / (dx * dx);               // remove left face flux
    m.diag[0] += m.lower[0] - 0.5 * a_m0 / (dx * dx);  // ghost u_{-1} = u_0
    m.lower[0] = 0.0;
    m.diag[nx - 1] += 0.5 * a_pn / (dx * dx);
    m.diag[nx - 1] += m.upper[nx - 1] - 0.5 * a_pn / (dx * dx);
    m.upper[nx - 1] = 0.0;
  } else {
    m.boundary_left = m.lower[0];
    m.boundary_right = m.upper[nx - 1];
    m.lower[0] = 0.0;
    m.upper[nx - 1] = 0.0;
  }
  return m;
}

/** (L u) at interior nodes; gl/gr are the Dirichlet boundary values. */
inline std::vector<double> apply_operator(const OperatorMatrix& m, std::span<const double> u,
                                 double gl = 0.0, double gr = 0.0) {
  std::size_t nx = m.size();
  std::vector<double> out(nx);
  for (std::size_t j = 0; j < nx; ++j) {
    double s = m.diag[j] * u[j];
    if (j > 0) s += m.lower[j] * u[j - 1];
    if (j + 1 < nx) s += m.upper[j] * u[j + 1];
    out[j] = s;
  }
  out[0] += m.boundary_left * gl;
  out[nx - 1] += m.boundary_right * gr;
  return out;
}

struct TridiagResult {
  std::vector<double> x;
  double residual_inf = 0.0;   // max |A x - rhs|
  bool diag_dominant = true;   // strict row dominance of the input system
};

/**
 * Thomas algorithm for a generic tridiagonal system. lower[0] and
 * upper[n-1] are ignored. No pivoting: the caller is expected to pass a
 * strictly diagonally dominant system (true for I - theta dt L as assembled
 * above, where dominance holds with margin 1); dominance is reported so a
 * caller that strays can tell.
 */
inline TridiagResult solve_tridiagonal(std::span<const double> lower,
                                       std::span<const double> diag,
                                       std::span<const double> upper,
                                       std::span<const double> rhs) {
  const std::size_t n = diag.size();
  TridiagResult r;
  r.x.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double off = (j > 0 ? std::abs(lower[j]) : 0.0) + (j + 1 < n ? std::abs(upper[j]) : 0.0);
    if (!(std::abs(diag[j]) > off)) {
      r.diag_dominant = false;
      break;
    }
  }
  std::vector<double> c(n), d(n);
  c[0] = upper[0] / diag[0];
  d[0] = rhs[0] / diag[0];
  for (std::size_t j = 1; j < n; ++j) {
    double w = diag[j] - lower[j] * c[j - 1];
    c[j] = (j + 1 < n) ? upper[j] / w : 0.0;
    d[j] = (rhs[j] - lower[j] * d[j - 1]) / w;
  }
  r.x[n - 1] = d[n - 1];
  for (std::size_t j = n - 1; j-- > 0;) r.x[j] = d[j] - c[j] * r.x[j + 1];
  for (std::size_t j = 0; j < n; ++j) {
    double ax = diag[j] * r.x[j];
    if (j > 0) ax += lower[j] * r.x[j - 1];
    if (j + 1 < n) ax += upper[j] * r.x[j + 1];
    r.residual_inf = std::max(r.residual_inf, std::abs(ax - rhs[j]));
  }
  return r;
}

/** Bands of A = I - c L for the implicit step; boundary couplings scale too. */
struct ShiftedSystem {
  std::vector<double> lower, diag, upper;
  double boundary_left = 0.0, boundary_right = 0.0;  // entries of -c L only
};

inline ShiftedSystem shifted_system(const OperatorMatrix& m, double c) {
  ShiftedSystem s;
  std::size_t n = m.size();
  s.lower.resize(n);
  s.diag.resize(n);
  s.upper.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    s.lower[j] = -c * m.lower[j];
    s.diag[j] = 1.0 - c * m.diag[j];
    s.upper[j] = -c * m.upper[j];
  }
  s.boundary_left = -c * m.boundary_left;
  s.boundary_right = -c * m.boundary_right;
  return s;
}

}  // namespace obstakl
