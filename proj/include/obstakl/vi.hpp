#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "obstakl/norms.hpp"
#include "obstakl/operator.hpp"
#include "obstakl/types.hpp"

namespace obstakl {

/**
 * Discrete reflection measure. Backward Euler steps from level k+1 to level
 * k deposit their constraint mass over the interval (t_k, t_{k+1}]; atoms
 * are binned at the right end, level k+1 (cadlag convention). Interior
 * atoms therefore carry levels 1..nt-1, which also encodes mu({0}) = 0.
 *
 * The final step needs care: its deposit mixes the genuine mass on {T},
 * which is (u(T-) - phi) dm and survives as dt -> 0, with an O(dt) dribble
 * of absolutely continuous mass near T. Only the part below the gap
 * u_{nt-1} - phi is terminal; it is kept per node in terminal_density
 * (units of u, mass per node = density * dx). The remainder joins the
 * interior atoms at level nt-1, so terminal_density is exactly zero for
 * obstacles continuous at T with phi = h(T).
 */
struct MeasureAtom {
  std::size_t k = 0;  // time level, 1..nt-1
  std::size_t j = 0;  // space node
  double mass = 0.0;  // >= 0, already scaled by dx and dt
};

struct DiscreteMeasure {
  Grid grid;
  double T = 1.0;
  std::vector<MeasureAtom> atoms;
  std::vector<double> terminal_density;

  double t(std::size_t k) const { return T * static_cast<double>(k) / static_cast<double>(grid.nt); }

  double total_mass() const {
    double s = 0.0;
    for (const auto& a : atoms) s += a.mass;
    double dx = grid.dx();
    for (double d : terminal_density) s += d * dx;
    return s;
  }
};

struct SolveReport {
  bool converged = true;
  std::string message;
  std::size_t max_inner_iterations = 0;  // fixed point / active set sweeps
  std::size_t max_psor_iterations = 0;
  std::size_t upwind_rows = 0;           // max over time levels
  double max_step_change = 0.0;          // final inner residual, worst level
  double tridiag_residual = 0.0;         // worst linear solve residual
  bool diag_dominance_lost = false;
};

struct PenalizedOptions {
  double theta = 1.0;        // implicitness of L and f; penalty is always implicit
  double inner_tol = 1e-10;  // max-norm stop for the per-level iteration
  std::size_t max_inner = 200;
};

enum class LcpMethod { psor, policy_iteration };

struct LcpOptions {
  double theta = 1.0;
  double inner_tol = 1e-10;   // outer fixed point on f
  std::size_t max_outer = 60;
  LcpMethod method = LcpMethod::psor;
  double psor_tol = 1e-9;     // complementarity residual stop
  double omega = 1.5;
  std::size_t max_psor = 50000;
};

namespace detail {

/** Per-level cached data for one backward step. */
struct StepContext {
  OperatorMatrix op;            // L at the implicit time t_k
  std::vector<double> h;        // obstacle at t_k (sentinel when absent)
  std::vector<double> sigma;    // sqrt(a(t_k, x_j))
  double gl = 0.0, gr = 0.0;    // Dirichlet boundary values at t_k
  double t = 0.0;
};

inline void boundary_values(const ObstacleProblemSpec& spec, const Grid& grid, double t,
                            double& gl, double& gr) {
  switch (grid.boundary) {
    case Boundary::neumann_zero:
      gl = gr = 0.0;
      break;
    case Boundary::dirichlet_zero:
      gl = gr = 0.0;
      break;
    case Boundary::dirichlet_obstacle: {
      double hl = spec.obstacle(t, grid.x_min);
      double hr = spec.obstacle(t, grid.x_max);
      gl = is_unconstrained(hl) ? 0.0 : std::max(hl, 0.0);
      gr = is_unconstrained(hr) ? 0.0 : std::max(hr, 0.0);
      break;
    }
  }
}

inline StepContext make_context(const ObstacleProblemSpec& spec, const Grid& grid, double t) {
  StepContext c;
  c.t = t;
  c.op = assemble(spec.coeffs, t, grid);
  c.h.resize(grid.nx);
  c.sigma.resize(grid.nx);
  for (std::size_t j = 0; j < grid.nx; ++j) {
    double x = grid.x(j);
    c.h[j] = spec.obstacle(t, x);
    c.sigma[j] = std::sqrt(spec.coeffs.a(t, x));
  }
  boundary_values(spec, grid, t, c.gl, c.gr);
  return c;
}

/** Gradient of a work vector with the same stencil DiscreteSolution uses. */
inline void gradient_of(std::span<const double> v, double dx, std::vector<double>& g) {
  std::size_t nx = v.size();
  g.resize(nx);
  if (nx == 1) {
    g[0] = 0.0;
    return;
  }
  g[0] = (v[1] - v[0]) / dx;
  for (std::size_t j = 1; j + 1 < nx; ++j) g[j] = (v[j + 1] - v[j - 1]) / (2.0 * dx);
  g[nx - 1] = (v[nx - 1] - v[nx - 2]) / dx;
}

/**
 * Bin one node's step mass. Interior steps go straight to the atom list at
 * the right level. The last step is split: the part under the gap to phi is
 * the terminal atom, the rest is absolutely continuous mass that belongs
 * just before T (level nt-1, or the terminal slot when nt == 1 leaves no
 * interior level).
 */
inline void deposit_step_mass(DiscreteMeasure& mu, const Grid& grid, std::size_t k_to,
                              std::size_t j, double inc, double over_phi) {
  if (inc <= 0.0) return;
  if (k_to == grid.nt) {
    double atom = std::clamp(over_phi, 0.0, inc);
    if (atom > 0.0) mu.terminal_density[j] += atom;
    double rest = inc - atom;
    if (rest > 0.0) {
      if (grid.nt > 1)
        mu.atoms.push_back({grid.nt - 1, j, rest * grid.dx()});
      else
        mu.terminal_density[j] += rest;
    }
  } else {
    mu.atoms.push_back({k_to, j, inc * grid.dx()});
  }
}

inline void check_time_step(const ObstacleProblemSpec& spec, double dt, SolveReport& rep) {
  double L = spec.gen.lipschitz_L;
  if (L > 0.0 && dt > 0.25 / L) {
    rep.converged = false;
    rep.message = "dt = " + std::to_string(dt) +
                  " exceeds 1/(4 lipschitz_L); the frozen-coefficient iteration "
                  "is not a contraction";
  }
}

/**
 * Explicit part of the theta scheme at level k+1:
 * u_{k+1} + (1-theta) dt (L_{k+1} u_{k+1} + f_{k+1}). With theta = 1 this is
 * just u_{k+1}.
 */
inline std::vector<double> explicit_part(const ObstacleProblemSpec& spec, const Grid& grid,
                                         const DiscreteSolution& sol, std::size_t kp1,
                                         double theta, double dt) {
  auto up = sol.level(kp1);
  std::vector<double> rhs(up.begin(), up.end());
  if (theta < 1.0) {
    double t1 = sol.t(kp1);
    StepContext c1 = make_context(spec, grid, t1);
    auto lu = apply_operator(c1.op, up, c1.gl, c1.gr);
    auto gp = sol.grad_level(kp1);
    double w = (1.0 - theta) * dt;
    for (std::size_t j = 0; j < grid.nx; ++j)
      rhs[j] += w * (lu[j] + spec.gen.f(t1, grid.x(j), up[j], c1.sigma[j] * gp[j]));
  }
  return rhs;
}

}  // namespace detail

/**
 * Penalized scheme: backward theta steps of
 *
 *   u_k = u_{k+1} + dt [ L u_k + f(t_k, x, u_k, sigma du_k/dx) + n (u_k - h_k)^- ]
 *
 * solved per level by a frozen-coefficient iteration: f and the penalty
 * active set are taken from the current iterate, the penalty slope n is kept
 * implicit (added to the matrix diagonal on active nodes) so the step stays a
 * tridiagonal solve even when n dt is large. The measure collects
 * n (u_k - h_k)^- dt dx per node into the bin (t_k, t_{k+1}].
 *
 * As n grows the levels increase monotonically toward the obstacle problem
 * solution; solve_penalized_sequence below runs a whole penalty schedule and
 * checks that monotonicity.
 */
struct PenalizedResult {
  DiscreteSolution sol;
  DiscreteMeasure mu;
  SolveReport report;
};

inline PenalizedResult solve_penalized(const ObstacleProblemSpec& spec, const Grid& grid,
                                       double n_penalty,
                                       const PenalizedOptions& opts = {}) {
  PenalizedResult out;
  out.sol = DiscreteSolution(grid, spec.T);
  out.mu.grid = grid;
  out.mu.T = spec.T;
  out.mu.terminal_density.assign(grid.nx, 0.0);

  const std::size_t nx = grid.nx, nt = grid.nt;
  const double dt = out.sol.dt();
  const double theta = opts.theta;
  detail::check_time_step(spec, dt, out.report);
  if (!out.report.converged) return out;

  for (std::size_t j = 0; j < nx; ++j) out.sol.level(nt)[j] = spec.phi(grid.x(j));
  out.sol.refresh_gradient(nt);

  std::vector<double> v(nx), grad(nx), fvec(nx), diag(nx), rhs(nx);
  for (std::size_t k = nt; k-- > 0;) {
    double t = out.sol.t(k);
    detail::StepContext c = detail::make_context(spec, grid, t);
    out.report.upwind_rows = std::max(out.report.upwind_rows, c.op.upwind_rows);
    ShiftedSystem A = shifted_system(c.op, theta * dt);
    std::vector<double> base = detail::explicit_part(spec, grid, out.sol, k + 1, theta, dt);
    base[0] -= A.boundary_left * c.gl;
    base[nx - 1] -= A.boundary_right * c.gr;

    auto up = out.sol.level(k + 1);
    for (std::size_t j = 0; j < nx; ++j) v[j] = std::max(up[j], c.h[j]);

    double change = 0.0;
    std::size_t it = 0;
    for (; it < opts.max_inner; ++it) {
      detail::gradient_of(v, grid.dx(), grad);
      for (std::size_t j = 0; j < nx; ++j) {
        fvec[j] = spec.gen.f(t, grid.x(j), v[j], c.sigma[j] * grad[j]);
        bool active = v[j] < c.h[j];
        diag[j] = A.diag[j] + (active ? theta * dt * n_penalty : 0.0);
        rhs[j] = base[j] + theta * dt * (fvec[j] + (active ? n_penalty * c.h[j] : 0.0));
      }
      TridiagResult tr = solve_tridiagonal(A.lower, diag, A.upper, rhs);
      out.report.tridiag_residual = std::max(out.report.tridiag_residual, tr.residual_inf);
      if (!tr.diag_dominant) out.report.diag_dominance_lost = true;
      change = 0.0;
      for (std::size_t j = 0; j < nx; ++j) change = std::max(change, std::abs(tr.x[j] - v[j]));
      v.swap(tr.x);
      if (change <= opts.inner_tol) break;
    }
    out.report.max_inner_iterations = std::max(out.report.max_inner_iterations, it + 1);
    out.report.max_step_change = std::max(out.report.max_step_change, change);
    if (change > opts.inner_tol) {
      out.report.converged = false;
      out.report.message = "per-level iteration stalled at t = " + std::to_string(t) +
                           " (change " + std::to_string(change) + ")";
    }

    auto uk = out.sol.level(k);
    std::copy(v.begin(), v.end(), uk.begin());
    out.sol.refresh_gradient(k);

    // Measure increment of this step, binned right at level k+1.
    auto phi_level = out.sol.level(nt);
    for (std::size_t j = 0; j < nx; ++j) {
      double neg = std::max(c.h[j] - v[j], 0.0);
      if (is_unconstrained(c.h[j]) || neg == 0.0) continue;
      double inc = theta * dt * n_penalty * neg;
      detail::deposit_step_mass(out.mu, grid, k + 1, j, inc, v[j] - phi_level[j]);
    }
  }
  return out;
}

struct PenaltyLevelResult {
  double n = 0.0;
  DiscreteSolution sol;
  DiscreteMeasure mu;
  SolveReport report;
};

/**
 * Run a whole penalty schedule. Levels must be increasing; successive
 * solutions are checked for monotone increase up to mono_tol = 10 *
 * inner_tol, and the worst violation is recorded in each report message if
 * it exceeds that.
 */
inline std::vector<PenaltyLevelResult> solve_penalized_sequence(
    const ObstacleProblemSpec& spec, const Grid& grid, const std::vector<double>& schedule,
    const PenalizedOptions& opts = {}) {
  std::vector<PenaltyLevelResult> out;
  out.reserve(schedule.size());
  const double mono_tol = 10.0 * opts.inner_tol;
  for (double n : schedule) {
    PenaltyLevelResult r;
    r.n = n;
    PenalizedResult p = solve_penalized(spec, grid, n, opts);
    r.sol = std::move(p.sol);
    r.mu = std::move(p.mu);
    r.report = std::move(p.report);
    if (!out.empty()) {
      double worst = 0.0;
      const auto& prev = out.back().sol.u;
      for (std::size_t i = 0; i < r.sol.u.size(); ++i)
        worst = std::max(worst, prev[i] - r.sol.u[i]);
      if (worst > mono_tol) {
        r.report.converged = false;
        r.report.message = "penalized solutions not monotone in n: drop " +
                           std::to_string(worst) + " from n = " + std::to_string(out.back().n);
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

/**
 * Direct complementarity solve of the implicit step
 *
 *   min( u_k - h_k, (I - theta dt L) u_k - rhs_k ) = 0
 *
 * by projected SOR or policy iteration, with f frozen by an outer fixed
 * point on (u_k, du_k/dx). Measure atoms are the positive part of the
 * equation residual times dx, binned like the penalized ones; the final
 * step's increment forms terminal_density.
 */
struct LcpResult {
  DiscreteSolution sol;
  DiscreteMeasure mu;
  SolveReport report;
};

namespace detail {

/** Projected SOR until max_j |min(v - h, Av - rhs)| <= tol. */
inline std::size_t psor(const ShiftedSystem& A, std::span<const double> rhs,
                        std::span<const double> h, double omega, double tol,
                        std::size_t max_iter, std::vector<double>& v, double& res_out) {
  std::size_t nx = v.size();
  std::size_t it = 0;
  double res = 0.0;
  for (; it < max_iter; ++it) {
    for (std::size_t j = 0; j < nx; ++j) {
      double av = A.diag[j] * v[j];
      if (j > 0) av += A.lower[j] * v[j - 1];
      if (j + 1 < nx) av += A.upper[j] * v[j + 1];
      double cand = v[j] + omega * (rhs[j] - av) / A.diag[j];
      v[j] = std::max(cand, h[j]);
    }
    res = 0.0;
    for (std::size_t j = 0; j < nx; ++j) {
      double av = A.diag[j] * v[j];
      if (j > 0) av += A.lower[j] * v[j - 1];
      if (j + 1 < nx) av += A.upper[j] * v[j + 1];
      double m = std::min(v[j] - h[j], av - rhs[j]);
      res = std::max(res, std::abs(m));
    }
    if (res <= tol) break;
  }
  res_out = res;
  return it + 1;
}

/**
 * Policy iteration: each node picks the branch of min(v - h, Av - rhs) that
 * is smaller at the current iterate, the resulting linear system is solved
 * exactly, and the policy is re-evaluated. Finite convergence for the
 * M-matrices produced by assemble().
 */
inline std::size_t policy_iteration(const ShiftedSystem& A, std::span<const double> rhs,
                                    std::span<const double> h, double tol,
                                    std::size_t max_iter, std::vector<double>& v,
                                    double& res_out) {
  std::size_t nx = v.size();
  std::vector<char> active(nx, 0), prev(nx, 2);
  std::vector<double> lo(nx), di(nx), up(nx), b(nx);
  std::size_t it = 0;
  double res = 0.0;
  for (; it < max_iter; ++it) {
    for (std::size_t j = 0; j < nx; ++j) {
      double av = A.diag[j] * v[j];
      if (j > 0) av += A.lower[j] * v[j - 1];
      if (j + 1 < nx) av += A.upper[j] * v[j + 1];
      active[j] = (v[j] - h[j] < av - rhs[j]) ? 1 : 0;
    }
    for (std::size_t j = 0; j < nx; ++j) {
      if (active[j]) {
        lo[j] = 0.0;
        di[j] = 1.0;
        up[j] = 0.0;
        b[j] = h[j];
      } else {
        lo[j] = A.lower[j];
        di[j] = A.diag[j];
        up[j] = A.upper[j];
        b[j] = rhs[j];
      }
    }
    TridiagResult tr = solve_tridiagonal(lo, di, up, b);
    v.swap(tr.x);
    res = 0.0;
    for (std::size_t j = 0; j < nx; ++j) {
      double av = A.diag[j] * v[j];
      if (j > 0) av += A.lower[j] * v[j - 1];
      if (j + 1 < nx) av += A.upper[j] * v[j + 1];
      res = std::max(res, std::abs(std::min(v[j] - h[j], av - rhs[j])));
    }
    if (res <= tol || active == prev) break;
    prev = active;
  }
  res_out = res;
  return it + 1;
}

}  // namespace detail

inline LcpResult solve_lcp(const ObstacleProblemSpec& spec, const Grid& grid,
                           const LcpOptions& opts = {}) {
  LcpResult out;
  out.sol = DiscreteSolution(grid, spec.T);
  out.mu.grid = grid;
  out.mu.T = spec.T;
  out.mu.terminal_density.assign(grid.nx, 0.0);

  const std::size_t nx = grid.nx, nt = grid.nt;
  const double dt = out.sol.dt();
  const double theta = opts.theta;
  detail::check_time_step(spec, dt, out.report);
  if (!out.report.converged) return out;

  for (std::size_t j = 0; j < nx; ++j) out.sol.level(nt)[j] = spec.phi(grid.x(j));
  out.sol.refresh_gradient(nt);

  std::vector<double> v(nx), grad(nx), rhs(nx);
  for (std::size_t k = nt; k-- > 0;) {
    double t = out.sol.t(k);
    detail::StepContext c = detail::make_context(spec, grid, t);
    out.report.upwind_rows = std::max(out.report.upwind_rows, c.op.upwind_rows);
    ShiftedSystem A = shifted_system(c.op, theta * dt);
    std::vector<double> base = detail::explicit_part(spec, grid, out.sol, k + 1, theta, dt);
    base[0] -= A.boundary_left * c.gl;
    base[nx - 1] -= A.boundary_right * c.gr;

    auto up = out.sol.level(k + 1);
    for (std::size_t j = 0; j < nx; ++j) v[j] = std::max(up[j], c.h[j]);

    double change = 0.0;
    std::size_t outer = 0;
    for (; outer < opts.max_outer; ++outer) {
      detail::gradient_of(v, grid.dx(), grad);
      for (std::size_t j = 0; j < nx; ++j)
        rhs[j] = base[j] +
                 theta * dt * spec.gen.f(t, grid.x(j), v[j], c.sigma[j] * grad[j]);
      std::vector<double> vnew = v;
      double res = 0.0;
      std::size_t iters;
      if (opts.method == LcpMethod::psor)
        iters = detail::psor(A, rhs, c.h, opts.omega, opts.psor_tol, opts.max_psor, vnew, res);
      else
        iters = detail::policy_iteration(A, rhs, c.h, opts.psor_tol, opts.max_psor, vnew, res);
      out.report.max_psor_iterations = std::max(out.report.max_psor_iterations, iters);
      if (res > opts.psor_tol) {
        out.report.converged = false;
        out.report.message = "inner LCP solve stalled at t = " + std::to_string(t) +
                             " (residual " + std::to_string(res) + ")";
      }
      change = 0.0;
      for (std::size_t j = 0; j < nx; ++j) change = std::max(change, std::abs(vnew[j] - v[j]));
      v.swap(vnew);
      if (change <= opts.inner_tol) break;
    }
    out.report.max_inner_iterations = std::max(out.report.max_inner_iterations, outer + 1);
    out.report.max_step_change = std::max(out.report.max_step_change, change);
    if (change > opts.inner_tol && out.report.converged) {
      out.report.converged = false;
      out.report.message = "outer fixed point stalled at t = " + std::to_string(t) +
                           " (change " + std::to_string(change) + ")";
    }

    auto uk = out.sol.level(k);
    std::copy(v.begin(), v.end(), uk.begin());
    out.sol.refresh_gradient(k);

    // Constraint mass: positive part of the equation residual where the
    // constraint branch of min(u - h, Au - rhs) is the binding one. Nodes
    // with u - h > residual are unconstrained up to solver noise and get
    // exact zero mass (the tie u = h, residual = 0 also deposits nothing).
    detail::gradient_of(v, grid.dx(), grad);
    auto phi_level = out.sol.level(nt);
    for (std::size_t j = 0; j < nx; ++j) {
      if (is_unconstrained(c.h[j])) continue;
      double av = A.diag[j] * v[j];
      if (j > 0) av += A.lower[j] * v[j - 1];
      if (j + 1 < nx) av += A.upper[j] * v[j + 1];
      double f = spec.gen.f(t, grid.x(j), v[j], c.sigma[j] * grad[j]);
      double r = av - (base[j] + theta * dt * f);
      if (r <= 0.0 || v[j] - c.h[j] > r) continue;
      detail::deposit_step_mass(out.mu, grid, k + 1, j, r, v[j] - phi_level[j]);
    }
  }
  return out;
}

/**
 * Discrete complementarity residual of a stored solution:
 * max over steps k and nodes j of | min(u_k - h_k, step residual) | where
 * the step residual is (I - theta dt L) u_k - u_{k+1} - (1-theta) dt (L u
 * + f)_{k+1} - theta dt f_k, all evaluated from the stored levels. For an
 * unconstrained problem this degenerates to the max PDE residual.
 */
inline double complementarity_residual(const ObstacleProblemSpec& spec,
                                       const DiscreteSolution& sol, double theta = 1.0) {
  const Grid& grid = sol.grid;
  const std::size_t nx = grid.nx, nt = grid.nt;
  const double dt = sol.dt();
  double worst = 0.0;
  for (std::size_t k = 0; k < nt; ++k) {
    double t = sol.t(k);
    detail::StepContext c = detail::make_context(spec, grid, t);
    ShiftedSystem A = shifted_system(c.op, theta * dt);
    std::vector<double> base = detail::explicit_part(spec, grid, sol, k + 1, theta, dt);
    base[0] -= A.boundary_left * c.gl;
    base[nx - 1] -= A.boundary_right * c.gr;
    auto uk = sol.level(k);
    auto gk = sol.grad_level(k);
    for (std::size_t j = 0; j < nx; ++j) {
      double av = A.diag[j] * uk[j];
      if (j > 0) av += A.lower[j] * uk[j - 1];
      if (j + 1 < nx) av += A.upper[j] * uk[j + 1];
      double f = spec.gen.f(t, grid.x(j), uk[j], c.sigma[j] * gk[j]);
      double r = av - (base[j] + theta * dt * f);
      double gap = is_unconstrained(c.h[j]) ? r : std::min(uk[j] - c.h[j], r);
      worst = std::max(worst, std::abs(gap));
    }
  }
  return worst;
}

/**
 * Skorokhod minimality integral sum (u - h) rho^2 d mu. Each interior atom
 * sits at the right end of its step bin; contact held at the left end, so
 * the default evaluates the gap there (discrete left limit). With
 * cadlag = true the gap is taken at the atom's own level instead, which is
 * the quantity that stays strictly positive when the obstacle has a time
 * jump. The terminal part always uses (u(T-) - phi) against
 * terminal_density.
 */
inline double minimality_integral(const DiscreteSolution& sol, const DiscreteMeasure& mu,
                                  const ObstacleProblemSpec& spec, bool cadlag = false) {
  const Grid& grid = sol.grid;
  double s = 0.0;
  for (const auto& a : mu.atoms) {
    std::size_t k = cadlag ? a.k : a.k - 1;
    double x = grid.x(a.j);
    double h = spec.obstacle(sol.t(k), x);
    if (is_unconstrained(h)) continue;
    double w = rho(x, spec.alpha);
    s += (sol.level(k)[a.j] - h) * w * w * a.mass;
  }
  double dx = grid.dx();
  for (std::size_t j = 0; j < grid.nx; ++j) {
    if (mu.terminal_density[j] == 0.0) continue;
    double x = grid.x(j);
    double w = rho(x, spec.alpha);
    double gap = sol.level(grid.nt - 1)[j] - spec.phi(x);
    s += gap * w * w * mu.terminal_density[j] * dx;
  }
  return s;
}

/**
 * Comparison check for two solved problems on a common grid. Establishes
 * which orderings the data satisfy (phi, f, h pointwise on grid probes) and
 * then asserts the matching conclusions: the solution with smaller data
 * stays below the other up to order_tol, and when the obstacles coincide
 * the *larger* problem's measure is dominated, prefix sum by prefix sum, by
 * the smaller one's (bigger data means less contact).
 */
struct CompareReport {
  bool data_ordered = false;     // phi1<=phi2, f1<=f2, h1<=h2 on probes
  bool obstacles_equal = false;  // h1 == h2 on probes
  bool solutions_ordered = true;
  double max_order_violation = 0.0;   // max (u1 - u2)^+
  bool measures_dominated = true;     // prefix sums of mu2 <= prefix sums of mu1
  double max_mass_violation = 0.0;
  std::string message;
};

inline CompareReport compare_solutions(const ObstacleProblemSpec& s1,
                                       const DiscreteSolution& u1, const DiscreteMeasure& m1,
                                       const ObstacleProblemSpec& s2,
                                       const DiscreteSolution& u2, const DiscreteMeasure& m2,
                                       double order_tol) {
  CompareReport rep;
  const Grid& grid = u1.grid;
  const std::size_t nx = grid.nx, nt = grid.nt;

  bool phi_le = true, f_le = true, h_le = true, h_eq = true;
  const double probes_yz[5] = {-2.0, -0.5, 0.0, 0.5, 2.0};
  for (std::size_t j = 0; j < nx; ++j) {
    double x = grid.x(j);
    if (s1.phi(x) > s2.phi(x) + 1e-14) phi_le = false;
    for (std::size_t k = 0; k <= nt; ++k) {
      double t = u1.t(k);
      double h1 = s1.obstacle(t, x), h2 = s2.obstacle(t, x);
      bool un1 = is_unconstrained(h1), un2 = is_unconstrained(h2);
      if (un1 != un2) h_eq = false;
      if (!un1 && !un2 && std::abs(h1 - h2) > 1e-14) h_eq = false;
      // no obstacle counts as -infinity for the ordering
      if (!un1 && un2) h_le = false;
      if (!un1 && !un2 && h1 > h2 + 1e-14) h_le = false;
    }
  }
  for (std::size_t k = 0; k <= nt; k += std::max<std::size_t>(1, nt / 16)) {
    double t = u1.t(k);
    for (std::size_t j = 0; j < nx; j += std::max<std::size_t>(1, nx / 16)) {
      double x = grid.x(j);
      for (double y : probes_yz)
        for (double z : probes_yz)
          if (s1.gen.f(t, x, y, z) > s2.gen.f(t, x, y, z) + 1e-12) f_le = false;
    }
  }
  rep.data_ordered = phi_le && f_le && h_le;
  rep.obstacles_equal = h_eq;

  if (rep.data_ordered) {
    for (std::size_t i = 0; i < u1.u.size(); ++i)
      rep.max_order_violation = std::max(rep.max_order_violation, u1.u[i] - u2.u[i]);
    rep.solutions_ordered = rep.max_order_violation <= order_tol;
    if (!rep.solutions_ordered)
      rep.message = "solution order violated by " + std::to_string(rep.max_order_violation);
  }

  if (rep.data_ordered && rep.obstacles_equal) {
    std::vector<double> lv1(nt + 1, 0.0), lv2(nt + 1, 0.0);
    for (const auto& a : m1.atoms) lv1[a.k] += a.mass;
    for (const auto& a : m2.atoms) lv2[a.k] += a.mass;
    double dx = grid.dx();
    for (std::size_t j = 0; j < nx; ++j) {
      lv1[nt] += m1.terminal_density[j] * dx;
      lv2[nt] += m2.terminal_density[j] * dx;
    }
    double c1 = 0.0, c2 = 0.0;
    for (std::size_t k = 0; k <= nt; ++k) {
      c1 += lv1[k];
      c2 += lv2[k];
      rep.max_mass_violation = std::max(rep.max_mass_violation, c2 - c1);
    }
    rep.measures_dominated = rep.max_mass_violation <= order_tol;
    if (!rep.measures_dominated)
      rep.message += std::string(rep.message.empty() ? "" : "; ") +
                     "measure dominance violated by " + std::to_string(rep.max_mass_violation);
  }
  return rep;
}

}  // namespace obstakl
