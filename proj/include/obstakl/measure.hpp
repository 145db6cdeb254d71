#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "obstakl/norms.hpp"
#include "obstakl/operator.hpp"
#include "obstakl/types.hpp"
#include "obstakl/vi.hpp"

namespace obstakl {

/**
 * Time marginal of a reflection measure: the weighted mass sitting on each
 * time level, terminal part included at level nt. A level carrying more than
 * atom_frac of the total flags the marginal as atom-like, the discrete
 * signature of a Dirac component in time.
 */
struct TimeMarginal {
  std::vector<double> masses;  // nt + 1 levels, rho^2-weighted
  double total = 0.0;
  double atom_frac = 0.95;
  std::size_t peak_level = 0;
  double peak_fraction = 0.0;
  bool atom_like = false;
};

inline TimeMarginal time_marginal(const DiscreteMeasure& mu, double alpha,
                                  double atom_frac = 0.95) {
  TimeMarginal tm;
  tm.atom_frac = atom_frac;
  tm.masses.assign(mu.grid.nt + 1, 0.0);
  for (const MeasureAtom& a : mu.atoms) {
    double w = rho(mu.grid.x(a.j), alpha);
    tm.masses[a.k] += w * w * a.mass;
  }
  double dx = mu.grid.dx();
  for (std::size_t j = 0; j < mu.terminal_density.size(); ++j) {
    double w = rho(mu.grid.x(j), alpha);
    tm.masses[mu.grid.nt] += w * w * mu.terminal_density[j] * dx;
  }
  for (std::size_t k = 0; k < tm.masses.size(); ++k) {
    tm.total += tm.masses[k];
    if (tm.masses[k] > tm.masses[tm.peak_level]) tm.peak_level = k;
  }
  if (tm.total > 0.0) tm.peak_fraction = tm.masses[tm.peak_level] / tm.total;
  tm.atom_like = tm.total > 0.0 && tm.peak_fraction > atom_frac;
  return tm;
}

/**
 * Structural facts every solver-produced measure must satisfy: nonnegative
 * masses, nothing charged to the initial level, and a terminal density that
 * matches (u(T-) - phi)^+ with u(T-) read off the last interior level (or
 * linearly extrapolated when richardson is set). The match is only expected
 * to first order in dt, so the tolerance scales with dt times the local size
 * of Lu + f.
 */
struct StructuralReport {
  bool shape_ok = true;
  bool no_initial_mass = true;
  bool masses_nonnegative = true;
  bool terminal_ok = true;
  double max_terminal_error = 0.0;
  std::vector<std::size_t> initial_atoms;     // indices into mu.atoms
  std::vector<std::size_t> terminal_nodes;    // grid nodes violating the match
  std::string message;

  bool ok() const {
    return shape_ok && no_initial_mass && masses_nonnegative && terminal_ok;
  }
};

inline StructuralReport structural_checks(const DiscreteMeasure& mu,
                                          const DiscreteSolution& sol,
                                          const ObstacleProblemSpec& spec,
                                          bool richardson = false,
                                          double tol_factor = 4.0) {
  StructuralReport rep;
  const Grid& g = mu.grid;
  if (sol.grid.nx != g.nx || sol.grid.nt != g.nt) {
    rep.shape_ok = false;
    rep.message = "measure and solution live on different grids";
    return rep;
  }
  for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
    const MeasureAtom& a = mu.atoms[i];
    if (a.k == 0) {
      rep.no_initial_mass = false;
      rep.initial_atoms.push_back(i);
    }
    if (a.k > g.nt || a.j >= g.nx) {
      rep.shape_ok = false;
      rep.message = "atom indices fall outside the grid";
    }
    if (a.mass < 0.0) rep.masses_nonnegative = false;
  }
  for (double d : mu.terminal_density)
    if (d < 0.0) rep.masses_nonnegative = false;
  if (!rep.shape_ok) return rep;
  if (g.nt < 2) return rep;

  double dt = sol.dt();
  std::size_t last = g.nt - 1;
  double tl = sol.t(last);
  auto u1 = sol.level(last);
  auto u2 = sol.level(last - 1);
  auto gr = sol.grad_level(last);
  OperatorMatrix op = assemble(spec.coeffs, tl, g);
  double bl = 0.0, br = 0.0;
  detail::boundary_values(spec, g, tl, bl, br);
  std::vector<double> lu = apply_operator(op, u1, bl, br);

  bool have_td = mu.terminal_density.size() == g.nx;
  for (std::size_t j = 0; j < g.nx; ++j) {
    double x = g.x(j);
    double ut = richardson ? 2.0 * u1[j] - u2[j] : u1[j];
    double expected = std::max(ut - spec.phi(x), 0.0);
    double td = have_td ? mu.terminal_density[j] : 0.0;
    double z = std::sqrt(spec.coeffs.a(tl, x)) * gr[j];
    double scale = std::abs(lu[j]) + std::abs(spec.gen.f(tl, x, u1[j], z));
    double tol = tol_factor * dt * (1.0 + scale) + 1e-10;
    double err = std::abs(td - expected);
    rep.max_terminal_error = std::max(rep.max_terminal_error, err);
    if (err > tol) {
      rep.terminal_ok = false;
      rep.terminal_nodes.push_back(j);
    }
  }
  if (!rep.ok() && rep.message.empty()) rep.message = "structural violations recorded";
  return rep;
}

}  // namespace obstakl
