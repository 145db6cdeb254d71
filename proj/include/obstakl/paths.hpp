#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "obstakl/parallel.hpp"
#include "obstakl/rng.hpp"
#include "obstakl/types.hpp"

namespace obstakl {

/**
 * Euler-Maruyama ensemble for the diffusion generated by
 * L = (1/2) d/dx(a d/dx) + b d/dx. Written in Ito form the drift picks up
 * the divergence correction:
 *
 *   dX = [ b + (1/2) da/dx ](t, X) dt + sqrt(a(t, X)) dW.
 *
 * Dropping the correction simulates a different operator (the
 * non-divergence one) whenever a varies in x; disable_drift_correction
 * exists so tests can demonstrate exactly that discrepancy.
 */
struct PathOptions {
  unsigned threads = 1;
  double fd_step = 1e-4;  // step for the da/dx fallback; pass dx/4 on a grid
  bool disable_drift_correction = false;
};

struct PathEnsemble {
  double s = 0.0;   // start time
  double x0 = 0.0;  // common start state
  double T = 1.0;
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
  std::vector<double> x;   // n_paths * (n_steps + 1), row per path
  std::vector<double> dw;  // n_paths * n_steps, Brownian increments

  double dt() const { return (T - s) / static_cast<double>(n_steps); }
  double t(std::size_t k) const { return s + static_cast<double>(k) * dt(); }

  std::span<const double> path(std::size_t p) const {
    return std::span<const double>(x).subspan(p * (n_steps + 1), n_steps + 1);
  }
  std::span<const double> increments(std::size_t p) const {
    return std::span<const double>(dw).subspan(p * n_steps, n_steps);
  }
};

inline PathEnsemble simulate_paths(const CoefficientField& coeffs, double s, double x0,
                                   double T, std::size_t n_paths, std::size_t n_steps,
                                   std::uint64_t seed, const PathOptions& opts = {}) {
  PathEnsemble e;
  e.s = s;
  e.x0 = x0;
  e.T = T;
  e.n_paths = n_paths;
  e.n_steps = n_steps;
  e.x.assign(n_paths * (n_steps + 1), 0.0);
  e.dw.assign(n_paths * n_steps, 0.0);
  const double dt = e.dt();
  const double sq_dt = std::sqrt(dt);

  parallel_for(n_paths, opts.threads, [&](std::size_t p) {
    RandomStream rng(seed, p);
    double* xp = e.x.data() + p * (n_steps + 1);
    double* wp = e.dw.data() + p * n_steps;
    xp[0] = x0;
    for (std::size_t k = 0; k < n_steps; ++k) {
      double t = e.t(k);
      double cur = xp[k];
      double drift = coeffs.b(t, cur);
      if (!opts.disable_drift_correction)
        drift += 0.5 * coeffs.div_a(t, cur, opts.fd_step);
      double dwk = sq_dt * rng.next_normal();
      wp[k] = dwk;
      xp[k + 1] = cur + drift * dt + std::sqrt(coeffs.a(t, cur)) * dwk;
    }
  });
  return e;
}

/** Deterministic mean and standard error of phi(X_T) over the ensemble. */
struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
};

inline McEstimate terminal_estimate(const PathEnsemble& e,
                                    const std::function<double(double)>& phi,
                                    unsigned threads = 1) {
  const std::size_t n = e.n_paths;
  double s1 = parallel_sum(n, threads,
                           [&](std::size_t p) { return phi(e.path(p)[e.n_steps]); });
  double mean = s1 / static_cast<double>(n);
  double s2 = parallel_sum(n, threads, [&](std::size_t p) {
    double d = phi(e.path(p)[e.n_steps]) - mean;
    return d * d;
  });
  McEstimate out;
  out.mean = mean;
  out.se = n > 1 ? std::sqrt(s2 / (static_cast<double>(n) * static_cast<double>(n - 1)))
                 : 0.0;
  return out;
}

}  // namespace obstakl
