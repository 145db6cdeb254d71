#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "obstakl/bsde.hpp"
#include "obstakl/norms.hpp"
#include "obstakl/parallel.hpp"
#include "obstakl/paths.hpp"
#include "obstakl/rng.hpp"
#include "obstakl/vi.hpp"

namespace obstakl {

/**
 * Transition density of the constant-coefficient diffusion,
 * p(s,x,t,y) = N(y; x + b0 (t-s), a0 (t-s)). Exact only when a and b are
 * constants; callers on variable coefficients get the frozen-coefficient
 * approximation and should treat results as diagnostics.
 */
struct GaussianKernel {
  double a0 = 1.0;
  double b0 = 0.0;

  double density(double s, double x, double t, double y) const {
    double var = a0 * (t - s);
    if (!(var > 0.0)) return 0.0;
    double d = y - x - b0 * (t - s);
    return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * kPi * var);
  }

  /** Mass the kernel puts outside [lo, hi], from the Gaussian CDF. */
  double tail_bound(double s, double x, double t, double lo, double hi) const {
    double var = a0 * (t - s);
    if (!(var > 0.0)) return 0.0;
    double sd = std::sqrt(var);
    double m = x + b0 * (t - s);
    double left = 0.5 * std::erfc((m - lo) / (sd * kSqrt2));
    double right = 0.5 * std::erfc((hi - m) / (sd * kSqrt2));
    return left + right;
  }

  static constexpr double kPi = 3.14159265358979323846;
  static constexpr double kSqrt2 = 1.41421356237309504880;
};

/** Midpoint quadrature of the kernel over [lo, hi]; should be 1 - tails. */
inline double kernel_normalization(const GaussianKernel& kernel, double s, double x,
                                   double t, double lo, double hi,
                                   std::size_t n_space = 4096) {
  double dy = (hi - lo) / static_cast<double>(n_space);
  double sum = 0.0;
  for (std::size_t i = 0; i < n_space; ++i) {
    double y = lo + (static_cast<double>(i) + 0.5) * dy;
    sum += kernel.density(s, x, t, y);
  }
  return sum * dy;
}

struct FkOptions {
  std::size_t n_space = 2048;  // spatial midpoint nodes per time slice
  std::size_t n_time = 512;    // time slices for the source integral
};

/**
 * Kernel representation of the linear problem with measure data:
 * u(s,x) as the terminal integral plus the source integral plus the
 * kernel-weighted measure mass on (s,T]. The source term integrates
 * midpoints in time, so the kernel is never evaluated at t = s; slices
 * where the kernel is narrower than the spatial quadrature step fall back
 * to the delta limit f(t, mean) instead of an unresolved sum.
 *
 * Returns NaN when s >= T.
 */
inline double feynman_kac_linear(const std::function<double(double)>& phi,
                                 const std::function<double(double, double)>& f_src,
                                 const DiscreteMeasure& mu, const GaussianKernel& kernel,
                                 double s, double x, double T, double lo, double hi,
                                 const FkOptions& opts = {}) {
  if (!(s < T)) return std::numeric_limits<double>::quiet_NaN();
  double dy = (hi - lo) / static_cast<double>(opts.n_space);
  auto y_at = [&](std::size_t i) {
    return lo + (static_cast<double>(i) + 0.5) * dy;
  };
  auto slice = [&](double t, const std::function<double(double)>& g) {
    double sd = std::sqrt(kernel.a0 * (t - s));
    if (sd < 2.0 * dy) return g(x + kernel.b0 * (t - s));
    double sum = 0.0;
    for (std::size_t i = 0; i < opts.n_space; ++i) {
      double y = y_at(i);
      sum += g(y) * kernel.density(s, x, t, y);
    }
    return sum * dy;
  };

  double value = slice(T, phi);

  double dtq = (T - s) / static_cast<double>(opts.n_time);
  for (std::size_t i = 0; i < opts.n_time; ++i) {
    double t = s + (static_cast<double>(i) + 0.5) * dtq;
    value += dtq * slice(t, [&](double y) { return f_src(t, y); });
  }

  const Grid& g = mu.grid;
  for (const MeasureAtom& a : mu.atoms) {
    double t = mu.t(a.k);
    if (t <= s) continue;
    value += a.mass * kernel.density(s, x, t, g.x(a.j));
  }
  if (!mu.terminal_density.empty()) {
    double dxm = g.dx();
    for (std::size_t j = 0; j < mu.terminal_density.size(); ++j)
      value += mu.terminal_density[j] * dxm * kernel.density(s, x, mu.T, g.x(j));
  }
  return value;
}

/**
 * Both sides of the correspondence between the pathwise compensator and the
 * deterministic measure: the ensemble average of sum_k xi(t_k, X_k) dK
 * against the kernel-weighted atom masses. The difference carries an O(dx+dt)
 * discretization skew on top of the reported MC standard error.
 */
struct RevuzReport {
  bool ok = false;
  std::string message;
  double lhs = 0.0;
  double rhs = 0.0;
  double difference = 0.0;
  double se = 0.0;  // MC standard error of the lhs average
};

inline RevuzReport revuz_check(const DiscreteMeasure& mu, const PathEnsemble& ens,
                               const RbsdeEnsemble& rbsde, const GaussianKernel& kernel,
                               const std::function<double(double, double)>& xi, double s,
                               double x0, unsigned threads = 1) {
  RevuzReport rep;
  if (ens.n_paths != rbsde.n_paths || ens.n_steps != rbsde.n_steps) {
    rep.message = "ensemble and backward solution have mismatched shapes";
    return rep;
  }
  if (std::abs(ens.s - s) > 1e-12 || std::abs(ens.x0 - x0) > 1e-12) {
    rep.message = "ensemble was simulated from a different (s, x0)";
    return rep;
  }
  const std::size_t N = ens.n_paths, m = ens.n_steps;
  auto path_total = [&](std::size_t p) {
    auto xs = ens.path(p);
    auto ks = rbsde.k_path(p);
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k)
      acc += xi(ens.t(k), xs[k]) * (ks[k + 1] - ks[k]);
    return acc;
  };
  double total = parallel_sum(N, threads, path_total);
  rep.lhs = total / static_cast<double>(N);
  double var = parallel_sum(N, threads, [&](std::size_t p) {
    double d = path_total(p) - rep.lhs;
    return d * d;
  });
  rep.se = N > 1 ? std::sqrt(var / (static_cast<double>(N) * static_cast<double>(N - 1)))
                 : 0.0;

  const Grid& g = mu.grid;
  for (const MeasureAtom& a : mu.atoms) {
    double t = mu.t(a.k);
    if (t <= s) continue;
    rep.rhs += xi(t, g.x(a.j)) * kernel.density(s, x0, t, g.x(a.j)) * a.mass;
  }
  if (!mu.terminal_density.empty()) {
    double dxm = g.dx();
    for (std::size_t j = 0; j < mu.terminal_density.size(); ++j)
      rep.rhs += xi(mu.T, g.x(j)) * kernel.density(s, x0, mu.T, g.x(j)) *
                 mu.terminal_density[j] * dxm;
  }
  rep.difference = rep.lhs - rep.rhs;
  rep.ok = true;
  return rep;
}

struct H3Options {
  std::size_t n_start_times = 4;
  unsigned threads = 1;
  double fd_step = 1e-4;
};

/**
 * Monte Carlo surrogate for the obstacle admissibility functional:
 * sup over start times of the weighted spatial sum of
 * E_{s,x} max_k |h^+(t_k, X_k)|^2. The running max over discrete levels is a
 * lower bound of the continuous-time essential sup, so this is a finiteness
 * diagnostic rather than a proof.
 */
struct H3Estimate {
  double value = 0.0;
  double se = 0.0;  // standard error of the attained start-time row
  std::vector<double> start_times;
  std::vector<double> values;  // one weighted sum per start time
  std::vector<double> ses;
};

inline H3Estimate h3_estimator(const ObstacleProblemSpec& spec, const Grid& grid,
                               std::size_t n_paths, std::size_t n_steps,
                               std::uint64_t seed, const H3Options& opts = {}) {
  H3Estimate est;
  const std::size_t ns = std::max<std::size_t>(1, opts.n_start_times);
  est.start_times.resize(ns);
  est.values.assign(ns, 0.0);
  est.ses.assign(ns, 0.0);
  for (std::size_t i = 0; i < ns; ++i)
    est.start_times[i] = spec.T * static_cast<double>(i) / static_cast<double>(ns);
  if (!spec.has_obstacle() || n_paths == 0) return est;

  PathOptions popts;
  popts.threads = opts.threads;
  popts.fd_step = opts.fd_step;
  const double dx = grid.dx();
  const std::size_t N = n_paths;
  std::vector<double> node_max(N);

  for (std::size_t i = 0; i < ns; ++i) {
    double s = est.start_times[i];
    double sum = 0.0, var_sum = 0.0;
    for (std::size_t j = 0; j < grid.nx; ++j) {
      std::uint64_t node_seed =
          seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(i * grid.nx + j + 1);
      PathEnsemble ens = simulate_paths(spec.coeffs, s, grid.x(j), spec.T, N, n_steps,
                                        node_seed, popts);
      parallel_for(N, opts.threads, [&](std::size_t p) {
        auto xs = ens.path(p);
        double best = 0.0;
        for (std::size_t k = 0; k <= n_steps; ++k) {
          double hp = std::max(spec.obstacle(ens.t(k), xs[k]), 0.0);
          best = std::max(best, hp * hp);
        }
        node_max[p] = best;
      });
      double mean = parallel_sum(N, opts.threads,
                                 [&](std::size_t p) { return node_max[p]; }) /
                    static_cast<double>(N);
      double var = N > 1 ? parallel_sum(N, opts.threads,
                                        [&](std::size_t p) {
                                          double d = node_max[p] - mean;
                                          return d * d;
                                        }) /
                               static_cast<double>(N - 1)
                         : 0.0;
      double w = rho(grid.x(j), spec.alpha);
      w = w * w * dx;
      sum += w * mean;
      var_sum += w * w * var / static_cast<double>(N);
    }
    est.values[i] = sum;
    est.ses[i] = std::sqrt(var_sum);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < ns; ++i)
    if (est.values[i] > est.values[best]) best = i;
  est.value = est.values[best];
  est.se = est.ses[best];
  return est;
}

}  // namespace obstakl
