#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "obstakl/parallel.hpp"
#include "obstakl/paths.hpp"
#include "obstakl/types.hpp"

namespace obstakl {

/**
 * Regression Monte Carlo solvers for the backward equations driven by a
 * simulated ensemble. Conditional expectations are least squares fits on
 * monomials of the standardized state ((x - mean)/std up to basis_degree);
 * the standardization is recomputed per step from the cross section, so the
 * basis stays well conditioned as the paths spread.
 *
 * Every cross-sectional sum (moments, Gram entries, right hand sides) is
 * accumulated in fixed chunks and reduced in chunk order, which keeps the
 * whole solver bit-identical for any thread count.
 */
struct BsdeOptions {
  std::size_t basis_degree = 4;
  unsigned threads = 1;
  double newton_tol = 1e-12;
  std::size_t max_newton = 50;
};

struct BsdeDiagnostics {
  std::size_t min_effective_degree = 0;  // after rank fallback, worst step
  double max_condition_estimate = 0.0;   // Gram condition, Cholesky estimate
  std::size_t max_newton_iterations = 0;
  bool converged = true;
  std::string message;
};

/**
 * Backward triple on the ensemble time grid. k is the cumulative reflection
 * compensator per path: k[.][0] = 0 and the increment earned while stepping
 * levels j -> j+1 is added into k[.][j+1], the same right-binned convention
 * the PDE measure uses.
 */
struct RbsdeEnsemble {
  std::size_t n_paths = 0;
  std::size_t n_steps = 0;
  std::vector<double> y;  // n_paths * (n_steps+1)
  std::vector<double> z;  // n_paths * n_steps
  std::vector<double> k;  // n_paths * (n_steps+1), cumulative, starts at 0
  double y0 = 0.0;        // common time-zero value
  double y0_se = 0.0;     // MC standard error of the final averaging step
  BsdeDiagnostics diag;

  std::span<const double> y_path(std::size_t p) const {
    return std::span<const double>(y).subspan(p * (n_steps + 1), n_steps + 1);
  }
  std::span<const double> z_path(std::size_t p) const {
    return std::span<const double>(z).subspan(p * n_steps, n_steps);
  }
  std::span<const double> k_path(std::size_t p) const {
    return std::span<const double>(k).subspan(p * (n_steps + 1), n_steps + 1);
  }
};

namespace detail {

inline constexpr std::size_t kMaxDeg = 12;

/** Solve the scalar implicit node equation y = c + dt f(t,x,y,z) by Newton. */
inline double implicit_node(const Driver& f, double t, double x, double z, double c,
                            double dt, double tol, std::size_t max_iter,
                            std::size_t& iters_used) {
  double y = c;
  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    double F = y - c - dt * f(t, x, y, z);
    double d = 1e-7 * (1.0 + std::abs(y));
    double slope = 1.0 - dt * (f(t, x, y + d, z) - f(t, x, y - d, z)) / (2.0 * d);
    if (!(slope > 0.25)) slope = 1.0;  // dt <= 1/(4L) keeps slope >= 3/4
    double step = F / slope;
    y -= step;
    if (std::abs(step) <= tol * (1.0 + std::abs(y))) {
      ++it;
      break;
    }
  }
  if (it > iters_used) iters_used = it;
  return y;
}

/**
 * Scalar penalized node: y = c + dt [ f(t,x,y,z) + n (y - h)^- ]. The map is
 * strictly increasing in y (slope >= 1 - dt L + dt n 1_{y<h} > 0), so Newton
 * with a bisection bracket is safe across the kink.
 */
inline double penalized_node(const Driver& f, double t, double x, double z, double c,
                             double h, double n, double dt, double tol,
                             std::size_t max_iter, std::size_t& iters_used) {
  auto F = [&](double y) {
    double pen = is_unconstrained(h) ? 0.0 : std::max(h - y, 0.0);
    return y - c - dt * (f(t, x, y, z) + n * pen);
  };
  double y = c;
  double lo = 0.0, hi = 0.0;
  bool have_lo = false, have_hi = false;
  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    double Fy = F(y);
    if (Fy < 0.0) {
      lo = y;
      have_lo = true;
    } else {
      hi = y;
      have_hi = true;
    }
    double d = 1e-7 * (1.0 + std::abs(y));
    double slope = (F(y + d) - F(y - d)) / (2.0 * d);
    if (!(slope > 1e-8)) slope = 1.0;
    double ynew = y - Fy / slope;
    if (have_lo && have_hi && (ynew <= lo || ynew >= hi))
      ynew = 0.5 * (lo + hi);  // Newton left the bracket: bisect
    if (std::abs(ynew - y) <= tol * (1.0 + std::abs(ynew))) {
      y = ynew;
      ++it;
      break;
    }
    y = ynew;
  }
  if (it > iters_used) iters_used = it;
  return y;
}

// basis slots: monomials 0..kMaxDeg plus one obstacle column
inline constexpr std::size_t kMaxBasis = kMaxDeg + 2;

/** Cholesky of the leading n x n block of a dense Gram (stride kMaxBasis). */
inline bool cholesky_gram(const std::array<double, kMaxBasis * kMaxBasis>& G, std::size_t n,
                          std::array<double, kMaxBasis * kMaxBasis>& L,
                          double& cond_estimate) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = G[i * kMaxBasis + j];
      for (std::size_t q = 0; q < j; ++q) s -= L[i * kMaxBasis + q] * L[j * kMaxBasis + q];
      if (i == j) {
        if (!(s > 1e-12 * (1.0 + std::abs(G[0])))) return false;
        L[i * kMaxBasis + i] = std::sqrt(s);
      } else {
        L[i * kMaxBasis + j] = s / L[j * kMaxBasis + j];
      }
    }
  }
  double dmax = 0.0, dmin = 1e300;
  for (std::size_t i = 0; i < n; ++i) {
    dmax = std::max(dmax, L[i * kMaxBasis + i]);
    dmin = std::min(dmin, L[i * kMaxBasis + i]);
  }
  cond_estimate = (dmax / dmin) * (dmax / dmin);
  return true;
}

inline void cholesky_solve(const std::array<double, kMaxBasis * kMaxBasis>& L,
                           std::size_t n, std::span<const double> rhs,
                           std::span<double> out) {
  std::array<double, kMaxBasis> w{};
  for (std::size_t i = 0; i < n; ++i) {
    double s = rhs[i];
    for (std::size_t q = 0; q < i; ++q) s -= L[i * kMaxBasis + q] * w[q];
    w[i] = s / L[i * kMaxBasis + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = w[i];
    for (std::size_t q = i + 1; q < n; ++q) s -= L[q * kMaxBasis + i] * out[q];
    out[i] = s / L[i * kMaxBasis + i];
  }
}

enum class NodeKind { reflected, penalized };

/**
 * Shared backward engine. For each step: standardize the cross section,
 * regress the next-level Y (and Y dW/dt for Z) on the basis, then close the
 * node equation per path, reflecting or penalizing as requested.
 *
 * The basis is the standardized monomials plus, when an obstacle is present,
 * the standardized obstacle value. The conditional expectation has a kink
 * along the contact boundary that polynomials of modest degree fit with an
 * O(1) local error, and that error compounds over the backward sweep; the
 * obstacle column carries the kink exactly and removes the bulk of it. The
 * column is dropped again whenever it is (numerically) collinear with the
 * monomials, e.g. on tiny cross sections or away from the contact region.
 */
inline RbsdeEnsemble backward_regression(const ObstacleProblemSpec& spec,
                                         const PathEnsemble& ens, NodeKind kind,
                                         double n_penalty, const BsdeOptions& opts) {
  const std::size_t N = ens.n_paths, m = ens.n_steps;
  const double dt = ens.dt();
  const std::size_t deg_req = std::min<std::size_t>(opts.basis_degree, kMaxDeg / 2);

  RbsdeEnsemble out;
  out.n_paths = N;
  out.n_steps = m;
  out.y.assign(N * (m + 1), 0.0);
  out.z.assign(N * m, 0.0);
  out.k.assign(N * (m + 1), 0.0);
  out.diag.min_effective_degree = deg_req;

  if (spec.gen.lipschitz_L > 0.0 && dt > 0.25 / spec.gen.lipschitz_L) {
    out.diag.converged = false;
    out.diag.message = "dt exceeds 1/(4 lipschitz_L)";
    return out;
  }

  parallel_for(N, opts.threads, [&](std::size_t p) {
    out.y[p * (m + 1) + m] = spec.phi(ens.path(p)[m]);
  });

  const std::size_t n_chunks = (N + kChunk - 1) / kChunk;
  // per chunk: moments 0..2d, sums s^i Y and s^i (Y dW / dt), and the raw
  // obstacle cross terms s^i h, h^2, h Y, h (Y dW / dt)
  struct Partial {
    std::array<double, 2 * kMaxDeg + 1> mom;
    std::array<double, kMaxDeg + 1> ry, rz, ch;
    double chh = 0.0, rhy = 0.0, rhz = 0.0;
  };
  std::vector<Partial> partials(n_chunks);
  std::vector<std::size_t> newton_iters(n_chunks, 0);

  for (std::size_t k = m; k-- > 0;) {
    double t = ens.t(k);

    // cross-sectional mean and spread of X_k (two deterministic reductions)
    double sx = parallel_sum(N, opts.threads,
                             [&](std::size_t p) { return ens.path(p)[k]; });
    double mean = sx / static_cast<double>(N);
    double sxx = parallel_sum(N, opts.threads, [&](std::size_t p) {
      double d = ens.path(p)[k] - mean;
      return d * d;
    });
    double sd = std::sqrt(sxx / static_cast<double>(N));
    bool degenerate = !(sd > 1e-13 * (1.0 + std::abs(mean)));
    if (degenerate) sd = 1.0;
    std::size_t deg = degenerate ? 0 : deg_req;
    bool want_h = spec.has_obstacle() && !degenerate;

    for (Partial& pa : partials) {
      pa.mom.fill(0.0);
      pa.ry.fill(0.0);
      pa.rz.fill(0.0);
      pa.ch.fill(0.0);
      pa.chh = pa.rhy = pa.rhz = 0.0;
    }
    // whole chunks go to one thread each, so partials[p / kChunk] has a
    // single writer
    parallel_for(N, opts.threads, [&](std::size_t p) {
      Partial& pa = partials[p / kChunk];
      double sval = (ens.path(p)[k] - mean) / sd;
      double ynext = out.y[p * (m + 1) + k + 1];
      double zw = ynext * ens.increments(p)[k] / dt;
      double hraw = want_h ? spec.obstacle(t, ens.path(p)[k]) : 0.0;
      double pw = 1.0;
      for (std::size_t q = 0; q <= 2 * deg; ++q) {
        pa.mom[q] += pw;
        if (q <= deg) {
          pa.ry[q] += pw * ynext;
          pa.rz[q] += pw * zw;
          pa.ch[q] += pw * hraw;
        }
        pw *= sval;
      }
      pa.chh += hraw * hraw;
      pa.rhy += hraw * ynext;
      pa.rhz += hraw * zw;
    });
    Partial tot;
    tot.mom.fill(0.0);
    tot.ry.fill(0.0);
    tot.rz.fill(0.0);
    tot.ch.fill(0.0);
    for (const Partial& pa : partials) {
      for (std::size_t q = 0; q <= 2 * kMaxDeg; ++q) tot.mom[q] += pa.mom[q];
      for (std::size_t q = 0; q <= kMaxDeg; ++q) {
        tot.ry[q] += pa.ry[q];
        tot.rz[q] += pa.rz[q];
        tot.ch[q] += pa.ch[q];
      }
      tot.chh += pa.chh;
      tot.rhy += pa.rhy;
      tot.rhz += pa.rhz;
    }

    // Standardize the obstacle column from the accumulated raw cross terms.
    // A nearly constant column carries no kink information and only hurts
    // conditioning, so it is dropped on a loose relative threshold.
    double hmean = 0.0, hsd = 1.0;
    std::array<double, kMaxDeg + 1> chs{};
    double chh_s = 0.0, rhy_s = 0.0, rhz_s = 0.0;
    if (want_h) {
      hmean = tot.ch[0] / static_cast<double>(N);
      double hvar = std::max(0.0, tot.chh / static_cast<double>(N) - hmean * hmean);
      hsd = std::sqrt(hvar);
      if (!(hsd > 1e-7 * (1.0 + std::abs(hmean)))) {
        want_h = false;
        hsd = 1.0;
      } else {
        for (std::size_t q = 0; q <= deg; ++q)
          chs[q] = (tot.ch[q] - hmean * tot.mom[q]) / hsd;
        chh_s = (tot.chh - 2.0 * hmean * tot.ch[0] +
                 hmean * hmean * static_cast<double>(N)) /
                (hsd * hsd);
        rhy_s = (tot.rhy - hmean * tot.ry[0]) / hsd;
        rhz_s = (tot.rhz - hmean * tot.rz[0]) / hsd;
      }
    }

    // Gram solve with rank fallback: a collinear obstacle column goes first,
    // then the degree drops (re-trying the column at each level).
    std::array<double, kMaxBasis * kMaxBasis> G{}, L{};
    std::array<double, kMaxBasis> ryv{}, rzv{};
    double cond = 1.0;
    std::size_t d = deg;
    bool use_h = want_h;
    auto assemble = [&](std::size_t dd, bool with_h) {
      std::size_t n = dd + 1 + (with_h ? 1 : 0);
      for (std::size_t i = 0; i <= dd; ++i) {
        for (std::size_t j = 0; j <= dd; ++j) G[i * kMaxBasis + j] = tot.mom[i + j];
        ryv[i] = tot.ry[i];
        rzv[i] = tot.rz[i];
      }
      if (with_h) {
        for (std::size_t i = 0; i <= dd; ++i) {
          G[i * kMaxBasis + dd + 1] = chs[i];
          G[(dd + 1) * kMaxBasis + i] = chs[i];
        }
        G[(dd + 1) * kMaxBasis + dd + 1] = chh_s;
        ryv[dd + 1] = rhy_s;
        rzv[dd + 1] = rhz_s;
      }
      return n;
    };
    std::size_t nb = assemble(d, use_h);
    while (!cholesky_gram(G, nb, L, cond)) {
      if (use_h) {
        use_h = false;
      } else if (d > 0) {
        --d;
        use_h = want_h;
      } else {
        break;  // G = [N] is always positive
      }
      nb = assemble(d, use_h);
    }
    out.diag.min_effective_degree = std::min(out.diag.min_effective_degree, d);
    out.diag.max_condition_estimate = std::max(out.diag.max_condition_estimate, cond);

    std::array<double, kMaxBasis> beta{}, gamma{};
    cholesky_solve(L, nb, std::span<const double>(ryv.data(), nb),
                   std::span<double>(beta.data(), nb));
    cholesky_solve(L, nb, std::span<const double>(rzv.data(), nb),
                   std::span<double>(gamma.data(), nb));

    std::fill(newton_iters.begin(), newton_iters.end(), 0);
    parallel_for(N, opts.threads, [&](std::size_t p) {
      std::size_t& iters = newton_iters[p / kChunk];
      double xk = ens.path(p)[k];
      double sval = (xk - mean) / sd;
      double hval = spec.obstacle(t, xk);
      double cont = 0.0, zval = 0.0, pw = 1.0;
      for (std::size_t q = 0; q <= d; ++q) {
        cont += beta[q] * pw;
        zval += gamma[q] * pw;
        pw *= sval;
      }
      if (use_h) {
        double hs = (hval - hmean) / hsd;
        cont += beta[d + 1] * hs;
        zval += gamma[d + 1] * hs;
      }
      out.z[p * m + k] = zval;
      double ynew, dk;
      if (kind == NodeKind::reflected) {
        double ytil = implicit_node(spec.gen.f, t, xk, zval, cont, dt, opts.newton_tol,
                                    opts.max_newton, iters);
        ynew = is_unconstrained(hval) ? ytil : std::max(ytil, hval);
        dk = ynew - ytil;
      } else {
        ynew = penalized_node(spec.gen.f, t, xk, zval, cont, hval, n_penalty, dt,
                              opts.newton_tol, opts.max_newton, iters);
        dk = is_unconstrained(hval) ? 0.0 : dt * n_penalty * std::max(hval - ynew, 0.0);
      }
      out.y[p * (m + 1) + k] = ynew;
      out.k[p * (m + 1) + k + 1] = dk;  // increment over (t_k, t_{k+1}]
    });
    for (std::size_t c = 0; c < n_chunks; ++c)
      out.diag.max_newton_iterations =
          std::max(out.diag.max_newton_iterations, newton_iters[c]);
  }

  // increments -> cumulative compensator
  parallel_for(N, opts.threads, [&](std::size_t p) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= m; ++j) {
      acc += out.k[p * (m + 1) + j];
      out.k[p * (m + 1) + j] = acc;
    }
  });

  out.y0 = out.y[0];
  // The k = 0 cross section is a point mass, so the last regression is a
  // plain average of Y_1; report its MC standard error.
  double m1 = parallel_sum(N, opts.threads,
                           [&](std::size_t p) { return out.y[p * (m + 1) + 1]; }) /
              static_cast<double>(N);
  double v1 = parallel_sum(N, opts.threads, [&](std::size_t p) {
    double dvar = out.y[p * (m + 1) + 1] - m1;
    return dvar * dvar;
  });
  out.y0_se =
      N > 1 ? std::sqrt(v1 / (static_cast<double>(N) * static_cast<double>(N - 1))) : 0.0;
  return out;
}

}  // namespace detail

/** Reflected scheme: project on the obstacle each step, earn dK = Y - Ytilde. */
inline RbsdeEnsemble reflected_bsde(const ObstacleProblemSpec& spec, const PathEnsemble& ens,
                                    const BsdeOptions& opts = {}) {
  return detail::backward_regression(spec, ens, detail::NodeKind::reflected, 0.0, opts);
}

/** Penalized scheme: the node equation carries n (y-h)^-, dK = n (Y-h)^- dt. */
inline RbsdeEnsemble penalized_bsde(const ObstacleProblemSpec& spec, const PathEnsemble& ens,
                                    double n_penalty, const BsdeOptions& opts = {}) {
  return detail::backward_regression(spec, ens, detail::NodeKind::penalized, n_penalty, opts);
}

/**
 * Exact backward induction on a recombining binomial lattice, the
 * enumerable-tree oracle for the regression solvers. Constant coefficients
 * are read off at (s, x0): steps are x -> x + b0 dt +- sqrt(a0 dt) with
 * probability 1/2, the node closure is the same implicit Newton solve the
 * regression scheme uses, and reflection is a hard projection on h.
 */
struct SnellResult {
  double value = 0.0;
  std::size_t n_nodes = 0;
};

inline SnellResult snell_envelope(const ObstacleProblemSpec& spec, double s, double x0,
                                  std::size_t m, const BsdeOptions& opts = {}) {
  const double a0 = spec.coeffs.a(s, x0);
  const double b0 = spec.coeffs.b(s, x0);
  const double dt = (spec.T - s) / static_cast<double>(m);
  const double step = std::sqrt(a0 * dt);
  const double sq_dt = std::sqrt(dt);

  std::vector<double> v(m + 1);
  for (std::size_t i = 0; i <= m; ++i) {
    double x = x0 + b0 * (spec.T - s) +
               step * (2.0 * static_cast<double>(i) - static_cast<double>(m));
    v[i] = spec.phi(x);
  }
  SnellResult out;
  out.n_nodes = (m + 1) * (m + 2) / 2;
  std::size_t iters = 0;
  for (std::size_t k = m; k-- > 0;) {
    double t = s + static_cast<double>(k) * dt;
    for (std::size_t i = 0; i <= k; ++i) {
      double x = x0 + b0 * (t - s) +
                 step * (2.0 * static_cast<double>(i) - static_cast<double>(k));
      double cont = 0.5 * (v[i] + v[i + 1]);
      double z = (v[i + 1] - v[i]) / (2.0 * sq_dt);
      double y = detail::implicit_node(spec.gen.f, t, x, z, cont, dt, opts.newton_tol,
                                       opts.max_newton, iters);
      double h = spec.obstacle(t, x);
      v[i] = is_unconstrained(h) ? y : std::max(y, h);
    }
  }
  out.value = v[0];
  return out;
}

}  // namespace obstakl
