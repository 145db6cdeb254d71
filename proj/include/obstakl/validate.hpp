#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "obstakl/rng.hpp"
#include "obstakl/types.hpp"

namespace obstakl {

struct ValidationIssue {
  std::string code;     // stable identifier, e.g. "ellipticity.lower"
  std::string message;  // human readable, includes the witness point
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string summary() const {
    if (ok()) return "valid";
    std::ostringstream os;
    os << issues.size() << " issue(s):";
    for (const auto& i : issues) os << "\n  [" << i.code << "] " << i.message;
    return os.str();
  }
};

namespace detail {
inline void fail(ValidationReport& r, const std::string& code, const std::string& msg) {
  r.issues.push_back({code, msg});
}
inline std::string at(double t, double x) {
  std::ostringstream os;
  os << "at (t=" << t << ", x=" << x << ")";
  return os.str();
}
}  // namespace detail

/**
 * Sampled validation of problem data against its declared bounds. All probe
 * points are drawn from a stream seeded by `seed`, so the report is
 * reproducible. Structural checks (grid shape, alpha, terminal
 * compatibility phi >= h(T,.) on the grid) are exhaustive; bound checks
 * (ellipticity, drift, Lipschitz, growth envelope) are Monte Carlo over
 * `samples` probe points.
 */
inline ValidationReport validate_spec(const ObstacleProblemSpec& spec, const Grid& grid,
                                      std::uint64_t seed = 1, std::size_t samples = 256) {
  using detail::at;
  using detail::fail;
  ValidationReport rep;

  if (!(grid.x_min < grid.x_max))
    fail(rep, "grid.domain", "x_min must be below x_max");
  if (grid.nx < 3) fail(rep, "grid.nx", "need at least 3 interior nodes");
  if (grid.nt < 2) fail(rep, "grid.nt", "need at least 2 time steps");
  if (!(spec.T > 0.0)) fail(rep, "grid.T", "horizon T must be positive");
  if (!(spec.alpha > 0.5))
    fail(rep, "weight.alpha", "alpha must exceed 1/2 for rho^2 to be integrable");
  if (!spec.coeffs.a || !spec.coeffs.b) {
    fail(rep, "coeffs.missing", "coefficient field must define a and b");
    return rep;
  }
  if (!spec.gen.f) fail(rep, "generator.missing", "generator must define f");
  if (!spec.phi) fail(rep, "terminal.missing", "terminal condition phi is required");
  if (!(spec.coeffs.lambda > 0.0))
    fail(rep, "ellipticity.bounds", "lambda must be positive");
  if (spec.coeffs.lambda > spec.coeffs.Lambda)
    fail(rep, "ellipticity.bounds", "lambda exceeds Lambda");
  if (!rep.ok()) return rep;

  RandomStream rng(seed, 0);
  auto sample_t = [&] { return spec.T * rng.next_uniform(); };
  auto sample_x = [&] {
    return grid.x_min + (grid.x_max - grid.x_min) * rng.next_uniform();
  };

  // Ellipticity window and drift bound. Tiny slack absorbs roundoff in
  // user-supplied closures evaluated near the declared bounds.
  const double slack = 1e-12 * (1.0 + spec.coeffs.Lambda);
  for (std::size_t s = 0; s < samples; ++s) {
    double t = sample_t(), x = sample_x();
    double a = spec.coeffs.a(t, x);
    double b = spec.coeffs.b(t, x);
    if (!(a >= spec.coeffs.lambda - slack)) {
      fail(rep, "ellipticity.lower", "a = " + std::to_string(a) + " below lambda " + at(t, x));
      break;
    }
    if (!(a <= spec.coeffs.Lambda + slack)) {
      fail(rep, "ellipticity.upper", "a = " + std::to_string(a) + " above Lambda " + at(t, x));
      break;
    }
    if (!(std::abs(b) <= spec.coeffs.Lambda + slack)) {
      fail(rep, "drift.bound", "|b| = " + std::to_string(std::abs(b)) + " above Lambda " + at(t, x));
      break;
    }
  }

  // Generator: Lipschitz in (y,z) against the declared constant, and the
  // growth envelope |f(t,x,0,0)| <= g(t,x) when g is given.
  const double yz_range = 10.0;
  for (std::size_t s = 0; s < samples; ++s) {
    double t = sample_t(), x = sample_x();
    double y1 = yz_range * (2.0 * rng.next_uniform() - 1.0);
    double y2 = yz_range * (2.0 * rng.next_uniform() - 1.0);
    double z1 = yz_range * (2.0 * rng.next_uniform() - 1.0);
    double z2 = yz_range * (2.0 * rng.next_uniform() - 1.0);
    double df = std::abs(spec.gen.f(t, x, y1, z1) - spec.gen.f(t, x, y2, z2));
    double bound = spec.gen.lipschitz_L * (std::abs(y1 - y2) + std::abs(z1 - z2));
    if (df > bound + 1e-9 * (1.0 + bound)) {
      fail(rep, "generator.lipschitz",
           "|f(y1,z1)-f(y2,z2)| = " + std::to_string(df) + " exceeds L*(|dy|+|dz|) = " +
               std::to_string(bound) + " " + at(t, x));
      break;
    }
    if (spec.gen.g) {
      double f0 = std::abs(spec.gen.f(t, x, 0.0, 0.0));
      double g = spec.gen.g(t, x);
      if (f0 > g + 1e-9 * (1.0 + g)) {
        fail(rep, "generator.growth",
             "|f(t,x,0,0)| = " + std::to_string(f0) + " exceeds g = " + std::to_string(g) +
                 " " + at(t, x));
        break;
      }
    }
  }

  // Terminal compatibility: phi >= h(T, x_j) at every interior node.
  if (spec.has_obstacle()) {
    for (std::size_t j = 0; j < grid.nx; ++j) {
      double x = grid.x(j);
      double hv = spec.h(spec.T, x);
      if (is_unconstrained(hv)) continue;
      double pv = spec.phi(x);
      if (pv < hv - 1e-12 * (1.0 + std::abs(hv))) {
        fail(rep, "terminal.compatibility",
             "phi(x) = " + std::to_string(pv) + " below h(T,x) = " + std::to_string(hv) +
                 " at x = " + std::to_string(x));
        break;
      }
    }
  }

  return rep;
}

}  // namespace obstakl
