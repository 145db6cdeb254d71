#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "obstakl/expr.hpp"
#include "obstakl/types.hpp"

namespace obstakl {

/** Full round-trip float formatting, shared by configs and CSV artifacts. */
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/**
 * Run description as read from a config file: line-oriented key = value
 * entries under [problem], [grid], [backend] and [output] headers. String
 * fields hold expression sources verbatim; everything numeric is parsed
 * eagerly so a bad value is reported at its own line. Data functions are
 * expressions over t, x (and y, z for the driver f); see expr.hpp for the
 * grammar. A builtin= line replaces the whole config with a named preset,
 * and any later keys override preset values, so presets double as
 * templates.
 *
 * Unset required values are marked with NaN (doubles) or 0 (grid sizes) and
 * diagnosed by build_problem, which names the offending field.
 */
struct ProblemConfig {
  std::string builtin;  // preset name, kept so serialization shows provenance
  std::string a, b, da_dx;
  std::string phi, f, h;  // empty h means unconstrained
  double T = std::numeric_limits<double>::quiet_NaN();
  double alpha = 1.0;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double Lambda = std::numeric_limits<double>::quiet_NaN();
  double lipschitz = 0.0;
};

struct GridConfig {
  double x_min = std::numeric_limits<double>::quiet_NaN();
  double x_max = std::numeric_limits<double>::quiet_NaN();
  std::size_t nx = 0;
  std::size_t nt = 0;
  std::string boundary = "dirichlet_obstacle";
};

struct BackendConfig {
  std::string backend = "lcp";  // lcp | penalized | mc | all
  double penalty_n = 4096.0;
  std::vector<double> schedule;  // penalty levels for convergence studies
  double theta = 1.0;
  double inner_tol = 1e-10;
  std::string lcp_method = "psor";  // psor | policy
  double omega = 1.5;
  double lcp_tol = 1e-9;
  std::size_t max_outer = 60;
  std::size_t mc_paths = 20000;
  std::size_t mc_steps = 25;
  std::size_t mc_degree = 4;
  std::uint64_t seed = 1;
  std::vector<double> probes;  // x locations for compare / report probes
  double compare_tol = 5e-3;   // PDE-PDE band in compare
  double mc_band = 1e-2;       // bias allowance added to 3 MC standard errors
  std::size_t refine_levels = 3;
};

struct OutputConfig {
  std::string dir = "out";
  std::string formats = "csv,json";
};

struct RunConfig {
  ProblemConfig problem;
  GridConfig grid;
  BackendConfig backend;
  OutputConfig output;
};

namespace detail {

inline void emit(std::ostringstream& os, const char* key, const std::string& v) {
  if (!v.empty()) os << key << " = " << v << "\n";
}
inline void emit(std::ostringstream& os, const char* key, double v) {
  if (!std::isnan(v)) os << key << " = " << fmt17(v) << "\n";
}
inline void emit_count(std::ostringstream& os, const char* key, std::size_t v) {
  os << key << " = " << v << "\n";
}
inline void emit_list(std::ostringstream& os, const char* key, const std::vector<double>& v) {
  if (v.empty()) return;
  os << key << " = ";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << fmt17(v[i]);
  os << "\n";
}

}  // namespace detail

inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  os << "[problem]\n";
  detail::emit(os, "builtin", c.problem.builtin);
  detail::emit(os, "a", c.problem.a);
  detail::emit(os, "b", c.problem.b);
  detail::emit(os, "da_dx", c.problem.da_dx);
  detail::emit(os, "phi", c.problem.phi);
  detail::emit(os, "f", c.problem.f);
  detail::emit(os, "h", c.problem.h);
  detail::emit(os, "T", c.problem.T);
  detail::emit(os, "alpha", c.problem.alpha);
  detail::emit(os, "lambda", c.problem.lambda);
  detail::emit(os, "Lambda", c.problem.Lambda);
  detail::emit(os, "lipschitz", c.problem.lipschitz);
  os << "\n[grid]\n";
  detail::emit(os, "x_min", c.grid.x_min);
  detail::emit(os, "x_max", c.grid.x_max);
  detail::emit_count(os, "nx", c.grid.nx);
  detail::emit_count(os, "nt", c.grid.nt);
  detail::emit(os, "boundary", c.grid.boundary);
  os << "\n[backend]\n";
  detail::emit(os, "backend", c.backend.backend);
  detail::emit(os, "penalty_n", c.backend.penalty_n);
  detail::emit_list(os, "schedule", c.backend.schedule);
  detail::emit(os, "theta", c.backend.theta);
  detail::emit(os, "inner_tol", c.backend.inner_tol);
  detail::emit(os, "lcp_method", c.backend.lcp_method);
  detail::emit(os, "omega", c.backend.omega);
  detail::emit(os, "lcp_tol", c.backend.lcp_tol);
  detail::emit_count(os, "max_outer", c.backend.max_outer);
  detail::emit_count(os, "mc_paths", c.backend.mc_paths);
  detail::emit_count(os, "mc_steps", c.backend.mc_steps);
  detail::emit_count(os, "mc_degree", c.backend.mc_degree);
  os << "seed = " << c.backend.seed << "\n";
  detail::emit_list(os, "probes", c.backend.probes);
  detail::emit(os, "compare_tol", c.backend.compare_tol);
  detail::emit(os, "mc_band", c.backend.mc_band);
  detail::emit_count(os, "refine_levels", c.backend.refine_levels);
  os << "\n[output]\n";
  detail::emit(os, "dir", c.output.dir);
  detail::emit(os, "formats", c.output.formats);
  return os.str();
}

/** Configs compare equal when they serialize identically. */
inline bool operator==(const RunConfig& a, const RunConfig& b) {
  return serialize_config(a) == serialize_config(b);
}
inline bool operator!=(const RunConfig& a, const RunConfig& b) { return !(a == b); }

/**
 * Shipped presets. Each is a complete explicit config, so serializing one
 * produces a standalone file and parse(serialize(.)) is the identity.
 *
 * step_obstacle: near-degenerate diffusion with f = y and an obstacle that
 * drops from e^2 to 1/2 at t = 1, T = 2. The solution rides the obstacle
 * until the drop and the reflection measure concentrates in one atom there.
 *
 * american_put: linear pricing instance, everything constant-coefficient,
 * with all three backends wired for cross-validation.
 *
 * unconstrained_heat: no obstacle at all; the measure must come out empty.
 *
 * continuous_h_semilinear: driver depending on y and z, obstacle continuous
 * and equal to phi at T, the well-behaved target for penalty convergence.
 *
 * discontinuous_h: obstacle with a time jump at t = 1/2. Penalty gradients
 * still converge in the weighted L1 norm, while L2 is only recorded.
 */
inline std::vector<std::string> builtin_names() {
  return {"example_s5", "american_put", "unconstrained_heat", "continuous_h_semilinear",
          "discontinuous_h"};
}

inline bool builtin_config(const std::string& name, RunConfig& out) {
  RunConfig c;
  if (name == "example_s5") {
    c.problem.a = "0.00000001";
    c.problem.b = "0";
    c.problem.da_dx = "0";
    c.problem.phi = "1";
    c.problem.f = "y";
    c.problem.h = "exp(2)*ind(t,-1,1)+0.5*ind(t,1,3)";
    c.problem.T = 2.0;
    c.problem.alpha = 1.0;
    c.problem.lambda = 1e-8;
    c.problem.Lambda = 1.0;
    c.problem.lipschitz = 1.0;
    c.grid = {-4.0, 4.0, 15, 2000, "neumann_zero"};
    c.backend.backend = "lcp";
    c.backend.probes = {0.0};
    c.backend.schedule = {16.0, 256.0, 4096.0, 65536.0};
  } else if (name == "american_put") {
    c.problem.a = "0.09";
    c.problem.b = "0";
    c.problem.da_dx = "0";
    c.problem.phi = "max(1-x,0)";
    c.problem.f = "-0.05*y";
    c.problem.h = "max(1-x,0)";
    c.problem.T = 1.0;
    c.problem.alpha = 1.0;
    c.problem.lambda = 0.09;
    c.problem.Lambda = 0.09;
    c.problem.lipschitz = 0.05;
    c.grid = {-3.0, 5.0, 200, 200, "dirichlet_obstacle"};
    c.backend.backend = "all";
    c.backend.penalty_n = 4096.0;
    c.backend.schedule = {16.0, 256.0, 4096.0, 65536.0};
    c.backend.mc_paths = 20000;
    c.backend.mc_steps = 25;
    c.backend.mc_degree = 6;
    c.backend.seed = 20240314;
    c.backend.probes = {0.6, 0.8, 1.0, 1.2};
  } else if (name == "unconstrained_heat") {
    c.problem.a = "1";
    c.problem.b = "0";
    c.problem.da_dx = "0";
    c.problem.phi = "exp(-x*x)";
    c.problem.f = "0";
    c.problem.T = 1.0;
    c.problem.alpha = 1.0;
    c.problem.lambda = 1.0;
    c.problem.Lambda = 1.0;
    c.problem.lipschitz = 0.0;
    c.grid = {-8.0, 8.0, 200, 100, "dirichlet_zero"};
    c.backend.backend = "lcp";
    c.backend.probes = {0.0, 0.5};
    c.backend.schedule = {16.0, 256.0, 4096.0, 65536.0};
  } else if (name == "continuous_h_semilinear") {
    c.problem.a = "1";
    c.problem.b = "0.1";
    c.problem.da_dx = "0";
    c.problem.phi = "0.5*exp(-x*x)";
    c.problem.f = "-1+0.5*sin(y)+0.25*sin(z)";
    c.problem.h = "0.5*exp(-x*x)";
    c.problem.T = 1.0;
    c.problem.alpha = 1.0;
    c.problem.lambda = 1.0;
    c.problem.Lambda = 1.0;
    c.problem.lipschitz = 0.75;
    c.grid = {-6.0, 6.0, 150, 150, "dirichlet_zero"};
    c.backend.backend = "penalized";
    c.backend.lcp_method = "policy";
    c.backend.schedule = {1.0,    2.0,    4.0,    8.0,    16.0,  32.0,  64.0,
                          128.0,  256.0,  512.0,  1024.0, 2048.0, 4096.0};
    c.backend.probes = {0.0};
  } else if (name == "discontinuous_h") {
    c.problem.a = "1";
    c.problem.b = "0";
    c.problem.da_dx = "0";
    c.problem.phi = "0.1*exp(-x*x)";
    c.problem.f = "0";
    c.problem.h = "(0.5*ind(t,-1,0.5)+0.1)*exp(-x*x)";
    c.problem.T = 1.0;
    c.problem.alpha = 1.0;
    c.problem.lambda = 1.0;
    c.problem.Lambda = 1.0;
    c.problem.lipschitz = 0.0;
    c.grid = {-6.0, 6.0, 120, 240, "dirichlet_zero"};
    c.backend.backend = "penalized";
    c.backend.lcp_method = "policy";
    c.backend.schedule = {1.0,    2.0,    4.0,    8.0,    16.0,  32.0,  64.0,
                          128.0,  256.0,  512.0,  1024.0, 2048.0, 4096.0};
    c.backend.probes = {0.0};
  } else {
    return false;
  }
  c.problem.builtin = name;
  out = c;
  return true;
}

struct ConfigError {
  std::size_t line = 0;  // 1-based line in the config text, 0 when semantic
  std::string field;     // "section.key"
  std::string message;
};

struct ConfigParseResult {
  bool ok = false;
  ConfigError error;
  RunConfig config;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline bool parse_double(const std::string& v, double& out) {
  const char* begin = v.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end != begin && *end == '\0';
}

inline bool parse_count(const std::string& v, std::size_t& out) {
  double d;
  if (!parse_double(v, d)) return false;
  if (d < 0.0 || d != std::floor(d) || d > 1e15) return false;
  out = static_cast<std::size_t>(d);
  return true;
}

inline bool parse_u64(const std::string& v, std::uint64_t& out) {
  if (v.empty() || v[0] == '-') return false;
  char* end = nullptr;
  unsigned long long u = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') return false;
  out = u;
  return true;
}

inline bool parse_list(const std::string& v, std::vector<double>& out) {
  out.clear();
  std::size_t pos = 0;
  while (pos <= v.size()) {
    std::size_t comma = v.find(',', pos);
    std::string item = trim(v.substr(pos, comma == std::string::npos ? comma : comma - pos));
    double d;
    if (!parse_double(item, d)) return false;
    out.push_back(d);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return !out.empty();
}

}  // namespace detail

inline ConfigParseResult parse_config(const std::string& text) {
  ConfigParseResult r;
  RunConfig& c = r.config;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;

  auto fail = [&](const std::string& field, const std::string& msg) {
    r.ok = false;
    r.error = {lineno, field, msg};
  };

  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        fail("", "unterminated section header");
        return r;
      }
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section != "problem" && section != "grid" && section != "backend" &&
          section != "output") {
        fail(section, "unknown section [" + section + "]");
        return r;
      }
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail(section, "expected key = value");
      return r;
    }
    std::string key = detail::trim(line.substr(0, eq));
    std::string val = detail::trim(line.substr(eq + 1));
    std::string field = section + "." + key;
    if (section.empty()) {
      fail(key, "key outside any [section]");
      return r;
    }
    if (key.empty() || val.empty()) {
      fail(field, "empty key or value");
      return r;
    }

    auto num = [&](double& slot) {
      if (!detail::parse_double(val, slot)) {
        fail(field, "'" + val + "' is not a number");
        return false;
      }
      return true;
    };
    auto cnt = [&](std::size_t& slot) {
      if (!detail::parse_count(val, slot)) {
        fail(field, "'" + val + "' is not a nonnegative integer");
        return false;
      }
      return true;
    };
    auto lst = [&](std::vector<double>& slot) {
      if (!detail::parse_list(val, slot)) {
        fail(field, "'" + val + "' is not a comma-separated number list");
        return false;
      }
      return true;
    };

    if (section == "problem") {
      if (key == "builtin") {
        RunConfig preset;
        if (!builtin_config(val, preset)) {
          fail(field, "unknown builtin '" + val + "'");
          return r;
        }
        c = preset;
      } else if (key == "a") {
        c.problem.a = val;
      } else if (key == "b") {
        c.problem.b = val;
      } else if (key == "da_dx") {
        c.problem.da_dx = val;
      } else if (key == "phi") {
        c.problem.phi = val;
      } else if (key == "f") {
        c.problem.f = val;
      } else if (key == "h") {
        c.problem.h = val;
      } else if (key == "T") {
        if (!num(c.problem.T)) return r;
      } else if (key == "alpha") {
        if (!num(c.problem.alpha)) return r;
      } else if (key == "lambda") {
        if (!num(c.problem.lambda)) return r;
      } else if (key == "Lambda") {
        if (!num(c.problem.Lambda)) return r;
      } else if (key == "lipschitz") {
        if (!num(c.problem.lipschitz)) return r;
      } else {
        fail(field, "unknown key");
        return r;
      }
    } else if (section == "grid") {
      if (key == "x_min") {
        if (!num(c.grid.x_min)) return r;
      } else if (key == "x_max") {
        if (!num(c.grid.x_max)) return r;
      } else if (key == "nx") {
        if (!cnt(c.grid.nx)) return r;
      } else if (key == "nt") {
        if (!cnt(c.grid.nt)) return r;
      } else if (key == "boundary") {
        if (val != "dirichlet_obstacle" && val != "dirichlet_zero" && val != "neumann_zero") {
          fail(field, "unknown boundary '" + val + "'");
          return r;
        }
        c.grid.boundary = val;
      } else {
        fail(field, "unknown key");
        return r;
      }
    } else if (section == "backend") {
      if (key == "backend") {
        if (val != "lcp" && val != "penalized" && val != "mc" && val != "all") {
          fail(field, "unknown backend '" + val + "'");
          return r;
        }
        c.backend.backend = val;
      } else if (key == "penalty_n") {
        if (!num(c.backend.penalty_n)) return r;
      } else if (key == "schedule") {
        if (!lst(c.backend.schedule)) return r;
      } else if (key == "theta") {
        if (!num(c.backend.theta)) return r;
      } else if (key == "inner_tol") {
        if (!num(c.backend.inner_tol)) return r;
      } else if (key == "lcp_method") {
        if (val != "psor" && val != "policy") {
          fail(field, "unknown lcp_method '" + val + "'");
          return r;
        }
        c.backend.lcp_method = val;
      } else if (key == "omega") {
        if (!num(c.backend.omega)) return r;
      } else if (key == "lcp_tol") {
        if (!num(c.backend.lcp_tol)) return r;
      } else if (key == "max_outer") {
        if (!cnt(c.backend.max_outer)) return r;
      } else if (key == "mc_paths") {
        if (!cnt(c.backend.mc_paths)) return r;
      } else if (key == "mc_steps") {
        if (!cnt(c.backend.mc_steps)) return r;
      } else if (key == "mc_degree") {
        if (!cnt(c.backend.mc_degree)) return r;
      } else if (key == "seed") {
        if (!detail::parse_u64(val, c.backend.seed)) {
          fail(field, "'" + val + "' is not an unsigned integer");
          return r;
        }
      } else if (key == "probes") {
        if (!lst(c.backend.probes)) return r;
      } else if (key == "compare_tol") {
        if (!num(c.backend.compare_tol)) return r;
      } else if (key == "mc_band") {
        if (!num(c.backend.mc_band)) return r;
      } else if (key == "refine_levels") {
        if (!cnt(c.backend.refine_levels)) return r;
      } else {
        fail(field, "unknown key");
        return r;
      }
    } else {  // output
      if (key == "dir") {
        c.output.dir = val;
      } else if (key == "formats") {
        c.output.formats = val;
      } else {
        fail(field, "unknown key");
        return r;
      }
    }
  }
  r.ok = true;
  return r;
}

struct BuildResult {
  bool ok = false;
  ConfigError error;  // line stays 0; field names the config entry
  ObstacleProblemSpec spec;
  Grid grid;
};

namespace detail {

inline bool compile_expr(const std::string& src, unsigned allowed_vars,
                         const std::string& field, const char* var_note, Expr& out,
                         ConfigError& err) {
  ExprParseResult p = parse_expression(src);
  if (!p.ok) {
    err = {0, field, p.message + " at offset " + std::to_string(p.pos) + " in '" + src + "'"};
    return false;
  }
  if (p.expr.vars() & ~allowed_vars) {
    err = {0, field, std::string("expression may only use ") + var_note + ": '" + src + "'"};
    return false;
  }
  out = std::move(p.expr);
  return true;
}

}  // namespace detail

/**
 * Compile a parsed config into solver inputs. Reports the first missing or
 * malformed field; bound and compatibility checks beyond shape are left to
 * validate_spec on the result.
 */
inline BuildResult build_problem(const RunConfig& c) {
  BuildResult r;
  auto missing = [&](const char* field) {
    r.error = {0, field, "required field is missing"};
    return r;
  };

  if (c.problem.a.empty()) return missing("problem.a");
  if (c.problem.b.empty()) return missing("problem.b");
  if (c.problem.phi.empty()) return missing("problem.phi");
  if (c.problem.f.empty()) return missing("problem.f");
  if (std::isnan(c.problem.T)) return missing("problem.T");
  if (std::isnan(c.problem.lambda)) return missing("problem.lambda");
  if (std::isnan(c.problem.Lambda)) return missing("problem.Lambda");
  if (std::isnan(c.grid.x_min)) return missing("grid.x_min");
  if (std::isnan(c.grid.x_max)) return missing("grid.x_max");
  if (c.grid.nx == 0) return missing("grid.nx");
  if (c.grid.nt == 0) return missing("grid.nt");

  const unsigned tx = kVarT | kVarX;
  Expr ea, eb, ephi, ef;
  if (!detail::compile_expr(c.problem.a, tx, "problem.a", "t and x", ea, r.error)) return r;
  if (!detail::compile_expr(c.problem.b, tx, "problem.b", "t and x", eb, r.error)) return r;
  if (!detail::compile_expr(c.problem.phi, kVarX, "problem.phi", "x", ephi, r.error)) return r;
  if (!detail::compile_expr(c.problem.f, tx | kVarY | kVarZ, "problem.f", "t, x, y and z", ef,
                            r.error))
    return r;

  r.spec.coeffs.a = [ea](double t, double x) { return ea.eval({t, x, 0.0, 0.0}); };
  r.spec.coeffs.b = [eb](double t, double x) { return eb.eval({t, x, 0.0, 0.0}); };
  if (!c.problem.da_dx.empty()) {
    Expr eda;
    if (!detail::compile_expr(c.problem.da_dx, tx, "problem.da_dx", "t and x", eda, r.error))
      return r;
    r.spec.coeffs.da_dx = [eda](double t, double x) { return eda.eval({t, x, 0.0, 0.0}); };
  }
  r.spec.coeffs.lambda = c.problem.lambda;
  r.spec.coeffs.Lambda = c.problem.Lambda;

  r.spec.gen.f = [ef](double t, double x, double y, double z) {
    return ef.eval({t, x, y, z});
  };
  r.spec.gen.lipschitz_L = c.problem.lipschitz;
  r.spec.phi = [ephi](double x) { return ephi.eval({0.0, x, 0.0, 0.0}); };
  if (!c.problem.h.empty()) {
    Expr eh;
    if (!detail::compile_expr(c.problem.h, tx, "problem.h", "t and x", eh, r.error)) return r;
    r.spec.h = [eh](double t, double x) { return eh.eval({t, x, 0.0, 0.0}); };
  }
  r.spec.T = c.problem.T;
  r.spec.alpha = c.problem.alpha;

  r.grid.x_min = c.grid.x_min;
  r.grid.x_max = c.grid.x_max;
  r.grid.nx = c.grid.nx;
  r.grid.nt = c.grid.nt;
  r.grid.boundary = c.grid.boundary == "neumann_zero"      ? Boundary::neumann_zero
                    : c.grid.boundary == "dirichlet_zero"  ? Boundary::dirichlet_zero
                                                           : Boundary::dirichlet_obstacle;
  r.ok = true;
  return r;
}

}  // namespace obstakl
