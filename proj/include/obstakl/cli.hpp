#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "obstakl/bsde.hpp"
#include "obstakl/config.hpp"
#include "obstakl/measure.hpp"
#include "obstakl/norms.hpp"
#include "obstakl/paths.hpp"
#include "obstakl/validate.hpp"
#include "obstakl/vi.hpp"

namespace obstakl {

/**
 * Run orchestration behind the command line tool. Exit code contract:
 * 0 success, 1 a cross-validation pair exceeded its declared tolerance,
 * 2 configuration or validation failure, 3 solver failure. Everything
 * written to disk is a deterministic function of config and seed: floats go
 * out at full round-trip precision, rows are sorted, and no timestamps or
 * machine details appear anywhere.
 */
enum ExitCode : int {
  kExitOk = 0,
  kExitCompareFailed = 1,
  kExitInvalid = 2,
  kExitSolverFailed = 3,
};

namespace cli_detail {

using ordered_json = nlohmann::ordered_json;

inline bool write_text(const std::filesystem::path& path, const std::string& body,
                       std::ostream& err) {
  std::ofstream out(path, std::ios::binary);
  out << body;
  out.flush();
  if (!out) {
    err << "error: cannot write '" << path.string() << "'\n";
    return false;
  }
  return true;
}

inline bool ensure_outdir(const std::string& outdir, std::ostream& err) {
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec) {
    err << "error: cannot create output directory '" << outdir << "': " << ec.message()
        << "\n";
    return false;
  }
  return true;
}

inline std::string solution_csv(const DiscreteSolution& sol) {
  std::string s = "t,x,u,grad_u\n";
  for (std::size_t k = 0; k <= sol.grid.nt; ++k) {
    std::string t = fmt17(sol.t(k));
    auto uk = sol.level(k);
    auto gk = sol.grad_level(k);
    for (std::size_t j = 0; j < sol.grid.nx; ++j) {
      s += t;
      s += ',';
      s += fmt17(sol.grid.x(j));
      s += ',';
      s += fmt17(uk[j]);
      s += ',';
      s += fmt17(gk[j]);
      s += '\n';
    }
  }
  return s;
}

/** Interior atoms sorted by (level, node), then nonzero terminal rows at T. */
inline std::string measure_csv(const DiscreteMeasure& mu) {
  std::vector<MeasureAtom> atoms = mu.atoms;
  std::sort(atoms.begin(), atoms.end(), [](const MeasureAtom& a, const MeasureAtom& b) {
    return a.k != b.k ? a.k < b.k : a.j < b.j;
  });
  std::string s = "t,x,mass\n";
  for (const auto& a : atoms) {
    s += fmt17(mu.t(a.k));
    s += ',';
    s += fmt17(mu.grid.x(a.j));
    s += ',';
    s += fmt17(a.mass);
    s += '\n';
  }
  double dx = mu.grid.dx();
  for (std::size_t j = 0; j < mu.terminal_density.size(); ++j) {
    if (mu.terminal_density[j] == 0.0) continue;
    s += fmt17(mu.T);
    s += ',';
    s += fmt17(mu.grid.x(j));
    s += ',';
    s += fmt17(mu.terminal_density[j] * dx);
    s += '\n';
  }
  return s;
}

inline ordered_json report_json(const SolveReport& r) {
  ordered_json j;
  j["converged"] = r.converged;
  j["message"] = r.message;
  j["max_inner_iterations"] = r.max_inner_iterations;
  j["max_psor_iterations"] = r.max_psor_iterations;
  j["upwind_rows"] = r.upwind_rows;
  j["max_step_change"] = r.max_step_change;
  j["tridiag_residual"] = r.tridiag_residual;
  j["diag_dominance_lost"] = r.diag_dominance_lost;
  return j;
}

inline bool wants(const std::string& formats, const char* fmt) {
  return formats.find(fmt) != std::string::npos;
}

struct LoadedProblem {
  RunConfig config;
  ObstacleProblemSpec spec;
  Grid grid;
};

/**
 * Shared front half of every command: read the file, parse, expand, build
 * and validate. Returns kExitOk or kExitInvalid after printing diagnostics.
 */
inline int load_problem(const std::string& config_path, std::ostream& err,
                        LoadedProblem& out) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    err << "error: cannot read config file '" << config_path << "'\n";
    return kExitInvalid;
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ConfigParseResult parsed = parse_config(text);
  if (!parsed.ok) {
    err << "config error at line " << parsed.error.line << " [" << parsed.error.field
        << "]: " << parsed.error.message << "\n";
    return kExitInvalid;
  }
  BuildResult built = build_problem(parsed.config);
  if (!built.ok) {
    err << "config error [" << built.error.field << "]: " << built.error.message << "\n";
    return kExitInvalid;
  }
  ValidationReport vr = validate_spec(built.spec, built.grid);
  if (!vr.ok()) {
    err << "validation failed: " << vr.summary() << "\n";
    return kExitInvalid;
  }
  out.config = std::move(parsed.config);
  out.spec = std::move(built.spec);
  out.grid = built.grid;
  return kExitOk;
}

inline LcpOptions lcp_options(const BackendConfig& b) {
  LcpOptions o;
  o.theta = b.theta;
  o.inner_tol = b.inner_tol;
  o.max_outer = b.max_outer;
  o.method = b.lcp_method == "policy" ? LcpMethod::policy_iteration : LcpMethod::psor;
  o.omega = b.omega;
  o.psor_tol = b.lcp_tol;
  return o;
}

inline PenalizedOptions penalized_options(const BackendConfig& b) {
  PenalizedOptions o;
  o.theta = b.theta;
  o.inner_tol = b.inner_tol;
  return o;
}

struct McProbe {
  double x = 0.0;
  double y0 = 0.0;
  double se = 0.0;
  BsdeDiagnostics diag;
};

inline McProbe mc_probe(const LoadedProblem& lp, double xp, std::size_t probe_index,
                        unsigned threads) {
  const BackendConfig& b = lp.config.backend;
  PathOptions po;
  po.threads = threads;
  po.fd_step = lp.grid.dx() / 4.0;
  std::uint64_t seed = b.seed + 1000003ull * probe_index;
  PathEnsemble ens = simulate_paths(lp.spec.coeffs, 0.0, xp, lp.spec.T, b.mc_paths,
                                    b.mc_steps, seed, po);
  BsdeOptions bo;
  bo.basis_degree = b.mc_degree;
  bo.threads = threads;
  RbsdeEnsemble rb = reflected_bsde(lp.spec, ens, bo);
  McProbe p;
  p.x = xp;
  p.y0 = rb.y0;
  p.se = rb.y0_se;
  p.diag = rb.diag;
  return p;
}

/** Space-time error ( sum_k || v_k ||_p^p dt )^(1/p), left rectangle in time. */
inline double space_time_lp(const DiscreteSolution& a, const DiscreteSolution& b,
                            double alpha, double p, bool gradient) {
  double dt = a.dt();
  double acc = 0.0;
  std::vector<double> diff(a.grid.nx);
  for (std::size_t k = 0; k < a.grid.nt; ++k) {
    auto va = gradient ? a.grad_level(k) : a.level(k);
    auto vb = gradient ? b.grad_level(k) : b.level(k);
    for (std::size_t j = 0; j < a.grid.nx; ++j) diff[j] = va[j] - vb[j];
    double nk = weighted_lp_norm(diff, a.grid, alpha, p);
    acc += std::pow(nk, p) * dt;
  }
  return std::pow(acc, 1.0 / p);
}

}  // namespace cli_detail

/**
 * Solve with the configured primary backend and write solution.csv,
 * measure.csv and report.json. The grid backends are the primary ones; when
 * the config says mc or all, the field artifacts come from the LCP solve
 * and the regression estimate is reported per probe in report.json.
 */
inline int run_solve(const std::string& config_path, const std::string& out_override,
                     unsigned threads, bool seed_set, std::uint64_t seed_override,
                     std::ostream& err) {
  namespace cd = cli_detail;
  cd::LoadedProblem lp;
  int rc = cd::load_problem(config_path, err, lp);
  if (rc != kExitOk) return rc;
  if (seed_set) lp.config.backend.seed = seed_override;
  const BackendConfig& b = lp.config.backend;
  const std::string outdir = out_override.empty() ? lp.config.output.dir : out_override;

  DiscreteSolution sol;
  DiscreteMeasure mu;
  SolveReport report;
  const bool penalized_primary = b.backend == "penalized";
  if (penalized_primary) {
    PenalizedResult pr = solve_penalized(lp.spec, lp.grid, b.penalty_n,
                                         cd::penalized_options(b));
    sol = std::move(pr.sol);
    mu = std::move(pr.mu);
    report = std::move(pr.report);
  } else {
    LcpResult lr = solve_lcp(lp.spec, lp.grid, cd::lcp_options(b));
    sol = std::move(lr.sol);
    mu = std::move(lr.mu);
    report = std::move(lr.report);
  }
  if (!report.converged) {
    err << "solver failed: " << report.message << "\n";
    return kExitSolverFailed;
  }

  std::vector<cd::McProbe> mc;
  if (b.backend == "mc" || b.backend == "all") {
    for (std::size_t i = 0; i < b.probes.size(); ++i) {
      mc.push_back(cd::mc_probe(lp, b.probes[i], i, threads));
      if (!mc.back().diag.converged) {
        err << "solver failed: " << mc.back().diag.message << "\n";
        return kExitSolverFailed;
      }
    }
  }

  if (!cd::ensure_outdir(outdir, err)) return kExitInvalid;
  const std::string& formats = lp.config.output.formats;
  if (cd::wants(formats, "csv")) {
    if (!cd::write_text(std::filesystem::path(outdir) / "solution.csv", cd::solution_csv(sol),
                        err))
      return kExitInvalid;
    if (!cd::write_text(std::filesystem::path(outdir) / "measure.csv", cd::measure_csv(mu),
                        err))
      return kExitInvalid;
  }
  if (cd::wants(formats, "json")) {
    cd::ordered_json j;
    j["backend"] = b.backend;
    j["builtin"] = lp.config.problem.builtin;
    j["seed"] = b.seed;
    j["grid"] = {{"x_min", lp.grid.x_min}, {"x_max", lp.grid.x_max}, {"nx", lp.grid.nx},
                 {"nt", lp.grid.nt},       {"dx", lp.grid.dx()},     {"dt", sol.dt()},
                 {"boundary", lp.config.grid.boundary}};
    j["problem"] = {{"T", lp.spec.T},
                    {"alpha", lp.spec.alpha},
                    {"lambda", lp.spec.coeffs.lambda},
                    {"Lambda", lp.spec.coeffs.Lambda},
                    {"lipschitz", lp.spec.gen.lipschitz_L},
                    {"has_obstacle", lp.spec.has_obstacle()}};
    j["solve"] = cd::report_json(report);
    j["complementarity_residual"] = complementarity_residual(lp.spec, sol, b.theta);
    j["minimality_integral"] = minimality_integral(sol, mu, lp.spec);
    j["minimality_integral_cadlag"] = minimality_integral(sol, mu, lp.spec, true);

    StructuralReport sr = structural_checks(mu, sol, lp.spec);
    TimeMarginal tm = time_marginal(mu, lp.spec.alpha);
    double terminal_mass = 0.0;
    for (double d : mu.terminal_density) terminal_mass += d * mu.grid.dx();
    j["measure"] = {{"total_mass", mu.total_mass()},
                    {"interior_atoms", mu.atoms.size()},
                    {"terminal_mass", terminal_mass},
                    {"structural_ok", sr.ok()},
                    {"no_initial_mass", sr.no_initial_mass},
                    {"atom_like", tm.atom_like},
                    {"peak_time", mu.t(tm.peak_level)},
                    {"peak_fraction", tm.peak_fraction}};

    cd::ordered_json probes = cd::ordered_json::array();
    for (double xp : b.probes) {
      double u0 = sol.interp(0, xp);
      probes.push_back({{"x", xp}, {"u0", u0}});
    }
    j["probes"] = probes;

    if (!mc.empty()) {
      cd::ordered_json jm = cd::ordered_json::array();
      for (const auto& p : mc)
        jm.push_back({{"x", p.x},
                      {"y0", p.y0},
                      {"se", p.se},
                      {"min_effective_degree", p.diag.min_effective_degree},
                      {"max_condition_estimate", p.diag.max_condition_estimate}});
      j["mc"] = jm;
    }
    if (!cd::write_text(std::filesystem::path(outdir) / "report.json", j.dump(2) + "\n", err))
      return kExitInvalid;
  }
  return kExitOk;
}

/**
 * Cross-validate backends at the configured probe points and write
 * compare.csv. Requires backend = all so that all three are available; the
 * declared bands are compare_tol between the two grid backends and
 * 3 standard errors + mc_band against the regression estimate.
 */
inline int run_compare(const std::string& config_path, const std::string& out_override,
                       unsigned threads, bool seed_set, std::uint64_t seed_override,
                       std::ostream& err) {
  namespace cd = cli_detail;
  cd::LoadedProblem lp;
  int rc = cd::load_problem(config_path, err, lp);
  if (rc != kExitOk) return rc;
  if (seed_set) lp.config.backend.seed = seed_override;
  const BackendConfig& b = lp.config.backend;
  const std::string outdir = out_override.empty() ? lp.config.output.dir : out_override;

  if (b.backend != "all") {
    err << "config error [backend.backend]: compare needs backend = all (two grid "
           "backends plus mc)\n";
    return kExitInvalid;
  }
  if (b.probes.empty()) {
    err << "config error [backend.probes]: compare needs at least one probe point\n";
    return kExitInvalid;
  }

  LcpResult lr = solve_lcp(lp.spec, lp.grid, cd::lcp_options(b));
  if (!lr.report.converged) {
    err << "solver failed: " << lr.report.message << "\n";
    return kExitSolverFailed;
  }
  PenalizedResult pr = solve_penalized(lp.spec, lp.grid, b.penalty_n,
                                       cd::penalized_options(b));
  if (!pr.report.converged) {
    err << "solver failed: " << pr.report.message << "\n";
    return kExitSolverFailed;
  }

  std::string csv =
      "x,lcp,penalized,mc,mc_se,diff_lcp_penalized,diff_lcp_mc,diff_penalized_mc,"
      "band_pde,band_mc,pass\n";
  bool all_pass = true;
  for (std::size_t i = 0; i < b.probes.size(); ++i) {
    double xp = b.probes[i];
    double u_lcp = lr.sol.interp(0, xp);
    double u_pen = pr.sol.interp(0, xp);
    cd::McProbe p = cd::mc_probe(lp, xp, i, threads);
    if (!p.diag.converged) {
      err << "solver failed: " << p.diag.message << "\n";
      return kExitSolverFailed;
    }
    double band_pde = b.compare_tol;
    double band_mc = 3.0 * p.se + b.mc_band;
    double d_lp = std::abs(u_lcp - u_pen);
    double d_lm = std::abs(u_lcp - p.y0);
    double d_pm = std::abs(u_pen - p.y0);
    bool pass = d_lp <= band_pde && d_lm <= band_mc && d_pm <= band_mc + band_pde;
    all_pass = all_pass && pass;
    csv += fmt17(xp);
    csv += ',';
    csv += fmt17(u_lcp);
    csv += ',';
    csv += fmt17(u_pen);
    csv += ',';
    csv += fmt17(p.y0);
    csv += ',';
    csv += fmt17(p.se);
    csv += ',';
    csv += fmt17(d_lp);
    csv += ',';
    csv += fmt17(d_lm);
    csv += ',';
    csv += fmt17(d_pm);
    csv += ',';
    csv += fmt17(band_pde);
    csv += ',';
    csv += fmt17(band_mc);
    csv += ',';
    csv += pass ? '1' : '0';
    csv += '\n';
  }
  if (!cd::ensure_outdir(outdir, err)) return kExitInvalid;
  if (!cd::write_text(std::filesystem::path(outdir) / "compare.csv", csv, err))
    return kExitInvalid;
  if (!all_pass) {
    err << "comparison exceeded declared tolerance at one or more probes; see "
        << (std::filesystem::path(outdir) / "compare.csv").string() << "\n";
    return kExitCompareFailed;
  }
  return kExitOk;
}

/**
 * Penalty-schedule and grid-refinement studies. penalty_convergence.csv
 * tracks the distance from each penalized solution to the LCP reference in
 * the weighted space-time norms together with the minimality integral;
 * grid_refinement.csv re-solves the primary backend on dyadically refined
 * grids and reports the probe-value increments and their rate.
 */
inline int run_convergence(const std::string& config_path, const std::string& out_override,
                           unsigned /*threads*/, bool seed_set, std::uint64_t seed_override,
                           std::ostream& err) {
  namespace cd = cli_detail;
  cd::LoadedProblem lp;
  int rc = cd::load_problem(config_path, err, lp);
  if (rc != kExitOk) return rc;
  if (seed_set) lp.config.backend.seed = seed_override;
  const BackendConfig& b = lp.config.backend;
  const std::string outdir = out_override.empty() ? lp.config.output.dir : out_override;

  if (b.schedule.size() < 4) {
    err << "config error [backend.schedule]: convergence study needs at least 4 penalty "
           "levels\n";
    return kExitInvalid;
  }
  if (b.probes.empty()) {
    err << "config error [backend.probes]: convergence study needs a probe point\n";
    return kExitInvalid;
  }

  LcpResult ref = solve_lcp(lp.spec, lp.grid, cd::lcp_options(b));
  if (!ref.report.converged) {
    err << "solver failed: " << ref.report.message << "\n";
    return kExitSolverFailed;
  }
  std::vector<PenaltyLevelResult> seq =
      solve_penalized_sequence(lp.spec, lp.grid, b.schedule, cd::penalized_options(b));
  std::string csv = "n,u_err_l2,grad_err_l1,grad_err_l2,minimality\n";
  for (const auto& lev : seq) {
    if (!lev.report.converged) {
      err << "solver failed at penalty level " << fmt17(lev.n) << ": " << lev.report.message
          << "\n";
      return kExitSolverFailed;
    }
    csv += fmt17(lev.n);
    csv += ',';
    csv += fmt17(cd::space_time_lp(lev.sol, ref.sol, lp.spec.alpha, 2.0, false));
    csv += ',';
    csv += fmt17(cd::space_time_lp(lev.sol, ref.sol, lp.spec.alpha, 1.0, true));
    csv += ',';
    csv += fmt17(cd::space_time_lp(lev.sol, ref.sol, lp.spec.alpha, 2.0, true));
    csv += ',';
    csv += fmt17(minimality_integral(lev.sol, lev.mu, lp.spec));
    csv += '\n';
  }

  const bool penalized_primary = b.backend == "penalized";
  std::string gcsv = "level,nx,nt,dx,dt,u_probe,diff_prev,rate\n";
  double xp = b.probes[0];
  Grid g = lp.grid;
  double prev = 0.0, prev_diff = 0.0;
  for (std::size_t lev = 0; lev < std::max<std::size_t>(b.refine_levels, 1); ++lev) {
    if (lev > 0) {
      g.nx = 2 * g.nx + 1;  // halves dx exactly: dx = (x_max - x_min)/(nx+1)
      g.nt = 2 * g.nt;
    }
    DiscreteSolution sol;
    SolveReport rep;
    if (penalized_primary) {
      PenalizedResult r = solve_penalized(lp.spec, g, b.penalty_n, cd::penalized_options(b));
      sol = std::move(r.sol);
      rep = std::move(r.report);
    } else {
      LcpResult r = solve_lcp(lp.spec, g, cd::lcp_options(b));
      sol = std::move(r.sol);
      rep = std::move(r.report);
    }
    if (!rep.converged) {
      err << "solver failed at refinement level " << lev << ": " << rep.message << "\n";
      return kExitSolverFailed;
    }
    double up = sol.interp(0, xp);
    double diff = lev > 0 ? std::abs(up - prev) : std::nan("");
    double rate = lev > 1 && diff > 0.0 ? std::log2(prev_diff / diff) : std::nan("");
    gcsv += std::to_string(lev);
    gcsv += ',';
    gcsv += std::to_string(g.nx);
    gcsv += ',';
    gcsv += std::to_string(g.nt);
    gcsv += ',';
    gcsv += fmt17(g.dx());
    gcsv += ',';
    gcsv += fmt17(lp.spec.T / static_cast<double>(g.nt));
    gcsv += ',';
    gcsv += fmt17(up);
    gcsv += ',';
    gcsv += fmt17(diff);
    gcsv += ',';
    gcsv += fmt17(rate);
    gcsv += '\n';
    prev = up;
    if (lev > 0) prev_diff = diff;
  }

  if (!cd::ensure_outdir(outdir, err)) return kExitInvalid;
  if (!cd::write_text(std::filesystem::path(outdir) / "penalty_convergence.csv", csv, err))
    return kExitInvalid;
  if (!cd::write_text(std::filesystem::path(outdir) / "grid_refinement.csv", gcsv, err))
    return kExitInvalid;
  return kExitOk;
}

}  // namespace obstakl
