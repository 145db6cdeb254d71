#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "obstakl/cli.hpp"

namespace {

unsigned threads_from_env() {
  const char* env = std::getenv("OBSTAKL_THREADS");
  if (!env) return 1;
  long v = std::strtol(env, nullptr, 10);
  return v > 0 ? static_cast<unsigned>(v) : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Obstacle problem solver suite: penalized and LCP grid backends, "
               "regression Monte Carlo, and the reflection measure they share"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  unsigned threads = threads_from_env();
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "problem configuration file")->required();
    cmd->add_option("--threads", threads, "worker threads for the Monte Carlo backend");
    cmd->add_option("--seed", seed, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--out", out_dir, "output directory (overrides [output] dir)");
  };

  CLI::App* solve = app.add_subcommand(
      "solve", "solve one instance and write solution.csv, measure.csv, report.json");
  CLI::App* compare = app.add_subcommand(
      "compare", "cross-validate lcp, penalized and mc at the probe points");
  CLI::App* convergence = app.add_subcommand(
      "convergence", "penalty schedule and grid refinement studies");
  add_common(solve);
  add_common(compare);
  add_common(convergence);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    // CLI11 returns 0 for --help; anything else is a usage problem.
    return rc == 0 ? 0 : obstakl::kExitInvalid;
  }

  if (solve->parsed())
    return obstakl::run_solve(config_path, out_dir, threads, seed_set, seed, std::cerr);
  if (compare->parsed())
    return obstakl::run_compare(config_path, out_dir, threads, seed_set, seed, std::cerr);
  return obstakl::run_convergence(config_path, out_dir, threads, seed_set, seed, std::cerr);
}
