// optexec: solve for the optimal participation rate, simulate execution
// strategies under time-changed price dynamics, and cross-check the closed
// form against quadrature and brute-force enumeration.
//
// Every subcommand reads one JSON config (market, impact, volume, run blocks)
// and writes report.json plus any CSV artifacts into the output directory.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "optexec/cli.hpp"
#include "optexec/config.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<long long> n_paths;
  std::optional<std::string> out_dir;
  bool literal_indicator = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CliOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "override run.seed");
  cmd->add_option("--n-paths", opts.n_paths, "override run.n_paths");
  cmd->add_option("-o,--out", opts.out_dir, "override run.out output directory");
  cmd->add_flag("-q,--quiet", opts.quiet, "suppress the terminal summary");
}

int execute(const CliOptions& opts,
            const std::function<optexec::cli::CommandResult(const optexec::RunConfig&)>&
                runner) {
  const optexec::cli::CommandResult result = optexec::cli::run_guarded([&] {
    optexec::RunConfig cfg = optexec::load_config_file(opts.config_path);
    if (opts.seed) cfg.run.seed = *opts.seed;
    if (opts.n_paths) {
      if (*opts.n_paths < 1) throw optexec::ConfigError("--n-paths: must be >= 1");
      cfg.run.n_paths = *opts.n_paths;
    }
    if (opts.out_dir) cfg.run.out_dir = *opts.out_dir;
    optexec::cli::CommandResult res = runner(cfg);
    optexec::cli::write_outputs(res, cfg.resolve(cfg.run.out_dir));
    return res;
  });
  if (!opts.quiet) {
    const std::string summary = optexec::cli::summarize(result);
    (result.exit_code == 0 ? std::cout : std::cerr) << summary;
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Optimal VWAP execution: participation-rate solver, strategy simulator, "
      "and brute-force cross-checks"};
  app.require_subcommand(1);

  CliOptions solve_opts, sim_opts, oracle_opts, compare_opts, validate_opts;

  auto* solve = app.add_subcommand(
      "solve", "solve the rate equation and report the closed-form value");
  add_common(solve, solve_opts);

  auto* simulate = app.add_subcommand(
      "simulate", "Monte Carlo estimate of one strategy's expected revenue");
  add_common(simulate, sim_opts);
  simulate->add_flag("--literal-indicator", sim_opts.literal_indicator,
                     "gate the optimal rate on the instantaneous volume rate "
                     "instead of the cumulative clock");

  auto* oracle = app.add_subcommand(
      "oracle", "enumerate piecewise-constant schedules on a deterministic path");
  add_common(oracle, oracle_opts);

  auto* compare = app.add_subcommand(
      "compare", "simulate the configured strategies with shared random numbers");
  add_common(compare, compare_opts);
  compare->add_flag("--literal-indicator", compare_opts.literal_indicator,
                    "gate volume-tracking rates on the instantaneous volume rate");

  auto* validate = app.add_subcommand(
      "validate-impact", "run the impact shape checks and report each one");
  add_common(validate, validate_opts);

  CLI11_PARSE(app, argc, argv);

  const auto reading_of = [](const CliOptions& o) {
    return o.literal_indicator ? optexec::IndicatorReading::LiteralRate
                               : optexec::IndicatorReading::CumulativeClock;
  };

  if (solve->parsed()) {
    return execute(solve_opts, [](const optexec::RunConfig& cfg) {
      return optexec::cli::run_solve(cfg);
    });
  }
  if (simulate->parsed()) {
    return execute(sim_opts, [&](const optexec::RunConfig& cfg) {
      return optexec::cli::run_simulate(cfg, reading_of(sim_opts));
    });
  }
  if (oracle->parsed()) {
    return execute(oracle_opts, [](const optexec::RunConfig& cfg) {
      return optexec::cli::run_oracle(cfg);
    });
  }
  if (compare->parsed()) {
    return execute(compare_opts, [&](const optexec::RunConfig& cfg) {
      return optexec::cli::run_compare(cfg, reading_of(compare_opts));
    });
  }
  return execute(validate_opts, [](const optexec::RunConfig& cfg) {
    return optexec::cli::run_validate_impact(cfg);
  });
}
