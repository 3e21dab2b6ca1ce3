#pragma once
// Command runners behind the CLI binary. Each one takes a validated
// RunConfig and returns an exit code, a JSON report, and named CSV
// artifacts. For a fixed config and seed the outputs are deterministic byte
// for byte, so two runs of the same command can be diffed directly.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "optexec/config.hpp"
#include "optexec/engine.hpp"
#include "optexec/impact.hpp"
#include "optexec/market.hpp"
#include "optexec/oracle.hpp"
#include "optexec/strategy.hpp"

namespace optexec::cli {

struct CommandResult {
  int exit_code = 0;
  nlohmann::json report;
  // Extra artifacts as (file name, content) pairs; written next to report.json.
  std::vector<std::pair<std::string, std::string>> files;
};

namespace detail {

// Sample count for the quick shape gate run before solving; the dedicated
// validate-impact command probes more densely.
inline constexpr int kGateSamples = 64;
inline constexpr int kValidateSamples = 256;
inline constexpr long long kFeasibilityPaths = 1000;

inline CommandResult error_result(int code, const char* type,
                                  const std::string& message) {
  CommandResult out;
  out.exit_code = code;
  out.report["error"] = {{"type", type}, {"message", message}};
  return out;
}

inline nlohmann::json validation_json(const ValidationReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  }
  return {{"all_pass", report.all_pass()}, {"checks", std::move(checks)}};
}

inline nlohmann::json feasibility_json(const FeasibilityReport& r) {
  return {{"feasible", r.feasible},
          {"violation_fraction", r.violation_fraction},
          {"min_terminal_volume", r.min_terminal_volume},
          {"n_paths", r.n_paths}};
}

inline FeasibilityReport feasibility_for(const RunConfig& cfg, double nu) {
  if (cfg.volume.deterministic()) {
    const VolumePath path = build_deterministic_path(cfg.volume, cfg.market.T);
    return check_feasibility(cfg.market.x, nu, std::span<const VolumePath>(&path, 1));
  }
  std::vector<VolumePath> paths;
  paths.reserve(kFeasibilityPaths);
  for (long long k = 0; k < kFeasibilityPaths; ++k) {
    paths.push_back(sample_volume_path(cfg.volume, cfg.market.T, cfg.run.seed,
                                       static_cast<std::uint64_t>(k)));
  }
  return check_feasibility(cfg.market.x, nu, paths);
}

inline Strategy build_strategy(const StrategySpec& spec, const RunConfig& cfg,
                               const SolvedRate& solved) {
  if (spec.kind == "optimal_vwap") {
    return Strategy::optimal_vwap(solved.nu, cfg.market.x);
  }
  if (spec.kind == "twap") {
    return Strategy::twap(cfg.market.x, cfg.market.T);
  }
  if (spec.kind == "pov") {
    const double beta =
        spec.beta_factor > 0.0 ? spec.beta_factor * solved.nu : spec.beta;
    return Strategy::pov(beta, cfg.market.x);
  }
  const auto path = cfg.resolve(spec.schedule_file);
  std::ifstream is(path);
  if (!is) throw ConfigError("schedule file: cannot open " + path.string());
  return Strategy::schedule(load_schedule_csv(is), cfg.market.x);
}

inline std::string paths_csv(const std::vector<PerPathRecord>& records) {
  std::ostringstream os;
  os << "path_id,revenue,sold\n";
  for (const auto& r : records) {
    os << r.path_id << ',' << optexec::detail::csv_double(r.revenue) << ','
       << optexec::detail::csv_double(r.sold) << '\n';
  }
  return os.str();
}

// Realizes the strategy on a representative path: the deterministic path when
// the volume model has one, otherwise the first sampled path of the run.
inline std::string schedule_csv_for(const Strategy& strategy, const RunConfig& cfg,
                                    IndicatorReading reading) {
  const VolumePath path =
      cfg.volume.deterministic()
          ? build_deterministic_path(cfg.volume, cfg.market.T)
          : sample_volume_path(cfg.volume, cfg.market.T, cfg.run.seed, 0);
  const RateSchedule schedule = realize(strategy, path, reading);
  std::ostringstream os;
  write_schedule_csv(schedule, path, os);
  return os.str();
}

inline const char* reading_name(IndicatorReading reading) {
  return reading == IndicatorReading::LiteralRate ? "literal" : "cumulative";
}

inline nlohmann::json estimate_json(const RevenueEstimate& est) {
  return {{"mean", est.mean},
          {"stderr", est.stderr_mean},
          {"ci95", {est.ci95_low, est.ci95_high}},
          {"is_cost", est.is_cost},
          {"n_paths", est.n_paths},
          {"budget_shortfall_fraction", est.budget_shortfall_fraction}};
}

}  // namespace detail

/// Solves the rate equation, reports the closed-form value, and checks that
/// the budget is coverable at the solved participation rate.
inline CommandResult run_solve(const RunConfig& cfg) {
  CommandResult out;
  out.report["command"] = "solve";

  const ValidationReport gate = validate(cfg.impact, detail::kGateSamples);
  out.report["validation"] = detail::validation_json(gate);
  if (!gate.all_pass()) {
    out.report["error"] = {{"type", "impact_validation_failed"},
                           {"message", "impact shape checks failed; see validation"}};
    out.exit_code = 2;
    return out;
  }

  const SolvedRate solved = solve_nu(cfg.impact, cfg.market.mu, cfg.run.tol);
  out.report["nu"] = solved.nu;
  out.report["h_nu"] = solved.h_nu;
  if (solved.nu_hat) out.report["nu_hat"] = *solved.nu_hat;
  out.report["residual"] = solved.residual;
  out.report["zeta0"] = cfg.impact.zeta0();
  out.report["J"] = closed_form_value(cfg.market.s0, solved.h_nu, cfg.market.x);

  const FeasibilityReport feas = detail::feasibility_for(cfg, solved.nu);
  out.report["feasibility"] = detail::feasibility_json(feas);
  return out;
}

/// Simulates one strategy and reports the Monte Carlo estimate next to the
/// closed-form value, with a z-score when the estimate has a standard error
/// and the strategy is the solved-rate one the closed form describes.
inline CommandResult run_simulate(
    const RunConfig& cfg,
    IndicatorReading reading = IndicatorReading::CumulativeClock) {
  CommandResult out;
  out.report["command"] = "simulate";

  const ValidationReport gate = validate(cfg.impact, detail::kGateSamples);
  if (!gate.all_pass()) {
    out.report["validation"] = detail::validation_json(gate);
    out.report["error"] = {{"type", "impact_validation_failed"},
                           {"message", "impact shape checks failed; see validation"}};
    out.exit_code = 2;
    return out;
  }

  const SolvedRate solved = solve_nu(cfg.impact, cfg.market.mu, cfg.run.tol);
  const Strategy strategy = detail::build_strategy(cfg.run.strategy, cfg, solved);
  std::vector<PerPathRecord> records;
  RevenueEstimate est =
      simulate(strategy, cfg.volume, cfg.market, cfg.impact, cfg.mode,
               cfg.run.n_paths, cfg.run.seed, reading,
               cfg.run.dump_paths ? &records : nullptr);

  const double J = closed_form_value(cfg.market.s0, solved.h_nu, cfg.market.x);
  out.report["strategy"] = cfg.run.strategy.label();
  out.report["reading"] = detail::reading_name(reading);
  out.report["seed"] = cfg.run.seed;
  out.report["estimate"] = detail::estimate_json(est);
  out.report["nu"] = solved.nu;
  out.report["J"] = J;
  if (est.stderr_mean > 0.0 && strategy.is_optimal_vwap() &&
      reading == IndicatorReading::CumulativeClock) {
    out.report["z_score"] = (est.mean - J) / est.stderr_mean;
  }

  if (cfg.run.dump_paths) {
    out.files.emplace_back("paths.csv", detail::paths_csv(records));
  }
  if (cfg.run.dump_schedule) {
    out.files.emplace_back("schedule.csv",
                           detail::schedule_csv_for(strategy, cfg, reading));
  }
  return out;
}

/// Enumerates piecewise-constant schedules on a deterministic volume path and
/// reports the best tuple against the closed-form value.
inline CommandResult run_oracle(const RunConfig& cfg) {
  if (!cfg.volume.deterministic()) {
    throw ConfigError(
        "volume.kind: the enumeration oracle needs a deterministic volume model");
  }
  CommandResult out;
  out.report["command"] = "oracle";

  const VolumePath path = build_deterministic_path(cfg.volume, cfg.market.T);
  const OracleResult res =
      brute_force(cfg.market, cfg.impact, path, cfg.run.n_intervals,
                  cfg.run.rate_grid, cfg.mode, cfg.run.top_k, cfg.run.tol);

  out.report["best_rates"] = res.best_rates;
  out.report["best_value"] = res.best_value;
  out.report["J"] = res.closed_form;
  out.report["gap"] = res.gap;
  out.report["n_evaluated"] = res.n_evaluated;
  out.report["n_ties"] = res.n_ties;
  out.report["ties"] = res.ties;
  out.report["n_intervals"] = cfg.run.n_intervals;
  out.report["rate_grid"] = cfg.run.rate_grid;

  std::ostringstream os;
  os << "rank,value";
  for (int j = 0; j < cfg.run.n_intervals; ++j) os << ",rate_" << (j + 1);
  os << '\n';
  for (std::size_t i = 0; i < res.top_k.size(); ++i) {
    os << (i + 1) << ',' << optexec::detail::csv_double(res.top_k[i].first);
    for (double r : res.top_k[i].second) {
      os << ',' << optexec::detail::csv_double(r);
    }
    os << '\n';
  }
  out.files.emplace_back("topk.csv", os.str());
  return out;
}

/// Simulates every listed strategy with the same seed (so they share random
/// numbers) and tabulates the estimates against the closed-form value.
inline CommandResult run_compare(
    const RunConfig& cfg,
    IndicatorReading reading = IndicatorReading::CumulativeClock) {
  if (cfg.run.strategies.size() < 2) {
    throw ConfigError("run.strategies: compare needs at least two strategies");
  }
  CommandResult out;
  out.report["command"] = "compare";

  const ValidationReport gate = validate(cfg.impact, detail::kGateSamples);
  if (!gate.all_pass()) {
    out.report["validation"] = detail::validation_json(gate);
    out.report["error"] = {{"type", "impact_validation_failed"},
                           {"message", "impact shape checks failed; see validation"}};
    out.exit_code = 2;
    return out;
  }

  const SolvedRate solved = solve_nu(cfg.impact, cfg.market.mu, cfg.run.tol);
  const double J = closed_form_value(cfg.market.s0, solved.h_nu, cfg.market.x);
  out.report["J"] = J;
  out.report["nu"] = solved.nu;
  out.report["seed"] = cfg.run.seed;
  out.report["n_paths"] = cfg.run.n_paths;
  out.report["reading"] = detail::reading_name(reading);

  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream csv;
  csv << "strategy,mean,stderr,is_cost,z\n";
  for (const StrategySpec& spec : cfg.run.strategies) {
    const Strategy strategy = detail::build_strategy(spec, cfg, solved);
    const RevenueEstimate est =
        simulate(strategy, cfg.volume, cfg.market, cfg.impact, cfg.mode,
                 cfg.run.n_paths, cfg.run.seed, reading);
    nlohmann::json row = {{"strategy", spec.label()},
                          {"mean", est.mean},
                          {"stderr", est.stderr_mean},
                          {"is_cost", est.is_cost}};
    csv << spec.label() << ',' << optexec::detail::csv_double(est.mean) << ','
        << optexec::detail::csv_double(est.stderr_mean) << ','
        << optexec::detail::csv_double(est.is_cost) << ',';
    if (est.stderr_mean > 0.0) {
      const double z = (est.mean - J) / est.stderr_mean;
      row["z"] = z;
      csv << optexec::detail::csv_double(z);
    }
    csv << '\n';
    rows.push_back(std::move(row));
  }
  out.report["rows"] = std::move(rows);
  out.files.emplace_back("compare.csv", csv.str());
  return out;
}

/// Runs the impact shape checks densely and reports each one.
inline CommandResult run_validate_impact(const RunConfig& cfg) {
  CommandResult out;
  out.report["command"] = "validate_impact";
  const ValidationReport report = validate(cfg.impact, detail::kValidateSamples);
  out.report["validation"] = detail::validation_json(report);
  out.exit_code = report.all_pass() ? 0 : 2;
  return out;
}

/// Maps library errors onto stable exit codes and a machine-readable error
/// report: 1 for bad input or config, 2 for an unsolvable rate equation, 3
/// for an impact domain violation, 4 for a refused enumeration size.
template <typename Fn>
CommandResult run_guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const NoRootAboveKnee& e) {
    return detail::error_result(2, "no_root_above_knee", e.what());
  } catch (const BracketFailure& e) {
    return detail::error_result(2, "bracket_failure", e.what());
  } catch (const ImpactDomainError& e) {
    return detail::error_result(3, "impact_domain_error", e.what());
  } catch (const EnumerationTooLarge& e) {
    return detail::error_result(4, "enumeration_too_large", e.what());
  } catch (const ConfigError& e) {
    return detail::error_result(1, "config_error", e.what());
  } catch (const InvalidFamily& e) {
    return detail::error_result(1, "invalid_family", e.what());
  } catch (const NonMonotoneTail& e) {
    return detail::error_result(1, "non_monotone_tail", e.what());
  } catch (const NegativeH& e) {
    return detail::error_result(1, "negative_h", e.what());
  } catch (const NonPositiveRate& e) {
    return detail::error_result(1, "non_positive_rate", e.what());
  } catch (const GridMismatch& e) {
    return detail::error_result(1, "grid_mismatch", e.what());
  } catch (const CsvError& e) {
    return detail::error_result(1, "csv_error", e.what());
  } catch (const InvalidPaths& e) {
    return detail::error_result(1, "invalid_paths", e.what());
  } catch (const std::exception& e) {
    return detail::error_result(1, "invalid_input", e.what());
  }
}

/// Writes report.json plus any artifacts into `out_dir` (created if needed)
/// and returns the paths written.
inline std::vector<std::filesystem::path> write_outputs(
    const CommandResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;

  const auto report_path = out_dir / "report.json";
  {
    std::ofstream os(report_path, std::ios::binary);
    if (!os) throw ConfigError("out: cannot write " + report_path.string());
    os << result.report.dump(2) << '\n';
  }
  written.push_back(report_path);

  for (const auto& [name, content] : result.files) {
    const auto path = out_dir / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("out: cannot write " + path.string());
    os << content;
    written.push_back(path);
  }
  return written;
}

namespace detail {

inline std::string fixed6(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

inline void append_line(std::string& out, const std::string& key,
                        const std::string& value) {
  out += key;
  out += " = ";
  out += value;
  out += '\n';
}

}  // namespace detail

/// Renders the few headline numbers of a report for the terminal. The full
/// precision values live in report.json; this view rounds to six decimals.
inline std::string summarize(const CommandResult& result) {
  const nlohmann::json& r = result.report;
  std::string out;
  if (r.contains("error")) {
    out += "error (" + r["error"]["type"].get<std::string>() +
           "): " + r["error"]["message"].get<std::string>() + '\n';
    return out;
  }
  const std::string command = r.value("command", "");
  if (command == "solve") {
    detail::append_line(out, "nu", detail::fixed6(r["nu"].get<double>()));
    if (r.contains("nu_hat")) {
      detail::append_line(out, "nu_hat", detail::fixed6(r["nu_hat"].get<double>()));
    }
    detail::append_line(out, "h(nu)", detail::fixed6(r["h_nu"].get<double>()));
    detail::append_line(out, "J", detail::fixed6(r["J"].get<double>()));
    detail::append_line(out, "feasible",
                        r["feasibility"]["feasible"].get<bool>() ? "yes" : "no");
  } else if (command == "simulate") {
    detail::append_line(out, "strategy", r["strategy"].get<std::string>());
    const auto& est = r["estimate"];
    detail::append_line(out, "mean", detail::fixed6(est["mean"].get<double>()));
    detail::append_line(out, "stderr", detail::fixed6(est["stderr"].get<double>()));
    detail::append_line(out, "is_cost", detail::fixed6(est["is_cost"].get<double>()));
    detail::append_line(out, "J", detail::fixed6(r["J"].get<double>()));
    if (r.contains("z_score")) {
      detail::append_line(out, "z", detail::fixed6(r["z_score"].get<double>()));
    }
  } else if (command == "oracle") {
    std::string rates;
    for (double v : r["best_rates"].get<std::vector<double>>()) {
      if (!rates.empty()) rates += ", ";
      rates += detail::fixed6(v);
    }
    detail::append_line(out, "best rates", "[" + rates + "]");
    detail::append_line(out, "best value", detail::fixed6(r["best_value"].get<double>()));
    detail::append_line(out, "J", detail::fixed6(r["J"].get<double>()));
    detail::append_line(out, "gap", detail::fixed6(r["gap"].get<double>()));
    detail::append_line(out, "tuples", std::to_string(r["n_evaluated"].get<long long>()));
  } else if (command == "compare") {
    detail::append_line(out, "J", detail::fixed6(r["J"].get<double>()));
    for (const auto& row : r["rows"]) {
      std::string line = detail::fixed6(row["mean"].get<double>()) + " +/- " +
                         detail::fixed6(row["stderr"].get<double>());
      detail::append_line(out, row["strategy"].get<std::string>(), line);
    }
  } else if (command == "validate_impact") {
    for (const auto& check : r["validation"]["checks"]) {
      detail::append_line(out, check["name"].get<std::string>(),
                          check["pass"].get<bool>() ? "pass" : "FAIL");
    }
    detail::append_line(
        out, "all_pass", r["validation"]["all_pass"].get<bool>() ? "yes" : "no");
  }
  return out;
}

}  // namespace optexec::cli
