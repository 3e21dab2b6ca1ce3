#pragma once
// Revenue evaluation: the closed-form optimal value, the expected revenue of
// a schedule conditional on its volume path, and the Monte Carlo estimator
// over time-changed price paths.
//
// Price dynamics run on the volume clock. One step of the exact log-space
// recursion is
//   log S_{i+1} = log S_i + (mu - g(ratio_i) - sigma^2/2) dV_i
//                 + sigma sqrt(dV_i) Z_i,
// with the left-point participation ratio ratio_i = zeta_i / v_i and the
// trapezoid clock increment dV_i in exogenous mode, and
// ratio_i = zeta_i / (v_i + zeta_i), dV_i = (v_i + zeta_i) dt in endogenous
// mode (the trader's own flow feeds the clock there). Revenue integrates
// zeta S by the left-point rule, so the conditional expectation at sigma = 0
// and the simulated estimate coincide exactly.

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "optexec/impact.hpp"
#include "optexec/market.hpp"
#include "optexec/philox.hpp"
#include "optexec/strategy.hpp"

namespace optexec {

class InvalidPaths : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optimal expected revenue s0 (1 - exp(-h_nu x)) / h_nu, stable for small
/// h_nu x (tends to s0 x as the exponent vanishes).
inline double closed_form_value(double s0, double h_nu, double x) {
  if (!(s0 > 0.0)) throw std::invalid_argument("closed_form_value requires s0 > 0");
  if (!(h_nu > 0.0)) throw std::invalid_argument("closed_form_value requires h_nu > 0");
  if (!(x >= 0.0)) throw std::invalid_argument("closed_form_value requires x >= 0");
  return s0 * (-std::expm1(-h_nu * x)) / h_nu;
}

/// Implementation shortfall of a revenue against immediate liquidation at s0.
inline double is_cost(double revenue, const MarketParams& params) {
  return params.x * params.s0 - revenue;
}

/// Price nodes and clock increments of one simulated path.
struct SimulationPath {
  std::vector<double> prices;
  std::vector<double> clock_increments;
};

namespace detail {

/// Shared stepping core. `z_at(i)` supplies the standard normal of step i;
/// it is only consulted when sigma > 0. When `record` is non-null the price
/// nodes and clock increments are stored there.
template <typename NormalSource>
double step_path_revenue(const RateSchedule& schedule, const VolumePath& path,
                         const MarketParams& params, const ImpactFunction& impact,
                         ImpactMode mode, double sigma, NormalSource&& z_at,
                         SimulationPath* record = nullptr) {
  const std::size_t n = path.steps();
  if (schedule.rates.size() != path.times.size()) {
    throw GridMismatch("schedule and path grids have different sizes");
  }
  const double domain_end = impact.domain_end();
  double log_price = std::log(params.s0);
  double revenue = 0.0;
  if (record != nullptr) {
    record->prices.assign(n + 1, 0.0);
    record->clock_increments.assign(n, 0.0);
    record->prices[0] = params.s0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = path.times[i + 1] - path.times[i];
    const double zeta = schedule.rates[i];
    const double v = path.rates[i];
    double ratio, clock_inc;
    if (mode == ImpactMode::Exogenous) {
      ratio = zeta / v;
      clock_inc = path.cumv[i + 1] - path.cumv[i];
      if (ratio >= domain_end) {
        std::ostringstream os;
        os << "participation ratio " << ratio << " at t = " << path.times[i]
           << " leaves the impact domain";
        throw ImpactDomainError(os.str());
      }
    } else {
      const double total_rate = v + zeta;
      ratio = zeta / total_rate;
      clock_inc = total_rate * dt;
    }
    revenue += zeta * std::exp(log_price) * dt;
    const double drift = (params.mu - impact.g(ratio)) * clock_inc;
    if (sigma > 0.0) {
      log_price += drift - 0.5 * sigma * sigma * clock_inc +
                   sigma * std::sqrt(clock_inc) * z_at(static_cast<std::uint32_t>(i));
    } else {
      log_price += drift;
    }
    if (record != nullptr) {
      record->clock_increments[i] = clock_inc;
      record->prices[i + 1] = std::exp(log_price);
    }
  }
  return revenue;
}

inline double zero_normal(std::uint32_t) { return 0.0; }

}  // namespace detail

/// Expected revenue of a schedule conditional on its volume path: the
/// noise-free value of the discretized dynamics (volatility integrates out of
/// the expectation exactly).
inline double conditional_expected_revenue(const RateSchedule& schedule,
                                           const VolumePath& path,
                                           const MarketParams& params,
                                           const ImpactFunction& impact,
                                           ImpactMode mode) {
  return detail::step_path_revenue(schedule, path, params, impact, mode, 0.0,
                                   detail::zero_normal);
}

/// Simulates one price path with the noise of (seed, path_index) and returns
/// its nodes; mainly a window for tests into the stepping core.
inline SimulationPath simulate_price_path(const RateSchedule& schedule,
                                          const VolumePath& path,
                                          const MarketParams& params,
                                          const ImpactFunction& impact,
                                          ImpactMode mode, std::uint64_t seed,
                                          std::uint64_t path_index) {
  SimulationPath record;
  detail::step_path_revenue(
      schedule, path, params, impact, mode, params.sigma,
      [&](std::uint32_t i) { return normal_at(seed, path_index, RngStream::Price, i); },
      &record);
  return record;
}

/// Monte Carlo revenue estimate with a 95% confidence interval.
struct RevenueEstimate {
  double mean = 0.0;
  double stderr_mean = 0.0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
  double is_cost = 0.0;
  long long n_paths = 0;
  /// Share of paths whose realized schedule finished short of the budget.
  double budget_shortfall_fraction = 0.0;
};

/// Revenue and sold total of one simulated path, for per-path exports.
struct PerPathRecord {
  long long path_id = 0;
  double revenue = 0.0;
  double sold = 0.0;
};

/// Runs `n_paths` independent paths of the strategy and aggregates them in
/// ascending path order. Volume noise and price noise come from separate
/// counter streams keyed by the path index, so estimates are reproducible bit
/// for bit regardless of scheduling, and two strategies simulated with the
/// same seed share their random numbers.
inline RevenueEstimate simulate(const Strategy& strategy, const VolumeModel& model,
                                const MarketParams& params,
                                const ImpactFunction& impact, ImpactMode mode,
                                long long n_paths, std::uint64_t seed,
                                IndicatorReading reading = IndicatorReading::CumulativeClock,
                                std::vector<PerPathRecord>* per_path = nullptr) {
  if (n_paths < 1) throw InvalidPaths("simulate requires n_paths >= 1");
  const bool deterministic_volume = model.deterministic();
  const bool noise_free = params.sigma == 0.0 && deterministic_volume;
  if (n_paths < 2 && !noise_free) {
    throw InvalidPaths("a standard error needs n_paths >= 2");
  }

  VolumePath base_path;
  RateSchedule base_schedule;
  if (deterministic_volume) {
    base_path = build_deterministic_path(model, params.T);
    base_schedule = realize(strategy, base_path, reading);
  }

  // Welford accumulation keeps the variance stable for long runs.
  double mean = 0.0, m2 = 0.0;
  long long shortfalls = 0;
  const double budget = strategy.budget();
  for (long long k = 0; k < n_paths; ++k) {
    const VolumePath& path =
        deterministic_volume
            ? base_path
            : (base_path = sample_volume_path(model, params.T, seed,
                                              static_cast<std::uint64_t>(k)));
    const RateSchedule& schedule =
        deterministic_volume ? base_schedule
                             : (base_schedule = realize(strategy, path, reading));
    const double revenue = detail::step_path_revenue(
        schedule, path, params, impact, mode, params.sigma, [&](std::uint32_t i) {
          return normal_at(seed, static_cast<std::uint64_t>(k), RngStream::Price, i);
        });
    if (schedule.total_sold() < budget * (1.0 - 1e-9) - 1e-12) ++shortfalls;
    if (per_path != nullptr) {
      per_path->push_back({k, revenue, schedule.total_sold()});
    }
    const double delta = revenue - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (revenue - mean);
  }

  RevenueEstimate est;
  est.mean = mean;
  est.n_paths = n_paths;
  est.stderr_mean =
      n_paths >= 2 ? std::sqrt(m2 / static_cast<double>(n_paths - 1) /
                               static_cast<double>(n_paths))
                   : 0.0;
  est.ci95_low = est.mean - 1.96 * est.stderr_mean;
  est.ci95_high = est.mean + 1.96 * est.stderr_mean;
  est.is_cost = is_cost(est.mean, params);
  est.budget_shortfall_fraction =
      static_cast<double>(shortfalls) / static_cast<double>(n_paths);
  return est;
}

}  // namespace optexec
