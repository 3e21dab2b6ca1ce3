#pragma once
// Brute-force schedule search: enumerate every piecewise-constant schedule on
// a small interval partition with rates drawn from a finite grid, evaluate
// each feasible one conditional on the volume path, and report the argmax.
//
// The horizon splits into n_intervals equal blocks aligned with the path
// grid. Because the rate is constant inside a block, each block contributes
// a revenue factor and a price-decay factor that depend only on (block,
// rate); enumeration then reduces to a few multiply-adds per tuple, which
// keeps the full 21^5 default sweep in the hundreds of milliseconds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "optexec/engine.hpp"
#include "optexec/impact.hpp"
#include "optexec/market.hpp"

namespace optexec {

class EnumerationTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleResult {
  std::vector<double> best_rates;   // lexicographically largest among ties
  double best_value = 0.0;          // maximum over all feasible tuples
  double closed_form = 0.0;
  double gap = 0.0;                 // closed_form - best_value
  long long n_evaluated = 0;        // feasible tuples
  long long n_ties = 0;             // tuples within tie tolerance of the best
  std::vector<std::vector<double>> ties;  // stored ties, capped
  std::vector<std::pair<double, std::vector<double>>> top_k;  // value-sorted
};

namespace detail {

inline constexpr double kOracleTieTolerance = 1e-9;
inline constexpr std::size_t kOracleMaxStoredTies = 32;

/// True when `a` is lexicographically larger than `b` (front-loaded rates
/// win, matching the preference for selling early under negative drift).
inline bool lex_larger(const std::vector<double>& a, const std::vector<double>& b) {
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace detail

/// Enumerates rate tuples over `rate_grid` on `n_intervals` equal blocks of
/// the path. Guarded to n_intervals <= 6 and grid size <= 25; the path grid
/// must split evenly into the blocks.
inline OracleResult brute_force(const MarketParams& params,
                                const ImpactFunction& impact, const VolumePath& path,
                                int n_intervals, std::span<const double> rate_grid,
                                ImpactMode mode = ImpactMode::Exogenous,
                                int top_k = 10, double solver_tol = 1e-10) {
  if (n_intervals < 1 || n_intervals > 6) {
    std::ostringstream os;
    os << "n_intervals = " << n_intervals << " outside the enumeration guard [1, 6]";
    throw EnumerationTooLarge(os.str());
  }
  if (rate_grid.empty() || rate_grid.size() > 25) {
    std::ostringstream os;
    os << "rate grid size " << rate_grid.size()
       << " outside the enumeration guard [1, 25]";
    throw EnumerationTooLarge(os.str());
  }
  const std::size_t n = path.steps();
  const std::size_t m = static_cast<std::size_t>(n_intervals);
  if (n % m != 0) {
    std::ostringstream os;
    os << "path grid of " << n << " steps does not split into " << m << " blocks";
    throw GridMismatch(os.str());
  }

  std::vector<double> grid(rate_grid.begin(), rate_grid.end());
  for (double r : grid) {
    if (!(r >= 0.0)) throw std::invalid_argument("rate grid entries must be >= 0");
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const std::size_t K = grid.size();

  // Per (block, rate): revenue with unit entry price, price-decay factor
  // across the block, and the amount sold.
  const std::size_t block = n / m;
  std::vector<std::vector<double>> contrib(m, std::vector<double>(K, 0.0));
  std::vector<std::vector<double>> decay(m, std::vector<double>(K, 0.0));
  std::vector<std::vector<double>> sold(m, std::vector<double>(K, 0.0));
  const double domain_end = impact.domain_end();
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t r = 0; r < K; ++r) {
      const double rate = grid[r];
      double local_log = 0.0, revenue = 0.0, amount = 0.0;
      for (std::size_t i = j * block; i < (j + 1) * block; ++i) {
        const double dt = path.times[i + 1] - path.times[i];
        const double v = path.rates[i];
        double ratio, clock_inc;
        if (mode == ImpactMode::Exogenous) {
          ratio = rate / v;
          clock_inc = path.cumv[i + 1] - path.cumv[i];
          if (ratio >= domain_end) {
            std::ostringstream os;
            os << "grid rate " << rate << " leaves the impact domain at t = "
               << path.times[i];
            throw ImpactDomainError(os.str());
          }
        } else {
          const double total_rate = v + rate;
          ratio = rate / total_rate;
          clock_inc = total_rate * dt;
        }
        revenue += rate * std::exp(local_log) * dt;
        amount += rate * dt;
        local_log += (params.mu - impact.g(ratio)) * clock_inc;
      }
      contrib[j][r] = revenue;
      decay[j][r] = std::exp(local_log);
      sold[j][r] = amount;
    }
  }

  const double budget_slack = params.x * (1.0 + 1e-9) + 1e-12;
  std::vector<std::size_t> digits(m, 0);
  const auto tuple_value = [&](const std::vector<std::size_t>& d) {
    double mult = 1.0, value = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      value += mult * contrib[j][d[j]];
      mult *= decay[j][d[j]];
    }
    return params.s0 * value;
  };
  const auto tuple_sold = [&](const std::vector<std::size_t>& d) {
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) total += sold[j][d[j]];
    return total;
  };
  const auto advance = [&](std::vector<std::size_t>& d) {
    for (std::size_t j = m; j-- > 0;) {
      if (++d[j] < K) return true;
      d[j] = 0;
    }
    return false;
  };
  const auto rates_of = [&](const std::vector<std::size_t>& d) {
    std::vector<double> rates(m);
    for (std::size_t j = 0; j < m; ++j) rates[j] = grid[d[j]];
    return rates;
  };

  OracleResult result;
  const SolvedRate solved = solve_nu(impact, params.mu, solver_tol);
  result.closed_form = closed_form_value(params.s0, solved.h_nu, params.x);

  // First pass: the exact maximum over feasible tuples.
  double best = -std::numeric_limits<double>::infinity();
  std::fill(digits.begin(), digits.end(), 0);
  do {
    if (tuple_sold(digits) > budget_slack) continue;
    ++result.n_evaluated;
    best = std::max(best, tuple_value(digits));
  } while (advance(digits));
  if (result.n_evaluated == 0) {
    throw std::invalid_argument("no feasible tuple; the rate grid needs a 0 entry");
  }
  result.best_value = best;
  result.gap = result.closed_form - result.best_value;

  // Second pass: collect ties and the top-k, then keep the lexicographically
  // largest tie as the reported schedule.
  const int k_keep = std::clamp(top_k, 0, 100);
  std::fill(digits.begin(), digits.end(), 0);
  do {
    if (tuple_sold(digits) > budget_slack) continue;
    const double value = tuple_value(digits);
    if (value >= best - detail::kOracleTieTolerance) {
      ++result.n_ties;
      auto rates = rates_of(digits);
      if (result.ties.size() < detail::kOracleMaxStoredTies) {
        result.ties.push_back(rates);
      }
      if (result.best_rates.empty() || detail::lex_larger(rates, result.best_rates)) {
        result.best_rates = std::move(rates);
      }
    }
    if (k_keep > 0) {
      const bool full = result.top_k.size() >= static_cast<std::size_t>(k_keep);
      if (!full || value > result.top_k.back().first) {
        auto rates = rates_of(digits);
        auto pos = std::find_if(result.top_k.begin(), result.top_k.end(),
                                [&](const auto& entry) {
                                  return value > entry.first ||
                                         (value == entry.first &&
                                          detail::lex_larger(rates, entry.second));
                                });
        result.top_k.insert(pos, {value, std::move(rates)});
        if (result.top_k.size() > static_cast<std::size_t>(k_keep)) {
          result.top_k.pop_back();
        }
      }
    }
  } while (advance(digits));

  std::sort(result.ties.begin(), result.ties.end(),
            [](const auto& a, const auto& b) { return detail::lex_larger(a, b); });
  return result;
}

}  // namespace optexec
