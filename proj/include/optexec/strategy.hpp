#pragma once
// Selling strategies and their realization on a volume path.
//
// A strategy is a per-node selling rule; realization walks the grid left to
// right, fixes the rate of step i from the state observable at node i
// (t_i, v_i, V_i, sold_i), and accumulates sold_{i+1} = sold_i + zeta_i dt.
// Under the default reading the rule is cut off by budget exhaustion and the
// final partial step is clipped so the total sold never exceeds x. The
// literal reading replaces the volume-proportional cutoff with the printed
// pointwise condition v_i <= x / rate and enforces no budget at all; it
// exists to demonstrate numerically why the cumulative reading is the right
// one.

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "optexec/market.hpp"

namespace optexec {

class GridMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Which cutoff the volume-proportional rules use, see the header comment.
enum class IndicatorReading { CumulativeClock, LiteralRate };

namespace strategies {

/// Sell at rate nu * v_t until the budget is exhausted. In continuous time
/// sold_t = nu V_t while selling, so the budget stop is the clock condition
/// V_t <= x / nu.
struct OptimalVwap {
  double nu;
};

/// Sell at the constant rate x / T.
struct Twap {
  double horizon;
};

/// Percentage-of-volume: sell at beta * v_t until the budget is exhausted.
/// May finish the horizon with unsold budget when beta V_T < x.
struct Pov {
  double beta;
};

/// Externally supplied per-node rates (one per grid node).
struct ExplicitSchedule {
  std::vector<double> rates;
};

}  // namespace strategies

/// A selling strategy with its budget x.
class Strategy {
 public:
  static Strategy optimal_vwap(double nu, double x) {
    if (!(nu > 0.0)) throw std::invalid_argument("optimal_vwap requires nu > 0");
    return Strategy(strategies::OptimalVwap{nu}, x);
  }

  static Strategy twap(double x, double horizon) {
    if (!(horizon > 0.0)) throw std::invalid_argument("twap requires horizon > 0");
    return Strategy(strategies::Twap{horizon}, x);
  }

  static Strategy pov(double beta, double x) {
    if (!(beta > 0.0)) throw std::invalid_argument("pov requires beta > 0");
    return Strategy(strategies::Pov{beta}, x);
  }

  static Strategy schedule(std::vector<double> rates, double x) {
    for (double r : rates) {
      if (!(r >= 0.0)) throw std::invalid_argument("schedule rates must be >= 0");
    }
    return Strategy(strategies::ExplicitSchedule{std::move(rates)}, x);
  }

  double budget() const { return budget_; }

  std::string label() const {
    return std::visit(
        [](const auto& s) -> std::string {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, strategies::OptimalVwap>) {
            return "optimal_vwap";
          } else if constexpr (std::is_same_v<S, strategies::Twap>) {
            return "twap";
          } else if constexpr (std::is_same_v<S, strategies::Pov>) {
            return "pov";
          } else {
            return "schedule";
          }
        },
        kind_);
  }

  bool is_optimal_vwap() const {
    return std::holds_alternative<strategies::OptimalVwap>(kind_);
  }

  /// The raw selling rule at one grid node, before budget clipping: a pure
  /// function of the node index and the state observable there.
  double rate_at(std::size_t node, double t, double v, double cum_volume, double sold,
                 IndicatorReading reading) const {
    (void)t;
    (void)cum_volume;
    return std::visit(
        [&](const auto& s) -> double {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, strategies::OptimalVwap>) {
            if (reading == IndicatorReading::LiteralRate) {
              return v <= budget_ / s.nu ? s.nu * v : 0.0;
            }
            return sold < budget_ ? s.nu * v : 0.0;
          } else if constexpr (std::is_same_v<S, strategies::Twap>) {
            return sold < budget_ ? budget_ / s.horizon : 0.0;
          } else if constexpr (std::is_same_v<S, strategies::Pov>) {
            if (reading == IndicatorReading::LiteralRate) {
              return v <= budget_ / s.beta ? s.beta * v : 0.0;
            }
            return sold < budget_ ? s.beta * v : 0.0;
          } else {
            return s.rates[node];
          }
        },
        kind_);
  }

  const strategies::ExplicitSchedule* explicit_schedule() const {
    return std::get_if<strategies::ExplicitSchedule>(&kind_);
  }

  const strategies::Twap* twap_kind() const {
    return std::get_if<strategies::Twap>(&kind_);
  }

 private:
  using Kind = std::variant<strategies::OptimalVwap, strategies::Twap,
                            strategies::Pov, strategies::ExplicitSchedule>;

  Strategy(Kind kind, double x) : kind_(std::move(kind)), budget_(x) {
    if (!(x >= 0.0)) throw std::invalid_argument("strategy budget must be >= 0");
  }

  Kind kind_;
  double budget_;
};

/// A realized schedule on a path's grid: per-node rates and the left-point
/// cumulative sold amount (sold_0 = 0, sold_{i+1} = sold_i + zeta_i dt).
struct RateSchedule {
  std::vector<double> rates;
  std::vector<double> sold;
  bool budget_enforced = true;

  double total_sold() const { return sold.back(); }
};

/// Realizes a strategy on a path. Under the cumulative reading each step is
/// clamped to the remaining budget, so the final selling step is partial and
/// sold never exceeds x; the literal reading applies the rule verbatim.
inline RateSchedule realize(const Strategy& strategy, const VolumePath& path,
                            IndicatorReading reading = IndicatorReading::CumulativeClock) {
  const std::size_t n = path.steps();
  if (const auto* tw = strategy.twap_kind()) {
    if (std::abs(tw->horizon - path.horizon()) >
        1e-9 * std::max(1.0, path.horizon())) {
      std::ostringstream os;
      os << "twap horizon " << tw->horizon << " does not match path horizon "
         << path.horizon();
      throw GridMismatch(os.str());
    }
  }
  if (const auto* ex = strategy.explicit_schedule()) {
    if (ex->rates.size() != n + 1 && ex->rates.size() != n) {
      std::ostringstream os;
      os << "schedule has " << ex->rates.size() << " rates for a grid of " << n + 1
         << " nodes";
      throw GridMismatch(os.str());
    }
  }

  const double x = strategy.budget();
  RateSchedule out;
  out.budget_enforced = reading == IndicatorReading::CumulativeClock;
  out.rates.assign(n + 1, 0.0);
  out.sold.assign(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = path.times[i + 1] - path.times[i];
    double rate = strategy.rate_at(i, path.times[i], path.rates[i], path.cumv[i],
                                   out.sold[i], reading);
    if (out.budget_enforced) {
      rate = std::clamp(rate, 0.0, std::max(0.0, (x - out.sold[i]) / dt));
    } else {
      rate = std::max(rate, 0.0);
    }
    out.rates[i] = rate;
    out.sold[i + 1] = out.sold[i] + rate * dt;
  }
  // The terminal node's rate is reported for completeness; left-point
  // integration never consumes it.
  if (const auto* ex = strategy.explicit_schedule();
      ex != nullptr && ex->rates.size() == n) {
    out.rates[n] = 0.0;
  } else {
    const double last = strategy.rate_at(n, path.times[n], path.rates[n],
                                         path.cumv[n], out.sold[n], reading);
    out.rates[n] = out.budget_enforced && out.sold[n] >= x ? 0.0 : std::max(last, 0.0);
  }
  return out;
}

/// Writes a realized schedule as CSV with columns t, v, V, zeta, sold.
inline void write_schedule_csv(const RateSchedule& schedule, const VolumePath& path,
                               std::ostream& os) {
  os << "t,v,V,zeta,sold\n";
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    os << detail::csv_double(path.times[i]) << ',' << detail::csv_double(path.rates[i])
       << ',' << detail::csv_double(path.cumv[i]) << ','
       << detail::csv_double(schedule.rates[i]) << ','
       << detail::csv_double(schedule.sold[i]) << '\n';
  }
}

/// Reads per-node rates from CSV columns t, zeta (header optional). The time
/// column is parsed for shape but not returned; realize() checks grid length.
inline std::vector<double> load_schedule_csv(std::istream& is) {
  std::vector<double> rates;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string t_field, z_field;
    if (!std::getline(row, t_field, ',') || !std::getline(row, z_field, ',')) {
      throw CsvError("schedule CSV rows need two columns: t,zeta");
    }
    try {
      (void)std::stod(t_field);
      rates.push_back(std::stod(z_field));
    } catch (const std::exception&) {
      if (first) {
        first = false;
        continue;  // header row
      }
      throw CsvError("schedule CSV has a non-numeric row: " + line);
    }
    first = false;
  }
  if (rates.empty()) throw CsvError("schedule CSV has no rate rows");
  return rates;
}

}  // namespace optexec
