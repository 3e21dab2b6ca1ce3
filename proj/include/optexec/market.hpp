#pragma once
// Market primitives: price/horizon parameters, market volume-rate models, and
// discretized volume paths carrying the cumulative volume clock.
//
// All paths live on the uniform grid t_i = T i / n. The cumulative clock V is
// the trapezoid integral of the rate, so V is strictly increasing whenever
// the rates are positive.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "optexec/philox.hpp"

namespace optexec {

class NonPositiveRate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable run parameters: initial price s0 > 0, drift mu < 0 per unit of
/// volume time, volatility sigma >= 0, horizon T > 0, sell budget x >= 0.
struct MarketParams {
  double s0 = 100.0;
  double mu = -0.5;
  double sigma = 0.0;
  double T = 1.0;
  double x = 1.0;
};

struct ConstantVolume {
  double v = 1.0;
};

/// Quadratic intraday profile v(t) = a + b t + c t^2.
struct UShapeVolume {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

/// Mean-reverting lognormal rate: log v follows
///   log v_{i+1} = log v_i + kappa (log theta - log v_i) dt + eta sqrt(dt) Z_i.
struct LogNormalVolume {
  double v0 = 1.0;
  double kappa = 1.0;
  double theta = 1.0;
  double eta = 0.0;
};

struct VolumePath;

/// Replays a fixed, externally supplied path (CSV import).
struct ReplayVolume {
  std::vector<double> times;
  std::vector<double> rates;
};

struct VolumeModel {
  std::variant<ConstantVolume, UShapeVolume, LogNormalVolume, ReplayVolume> kind =
      ConstantVolume{};
  int grid_n = 1000;

  bool deterministic() const {
    return !std::holds_alternative<LogNormalVolume>(kind);
  }
};

/// Discretized volume path: node times, positive rates, and the cumulative
/// clock V (trapezoid integral of the rate, V_0 = 0, strictly increasing).
struct VolumePath {
  std::vector<double> times;
  std::vector<double> rates;
  std::vector<double> cumv;

  std::size_t steps() const { return times.size() - 1; }
  double horizon() const { return times.back(); }
  double terminal_volume() const { return cumv.back(); }
};

namespace detail {

inline std::vector<double> uniform_times(double T, int n) {
  std::vector<double> t(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    t[static_cast<std::size_t>(i)] = T * static_cast<double>(i) / static_cast<double>(n);
  }
  return t;
}

inline void accumulate_trapezoid(VolumePath& path) {
  path.cumv.assign(path.times.size(), 0.0);
  for (std::size_t i = 0; i + 1 < path.times.size(); ++i) {
    path.cumv[i + 1] = path.cumv[i] + 0.5 * (path.rates[i] + path.rates[i + 1]) *
                                          (path.times[i + 1] - path.times[i]);
  }
}

inline void require_positive_rates(const VolumePath& path) {
  for (std::size_t i = 0; i < path.rates.size(); ++i) {
    if (!(path.rates[i] > 0.0)) {
      std::ostringstream os;
      os << "volume rate " << path.rates[i] << " at t = " << path.times[i]
         << " is not positive";
      throw NonPositiveRate(os.str());
    }
  }
}

}  // namespace detail

/// Builds the path of a deterministic model on the uniform grid. The constant
/// model fills the clock directly as V_i = v t_i (the trapezoid rule is exact
/// there); replay models carry their own grid and must match the horizon.
inline VolumePath build_deterministic_path(const VolumeModel& model, double T) {
  if (!(T > 0.0)) throw std::invalid_argument("horizon T must be positive");
  if (model.grid_n < 1) throw std::invalid_argument("grid_n must be >= 1");

  VolumePath path;
  if (const auto* cv = std::get_if<ConstantVolume>(&model.kind)) {
    path.times = detail::uniform_times(T, model.grid_n);
    path.rates.assign(path.times.size(), cv->v);
    detail::require_positive_rates(path);
    path.cumv.resize(path.times.size());
    for (std::size_t i = 0; i < path.times.size(); ++i) {
      path.cumv[i] = cv->v * path.times[i];
    }
    return path;
  }
  if (const auto* uv = std::get_if<UShapeVolume>(&model.kind)) {
    path.times = detail::uniform_times(T, model.grid_n);
    path.rates.resize(path.times.size());
    for (std::size_t i = 0; i < path.times.size(); ++i) {
      const double t = path.times[i];
      path.rates[i] = uv->a + uv->b * t + uv->c * t * t;
    }
    // The parabola can dip between nodes; reject a non-positive vertex too.
    if (uv->c > 0.0) {
      const double t_min = -uv->b / (2.0 * uv->c);
      if (t_min > 0.0 && t_min < T) {
        const double v_min = uv->a + uv->b * t_min + uv->c * t_min * t_min;
        if (!(v_min > 0.0)) {
          std::ostringstream os;
          os << "volume rate " << v_min << " at t = " << t_min << " is not positive";
          throw NonPositiveRate(os.str());
        }
      }
    }
    detail::require_positive_rates(path);
    detail::accumulate_trapezoid(path);
    return path;
  }
  if (const auto* rv = std::get_if<ReplayVolume>(&model.kind)) {
    if (std::abs(rv->times.back() - T) > 1e-9 * std::max(1.0, T)) {
      throw std::invalid_argument("replay path horizon does not match T");
    }
    path.times = rv->times;
    path.rates = rv->rates;
    detail::require_positive_rates(path);
    detail::accumulate_trapezoid(path);
    return path;
  }
  throw std::invalid_argument(
      "build_deterministic_path requires a deterministic volume model");
}

/// Samples one lognormal-rate path. Draws are keyed by (seed, path_index, i),
/// so the same arguments always reproduce the same path bit for bit.
inline VolumePath sample_volume_path(const VolumeModel& model, double T,
                                     std::uint64_t seed, std::uint64_t path_index = 0) {
  const auto* lv = std::get_if<LogNormalVolume>(&model.kind);
  if (lv == nullptr) {
    throw std::invalid_argument("sample_volume_path requires the lognormal model");
  }
  if (!(T > 0.0)) throw std::invalid_argument("horizon T must be positive");
  if (model.grid_n < 1) throw std::invalid_argument("grid_n must be >= 1");
  if (!(lv->v0 > 0.0) || !(lv->theta > 0.0)) {
    throw NonPositiveRate("lognormal volume requires v0 > 0 and theta > 0");
  }

  VolumePath path;
  path.times = detail::uniform_times(T, model.grid_n);
  path.rates.resize(path.times.size());
  const double dt = T / static_cast<double>(model.grid_n);
  const double sqrt_dt = std::sqrt(dt);
  const double log_theta = std::log(lv->theta);
  double y = std::log(lv->v0);
  path.rates[0] = lv->v0;
  for (int i = 0; i < model.grid_n; ++i) {
    const double z = normal_at(seed, path_index, RngStream::Volume,
                               static_cast<std::uint32_t>(i));
    y += lv->kappa * (log_theta - y) * dt + lv->eta * sqrt_dt * z;
    path.rates[static_cast<std::size_t>(i) + 1] = std::exp(y);
  }
  detail::accumulate_trapezoid(path);
  return path;
}

/// Feasibility of the budget x at participation rate nu: x <= nu V_T per path.
struct FeasibilityReport {
  bool feasible = false;            // every path satisfies the bound
  double violation_fraction = 0.0;  // share of paths with x > nu V_T
  double min_terminal_volume = 0.0;
  std::size_t n_paths = 0;
};

inline FeasibilityReport check_feasibility(double x, double nu,
                                           std::span<const VolumePath> paths) {
  if (!(nu > 0.0)) throw std::invalid_argument("check_feasibility requires nu > 0");
  if (!(x >= 0.0)) throw std::invalid_argument("check_feasibility requires x >= 0");
  if (paths.empty()) throw std::invalid_argument("check_feasibility requires paths");

  FeasibilityReport report;
  report.n_paths = paths.size();
  report.min_terminal_volume = paths[0].terminal_volume();
  std::size_t violations = 0;
  for (const VolumePath& p : paths) {
    const double vt = p.terminal_volume();
    report.min_terminal_volume = std::min(report.min_terminal_volume, vt);
    // A budget exactly at capacity is feasible; the slack absorbs the solver
    // tolerance in nu and rounding in the clock, without admitting any
    // genuinely oversized budget.
    if (x > nu * vt * (1.0 + 1e-9) + 1e-12) ++violations;
  }
  report.violation_fraction =
      static_cast<double>(violations) / static_cast<double>(paths.size());
  report.feasible = violations == 0;
  return report;
}

namespace detail {

inline std::string csv_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

/// Writes the path as CSV with columns t, v, V.
inline void write_volume_csv(const VolumePath& path, std::ostream& os) {
  os << "t,v,V\n";
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    os << detail::csv_double(path.times[i]) << ',' << detail::csv_double(path.rates[i])
       << ',' << detail::csv_double(path.cumv[i]) << '\n';
  }
}

/// Reads a path from CSV columns t, v (header row optional). The grid must
/// start at zero and be uniform; the clock is rebuilt by the trapezoid rule.
inline VolumePath load_volume_csv(std::istream& is) {
  VolumePath path;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string t_field, v_field;
    if (!std::getline(row, t_field, ',') || !std::getline(row, v_field, ',')) {
      throw CsvError("volume CSV rows need two columns: t,v");
    }
    try {
      std::size_t pos = 0;
      const double t = std::stod(t_field, &pos);
      const double v = std::stod(v_field);
      path.times.push_back(t);
      path.rates.push_back(v);
    } catch (const std::exception&) {
      if (first) {
        first = false;
        continue;  // header row
      }
      throw CsvError("volume CSV has a non-numeric row: " + line);
    }
    first = false;
  }
  if (path.times.size() < 2) throw CsvError("volume CSV needs at least two rows");
  if (std::abs(path.times.front()) > 1e-12) {
    throw CsvError("volume CSV must start at t = 0");
  }
  const double dt0 = path.times[1] - path.times[0];
  for (std::size_t i = 0; i + 1 < path.times.size(); ++i) {
    const double dt = path.times[i + 1] - path.times[i];
    if (!(dt > 0.0) || std::abs(dt - dt0) > 1e-9 * std::max(1.0, path.times.back())) {
      throw CsvError("volume CSV must use a uniform, increasing time grid");
    }
  }
  detail::require_positive_rates(path);
  detail::accumulate_trapezoid(path);
  return path;
}

}  // namespace optexec
