#pragma once
// Run configuration: a JSON document with market, impact, volume, and run
// blocks, validated into typed values. Every rejection names the offending
// field path so a bad config fails with a usable message instead of a crash.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "optexec/impact.hpp"
#include "optexec/market.hpp"

namespace optexec {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline const nlohmann::json& member(const nlohmann::json& j, const std::string& path,
                                    const char* key) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "." + key + ": missing");
  return *it;
}

inline double num_at(const nlohmann::json& j, const std::string& path, const char* key) {
  const auto& v = member(j, path, key);
  if (!v.is_number()) throw ConfigError(path + "." + key + ": must be a number");
  return v.get<double>();
}

inline double num_or(const nlohmann::json& j, const std::string& path, const char* key,
                     double fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return num_at(j, path, key);
}

inline long long int_at(const nlohmann::json& j, const std::string& path,
                        const char* key) {
  const auto& v = member(j, path, key);
  if (!v.is_number_integer()) throw ConfigError(path + "." + key + ": must be an integer");
  return v.get<long long>();
}

inline long long int_or(const nlohmann::json& j, const std::string& path,
                        const char* key, long long fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return int_at(j, path, key);
}

inline bool bool_or(const nlohmann::json& j, const std::string& path, const char* key,
                    bool fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const auto& v = member(j, path, key);
  if (!v.is_boolean()) throw ConfigError(path + "." + key + ": must be a boolean");
  return v.get<bool>();
}

inline std::string str_at(const nlohmann::json& j, const std::string& path,
                          const char* key) {
  const auto& v = member(j, path, key);
  if (!v.is_string()) throw ConfigError(path + "." + key + ": must be a string");
  return v.get<std::string>();
}

inline std::string str_or(const nlohmann::json& j, const std::string& path,
                          const char* key, const std::string& fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return str_at(j, path, key);
}

template <typename T>
void require(bool ok, const std::string& path, const char* rule, T got) {
  if (!ok) {
    std::ostringstream os;
    os << path << ": " << rule << " (got " << got << ")";
    throw ConfigError(os.str());
  }
}

}  // namespace detail

/// One strategy request: a plain name or a parameterized kind.
struct StrategySpec {
  std::string kind;           // optimal_vwap | twap | pov | schedule
  double beta = 0.0;          // pov: absolute volume multiplier
  double beta_factor = 0.0;   // pov: multiple of the solved nu (alternative)
  std::string schedule_file;  // schedule: CSV with per-node rates

  std::string label() const {
    if (kind != "pov") return kind;
    std::ostringstream os;
    os << "pov";
    if (beta_factor > 0.0) {
      os << "(beta=" << beta_factor << "*nu)";
    } else {
      os << "(beta=" << beta << ")";
    }
    return os.str();
  }
};

struct RunSettings {
  std::uint64_t seed = 1;
  long long n_paths = 10000;
  double tol = 1e-10;
  StrategySpec strategy{"optimal_vwap"};
  std::vector<StrategySpec> strategies;  // compare
  std::vector<double> rate_grid;         // oracle
  int n_intervals = 5;
  int top_k = 10;
  bool dump_paths = false;
  bool dump_schedule = false;
  std::string out_dir = ".";
};

struct RunConfig {
  MarketParams market;
  ImpactFunction impact;
  ImpactMode mode;
  VolumeModel volume;
  RunSettings run;
  std::filesystem::path base_dir;  // directory of the config file, for
                                   // resolving relative file references

  std::filesystem::path resolve(const std::string& file) const {
    std::filesystem::path p(file);
    return p.is_absolute() ? p : base_dir / p;
  }
};

namespace detail {

inline MarketParams parse_market(const nlohmann::json& j) {
  MarketParams m;
  m.s0 = num_at(j, "market", "s0");
  m.mu = num_at(j, "market", "mu");
  m.sigma = num_or(j, "market", "sigma", 0.0);
  m.T = num_at(j, "market", "T");
  m.x = num_at(j, "market", "x");
  require(m.s0 > 0.0, "market.s0", "must be > 0", m.s0);
  require(m.mu < 0.0, "market.mu", "must be < 0", m.mu);
  require(m.sigma >= 0.0, "market.sigma", "must be >= 0", m.sigma);
  require(m.T > 0.0, "market.T", "must be > 0", m.T);
  require(m.x >= 0.0, "market.x", "must be >= 0", m.x);
  return m;
}

inline ImpactFunction parse_impact(const nlohmann::json& j) {
  const std::string family = str_at(j, "impact", "family");
  try {
    if (family == "power") {
      return make_power_impact(num_at(j, "impact", "c"), num_at(j, "impact", "p"));
    }
    if (family == "kneed") {
      return make_kneed_impact(num_at(j, "impact", "h_flat"));
    }
    if (family == "hat_log") {
      return make_hat_log_impact(num_at(j, "impact", "c"));
    }
    if (family == "piecewise_h") {
      const auto& knots_json = member(j, "impact", "knots");
      if (!knots_json.is_array() || knots_json.size() < 2) {
        throw ConfigError("impact.knots: must be an array of [zeta, h] pairs");
      }
      std::vector<Knot> knots;
      for (const auto& pair : knots_json) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
            !pair[1].is_number()) {
          throw ConfigError("impact.knots: must be an array of [zeta, h] pairs");
        }
        knots.push_back({pair[0].get<double>(), pair[1].get<double>()});
      }
      const std::string mode = str_or(j, "impact", "mode", "exogenous");
      if (mode != "exogenous" && mode != "endogenous") {
        throw ConfigError("impact.mode: must be \"exogenous\" or \"endogenous\"");
      }
      return make_piecewise_h_impact(std::move(knots),
                                     mode == "endogenous" ? ImpactMode::Endogenous
                                                          : ImpactMode::Exogenous);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("impact: ") + e.what());
  }
  throw ConfigError("impact.family: unknown family \"" + family + "\"");
}

inline VolumeModel parse_volume(const nlohmann::json& j,
                                const std::filesystem::path& base_dir) {
  VolumeModel model;
  const std::string kind = str_at(j, "volume", "kind");
  const long long grid_n = int_or(j, "volume", "grid_n", 1000);
  require(grid_n >= 1 && grid_n <= 100000000, "volume.grid_n",
          "must be in [1, 1e8]", grid_n);
  model.grid_n = static_cast<int>(grid_n);
  if (kind == "constant") {
    const double v = num_at(j, "volume", "v");
    require(v > 0.0, "volume.v", "must be > 0", v);
    model.kind = ConstantVolume{v};
  } else if (kind == "ushape") {
    model.kind = UShapeVolume{num_at(j, "volume", "a"), num_at(j, "volume", "b"),
                              num_at(j, "volume", "c")};
  } else if (kind == "lognormal") {
    LogNormalVolume lv{num_at(j, "volume", "v0"), num_at(j, "volume", "kappa"),
                       num_at(j, "volume", "theta"), num_at(j, "volume", "eta")};
    require(lv.v0 > 0.0, "volume.v0", "must be > 0", lv.v0);
    require(lv.kappa >= 0.0, "volume.kappa", "must be >= 0", lv.kappa);
    require(lv.theta > 0.0, "volume.theta", "must be > 0", lv.theta);
    require(lv.eta >= 0.0, "volume.eta", "must be >= 0", lv.eta);
    model.kind = lv;
  } else if (kind == "replay") {
    const std::string file = str_at(j, "volume", "file");
    std::filesystem::path path(file);
    if (!path.is_absolute()) path = base_dir / path;
    std::ifstream is(path);
    if (!is) throw ConfigError("volume.file: cannot open " + path.string());
    VolumePath replayed;
    try {
      replayed = load_volume_csv(is);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("volume.file: ") + e.what());
    }
    model.kind = ReplayVolume{std::move(replayed.times), std::move(replayed.rates)};
    model.grid_n = static_cast<int>(std::get<ReplayVolume>(model.kind).times.size()) - 1;
  } else {
    throw ConfigError("volume.kind: unknown kind \"" + kind + "\"");
  }
  return model;
}

inline StrategySpec parse_strategy_spec(const nlohmann::json& j,
                                        const std::string& path) {
  StrategySpec spec;
  if (j.is_string()) {
    spec.kind = j.get<std::string>();
  } else if (j.is_object()) {
    spec.kind = str_at(j, path, "kind");
    spec.beta = num_or(j, path, "beta", 0.0);
    spec.beta_factor = num_or(j, path, "beta_factor", 0.0);
    spec.schedule_file = str_or(j, path, "file", "");
  } else {
    throw ConfigError(path + ": must be a strategy name or an object");
  }
  if (spec.kind != "optimal_vwap" && spec.kind != "twap" && spec.kind != "pov" &&
      spec.kind != "schedule") {
    throw ConfigError(path + ".kind: unknown strategy \"" + spec.kind + "\"");
  }
  if (spec.kind == "pov") {
    const bool has_beta = spec.beta > 0.0;
    const bool has_factor = spec.beta_factor > 0.0;
    if (has_beta == has_factor) {
      throw ConfigError(path + ": pov needs exactly one of beta or beta_factor > 0");
    }
  }
  if (spec.kind == "schedule" && spec.schedule_file.empty()) {
    throw ConfigError(path + ".file: schedule strategy needs a rate CSV");
  }
  return spec;
}

}  // namespace detail

/// Validates a parsed JSON document into a RunConfig. `base_dir` anchors
/// relative file references (usually the config file's directory).
inline RunConfig parse_config(const nlohmann::json& doc,
                              const std::filesystem::path& base_dir = ".") {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  MarketParams market = detail::parse_market(detail::member(doc, "config", "market"));
  ImpactFunction impact = detail::parse_impact(detail::member(doc, "config", "impact"));
  VolumeModel volume =
      detail::parse_volume(detail::member(doc, "config", "volume"), base_dir);

  RunSettings run;
  ImpactMode mode = impact.mode();
  if (doc.contains("run")) {
    const auto& j = doc.at("run");
    const long long seed = detail::int_or(j, "run", "seed", 1);
    detail::require(seed >= 0, "run.seed", "must be >= 0", seed);
    run.seed = static_cast<std::uint64_t>(seed);
    run.n_paths = detail::int_or(j, "run", "n_paths", 10000);
    detail::require(run.n_paths >= 1, "run.n_paths", "must be >= 1", run.n_paths);
    run.tol = detail::num_or(j, "run", "tol", 1e-10);
    detail::require(run.tol > 0.0, "run.tol", "must be > 0", run.tol);

    const std::string mode_str =
        detail::str_or(j, "run", "mode", to_string(impact.mode()));
    if (mode_str != "exogenous" && mode_str != "endogenous") {
      throw ConfigError("run.mode: must be \"exogenous\" or \"endogenous\"");
    }
    if (mode_str == "exogenous" && impact.mode() == ImpactMode::Endogenous) {
      throw ConfigError("run.mode: an endogenous impact requires endogenous mode");
    }
    if (mode_str == "endogenous" && impact.mode() == ImpactMode::Exogenous) {
      throw ConfigError(
          "run.mode: endogenous mode requires an endogenous impact family");
    }

    if (j.is_object() && j.contains("strategy")) {
      run.strategy = detail::parse_strategy_spec(j.at("strategy"), "run.strategy");
    }
    if (j.is_object() && j.contains("strategies")) {
      const auto& arr = j.at("strategies");
      if (!arr.is_array()) throw ConfigError("run.strategies: must be an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        std::ostringstream os;
        os << "run.strategies[" << i << "]";
        run.strategies.push_back(detail::parse_strategy_spec(arr[i], os.str()));
      }
    }
    if (j.is_object() && j.contains("rate_grid")) {
      const auto& arr = j.at("rate_grid");
      if (!arr.is_array() || arr.empty()) {
        throw ConfigError("run.rate_grid: must be a non-empty array of numbers");
      }
      for (const auto& v : arr) {
        if (!v.is_number() || v.get<double>() < 0.0) {
          throw ConfigError("run.rate_grid: entries must be numbers >= 0");
        }
        run.rate_grid.push_back(v.get<double>());
      }
    }
    const long long n_intervals = detail::int_or(j, "run", "n_intervals", 5);
    detail::require(n_intervals >= 1, "run.n_intervals", "must be >= 1", n_intervals);
    run.n_intervals = static_cast<int>(n_intervals);
    const long long top_k = detail::int_or(j, "run", "top_k", 10);
    detail::require(top_k >= 0 && top_k <= 100, "run.top_k", "must be in [0, 100]",
                    top_k);
    run.top_k = static_cast<int>(top_k);
    run.dump_paths = detail::bool_or(j, "run", "dump_paths", false);
    run.dump_schedule = detail::bool_or(j, "run", "dump_schedule", false);
    run.out_dir = detail::str_or(j, "run", "out", ".");
  }
  if (run.rate_grid.empty()) {
    // Default sweep: 21 rates from 0 to 2 in steps of 0.1.
    for (int k = 0; k <= 20; ++k) run.rate_grid.push_back(0.1 * k);
  }

  return RunConfig{market, std::move(impact), mode, std::move(volume), std::move(run),
                   base_dir};
}

/// Loads and validates a config file (JSON, // comments allowed).
inline RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(is, nullptr, /*allow_exceptions=*/true,
                                /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const auto dir = path.has_parent_path() ? path.parent_path()
                                          : std::filesystem::path(".");
  return parse_config(doc, dir);
}

}  // namespace optexec
