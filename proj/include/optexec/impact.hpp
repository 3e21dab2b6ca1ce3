#pragma once
// Market impact functions and the optimal participation-rate solver.
//
// An impact function is the proportional price depression g(zeta) caused by
// selling at participation ratio zeta, together with its derivative h = g'.
// A usable shape has g(0) = 0, h >= 0 with a single knee zeta0 (h
// non-increasing up to the knee, strictly increasing beyond it), and h
// diverging at the end of the domain. Exogenous families take the ratio of
// the order rate to market volume on [0, inf); endogenous families take the
// trader's share of total traded volume on [0, 1).
//
// The optimal constant participation rate nu solves
//     nu * h(nu) - g(nu) = -mu
// on [zeta0, domain end), and the optimal expected revenue for a budget x is
//     s0 * (1 - exp(-h(nu) * x)) / h(nu).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace optexec {

class InvalidFamily : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Piecewise h whose tail is not strictly increasing, so no unique rate exists.
class NonMonotoneTail : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NegativeH : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Impact evaluated outside its domain (negative ratio, or >= 1 for
/// endogenous families).
class ImpactDomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The rate equation has no solution at or above the knee: the value at the
/// knee already exceeds -mu. Cannot happen for shapes that are genuinely
/// non-increasing before the knee; guards malformed piecewise inputs.
class NoRootAboveKnee : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BracketFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ImpactMode { Exogenous, Endogenous };

inline const char* to_string(ImpactMode m) {
  return m == ImpactMode::Exogenous ? "exogenous" : "endogenous";
}

inline std::ostream& operator<<(std::ostream& os, ImpactMode m) {
  return os << to_string(m);
}

/// One node of a piecewise-linear derivative h.
struct Knot {
  double zeta = 0.0;
  double h = 0.0;
};

namespace families {

struct PowerLaw {
  double c;
  double p;
};

struct KneedLinearH {
  double h_flat;
};

struct HatLog {
  double c;
};

struct PiecewiseH {
  std::vector<Knot> knots;       // normalized to start at zeta = 0
  std::vector<double> g_knots;   // exact integral of h up to each knot
  double tail_slope;             // linear extrapolation beyond the last knot
};

}  // namespace families

class ImpactFunction;

namespace detail {
ImpactFunction build_piecewise(std::vector<Knot> knots, ImpactMode mode,
                               bool enforce_tail);
}

namespace detail {

inline double piecewise_h_value(const families::PiecewiseH& f, double z) {
  const auto& ks = f.knots;
  if (z >= ks.back().zeta) {
    return ks.back().h + f.tail_slope * (z - ks.back().zeta);
  }
  auto it = std::upper_bound(ks.begin(), ks.end(), z,
                             [](double v, const Knot& k) { return v < k.zeta; });
  const std::size_t j = static_cast<std::size_t>(it - ks.begin()) - 1;
  const double w = (z - ks[j].zeta) / (ks[j + 1].zeta - ks[j].zeta);
  return ks[j].h + w * (ks[j + 1].h - ks[j].h);
}

inline double piecewise_g_value(const families::PiecewiseH& f, double z) {
  const auto& ks = f.knots;
  if (z >= ks.back().zeta) {
    const double h_end = ks.back().h + f.tail_slope * (z - ks.back().zeta);
    return f.g_knots.back() + 0.5 * (ks.back().h + h_end) * (z - ks.back().zeta);
  }
  auto it = std::upper_bound(ks.begin(), ks.end(), z,
                             [](double v, const Knot& k) { return v < k.zeta; });
  const std::size_t j = static_cast<std::size_t>(it - ks.begin()) - 1;
  const double hz = ks[j].h + (z - ks[j].zeta) / (ks[j + 1].zeta - ks[j].zeta) *
                                  (ks[j + 1].h - ks[j].h);
  return f.g_knots[j] + 0.5 * (ks[j].h + hz) * (z - ks[j].zeta);
}

}  // namespace detail

/// Immutable impact function: g, h = g', knee location, domain, and mode.
class ImpactFunction {
 public:
  double g(double zeta) const {
    check_domain(zeta);
    return std::visit(
        [zeta](const auto& fam) -> double {
          using F = std::decay_t<decltype(fam)>;
          if constexpr (std::is_same_v<F, families::PowerLaw>) {
            return fam.c * std::pow(zeta, fam.p);
          } else if constexpr (std::is_same_v<F, families::KneedLinearH>) {
            const double k = fam.h_flat;
            return zeta <= k ? k * zeta : 0.5 * (zeta * zeta + k * k);
          } else if constexpr (std::is_same_v<F, families::HatLog>) {
            return -fam.c * (std::log1p(-zeta) + zeta);
          } else {
            return detail::piecewise_g_value(fam, zeta);
          }
        },
        family_);
  }

  double h(double zeta) const {
    check_domain(zeta);
    return std::visit(
        [zeta](const auto& fam) -> double {
          using F = std::decay_t<decltype(fam)>;
          if constexpr (std::is_same_v<F, families::PowerLaw>) {
            return fam.c * fam.p * std::pow(zeta, fam.p - 1.0);
          } else if constexpr (std::is_same_v<F, families::KneedLinearH>) {
            return std::max(fam.h_flat, zeta);
          } else if constexpr (std::is_same_v<F, families::HatLog>) {
            return fam.c * zeta / (1.0 - zeta);
          } else {
            return detail::piecewise_h_value(fam, zeta);
          }
        },
        family_);
  }

  /// Knee of h: non-increasing before, strictly increasing after.
  double zeta0() const { return zeta0_; }

  /// End of the open domain: +inf for exogenous families, 1 for endogenous.
  double domain_end() const { return domain_end_; }

  ImpactMode mode() const { return mode_; }

  std::string family_name() const {
    return std::visit(
        [](const auto& fam) -> std::string {
          using F = std::decay_t<decltype(fam)>;
          if constexpr (std::is_same_v<F, families::PowerLaw>) return "power";
          if constexpr (std::is_same_v<F, families::KneedLinearH>) return "kneed";
          if constexpr (std::is_same_v<F, families::HatLog>) return "hat_log";
          return "piecewise_h";
        },
        family_);
  }

  /// True when the family's closed form guarantees h diverges at the domain
  /// end, so the numeric divergence probe is redundant.
  bool diverges_analytically() const { return diverges_analytically_; }

 private:
  using Family = std::variant<families::PowerLaw, families::KneedLinearH,
                              families::HatLog, families::PiecewiseH>;

  ImpactFunction(Family fam, ImpactMode mode, double zeta0, bool diverges)
      : family_(std::move(fam)),
        mode_(mode),
        zeta0_(zeta0),
        domain_end_(mode == ImpactMode::Endogenous
                        ? 1.0
                        : std::numeric_limits<double>::infinity()),
        diverges_analytically_(diverges) {}

  void check_domain(double zeta) const {
    if (!(zeta >= 0.0) || zeta >= domain_end_) {
      std::ostringstream os;
      os << "impact ratio " << zeta << " outside [0, "
         << (std::isinf(domain_end_) ? std::string("inf") : std::string("1"))
         << ")";
      throw ImpactDomainError(os.str());
    }
  }

  Family family_;
  ImpactMode mode_;
  double zeta0_;
  double domain_end_;
  bool diverges_analytically_;

  friend ImpactFunction make_power_impact(double, double);
  friend ImpactFunction make_kneed_impact(double);
  friend ImpactFunction make_hat_log_impact(double);
  friend ImpactFunction detail::build_piecewise(std::vector<Knot>, ImpactMode, bool);
};

/// g(zeta) = c * zeta^p with p > 1, c > 0. Knee at zero, exogenous.
inline ImpactFunction make_power_impact(double c, double p) {
  if (!(c > 0.0)) throw InvalidFamily("power impact requires c > 0");
  if (!(p > 1.0)) throw InvalidFamily("power impact requires p > 1");
  return ImpactFunction(families::PowerLaw{c, p}, ImpactMode::Exogenous, 0.0, true);
}

/// h(zeta) = max(h_flat, zeta): flat up to the knee at h_flat, then linear.
inline ImpactFunction make_kneed_impact(double h_flat) {
  if (!(h_flat > 0.0)) throw InvalidFamily("kneed impact requires h_flat > 0");
  return ImpactFunction(families::KneedLinearH{h_flat}, ImpactMode::Exogenous,
                        h_flat, true);
}

/// Endogenous g(u) = -c (log(1-u) + u) on [0,1); h(u) = c u / (1-u).
inline ImpactFunction make_hat_log_impact(double c) {
  if (!(c > 0.0)) throw InvalidFamily("hat-log impact requires c > 0");
  return ImpactFunction(families::HatLog{c}, ImpactMode::Endogenous, 0.0, true);
}

namespace detail {

/// Shared piecewise construction. `enforce_tail` controls whether a
/// non-increasing tail is rejected; the unchecked factory exists so tests can
/// build deliberately broken shapes and watch validation flag them.
inline ImpactFunction build_piecewise(std::vector<Knot> knots, ImpactMode mode,
                                      bool enforce_tail) {
  if (knots.size() < 2) throw InvalidFamily("piecewise impact requires >= 2 knots");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!(knots[i].zeta >= 0.0))
      throw InvalidFamily("piecewise impact requires knot zeta >= 0");
    if (i > 0 && !(knots[i].zeta > knots[i - 1].zeta))
      throw InvalidFamily("piecewise impact requires strictly increasing knot zeta");
    if (knots[i].h < 0.0) throw NegativeH("piecewise impact requires h >= 0");
    if (mode == ImpactMode::Endogenous && knots[i].zeta >= 1.0)
      throw InvalidFamily("endogenous piecewise impact requires knot zeta < 1");
  }
  if (knots.front().zeta > 0.0) {
    // h extends flat to the left so the integral from zero is well defined.
    knots.insert(knots.begin(), Knot{0.0, knots.front().h});
  }

  const std::size_t n = knots.size() - 1;
  std::vector<double> g_knots(knots.size(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    g_knots[k + 1] = g_knots[k] + 0.5 * (knots[k].h + knots[k + 1].h) *
                                      (knots[k + 1].zeta - knots[k].zeta);
  }
  const double tail_slope = (knots[n].h - knots[n - 1].h) /
                            (knots[n].zeta - knots[n - 1].zeta);

  // The knee sits at the end of the last non-increasing segment.
  std::size_t knee = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    if (knots[k].h <= knots[k - 1].h) knee = k;
  }
  if (enforce_tail) {
    for (std::size_t k = knee; k < n; ++k) {
      if (!(knots[k + 1].h > knots[k].h))
        throw NonMonotoneTail("piecewise h must strictly increase beyond its knee");
    }
    if (!(tail_slope > 0.0))
      throw NonMonotoneTail("piecewise h must strictly increase beyond its knee");
  }

  const double zeta0 = knots[knee].zeta;
  return ImpactFunction(
      families::PiecewiseH{std::move(knots), std::move(g_knots), tail_slope}, mode,
      zeta0, /*diverges=*/false);
}

}  // namespace detail

/// Piecewise-linear h through `knots`, extrapolated linearly beyond the last
/// knot; g is the exact integral of h. Rejects shapes whose tail is not
/// strictly increasing.
inline ImpactFunction make_piecewise_h_impact(std::vector<Knot> knots,
                                              ImpactMode mode) {
  return detail::build_piecewise(std::move(knots), mode, /*enforce_tail=*/true);
}

inline ImpactFunction make_piecewise_h_impact(std::vector<Knot> knots) {
  return make_piecewise_h_impact(std::move(knots), ImpactMode::Exogenous);
}

/// Same construction without the tail monotonicity check (testing aid).
inline ImpactFunction make_piecewise_h_impact_unchecked(std::vector<Knot> knots,
                                                        ImpactMode mode) {
  return detail::build_piecewise(std::move(knots), mode, /*enforce_tail=*/false);
}

inline ImpactFunction make_piecewise_h_impact_unchecked(std::vector<Knot> knots) {
  return make_piecewise_h_impact_unchecked(std::move(knots), ImpactMode::Exogenous);
}

/// Result of the participation-rate equation nu h(nu) - g(nu) = -mu.
struct SolvedRate {
  double nu = 0.0;                 // market-volume participation rate
  double h_nu = 0.0;               // h at the solution (closed-form exponent)
  std::optional<double> nu_hat;    // endogenous share nu/(1+nu), when applicable
  double residual = 0.0;           // |nu h(nu) - g(nu) + mu| at the returned nu
};

namespace detail {

inline double rate_equation(const ImpactFunction& f, double z) {
  return z * f.h(z) - f.g(z);
}

inline double bisect_rate(const ImpactFunction& f, double lo, double hi, double target,
                          double tol, double& residual) {
  double mid = lo;
  double fmid = rate_equation(f, lo);
  for (int iter = 0; iter < 200; ++iter) {
    mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // interval exhausted in double precision
    fmid = rate_equation(f, mid);
    if (std::abs(fmid - target) <= tol) {
      residual = std::abs(fmid - target);
      return mid;
    }
    (fmid < target ? lo : hi) = mid;
  }
  residual = std::abs(fmid - target);
  return mid;
}

}  // namespace detail

/// Solves nu h(nu) - g(nu) = -mu on [zeta0, domain end) by bracket expansion
/// and bisection. For endogenous impacts the root nu_hat lives in [zeta0, 1)
/// and the market-volume rate is nu = nu_hat / (1 - nu_hat).
inline SolvedRate solve_nu(const ImpactFunction& f, double mu, double tol = 1e-10) {
  if (!(mu < 0.0)) throw std::invalid_argument("solve_nu requires mu < 0");
  if (!(tol > 0.0)) throw std::invalid_argument("solve_nu requires tol > 0");

  const double target = -mu;
  const double z0 = f.zeta0();
  const double f0 = detail::rate_equation(f, z0);
  if (f0 > target) {
    std::ostringstream os;
    os << "rate equation already exceeds -mu at the knee: f(" << z0 << ") = " << f0
       << " > " << target;
    throw NoRootAboveKnee(os.str());
  }

  double residual = std::abs(f0 - target);
  if (residual <= tol) {
    SolvedRate out{z0, f.h(z0), std::nullopt, residual};
    if (f.mode() == ImpactMode::Endogenous) {
      out.nu_hat = z0;
      out.nu = z0 / (1.0 - z0);
    }
    return out;
  }

  if (f.mode() == ImpactMode::Endogenous) {
    const double hi = 1.0 - 1e-12;
    if (detail::rate_equation(f, hi) < target) {
      throw BracketFailure("rate equation stays below -mu up to the domain end");
    }
    const double nu_hat = detail::bisect_rate(f, z0, hi, target, tol, residual);
    return SolvedRate{nu_hat / (1.0 - nu_hat), f.h(nu_hat), nu_hat, residual};
  }

  double hi = std::max(1.0, 2.0 * z0);
  int doublings = 0;
  while (detail::rate_equation(f, hi) < target) {
    hi *= 2.0;
    if (++doublings > 1000) {
      throw BracketFailure("rate equation stayed below -mu after 1000 doublings");
    }
  }
  const double nu = detail::bisect_rate(f, z0, hi, target, tol, residual);
  return SolvedRate{nu, f.h(nu), std::nullopt, residual};
}

/// One shape-condition check with a human-readable outcome.
struct ValidationCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const ValidationCheck& c) { return c.pass; });
  }
};

namespace detail {

// Divergence is probed far out (or next to 1 for endogenous domains); the
// threshold is a heuristic sitting just under the probe scale so that shapes
// growing linearly at the probe point still clear it.
inline constexpr double kDivergenceProxyThreshold = 0.99e6;

inline std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace detail

/// Samples the shape conditions on a grid of `n_samples` points: g(0) = 0,
/// h >= 0, the non-increasing/strictly-increasing pattern around the knee,
/// divergence of h near the domain end (numeric proxy unless the family form
/// guarantees it), and a finite-difference match between g' and h.
inline ValidationReport validate(const ImpactFunction& f, int n_samples) {
  if (n_samples < 3) throw std::invalid_argument("validate requires n_samples >= 3");

  const bool endo = f.mode() == ImpactMode::Endogenous;
  const double z0 = f.zeta0();
  const double hi = endo ? 1.0 - 1e-3 : std::max(2.0, 2.0 * z0 + 1.0);
  ValidationReport report;

  {
    const double g0 = f.g(0.0);
    report.checks.push_back({"g_zero_at_origin", std::abs(g0) <= 1e-12,
                             "g(0) = " + detail::fmt_double(g0)});
  }

  std::vector<double> pre, post;
  if (z0 > 0.0) {
    for (int k = 1; k <= n_samples; ++k) {
      pre.push_back(z0 * static_cast<double>(k) / static_cast<double>(n_samples));
    }
  }
  for (int k = 0; k <= n_samples; ++k) {
    post.push_back(z0 + (hi - z0) * static_cast<double>(k) /
                            static_cast<double>(n_samples));
  }

  {
    bool ok = true;
    double worst = 0.0;
    for (double z : pre) {
      const double hz = f.h(z);
      if (hz < 0.0) { ok = false; worst = std::min(worst, hz); }
    }
    for (double z : post) {
      const double hz = f.h(z);
      if (hz < 0.0) { ok = false; worst = std::min(worst, hz); }
    }
    report.checks.push_back({"h_nonnegative", ok,
                             ok ? "h >= 0 at all sampled points"
                                : "min sampled h = " + detail::fmt_double(worst)});
  }

  {
    bool ok = true;
    std::string why = "non-increasing before the knee, strictly increasing after";
    for (std::size_t k = 0; k + 1 < pre.size(); ++k) {
      const double a = f.h(pre[k]), b = f.h(pre[k + 1]);
      if (b > a + 1e-9 * (1.0 + std::abs(a))) {
        ok = false;
        why = "h increases before the knee near zeta = " + detail::fmt_double(pre[k]);
        break;
      }
    }
    if (ok) {
      for (std::size_t k = 0; k + 1 < post.size(); ++k) {
        const double a = f.h(post[k]), b = f.h(post[k + 1]);
        if (b < a - 1e-9 * (1.0 + std::abs(a))) {
          ok = false;
          why = "h decreases beyond the knee near zeta = " +
                detail::fmt_double(post[k]);
          break;
        }
      }
    }
    if (ok && !(f.h(post.back()) > f.h(post.front()) + 1e-12)) {
      ok = false;
      why = "h is flat beyond the knee";
    }
    report.checks.push_back({"h_monotone_pattern", ok, why});
  }

  {
    const double probe = endo ? 1.0 - 1e-6 : 1e6 * std::max(1.0, z0);
    const double h_probe = f.h(probe);
    const bool numeric_ok = h_probe >= detail::kDivergenceProxyThreshold;
    const bool ok = f.diverges_analytically() || numeric_ok;
    std::string why = "h(" + detail::fmt_double(probe) + ") = " +
                      detail::fmt_double(h_probe);
    if (f.diverges_analytically()) why += " (divergence guaranteed by family form)";
    report.checks.push_back({"h_divergence_proxy", ok, why});
  }

  {
    bool ok = true;
    double worst = 0.0, worst_at = 0.0;
    auto check_point = [&](double z) {
      const double eps = 1e-6 * std::max(1.0, z);
      if (z - eps <= 0.0 || z + eps >= f.domain_end()) return;
      const double fd = (f.g(z + eps) - f.g(z - eps)) / (2.0 * eps);
      const double hz = f.h(z);
      const double err = std::abs(fd - hz);
      if (err > worst) { worst = err; worst_at = z; }
      if (err > 1e-6 * (1.0 + std::abs(hz))) ok = false;
    };
    for (double z : pre) check_point(z);
    for (double z : post) check_point(z);
    report.checks.push_back(
        {"finite_difference_derivative", ok,
         "max |centered difference of g - h| = " + detail::fmt_double(worst) +
             " at zeta = " + detail::fmt_double(worst_at)});
  }

  return report;
}

}  // namespace optexec
