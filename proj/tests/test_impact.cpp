#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "optexec/impact.hpp"

#include "test_util.hpp"

using namespace optexec;

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

TEST_CASE("power family evaluates cost and derivative") {
  const auto f = make_power_impact(0.5, 2.0);
  CHECK(f.g(0.0) == 0.0);
  CHECK(f.g(1.0) == Catch::Approx(0.5).margin(1e-15));
  CHECK(f.h(1.0) == Catch::Approx(1.0).margin(1e-15));
  CHECK(f.h(2.0) == Catch::Approx(2.0).margin(1e-15));
  CHECK(f.zeta0() == 0.0);
  CHECK(f.mode() == ImpactMode::Exogenous);
  CHECK(f.diverges_analytically());

  const auto f15 = make_power_impact(2.0, 1.5);
  CHECK(f15.g(4.0) == Catch::Approx(16.0).epsilon(1e-14));
  CHECK(f15.h(4.0) == Catch::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("power factory rejects bad parameters") {
  CHECK_THROWS_AS(make_power_impact(0.0, 2.0), InvalidFamily);
  CHECK_THROWS_AS(make_power_impact(-1.0, 2.0), InvalidFamily);
  CHECK_THROWS_AS(make_power_impact(0.5, 1.0), InvalidFamily);
  CHECK_THROWS_AS(make_power_impact(0.5, 0.5), InvalidFamily);
}

TEST_CASE("kneed family has flat then linear derivative") {
  const auto f = make_kneed_impact(1.0);
  CHECK(f.zeta0() == 1.0);
  CHECK(f.h(0.25) == 1.0);
  CHECK(f.h(1.0) == 1.0);
  CHECK(f.h(2.0) == 2.0);
  CHECK(f.g(0.5) == Catch::Approx(0.5).margin(1e-15));
  CHECK(f.g(2.0) == Catch::Approx(2.5).margin(1e-14));
  CHECK_THROWS_AS(make_kneed_impact(0.0), InvalidFamily);
  CHECK_THROWS_AS(make_kneed_impact(-2.0), InvalidFamily);
}

TEST_CASE("hat-log family is endogenous with unit-interval domain") {
  const auto f = make_hat_log_impact(1.0);
  CHECK(f.mode() == ImpactMode::Endogenous);
  CHECK(f.domain_end() == 1.0);
  CHECK(f.g(0.5) == Catch::Approx(std::log(2.0) - 0.5).epsilon(1e-14));
  CHECK(f.h(0.5) == Catch::Approx(1.0).margin(1e-14));
  CHECK_THROWS_AS(f.g(1.0), ImpactDomainError);
  CHECK_THROWS_AS(f.h(1.0), ImpactDomainError);
  CHECK_THROWS_AS(f.g(-0.1), ImpactDomainError);
  CHECK_THROWS_AS(make_hat_log_impact(0.0), InvalidFamily);
}

TEST_CASE("negative argument is rejected for every family") {
  CHECK_THROWS_AS(make_power_impact(0.5, 2.0).g(-1e-9), ImpactDomainError);
  CHECK_THROWS_AS(make_kneed_impact(1.0).h(-1.0), ImpactDomainError);
}

TEST_CASE("piecewise derivative interpolates knots and extrapolates the tail") {
  const auto f = make_piecewise_h_impact({{0.0, 1.0}, {1.0, 1.0}, {2.0, 2.0}});
  CHECK(f.zeta0() == 1.0);
  CHECK(f.h(0.5) == Catch::Approx(1.0).margin(1e-15));
  CHECK(f.h(1.5) == Catch::Approx(1.5).margin(1e-15));
  CHECK(f.h(3.0) == Catch::Approx(3.0).margin(1e-14));  // linear tail, slope 1
  CHECK(f.g(2.0) == Catch::Approx(2.5).epsilon(1e-14));
  CHECK(f.g(3.0) == Catch::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("piecewise knee sits at the end of the non-increasing prefix") {
  const auto f = make_piecewise_h_impact({{0.0, 2.0}, {1.0, 1.0}, {2.0, 3.0}});
  CHECK(f.zeta0() == 1.0);
  CHECK(f.h(0.5) == Catch::Approx(1.5).margin(1e-15));
  CHECK(f.h(1.5) == Catch::Approx(2.0).margin(1e-15));
}

TEST_CASE("piecewise factory validates shape") {
  CHECK_THROWS_AS(make_piecewise_h_impact({{0.0, 1.0}}), InvalidFamily);
  CHECK_THROWS_AS(make_piecewise_h_impact({{0.0, 1.0}, {0.0, 2.0}}), InvalidFamily);
  CHECK_THROWS_AS(make_piecewise_h_impact({{1.0, 1.0}, {0.5, 2.0}}), InvalidFamily);
  CHECK_THROWS_AS(make_piecewise_h_impact({{0.0, 1.0}, {1.0, -0.5}}), NegativeH);
  CHECK_THROWS_AS(
      make_piecewise_h_impact({{0.0, 1.0}, {1.0, 0.5}, {2.0, 0.25}}),
      NonMonotoneTail);
  CHECK_THROWS_AS(make_piecewise_h_impact({{0.0, 1.0}, {1.0, 1.0}}),
                  NonMonotoneTail);  // flat tail never diverges
  CHECK_NOTHROW(
      make_piecewise_h_impact_unchecked({{0.0, 1.0}, {1.0, 0.5}, {2.0, 0.25}}));
}

TEST_CASE("piecewise endogenous knots must stay inside the unit interval") {
  CHECK_THROWS_AS(
      make_piecewise_h_impact({{0.0, 1.0}, {1.5, 2.0}}, ImpactMode::Endogenous),
      InvalidFamily);
  const auto f = make_piecewise_h_impact({{0.0, 1.0}, {0.5, 2.0}},
                                         ImpactMode::Endogenous);
  CHECK(f.mode() == ImpactMode::Endogenous);
  CHECK(f.h(0.75) == Catch::Approx(2.5).margin(1e-14));
  CHECK_THROWS_AS(f.h(1.0), ImpactDomainError);
}

TEST_CASE("cost equals the integral of the derivative") {
  // Integrates h in the substituted variable r = s^2, which removes the
  // root-type singularity of fractional powers at the origin, and splits the
  // range wherever h has a kink so Simpson sees a smooth integrand throughout.
  const auto split_quad = [](const ImpactFunction& f, double z,
                             std::vector<double> kinks) {
    kinks.push_back(z);
    double total = 0.0;
    double lo = 0.0;
    for (double hi : kinks) {
      if (hi >= z) hi = z;
      if (hi <= lo) continue;
      total += testutil::simpson(
          [&](double s) { return 2.0 * s * f.h(s * s); }, std::sqrt(lo),
          std::sqrt(hi), 2000);
      lo = hi;
    }
    return total;
  };
  const std::pair<ImpactFunction, std::vector<double>> families[] = {
      {make_power_impact(0.5, 2.0), {}},
      {make_power_impact(2.0, 1.5), {}},
      {make_kneed_impact(1.0), {1.0}},
      {make_piecewise_h_impact({{0.0, 2.0}, {1.0, 1.0}, {2.0, 3.0}}), {1.0, 2.0}},
  };
  for (const auto& [f, kinks] : families) {
    for (double z : {0.3, 0.9, 1.7, 2.6}) {
      CHECK(testutil::close_rel(f.g(z), split_quad(f, z, kinks), 1e-7));
    }
  }
  const auto hat = make_hat_log_impact(1.5);
  for (double u : {0.2, 0.5, 0.9}) {
    CHECK(testutil::close_rel(hat.g(u), split_quad(hat, u, {}), 1e-7));
  }
}

TEST_CASE("solver recovers the quadratic-cost participation rate exactly") {
  const auto f = make_power_impact(0.5, 2.0);
  const SolvedRate s = solve_nu(f, -0.5);
  CHECK(testutil::close_abs(s.nu, 1.0, 1e-9));
  CHECK(testutil::close_abs(s.h_nu, 1.0, 1e-9));
  CHECK(s.residual <= 1e-10);
  CHECK_FALSE(s.nu_hat.has_value());
}

TEST_CASE("solver recovers the kneed-family rate sqrt(2)") {
  const auto f = make_kneed_impact(1.0);
  const SolvedRate s = solve_nu(f, -0.5);
  CHECK(testutil::close_abs(s.nu, kSqrt2, 1e-9));
  CHECK(testutil::close_abs(s.h_nu, kSqrt2, 1e-9));
  CHECK(s.residual <= 1e-10);
}

TEST_CASE("solver matches the power-family closed form over random draws") {
  std::mt19937 rng(20240817);
  std::uniform_real_distribution<double> uc(0.1, 3.0);
  std::uniform_real_distribution<double> up(1.01, 4.0);
  std::uniform_real_distribution<double> umu(-5.0, -0.01);
  for (int i = 0; i < 100; ++i) {
    const double c = uc(rng);
    const double p = up(rng);
    const double mu = umu(rng);
    const auto f = make_power_impact(c, p);
    const SolvedRate s = solve_nu(f, mu);
    // nu h(nu) - g(nu) = c (p - 1) nu^p, so the root is explicit.
    const double expect = std::pow(-mu / (c * (p - 1.0)), 1.0 / p);
    CHECK(s.residual <= 1e-10);
    CHECK(testutil::close_rel(s.nu, expect, 1e-6));
  }
}

TEST_CASE("rate equation value is non-decreasing above the knee") {
  const auto check_monotone = [](const ImpactFunction& f, double hi) {
    double prev = -1e300;
    for (int i = 0; i <= 200; ++i) {
      const double z = f.zeta0() + (hi - f.zeta0()) * i / 200.0;
      const double val = z * f.h(z) - f.g(z);
      CHECK(val >= prev - 1e-12 * std::max(1.0, std::abs(val)));
      prev = val;
    }
  };
  check_monotone(make_power_impact(0.5, 2.0), 3.0);
  check_monotone(make_kneed_impact(1.0), 4.0);
  check_monotone(make_piecewise_h_impact({{0.0, 2.0}, {1.0, 1.0}, {2.0, 3.0}}), 5.0);
}

TEST_CASE("endogenous solve matches an independent bisection oracle") {
  const auto f = make_hat_log_impact(1.0);
  const SolvedRate s = solve_nu(f, -0.5);
  REQUIRE(s.nu_hat.has_value());
  const double oracle = testutil::hat_log_root_unit();
  CHECK(testutil::close_abs(*s.nu_hat, oracle, 1e-9));
  CHECK(testutil::close_abs(s.nu, oracle / (1.0 - oracle), 1e-8));
  CHECK(s.residual <= 1e-10);
  // With unit scale the derivative at the solution equals the converted rate.
  CHECK(testutil::close_abs(s.h_nu, s.nu, 1e-12));
}

TEST_CASE("endogenous conversion identity holds to 1e-12") {
  for (double c : {0.5, 1.0, 2.5}) {
    for (double mu : {-0.25, -0.5, -2.0}) {
      const SolvedRate s = solve_nu(make_hat_log_impact(c), mu);
      REQUIRE(s.nu_hat.has_value());
      CHECK(testutil::close_abs(s.nu / (1.0 + s.nu), *s.nu_hat, 1e-12));
    }
  }
}

TEST_CASE("solver reports when no root exists above the knee") {
  // Rises steeply, dips, then recovers: the value at the knee already
  // exceeds the drift target, and the equation has no root beyond it.
  const auto f = make_piecewise_h_impact(
      {{0.0, 0.0}, {1.0, 10.0}, {1.5, 9.0}, {2.0, 11.0}});
  CHECK(f.zeta0() == 1.5);
  CHECK_THROWS_AS(solve_nu(f, -0.5), NoRootAboveKnee);
  // A drift that lands exactly on the knee value is still solvable.
  const double g15 = f.g(1.5);
  const double f15 = 1.5 * f.h(1.5) - g15;
  CHECK(f15 == Catch::Approx(3.75).epsilon(1e-12));
  const SolvedRate s = solve_nu(f, -f15);
  CHECK(s.nu == 1.5);
}

TEST_CASE("solver reports an impossible bracket for a flat derivative") {
  const auto flat = make_piecewise_h_impact_unchecked({{0.0, 1.0}, {1.0, 1.0}});
  CHECK_THROWS_AS(solve_nu(flat, -0.5), BracketFailure);
}

TEST_CASE("endogenous bracket failure when the equation never reaches the drift") {
  const auto f = make_piecewise_h_impact_unchecked({{0.0, 0.1}, {0.5, 0.05}},
                                                   ImpactMode::Endogenous);
  CHECK_THROWS_AS(solve_nu(f, -0.5), BracketFailure);
}

TEST_CASE("solver rejects invalid drift and tolerance") {
  const auto f = make_power_impact(0.5, 2.0);
  CHECK_THROWS_AS(solve_nu(f, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_nu(f, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(solve_nu(f, -0.5, 0.0), std::invalid_argument);
}

TEST_CASE("shape checks pass for the stock families") {
  for (const auto& f :
       {make_power_impact(0.5, 2.0), make_kneed_impact(1.0),
        make_piecewise_h_impact({{0.0, 2.0}, {1.0, 1.0}, {2.0, 3.0}}),
        make_hat_log_impact(1.0)}) {
    const ValidationReport report = validate(f, 64);
    INFO(to_string(f.mode()));
    for (const auto& check : report.checks) {
      INFO(check.name << ": " << check.detail);
      CHECK(check.pass);
    }
    CHECK(report.all_pass());
  }
}

TEST_CASE("slowly diverging power families still clear the divergence check") {
  // At the far probe point h is only ~750, far below the raw threshold, so
  // the check has to rely on the family's analytic divergence.
  const ValidationReport report = validate(make_power_impact(0.5, 1.5), 64);
  CHECK(report.all_pass());
}

TEST_CASE("shape checks flag a non-monotone prefix and a flat tail") {
  const auto bad_prefix = make_piecewise_h_impact(
      {{0.0, 0.0}, {1.0, 10.0}, {1.5, 9.0}, {2.0, 11.0}});
  const ValidationReport r1 = validate(bad_prefix, 64);
  CHECK_FALSE(r1.all_pass());
  bool monotone_failed = false;
  for (const auto& c : r1.checks) {
    if (c.name == "h_monotone_pattern") monotone_failed = !c.pass;
  }
  CHECK(monotone_failed);

  const auto flat = make_piecewise_h_impact_unchecked({{0.0, 1.0}, {1.0, 1.0}});
  const ValidationReport r2 = validate(flat, 64);
  CHECK_FALSE(r2.all_pass());
}

TEST_CASE("shape checks need at least three samples") {
  CHECK_THROWS_AS(validate(make_power_impact(0.5, 2.0), 2), std::invalid_argument);
}

TEST_CASE("finite differences of the cost match the derivative everywhere") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uz(1e-3, 4.0);
  const auto f = make_kneed_impact(1.0);
  for (int i = 0; i < 1000; ++i) {
    const double z = uz(rng);
    const double eps = 1e-6 * std::max(1.0, z);
    // Skip straddles of the knee, where g has a one-sided second derivative.
    if (std::abs(z - f.zeta0()) < eps) continue;
    const double fd = (f.g(z + eps) - f.g(z - eps)) / (2.0 * eps);
    CHECK(testutil::close_abs(fd, f.h(z), 1e-6 * (1.0 + std::abs(f.h(z)))));
  }
}

TEST_CASE("mode names render for reports") {
  CHECK(std::string(to_string(ImpactMode::Exogenous)) == "exogenous");
  CHECK(std::string(to_string(ImpactMode::Endogenous)) == "endogenous");
}
