#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "optexec/oracle.hpp"

#include "test_util.hpp"

using namespace optexec;

namespace {

MarketParams market(double x) {
  MarketParams m;
  m.s0 = 100.0;
  m.mu = -0.5;
  m.sigma = 0.0;
  m.T = 1.0;
  m.x = x;
  return m;
}

std::vector<double> tenth_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 20; ++k) g.push_back(0.1 * k);
  return g;
}

const VolumePath& unit_path() {
  static const VolumePath path =
      build_deterministic_path(VolumeModel{ConstantVolume{1.0}, 1000}, 1.0);
  return path;
}

}  // namespace

TEST_CASE("enumeration finds the sell-then-stop pattern") {
  const auto impact = make_power_impact(0.5, 2.0);
  const auto grid = tenth_grid();
  const OracleResult res = brute_force(market(0.6), impact, unit_path(), 5, grid);

  const std::vector<double> expect{1.0, 1.0, 1.0, 0.0, 0.0};
  CHECK(res.best_rates == expect);
  // 5 rates from {0, 0.1, ..., 2.0} with sum <= 3.0: C(35,5) - 5 C(14,5).
  CHECK(res.n_evaluated == 314622);
  const double J = closed_form_value(100.0, 1.0, 0.6);
  CHECK(res.closed_form == Catch::Approx(J).margin(1e-12));
  CHECK(testutil::close_rel(res.best_value, J, 0.02));
  // The left-point discretization values schedules slightly above the
  // continuum, so the gap can be small and negative but never large.
  CHECK(res.gap < 0.01 * J);
  CHECK(res.gap > -0.01 * J);
}

TEST_CASE("enumeration picks the constant-speed schedule at full budget") {
  const auto impact = make_power_impact(0.5, 2.0);
  const auto grid = tenth_grid();
  const OracleResult res = brute_force(market(1.0), impact, unit_path(), 5, grid);
  CHECK(res.best_rates == std::vector<double>{1.0, 1.0, 1.0, 1.0, 1.0});
  CHECK(testutil::close_rel(res.best_value, closed_form_value(100.0, 1.0, 1.0),
                            0.02));
}

TEST_CASE("top-k is sorted by value and led by the best tuple") {
  const auto impact = make_power_impact(0.5, 2.0);
  const auto grid = tenth_grid();
  const OracleResult res =
      brute_force(market(0.6), impact, unit_path(), 5, grid, ImpactMode::Exogenous, 7);
  REQUIRE(res.top_k.size() == 7);
  CHECK(res.top_k.front().second == res.best_rates);
  CHECK(res.top_k.front().first == res.best_value);
  for (std::size_t i = 1; i < res.top_k.size(); ++i) {
    CHECK(res.top_k[i].first <= res.top_k[i - 1].first);
  }
  CHECK(res.n_ties >= 1);
  REQUIRE_FALSE(res.ties.empty());
  CHECK(res.ties.front() == res.best_rates);
}

TEST_CASE("a richer rate grid never lowers the best value") {
  const auto impact = make_power_impact(0.5, 2.0);
  const std::vector<double> coarse{0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<double> fine{0.0,  0.25, 0.5,  0.75, 1.0,
                           1.25, 1.5,  1.75, 2.0};
  const OracleResult a = brute_force(market(0.6), impact, unit_path(), 5, coarse);
  const OracleResult b = brute_force(market(0.6), impact, unit_path(), 5, fine);
  CHECK(b.best_value >= a.best_value);
}

TEST_CASE("duplicate grid entries do not change the outcome") {
  const auto impact = make_power_impact(0.5, 2.0);
  const std::vector<double> clean{0.0, 0.5, 1.0};
  const std::vector<double> dup{1.0, 0.5, 0.0, 1.0, 0.5};
  const OracleResult a = brute_force(market(0.6), impact, unit_path(), 5, clean);
  const OracleResult b = brute_force(market(0.6), impact, unit_path(), 5, dup);
  CHECK(a.best_value == b.best_value);
  CHECK(a.best_rates == b.best_rates);
  CHECK(a.n_evaluated == b.n_evaluated);
}

TEST_CASE("a zero-budget run degenerates to the all-zero tuple") {
  const auto impact = make_power_impact(0.5, 2.0);
  const std::vector<double> grid{0.0, 1.0};
  const OracleResult res = brute_force(market(0.0), impact, unit_path(), 5, grid);
  CHECK(res.best_rates == std::vector<double>(5, 0.0));
  CHECK(res.best_value == 0.0);
  CHECK(res.n_evaluated == 1);
}

TEST_CASE("endogenous enumeration front-loads at the solved rate") {
  const auto impact = make_hat_log_impact(1.0);
  const SolvedRate s = solve_nu(impact, -0.5);
  const std::vector<double> grid{0.0, 0.5, s.nu, 2.0};
  const double x = 0.6 * s.nu;  // three blocks at nu, then stop
  const OracleResult res = brute_force(market(x), impact, unit_path(), 5, grid,
                                       ImpactMode::Endogenous);
  CHECK(res.best_rates == std::vector<double>{s.nu, s.nu, s.nu, 0.0, 0.0});
  CHECK(testutil::close_rel(res.best_value,
                            closed_form_value(100.0, s.h_nu, x), 0.02));
}

TEST_CASE("enumeration guards refuse oversized requests") {
  const auto impact = make_power_impact(0.5, 2.0);
  const auto grid = tenth_grid();
  CHECK_THROWS_AS(brute_force(market(0.6), impact, unit_path(), 0, grid),
                  EnumerationTooLarge);
  CHECK_THROWS_AS(brute_force(market(0.6), impact, unit_path(), 7, grid),
                  EnumerationTooLarge);
  const std::vector<double> huge(26, 1.0);
  CHECK_THROWS_AS(brute_force(market(0.6), impact, unit_path(), 5, huge),
                  EnumerationTooLarge);
  CHECK_THROWS_AS(
      brute_force(market(0.6), impact, unit_path(), 5, std::vector<double>{}),
      EnumerationTooLarge);
}

TEST_CASE("block count must divide the path grid") {
  const auto impact = make_power_impact(0.5, 2.0);
  const auto grid = tenth_grid();
  CHECK_THROWS_AS(brute_force(market(0.6), impact, unit_path(), 3, grid),
                  GridMismatch);
}

TEST_CASE("negative grid rates are rejected") {
  const auto impact = make_power_impact(0.5, 2.0);
  const std::vector<double> grid{-0.5, 0.0, 1.0};
  CHECK_THROWS_AS(brute_force(market(0.6), impact, unit_path(), 5, grid),
                  std::invalid_argument);
}

TEST_CASE("an unsatisfiable budget with no zero rate is reported") {
  const auto impact = make_power_impact(0.5, 2.0);
  const std::vector<double> grid{1.0, 2.0};
  CHECK_THROWS_AS(brute_force(market(0.1), impact, unit_path(), 5, grid),
                  std::invalid_argument);
}

TEST_CASE("feasibility slack admits budgets that are exact in real arithmetic") {
  // Three blocks of 0.2 at rate 1 sell 0.6 on the nose; float dust must not
  // disqualify the tuple.
  const auto impact = make_power_impact(0.5, 2.0);
  const std::vector<double> grid{0.0, 1.0};
  const OracleResult res = brute_force(market(0.6), impact, unit_path(), 5, grid);
  CHECK(res.best_rates == std::vector<double>{1.0, 1.0, 1.0, 0.0, 0.0});
}
