#include <gtest/gtest.h>

#include <cmath>

#include "choicerm/static_solver.hpp"
#include "oracles.hpp"

using namespace choicerm;

namespace {

oracle::GridOptimum exact_grid(const Instance& inst, std::size_t points, double scale = 1.0) {
  FeasiblePriceRegion region;
  region.instance = &inst;
  region.demand_scale = scale;
  return oracle::grid_optimum(
      inst, points, [&](const std::vector<double>& r) { return expected_revenue(inst.mnl, r); },
      [&](const std::vector<double>& r) { return is_feasible(region, r, 0.0).feasible(); });
}

}  // namespace

TEST(Static, OneProductMatchesGridOracle) {
  auto inst = oracle::single_product(10, 5, 100, 150);
  auto sol = solve_sp_dmip(inst, 100, 1e-4);
  ASSERT_TRUE(sol.feasible);
  auto grid = exact_grid(inst, 1000000);
  const double res_err = oracle::grid_resolution_error(inst, grid.spacing);
  EXPECT_GE(sol.exact_objective, grid.value - sol.gap_bound - 1e-4 - res_err);
  // the ratio found by bisection matches the best approximate ratio on a fine grid
  auto pw = build_grid(inst, 100);
  double best_hat = 0;
  for (int k = 0; k < 1000000; ++k) {
    std::vector<double> r{100 + 50.0 * k / 999999};
    best_hat = std::max(best_hat, approx_revenue(pw, r));
  }
  EXPECT_NEAR(sol.trace.final_delta, best_hat, 1e-4 + 1e-9);
}

TEST(Static, PriceRowsPinningTheLowerBounds) {
  Rng rng(1);
  auto inst = oracle::small_instance(rng, 3, 0, 1, 1);
  inst.B = {1, 1, 1};
  inst.d = {inst.l[0] + inst.l[1] + inst.l[2]};
  auto sol = solve_sp_dmip(inst);
  ASSERT_TRUE(sol.feasible);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(sol.prices[j], inst.l[j], 1e-6);
  auto grid = build_grid(inst, 15);
  EXPECT_NEAR(sol.approx_objective, approx_revenue(grid, inst.l), 1e-6);
  EXPECT_NEAR(sol.trace.final_delta, approx_revenue(grid, inst.l), sol.xi);
}

TEST(Static, EmptyPriceRegionIsInfeasible) {
  Rng rng(2);
  auto inst = oracle::small_instance(rng, 2, 0, 1, 1);
  inst.B = {1, 1};
  inst.d = {inst.l[0] + inst.l[1] - 1};
  EXPECT_FALSE(solve_sp_dmip(inst).feasible);
}

TEST(Static, CertificateSandwichAndDeterminism) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto inst = generate({4, 3, 50, 30, seed, 2});
    const auto star = solve_sp_star(inst, 15);
    ASSERT_TRUE(star.feasible);
    EXPECT_TRUE(star.report.feasible()) << seed;
    const double omega_k = star.demand_scale * star.constants.omega / 15.0;
    EXPECT_LE(std::abs(star.exact_objective - star.approx_objective), omega_k + 1e-9);
    auto again = solve_sp_star(inst, 15);
    EXPECT_EQ(star.prices, again.prices);
  }
}

TEST(Static, OneArrivalEqualsUnitDeterministicModel) {
  auto inst = generate({3, 2, 1, 1, 4, 2});
  auto a = solve_sp_dmip(inst);
  auto b = solve_sp_star(inst);
  EXPECT_EQ(a.prices, b.prices);
  EXPECT_EQ(a.approx_objective, b.approx_objective);
}

TEST(Static, ScalingTightensCapacity) {
  auto inst = generate({3, 2, 200, 20, 3, 3});
  auto one = solve_sp_dmip(inst);
  auto many = solve_sp_star(inst);
  ASSERT_TRUE(one.feasible && many.feasible);
  auto usage = [&](const PricingSolution& s) {
    auto p = choice_probabilities(inst.mnl, s.prices);
    double worst = -1e300;
    for (std::size_t i = 0; i < inst.m; ++i) {
      double use = 0;
      for (std::size_t j = 0; j < inst.n(); ++j) use += inst.a_ij(i, j) * p[j + 1];
      worst = std::max(worst, s.demand_scale * use - inst.c[i]);
    }
    return worst;
  };
  EXPECT_LT(usage(one), -1.0);
  EXPECT_GT(usage(many), -1e-3 * inst.c[0]);
  EXPECT_LT(many.exact_objective, 200 * one.exact_objective - 100);
}

TEST(Static, LooseCapacityScalesThePerArrivalOptimum) {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    auto inst = oracle::small_instance(rng, 2, 1, 50, 1000);
    auto star = solve_sp_star(inst, 30, 1e-4);
    auto grid = exact_grid(inst, 1000);
    const double res_err = oracle::grid_resolution_error(inst, grid.spacing);
    EXPECT_NEAR(star.exact_objective / 50, grid.value, star.gap_bound + 1e-4 + res_err);
  }
}

// Gap to a brute-force grid optimum of F over the exact region, small n.
TEST(Static, GapToGridOracleWithinGuarantee) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = oracle::small_instance(rng, 2, 1, 1, 1, trial % 2);
    inst.c = {1};
    inst.A = {1, 1};
    for (double K : {15.0, 30.0}) {
      auto sol = solve_sp_dmip(inst, static_cast<std::size_t>(K), 1e-3);
      ASSERT_TRUE(sol.feasible);
      EXPECT_TRUE(sol.report.feasible());
      auto grid = exact_grid(inst, 1000);
      const double res_err = oracle::grid_resolution_error(inst, grid.spacing);
      EXPECT_GE(sol.exact_objective, grid.value - sol.gap_bound - sol.xi - res_err);
    }
  }
}

TEST(Static, DoublingKHalvesTheBounds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto inst = generate({8, 4, 50, 30, seed, 3});
    auto a = solve_sp_dmip(inst, 15);
    auto b = solve_sp_dmip(inst, 30);
    EXPECT_DOUBLE_EQ(b.gap_bound, a.gap_bound / 2);
    EXPECT_DOUBLE_EQ(b.feasibility_bound, a.feasibility_bound / 2);
  }
}

TEST(Duals, ZeroWhenCapacityIsLoose) {
  auto inst = generate({3, 2, 10, 1000, 1, 2});
  auto sol = solve_sp_star(inst);
  for (double p : extract_duals(inst, sol)) EXPECT_EQ(p, 0.0);
}

// One resource consumed by every product, capacity well below the
// unconstrained demand. The eta/K slack is switched off: on this instance it
// exceeds the whole capacity and the row would never bind.
TEST(Duals, PositiveAndMatchFiniteDifference) {
  Rng rng(5);
  auto base = oracle::small_instance(rng, 2, 1, 100, 10);
  base.A = {1, 1};
  const double h = 0.5;
  for (double cap : {10.0, 20.0}) {
    auto inst = base;
    inst.c = {cap};
    SolverConfig cfg;
    cfg.K = 60;
    cfg.xi = 1e-6;
    cfg.resource_slack = false;
    auto sol = solve_sp_star(inst, cfg.K, cfg.xi, cfg);
    auto pi = extract_duals(inst, sol, cfg);
    ASSERT_GT(pi[0], 0.0);
    auto lo = sp_problem(inst, 100);
    auto hi = lo;
    lo.capacity = {cap - h};
    hi.capacity = {cap + h};
    const double fd = (solve_pricing(hi, cfg).approx_objective - solve_pricing(lo, cfg).approx_objective) / (2 * h);
    EXPECT_NEAR(pi[0], fd, 0.02 * fd) << "capacity " << cap;
  }
}
