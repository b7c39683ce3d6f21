#include <gtest/gtest.h>

#include <cmath>

#include "choicerm/baselines.hpp"
#include "choicerm/projection.hpp"
#include "oracles.hpp"

using namespace choicerm;

namespace {

Instance homogeneous(Rng& rng, std::size_t n, double b) {
  auto inst = oracle::small_instance(rng, n, 0, 1, 1);
  for (auto& v : inst.mnl.b) v = b;
  return inst;
}

oracle::GridOptimum revenue_grid(const Instance& inst, std::size_t points) {
  FeasiblePriceRegion region;
  region.instance = &inst;
  return oracle::grid_optimum(
      inst, points, [&](const std::vector<double>& r) { return expected_revenue(inst.mnl, r); },
      [&](const std::vector<double>& r) { return is_feasible(region, r, 0.0).feasible(); });
}

bool exactly_feasible(const Instance& inst, const std::vector<double>& r) {
  FeasiblePriceRegion region;
  region.instance = &inst;
  return is_feasible(region, r, 0.0).feasible();
}

}  // namespace

TEST(Transform, UniformProbabilitiesGiveIntercepts) {
  MnlModel m{{10, 20, 30}, {5, 7, 9}};
  std::vector<double> P(4, 0.25);
  auto r = transform_prices(m, P);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(r[j], m.a[j], 1e-12);
}

TEST(Transform, RoundTripForHomogeneousSensitivity) {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, 8));
    MnlModel m;
    const double b = rng.uniform(1, 80);
    std::vector<double> P(n + 1);
    double total = 0;
    for (auto& v : P) total += v = rng.uniform(0.01, 1);
    for (auto& v : P) v /= total;
    for (std::size_t j = 0; j < n; ++j) {
      m.a.push_back(rng.uniform(-50, 100));
      m.b.push_back(b);
    }
    auto back = choice_probabilities(m, transform_prices(m, P));
    for (std::size_t k = 0; k <= n; ++k) EXPECT_NEAR(back[k], P[k], 1e-9);
  }
}

TEST(Transform, FloorsZeroProbabilities) {
  MnlModel m{{10}, {5}};
  std::vector<double> P{1.0, 0.0};
  auto r = transform_prices(m, P);
  EXPECT_TRUE(std::isfinite(r[0]));
  EXPECT_NEAR(r[0], 10 - 5 * std::log(kProbabilityFloor), 1e-9);
}

// With a common b the stationarity condition P_k (1 - (r_k - F)/b) = 0 puts
// every optimal price at b + F, so a fine one-dimensional search over a
// common price finds the optimum. The box is wide enough to contain it: the
// box enters only through the final projection.
TEST(Transform, UnconstrainedMatchesGridOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = homogeneous(rng, static_cast<std::size_t>(rng.uniform_int(1, 4)), rng.uniform(10, 60));
    for (auto& v : inst.l) v = 1;
    for (auto& v : inst.u) v = 600;
    auto sol = solve_sp_trans(inst);
    ASSERT_TRUE(sol.feasible);
    double best = 0, at = 0;
    std::vector<double> r(inst.n());
    for (int k = 0; k < 1000000; ++k) {
      std::fill(r.begin(), r.end(), 1 + 599.0 * k / 999999);
      const double f = expected_revenue(inst.mnl, r);
      if (f > best) {
        best = f;
        at = r[0];
      }
    }
    ASSERT_GT(at, 1);
    ASSERT_LT(at, 600);
    EXPECT_NEAR(sol.exact_objective, best, 1e-3) << trial;
    // and no 2-d grid point does better
    if (inst.n() == 2) {
      auto grid = revenue_grid(inst, 1000);
      EXPECT_GE(sol.exact_objective, grid.value - 1e-9);
    }
  }
}

TEST(Transform, ProjectedPointIsFeasibleUnderBindingRows) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto inst = generate({4, 2, 50, 30, seed, 3});
    auto sol = solve_sp_trans(inst, 50);
    if (!sol.feasible) continue;
    FeasiblePriceRegion region;
    region.instance = &inst;
    region.demand_scale = 50;
    EXPECT_TRUE(is_feasible(region, sol.prices, 0.0).feasible()) << seed;
  }
}

TEST(Projection, LandsInTheBoxAndPriceRows) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = oracle::small_instance(rng, 4, 0, 1, 1, 3);
    std::vector<double> r0(4);
    for (std::size_t j = 0; j < 4; ++j) r0[j] = rng.uniform(inst.l[j] - 50, inst.u[j] + 50);
    auto prob = sp_problem(inst);
    auto res = project_prices(prob, r0);
    EXPECT_TRUE(res.feasible);
    EXPECT_TRUE(exactly_feasible(inst, res.prices)) << trial;
    // a feasible point is its own projection
    auto again = project_prices(prob, res.prices);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(again.prices[j], res.prices[j], 1e-6);
  }
}

TEST(Projection, RepairRestoresResourceRows) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto inst = generate({4, 2, 50, 30, seed, 2});
    auto prob = sp_problem(inst, 50);
    auto res = project_and_repair(prob, inst.l);
    if (!res.feasible) continue;
    FeasiblePriceRegion region = prob.region(0.0);
    region.mode = RegionMode::Exact;
    EXPECT_TRUE(is_feasible(region, res.prices, 0.0).feasible());
  }
}

TEST(LocalSearch, OneProductMatchesGridOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    auto inst = oracle::small_instance(rng, 1, 0, 1, 1);
    auto sol = solve_sp_localsearch(inst, 3, 0);
    auto grid = revenue_grid(inst, 100000);
    EXPECT_NEAR(sol.exact_objective, grid.value, 1e-3);
  }
}

TEST(LocalSearch, MoreStartsNeverHurtAndSeedsRepeat) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto inst = generate({4, 2, 20, 30, seed, 2});
    auto one = solve_sp_localsearch(inst, 1, 9);
    auto many = solve_sp_localsearch(inst, 20, 9);
    if (one.feasible) {
      EXPECT_GE(many.exact_objective, one.exact_objective - 1e-12);
    }
    auto again = solve_sp_localsearch(inst, 20, 9);
    EXPECT_EQ(many.prices, again.prices);
    if (many.feasible) {
      EXPECT_TRUE(exactly_feasible(inst, many.prices));
    }
  }
}
