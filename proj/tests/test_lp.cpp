#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "choicerm/lp/backend.hpp"
#include "choicerm/rng.hpp"
#include "oracles.hpp"

using namespace choicerm;
using namespace choicerm::lp;

TEST(Lp, SingleBoundedVariable) {
  MilpModel m;
  m.add_var(0, 1, 1);
  auto r = solve_lp(m);
  ASSERT_EQ(r.status, Status::Optimal);
  EXPECT_NEAR(r.x[0], 1.0, 1e-12);
  EXPECT_NEAR(r.objective, 1.0, 1e-12);
}

TEST(Lp, DegenerateSharedRowHasUnitDual) {
  MilpModel m;
  auto x = m.add_var(0, 1, 1);
  auto y = m.add_var(0, 1, 1);
  m.add_row({{x, 1}, {y, 1}}, Sense::Le, 1);
  auto r = solve_lp(m);
  ASSERT_EQ(r.status, Status::Optimal);
  EXPECT_NEAR(r.objective, 1.0, 1e-9);
  EXPECT_NEAR(r.duals[0], 1.0, 1e-9);
}

TEST(Lp, TwoRowVertexOptimum) {
  MilpModel m;
  auto x = m.add_var(0, 100, 3);
  auto y = m.add_var(0, 100, 2);
  m.add_row({{x, 1}, {y, 1}}, Sense::Le, 4);
  m.add_row({{x, 1}, {y, 3}}, Sense::Le, 6);
  auto r = solve_lp(m);
  ASSERT_EQ(r.status, Status::Optimal);
  EXPECT_NEAR(r.x[0], 4.0, 1e-9);
  EXPECT_NEAR(r.x[1], 0.0, 1e-9);
  EXPECT_NEAR(r.objective, 12.0, 1e-9);
}

TEST(Lp, InfeasibleRowsReported) {
  MilpModel m;
  auto x = m.add_var(0, 1, 1);
  m.add_row({{x, 1}}, Sense::Ge, 2);
  EXPECT_EQ(solve_lp(m).status, Status::Infeasible);
}

TEST(Lp, EqualityAndGreaterRowsMinimize) {
  MilpModel m;
  m.maximize = false;
  auto x = m.add_var(-10, 10, 1);
  auto y = m.add_var(-10, 10, 2);
  m.add_row({{x, 1}, {y, 1}}, Sense::Eq, 3);
  m.add_row({{x, 1}, {y, -1}}, Sense::Ge, -1);
  // x + y = 3 with y <= x + 1: y is pushed down until x hits its bound, so x = 10, y = -7
  auto r = solve_lp(m);
  ASSERT_EQ(r.status, Status::Optimal);
  EXPECT_NEAR(r.x[0], 10.0, 1e-9);
  EXPECT_NEAR(r.x[1], -7.0, 1e-9);
  EXPECT_NEAR(r.objective, -4.0, 1e-9);
}

TEST(Lp, RandomBoxedStrongDuality) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto m = oracle::random_boxed_lp(rng);
    auto r = solve_lp(m);
    ASSERT_EQ(r.status, Status::Optimal) << "trial " << trial;
    EXPECT_LE(r.max_violation, 1e-7);
    const auto cert = oracle::duality_certificate(m, r.x, r.duals);
    EXPECT_LE(cert.sign_violation, 1e-9) << "trial " << trial;
    EXPECT_NEAR(cert.dual_objective, r.objective, 1e-6) << "trial " << trial;
  }
}

TEST(Milp, BinaryAboveHalfRoundsDown) {
  MilpModel m;
  auto x = m.add_var(0, 1, 1, true);
  m.add_row({{x, 1}}, Sense::Le, 0.5);
  auto r = solve_milp(m);
  ASSERT_EQ(r.status, Status::Optimal);
  EXPECT_EQ(r.x[0], 0.0);
}

TEST(Milp, Knapsack) {
  MilpModel m;
  auto a = m.add_var(0, 1, 5, true);
  auto b = m.add_var(0, 1, 4, true);
  auto c = m.add_var(0, 1, 3, true);
  m.add_row({{a, 2}, {b, 3}, {c, 1}}, Sense::Le, 3);
  auto r = solve_milp(m);
  ASSERT_EQ(r.status, Status::Optimal);
  EXPECT_NEAR(r.objective, 8.0, 1e-9);
  EXPECT_EQ(r.x[0], 1.0);
  EXPECT_EQ(r.x[1], 0.0);
  EXPECT_EQ(r.x[2], 1.0);
}

TEST(Milp, RandomBinaryMatchesEnumeration) {
  Rng rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    auto m = oracle::random_binary_model(rng, 12);
    const auto truth = oracle::enumerate_binary(m);
    auto r = solve_milp(m);
    if (!truth) {
      EXPECT_EQ(r.status, Status::Infeasible) << "trial " << trial;
      continue;
    }
    ASSERT_EQ(r.status, Status::Optimal) << "trial " << trial;
    EXPECT_NEAR(r.objective, *truth, 1e-6) << "trial " << trial;
  }
}

TEST(Milp, IncumbentHistoryIsMonotone) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = oracle::random_binary_model(rng, 12);
    auto r = solve_milp(m);
    const double dir = m.maximize ? 1.0 : -1.0;
    for (std::size_t k = 1; k < r.incumbent_history.size(); ++k)
      EXPECT_GE(dir * r.incumbent_history[k], dir * r.incumbent_history[k - 1]);
  }
}

TEST(Milp, ChainModelsAgreeAcrossPaths) {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    auto m = oracle::random_chain_model(rng);
    const auto truth = oracle::enumerate_chain_model(m);
    MilpOptions compactd, plain, no_prop;
    plain.use_compaction = false;
    no_prop.use_compaction = false;
    no_prop.propagate_chains = false;
    auto a = solve_milp(m, compactd);
    auto b = solve_milp(m, plain);
    auto c = solve_milp(m, no_prop);
    if (!truth) {
      EXPECT_EQ(a.status, Status::Infeasible);
      EXPECT_EQ(b.status, Status::Infeasible);
      continue;
    }
    ASSERT_EQ(a.status, Status::Optimal) << trial;
    ASSERT_EQ(b.status, Status::Optimal) << trial;
    ASSERT_EQ(c.status, Status::Optimal) << trial;
    EXPECT_NEAR(a.objective, *truth, 1e-6) << trial;
    EXPECT_NEAR(b.objective, *truth, 1e-6) << trial;
    EXPECT_NEAR(c.objective, *truth, 1e-6) << trial;
    EXPECT_LE(a.max_violation, 1e-7);
  }
}

TEST(Backend, Registry) {
  EXPECT_NO_THROW(select_backend("bundled"));
  EXPECT_THROW(select_backend("nonexistent"), UnknownBackend);
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto m = oracle::random_chain_model(rng);
    auto a = backend("bundled").solve_milp(m);
    auto b = backend("reference").solve_milp(m);
    ASSERT_EQ(a.status, b.status);
    if (a.status == Status::Optimal) {
      EXPECT_NEAR(a.objective, b.objective, 1e-5);
    }
  }
}
