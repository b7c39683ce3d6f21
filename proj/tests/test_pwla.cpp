#include <gtest/gtest.h>

#include <cmath>

#include "choicerm/pwla.hpp"
#include "oracles.hpp"

using namespace choicerm;

TEST(Pwla, HandEvaluatedFirstSegment) {
  MnlModel m{{0}, {1}};
  std::vector<double> l{0}, u{10};
  auto g = build_grid(m, l, u, 5);
  EXPECT_NEAR(g.slope_g(0, 0), (std::exp(-2.0) - 1) / 2, 1e-15);
  EXPECT_NEAR(g.slope_g(0, 0), -0.432332, 1e-6);
  EXPECT_NEAR(g.eval_ghat(0, 1.0), (1 + std::exp(-2.0)) / 2, 1e-15);
  EXPECT_NEAR(g.eval_ghat(0, 1.0), 0.567668, 1e-6);
  EXPECT_GE(g.eval_ghat(0, 1.0), std::exp(-1.0));
}

TEST(Pwla, EndpointsAreExact) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = oracle::small_instance(rng, 3, 1, 5, 2);
    auto g = build_grid(inst, static_cast<std::size_t>(rng.uniform_int(1, 40)));
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_EQ(g.eval_fhat(j, inst.l[j]), inst.mnl.revenue_term(j, inst.l[j]));
      EXPECT_EQ(g.eval_ghat(j, inst.l[j]), inst.mnl.attraction(j, inst.l[j]));
      EXPECT_NEAR(g.eval_fhat(j, inst.u[j]), inst.mnl.revenue_term(j, inst.u[j]), 1e-9);
      EXPECT_NEAR(g.eval_ghat(j, inst.u[j]), inst.mnl.attraction(j, inst.u[j]), 1e-12);
    }
  }
}

TEST(Pwla, SegmentLookupIsLeftClosed) {
  MnlModel m{{0}, {1}};
  std::vector<double> l{0}, u{10};
  auto g = build_grid(m, l, u, 5);
  EXPECT_EQ(g.segment(0, 0.0), 0u);
  EXPECT_EQ(g.segment(0, 2.0), 1u);
  EXPECT_EQ(g.segment(0, 3.999), 1u);
  EXPECT_EQ(g.segment(0, 10.0), 4u);
  EXPECT_THROW((void)g.segment(0, 10.5), std::domain_error);
  EXPECT_THROW((void)g.segment(0, -1.0), std::domain_error);
  EXPECT_THROW(build_grid(m, l, u, 0), std::invalid_argument);
}

TEST(Pwla, ConstantsOfOneProduct) {
  MnlModel m{{10}, {5}};
  std::vector<double> l{100}, u{150}, A{1}, c{0.5};
  auto e = error_constants(m, l, u, A, c);
  EXPECT_NEAR(e.eta[0], 0.5 * std::exp(-18.0) / 5 * 50, 1e-20);
  EXPECT_NEAR(e.eta[0], 7.61e-8, 0.01e-8);
  std::vector<double> c1{1};
  EXPECT_EQ(error_constants(m, l, u, A, c1).eta[0], 0.0);
  auto flat = error_constants(m, l, l, A, c);
  EXPECT_EQ(flat.alpha, 0.0);
  EXPECT_EQ(flat.beta, 0.0);
  EXPECT_EQ(flat.omega, 0.0);
  EXPECT_EQ(flat.eta[0], 0.0);
}

// Sampled error bounds, over-estimation of g and the per-segment envelope of f.
TEST(Pwla, SampledErrorsStayWithinBounds) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = oracle::small_instance(rng, 4, 3, 5, rng.uniform_int(1, 3), 0, 1, 100);
    const auto K = static_cast<std::size_t>(rng.uniform_int(2, 30));
    auto grid = build_grid(inst, K);
    auto ec = error_constants(inst);
    for (int s = 0; s < 1000; ++s) {
      std::vector<double> r(4);
      for (std::size_t j = 0; j < 4; ++j) r[j] = rng.uniform(inst.l[j], inst.u[j]);
      EXPECT_LE(std::abs(expected_revenue(inst.mnl, r) - approx_revenue(grid, r)), ec.omega / K + 1e-9);
      auto psi = resource_lhs(inst.mnl, inst.A, inst.c, r);
      auto psih = approx_resource_lhs(grid, inst.A, inst.c, r);
      for (std::size_t i = 0; i < inst.m; ++i) EXPECT_LE(std::abs(psi[i] - psih[i]), ec.eta[i] / K + 1e-9);
      for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_GE(grid.eval_ghat(j, r[j]), inst.mnl.attraction(j, r[j]) - 1e-15);
        const auto k = grid.segment(j, r[j]);
        const double f = inst.mnl.revenue_term(j, r[j]);
        const double env = std::max(std::abs(grid.f_at(j, k) - f), std::abs(grid.f_at(j, k + 1) - f));
        EXPECT_LE(std::abs(grid.eval_fhat(j, r[j]) - f), env + 1e-12);
      }
    }
  }
}

TEST(Pwla, DoublingKRefinesTheApproximation) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = oracle::small_instance(rng, 3, 1, 5, 1, 0, 1, 100);
    const auto K = static_cast<std::size_t>(rng.uniform_int(2, 20));
    auto coarse = build_grid(inst, K);
    auto fine = build_grid(inst, 2 * K);
    double worst_coarse = 0, worst_fine = 0;
    for (int s = 0; s < 2000; ++s) {
      std::vector<double> r(3);
      for (std::size_t j = 0; j < 3; ++j) r[j] = rng.uniform(inst.l[j], inst.u[j]);
      for (std::size_t j = 0; j < 3; ++j) {
        const double g = inst.mnl.attraction(j, r[j]);
        // ghat is convex-chord interpolation of a convex g: finer chords lie below coarser ones
        EXPECT_LE(fine.eval_ghat(j, r[j]), coarse.eval_ghat(j, r[j]) + 1e-12);
        worst_coarse = std::max(worst_coarse, coarse.eval_ghat(j, r[j]) - g);
        worst_fine = std::max(worst_fine, fine.eval_ghat(j, r[j]) - g);
      }
    }
    EXPECT_LE(worst_fine, worst_coarse);
  }
}

TEST(Pwla, OffsetsAndScaleGeneralizeTheBounds) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto inst = oracle::small_instance(rng, 3, 2, 5, 2);
    ErrorOptions opt;
    opt.demand_scale = rng.uniform(1, 20);
    opt.capacity = {rng.uniform(0, 5), rng.uniform(0, 5)};
    opt.offset = {rng.uniform(-20, 60), rng.uniform(-20, 60), rng.uniform(-20, 60)};
    auto ec = error_constants(inst, opt);
    const std::size_t K = 12;
    auto grid = build_grid(inst, K);
    for (int s = 0; s < 500; ++s) {
      std::vector<double> r(3);
      for (std::size_t j = 0; j < 3; ++j) r[j] = rng.uniform(inst.l[j], inst.u[j]);
      EXPECT_LE(std::abs(expected_margin(inst.mnl, r, opt.offset) - approx_margin(grid, r, opt.offset)),
                ec.omega / K + 1e-9);
      auto psi = resource_lhs(inst.mnl, inst.A, opt.capacity, r, opt.demand_scale);
      auto psih = approx_resource_lhs(grid, inst.A, opt.capacity, r, opt.demand_scale);
      for (std::size_t i = 0; i < 2; ++i) EXPECT_LE(std::abs(psi[i] - psih[i]), ec.eta[i] / K + 1e-9);
    }
  }
}
