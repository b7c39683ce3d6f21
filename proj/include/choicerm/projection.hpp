#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "choicerm/instance.hpp"
#include "choicerm/milp_builder.hpp"
#include "choicerm/mnl.hpp"

namespace choicerm {

struct ProjectionOptions {
  double tol = 1e-8;             // fixed-point tolerance of a full sweep
  std::size_t max_sweeps = 100000;
  std::size_t max_repairs = 500;  // outer rounds of resource repair
};

struct ProjectionResult {
  std::vector<double> prices;
  bool feasible = false;
  std::size_t sweeps = 0;
  std::size_t repairs = 0;
};

namespace detail {

/// Room kept below each price row so a sweep that stops at the fixed-point
/// tolerance still satisfies the row exactly.
inline std::vector<double> tightened_rhs(const PricingProblem& prob) {
  const Instance& inst = *prob.instance;
  std::vector<double> rhs(inst.p());
  for (std::size_t i = 0; i < inst.p(); ++i) {
    double least = 0.0;
    for (std::size_t j = 0; j < inst.n(); ++j)
      if (prob.is_offered(j)) least += std::min(inst.b_ij(i, j) * inst.l[j], inst.b_ij(i, j) * inst.u[j]);
    const double room = inst.d[i] - least;
    rhs[i] = inst.d[i] - std::clamp(0.5 * room, 0.0, 1e-7 * std::max(1.0, std::abs(inst.d[i])));
  }
  return rhs;
}

}  // namespace detail

/// Euclidean projection of the offered prices onto the box and the price
/// rows by Dykstra's cyclic projections. Entries of products that are not
/// offered are left at the null price.
inline ProjectionResult project_prices(const PricingProblem& prob, std::span<const double> r0,
                                       const ProjectionOptions& opt = {}) {
  const Instance& inst = *prob.instance;
  const std::size_t n = inst.n();
  const std::size_t p = inst.p();
  const auto rhs = detail::tightened_rhs(prob);
  ProjectionResult out;
  std::vector<double> x(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) x[j] = prob.is_offered(j) ? r0[j] : 0.0;

  std::vector<double> norm2(p, 0.0);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (prob.is_offered(j)) norm2[i] += inst.b_ij(i, j) * inst.b_ij(i, j);

  // one correction vector per set: p halfspaces, then the box
  std::vector<std::vector<double>> y(p + 1, std::vector<double>(n, 0.0));
  std::vector<double> prev(n);
  auto box = [&](std::vector<double>& v) {
    for (std::size_t j = 0; j < n; ++j)
      if (prob.is_offered(j)) v[j] = std::clamp(v[j], inst.l[j], inst.u[j]);
  };
  auto violated = [&] {
    for (std::size_t i = 0; i < p; ++i) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (prob.is_offered(j)) lhs += inst.b_ij(i, j) * x[j];
      if (lhs > inst.d[i]) return true;
    }
    return false;
  };

  box(x);
  for (out.sweeps = 0; out.sweeps < opt.max_sweeps; ++out.sweeps) {
    double change = 0.0;
    for (std::size_t s = 0; s <= p; ++s) {
      prev = x;
      for (std::size_t j = 0; j < n; ++j) x[j] += y[s][j];
      if (s < p) {
        double lhs = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          if (prob.is_offered(j)) lhs += inst.b_ij(s, j) * x[j];
        if (lhs > rhs[s] && norm2[s] > 0.0) {
          const double step = (lhs - rhs[s]) / norm2[s];
          for (std::size_t j = 0; j < n; ++j)
            if (prob.is_offered(j)) x[j] -= step * inst.b_ij(s, j);
        }
      } else {
        box(x);
      }
      for (std::size_t j = 0; j < n; ++j) {
        y[s][j] = prev[j] + y[s][j] - x[j];
        change = std::max(change, std::abs(x[j] - prev[j]));
      }
    }
    if (change <= opt.tol && !violated()) break;
  }
  out.feasible = !violated();
  out.prices.assign(n, kNullPrice);
  for (std::size_t j = 0; j < n; ++j)
    if (prob.is_offered(j)) out.prices[j] = x[j];
  return out;
}

/// Projection followed by repair of the resource rows: each violated row
/// psi_i(r) <= c_i takes a linearized projection step, and the result is
/// projected back onto the box and price rows, until every row holds.
inline ProjectionResult project_and_repair(const PricingProblem& prob, std::span<const double> r0,
                                           const ProjectionOptions& opt = {}) {
  const Instance& inst = *prob.instance;
  const std::size_t n = inst.n();
  const auto cap = prob.cap();
  auto res = project_prices(prob, r0, opt);
  std::size_t rounds = 0;
  for (; rounds < opt.max_repairs; ++rounds) {
    const auto psi = resource_lhs(inst.mnl, inst.A, cap, res.prices, prob.demand_scale);
    std::vector<double> r = res.prices;
    bool moved = false;
    for (std::size_t i = 0; i < inst.m; ++i) {
      const double target = cap[i] - 1e-9 * std::max(1.0, std::abs(cap[i]));
      if (psi[i] <= target) continue;
      std::vector<double> grad(n, 0.0);
      double g2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (!prob.is_offered(j)) continue;
        const double coef = prob.demand_scale * inst.a_ij(i, j) - cap[i];
        grad[j] = -coef * inst.mnl.attraction(j, r[j]) / inst.mnl.b[j];
        g2 += grad[j] * grad[j];
      }
      if (g2 == 0.0) continue;
      // overshoot so the linearized step does not stall just above the row
      const double step = 1.5 * (psi[i] - target) / g2;
      for (std::size_t j = 0; j < n; ++j) r[j] -= step * grad[j];
      moved = true;
    }
    if (!moved) break;
    const auto sweeps = res.sweeps;
    res = project_prices(prob, r, opt);
    res.sweeps += sweeps;
  }
  res.repairs = rounds;
  FeasiblePriceRegion region = prob.region(0.0);
  region.mode = RegionMode::Exact;
  res.feasible = is_feasible(region, res.prices).feasible();
  return res;
}

}  // namespace choicerm
