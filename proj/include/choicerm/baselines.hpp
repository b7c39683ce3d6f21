#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "choicerm/dynamic.hpp"
#include "choicerm/instance.hpp"
#include "choicerm/lp/backend.hpp"
#include "choicerm/milp_builder.hpp"
#include "choicerm/mnl.hpp"
#include "choicerm/projection.hpp"
#include "choicerm/rng.hpp"
#include "choicerm/static_solver.hpp"

namespace choicerm {

inline constexpr double kProbabilityFloor = 1e-12;

/// Prices r_j = a_j - b_j ln P_j + b_j ln P_0 that induce the purchase
/// probabilities P = (P_0, P_1..P_n) when b is homogeneous. Probabilities
/// are floored before taking logs; products that are not offered get the
/// null price.
inline std::vector<double> transform_prices(const MnlModel& mnl, std::span<const double> P,
                                            std::span<const char> offered = {}) {
  const std::size_t n = mnl.size();
  if (P.size() != n + 1) throw std::invalid_argument("transform_prices: P must have n+1 entries");
  const double l0 = std::log(std::max(P[0], kProbabilityFloor));
  std::vector<double> r(n, kNullPrice);
  for (std::size_t j = 0; j < n; ++j)
    if (offered.empty() || offered[j])
      r[j] = mnl.a[j] - mnl.b[j] * std::log(std::max(P[j + 1], kProbabilityFloor)) + mnl.b[j] * l0;
  return r;
}

struct TransformOptions {
  double stationarity_tol = 1e-6;  // Frank-Wolfe gap, relative to max(1, |objective|)
  std::size_t max_iterations = 20000;
  std::string backend;
};

struct TransformSolution {
  std::vector<double> P;          // n+1, P[0] the no-purchase probability
  std::vector<double> recovered;  // r(P)
  std::vector<double> projected;  // feasible prices after projection and repair
  double p_objective = 0.0;       // demand_scale * transformed objective at P
  double exact_objective = 0.0;   // demand_scale * margin at the projected prices
  bool feasible = false;
  std::size_t iterations = 0;
  double gap = 0.0;
};

namespace detail {

/// Transformed objective over the offered products, per arrival:
/// sum_j P_j (a_j - o_j - b_j ln P_j + b_j ln P_0).
struct TransformObjective {
  std::vector<double> a, b;  // a already net of the offset

  [[nodiscard]] double value(const std::vector<double>& x) const {
    double sum = 0.0;
    for (double v : x) sum += v;
    const double l0 = std::log(std::max(1.0 - sum, kProbabilityFloor));
    double total = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k)
      if (x[k] > 0.0) total += x[k] * (a[k] - b[k] * std::log(x[k]) + b[k] * l0);
    return total;
  }

  [[nodiscard]] std::vector<double> gradient(const std::vector<double>& x) const {
    double sum = 0.0, bsum = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      sum += x[k];
      bsum += b[k] * x[k];
    }
    const double p0 = std::max(1.0 - sum, kProbabilityFloor);
    const double l0 = std::log(p0);
    std::vector<double> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
      g[k] = a[k] - b[k] * (std::log(std::max(x[k], kProbabilityFloor)) + 1.0) + b[k] * l0 - bsum / p0;
    return g;
  }
};

/// Golden-section maximization of t -> f(t) on [0, hi].
template <class F>
double golden_max(F&& f, double hi) {
  constexpr double kPhi = 0.6180339887498949;
  double lo = 0.0;
  double x1 = hi - kPhi * (hi - lo), x2 = lo + kPhi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80 && hi - lo > 1e-14; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kPhi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kPhi * (hi - lo);
      f1 = f(x1);
    }
  }
  const double mid = 0.5 * (lo + hi);
  double best = mid, fb = f(mid);
  for (double t : {0.0, hi})
    if (const double ft = f(t); ft > fb) {
      best = t;
      fb = ft;
    }
  return best;
}

}  // namespace detail

/// Transform baseline: away-step Frank-Wolfe on the probability-space
/// objective over {P >= 0, sum P <= 1, s A P <= c} with an LP direction
/// oracle, then r(P) projected onto the box and price rows, with resource
/// repair.
inline TransformSolution solve_transform(const PricingProblem& prob, const TransformOptions& opt = {}) {
  const Instance& inst = *prob.instance;
  const std::size_t n = inst.n();
  const auto cap = prob.cap();
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < n; ++j)
    if (prob.is_offered(j)) cols.push_back(j);
  const std::size_t q = cols.size();

  TransformSolution out;
  out.P.assign(n + 1, 0.0);
  out.P[0] = 1.0;
  detail::TransformObjective phi;
  for (std::size_t j : cols) {
    phi.a.push_back(inst.mnl.a[j] - prob.off(j));
    phi.b.push_back(inst.mnl.b[j]);
  }

  // direction oracle: the simplex vertices unless a resource row can bind
  lp::MilpModel lmo;
  lmo.maximize = true;
  bool needs_lp = false;
  for (std::size_t i = 0; i < inst.m && q > 0; ++i) {
    double peak = 0.0;
    for (std::size_t j : cols) peak = std::max(peak, prob.demand_scale * inst.a_ij(i, j));
    needs_lp |= peak > cap[i];
  }
  if (needs_lp) {
    for (std::size_t k = 0; k < q; ++k) lmo.add_var(0.0, 1.0, 0.0);
    std::vector<lp::Term> total;
    for (std::size_t k = 0; k < q; ++k) total.push_back({k, 1.0});
    lmo.add_row(std::move(total), lp::Sense::Le, 1.0);
    for (std::size_t i = 0; i < inst.m; ++i) {
      std::vector<lp::Term> terms;
      for (std::size_t k = 0; k < q; ++k)
        if (inst.a_ij(i, cols[k]) != 0.0) terms.push_back({k, prob.demand_scale * inst.a_ij(i, cols[k])});
      if (!terms.empty()) lmo.add_row(std::move(terms), lp::Sense::Le, cap[i]);
    }
  }
  const auto solver = needs_lp ? lp::backend(opt.backend) : lp::Backend{};
  auto oracle = [&](const std::vector<double>& g) {
    std::vector<double> s(q, 0.0);
    if (!needs_lp) {
      std::size_t best = q;
      double top = 0.0;
      for (std::size_t k = 0; k < q; ++k)
        if (g[k] > top) {
          top = g[k];
          best = k;
        }
      if (best < q) s[best] = 1.0;
      return s;
    }
    lmo.obj = g;
    auto res = solver.solve_lp(lmo);
    if (res.status != lp::Status::Optimal) throw lp::SolverError("transform: direction LP failed");
    for (std::size_t k = 0; k < q; ++k) s[k] = std::clamp(res.x[k], 0.0, 1.0);
    return s;
  };
  auto dot = [](const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
    return s;
  };

  if (q > 0) {
    // the origin (P_0 = 1) is a vertex of the region
    std::vector<std::vector<double>> active{std::vector<double>(q, 0.0)};
    std::vector<double> weight{1.0};
    std::vector<double> x(q, 0.0);
    for (out.iterations = 0; out.iterations < opt.max_iterations; ++out.iterations) {
      const auto g = phi.gradient(x);
      const auto s = oracle(g);
      const double gx = dot(g, x);
      out.gap = dot(g, s) - gx;
      if (out.gap <= opt.stationarity_tol * std::max(1.0, std::abs(phi.value(x)))) break;
      std::size_t away = 0;
      for (std::size_t a = 1; a < active.size(); ++a)
        if (dot(g, active[a]) < dot(g, active[away])) away = a;
      const double away_gap = gx - dot(g, active[away]);
      const bool fw_step = out.gap >= away_gap || active.size() == 1;
      std::vector<double> dir(q);
      double gmax = 1.0;
      if (fw_step) {
        for (std::size_t k = 0; k < q; ++k) dir[k] = s[k] - x[k];
      } else {
        for (std::size_t k = 0; k < q; ++k) dir[k] = x[k] - active[away][k];
        gmax = weight[away] / (1.0 - weight[away]);
      }
      std::vector<double> trial(q);
      auto along = [&](double t) {
        for (std::size_t k = 0; k < q; ++k) trial[k] = std::max(0.0, x[k] + t * dir[k]);
        return phi.value(trial);
      };
      const double step = detail::golden_max(along, gmax);
      if (step <= 0.0) break;
      for (std::size_t k = 0; k < q; ++k) x[k] = std::max(0.0, x[k] + step * dir[k]);
      if (fw_step) {
        for (double& w : weight) w *= 1.0 - step;
        std::size_t at = active.size();
        for (std::size_t a = 0; a < active.size(); ++a) {
          double diff = 0.0;
          for (std::size_t k = 0; k < q; ++k) diff = std::max(diff, std::abs(active[a][k] - s[k]));
          if (diff <= 1e-12) at = a;
        }
        if (at == active.size()) {
          active.push_back(s);
          weight.push_back(0.0);
        }
        weight[at] += step;
        if (step >= 1.0) {
          active = {s};
          weight = {1.0};
        }
      } else {
        for (double& w : weight) w *= 1.0 + step;
        weight[away] -= step;
        if (step >= gmax) {
          active.erase(active.begin() + static_cast<std::ptrdiff_t>(away));
          weight.erase(weight.begin() + static_cast<std::ptrdiff_t>(away));
        }
      }
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < q; ++k) {
      out.P[cols[k] + 1] = x[k];
      sum += x[k];
    }
    out.P[0] = std::max(0.0, 1.0 - sum);
    out.p_objective = prob.demand_scale * phi.value(x);
  }

  std::vector<char> offered(n);
  for (std::size_t j = 0; j < n; ++j) offered[j] = prob.is_offered(j) ? 1 : 0;
  out.recovered = transform_prices(inst.mnl, out.P, offered);
  auto proj = project_and_repair(prob, out.recovered);
  out.projected = std::move(proj.prices);
  out.feasible = proj.feasible;
  out.exact_objective = prob.demand_scale * prob.exact_margin(out.projected);
  return out;
}

namespace detail {

inline PricingSolution baseline_solution(const PricingProblem& prob, std::vector<double> prices, bool feasible,
                                         double approx, std::chrono::steady_clock::time_point start) {
  PricingSolution sol;
  sol.feasible = feasible;
  sol.demand_scale = prob.demand_scale;
  sol.approx_objective = approx;
  sol.exact_objective = prob.demand_scale * prob.exact_margin(prices);
  FeasiblePriceRegion region = prob.region(0.0);
  region.mode = RegionMode::Exact;
  sol.report = is_feasible(region, prices);
  sol.prices = std::move(prices);
  sol.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

}  // namespace detail

/// SP-Trans with demand scale d (1: one arrival, lambda T: deterministic model).
inline PricingSolution solve_sp_trans(const Instance& inst, double demand_scale = 1.0,
                                      const TransformOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  const auto prob = sp_problem(inst, demand_scale);
  auto t = solve_transform(prob, opt);
  return detail::baseline_solution(prob, std::move(t.projected), t.feasible, t.p_objective, start);
}

struct LocalSearchOptions {
  std::size_t max_iterations = 2000;  // projected-gradient steps per start
  double final_probe = 1e-4;
};

/// Multistart projected-gradient ascent on the exact margin. Start 0 is the
/// box midpoint, the rest are uniform in the box; every iterate is projected
/// and repaired. Each start finishes with coordinate probes, halving the
/// probe down to final_probe, accepting only feasible improvements.
inline PricingSolution local_search(const PricingProblem& prob, std::size_t starts, std::uint64_t seed,
                                    const LocalSearchOptions& opt = {}) {
  if (starts < 1) throw std::invalid_argument("local_search: starts must be at least 1");
  const auto begin = std::chrono::steady_clock::now();
  const Instance& inst = *prob.instance;
  const std::size_t n = inst.n();
  FeasiblePriceRegion region = prob.region(0.0);
  region.mode = RegionMode::Exact;
  auto value = [&](const std::vector<double>& r) { return prob.demand_scale * prob.exact_margin(r); };
  auto feasible = [&](const std::vector<double>& r) { return is_feasible(region, r).feasible(); };

  std::vector<double> best;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < starts; ++s) {
    Rng rng({seed, s});
    std::vector<double> r0(n, kNullPrice);
    for (std::size_t j = 0; j < n; ++j)
      if (prob.is_offered(j)) r0[j] = s == 0 ? 0.5 * (inst.l[j] + inst.u[j]) : rng.uniform(inst.l[j], inst.u[j]);
    auto start = project_and_repair(prob, r0);
    if (!start.feasible) continue;
    std::vector<double> r = std::move(start.prices);
    double f = value(r);
    double step = 1.0;
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
      auto g = expected_margin_gradient(inst.mnl, r, prob.offset);
      double gnorm = 0.0;
      for (double& v : g) {
        v *= prob.demand_scale;
        gnorm = std::max(gnorm, std::abs(v));
      }
      if (gnorm == 0.0) break;
      bool accepted = false;
      for (step = std::min(step * 4.0, 1e6); step * gnorm > 1e-9; step *= 0.5) {
        std::vector<double> trial = r;
        for (std::size_t j = 0; j < n; ++j)
          if (prob.is_offered(j)) trial[j] += step * g[j];
        auto fixed = project_and_repair(prob, trial);
        if (!fixed.feasible) continue;
        double ascent = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          if (prob.is_offered(j)) ascent += g[j] * (fixed.prices[j] - r[j]);
        const double fv = value(fixed.prices);
        if (fv >= f + 1e-4 * ascent && fv > f) {
          double moved = 0.0;
          for (std::size_t j = 0; j < n; ++j)
            if (prob.is_offered(j)) moved = std::max(moved, std::abs(fixed.prices[j] - r[j]));
          r = std::move(fixed.prices);
          f = fv;
          accepted = moved > 1e-9;
          break;
        }
      }
      if (!accepted) break;
    }
    for (double h = 1.0;;) {
      bool improved = false;
      for (std::size_t j = 0; j < n; ++j) {
        if (!prob.is_offered(j)) continue;
        for (double sign : {1.0, -1.0}) {
          std::vector<double> trial = r;
          trial[j] += sign * h;
          if (!feasible(trial)) continue;
          const double fv = value(trial);
          if (fv > f) {
            r = std::move(trial);
            f = fv;
            improved = true;
          }
        }
      }
      if (improved) continue;
      if (h <= opt.final_probe) break;
      h = std::max(opt.final_probe, 0.5 * h);
    }
    if (f > best_value) {
      best_value = f;
      best = r;
    }
  }
  if (best.empty()) {
    PricingSolution none;
    none.demand_scale = prob.demand_scale;
    return none;
  }
  return detail::baseline_solution(prob, std::move(best), true, best_value, begin);
}

inline PricingSolution solve_sp_localsearch(const Instance& inst, std::size_t starts = 10, std::uint64_t seed = 0,
                                            double demand_scale = 1.0, const LocalSearchOptions& opt = {}) {
  return local_search(sp_problem(inst, demand_scale), starts, seed, opt);
}

/// Stage solver for the decomposition using the transform baseline.
inline StageSolver trans_stage(TransformOptions opt = {}) {
  return [opt](const PricingProblem& prob) {
    StageOutcome out;
    if (prob.offered_count() == 0) return out;
    auto t = solve_transform(prob, opt);
    if (!t.feasible) return out;
    out.feasible = true;
    out.value = t.exact_objective;
    out.prices = std::move(t.projected);
    return out;
  };
}

/// DP-Trans: the decomposition with every stage solved by the transform.
/// K and xi are recorded for comparison with DP-DMIP runs only.
inline ValueFunctionSet solve_dp_trans(const Instance& inst, std::size_t K, double xi, const std::vector<double>& pi,
                                       const DecompositionOptions& dopt = {}, const TransformOptions& opt = {}) {
  return solve_decomposition(inst, pi, trans_stage(opt), "dp-trans", K, xi, dopt);
}

inline DecompositionPolicy trans_policy(const Instance& inst, ValueFunctionSet vfs, const TransformOptions& opt = {}) {
  return DecompositionPolicy(inst, std::move(vfs), trans_stage(opt));
}

}  // namespace choicerm
