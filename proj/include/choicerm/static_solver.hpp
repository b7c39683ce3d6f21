#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "choicerm/fractional.hpp"
#include "choicerm/instance.hpp"
#include "choicerm/lp/backend.hpp"
#include "choicerm/milp_builder.hpp"
#include "choicerm/pwla.hpp"

namespace choicerm {

struct SolverConfig {
  std::size_t K = 15;
  double xi = 1e-3;
  std::string backend;       // empty: the selected default
  bool relax = true;         // relax z over concave slope prefixes
  bool relax_with_resources = false;
  bool resource_slack = true;  // epsilon_i = eta_i / K on the resource rows
};

struct PricingSolution {
  bool feasible = false;
  std::vector<double> prices;
  double approx_objective = 0.0;  // demand_scale * F-hat(r)
  double exact_objective = 0.0;   // demand_scale * F(r), recomputed through the MNL model
  FeasibilityReport report;       // against the 2 eta / K slack
  double feasibility_bound = 0.0; // 2 eta_max / K
  double gap_bound = 0.0;         // 2 omega / K (per arrival)
  ErrorConstants constants;
  std::size_t K = 0;
  double xi = 0.0;
  double demand_scale = 1.0;
  double seconds = 0.0;
  BisectionTrace trace;
  std::size_t milp_nodes = 0;
};

/// Bracket for the ratio sum (f-hat - o g-hat) / (1 + sum g-hat).
inline BisectionConfig default_bracket(const PricingProblem& prob, double xi) {
  const Instance& inst = *prob.instance;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < inst.n(); ++j) {
    if (!prob.is_offered(j)) continue;
    lo = std::min(lo, inst.l[j] - prob.off(j));
    hi = std::max(hi, inst.u[j] - prob.off(j));
  }
  BisectionConfig cfg;
  cfg.xi = xi;
  if (!std::isfinite(lo)) return cfg;
  cfg.L = std::min(0.0, static_cast<double>(prob.offered_count()) * lo);
  cfg.U = std::max(xi, hi);
  return cfg;
}

/// Solves BOPT at one delta.
struct BoptSolve {
  lp::SolveResult result;
  BoptEncoding encoding;
  lp::MilpModel model;
};

inline BoptSolve solve_bopt(const PwlaGrid& grid, const PricingProblem& prob, double delta,
                            const SolverConfig& cfg, const std::vector<double>& slack,
                            const lp::SolveHints& hints = {}) {
  BoptOptions opt;
  opt.delta = delta;
  opt.resource_slack = slack;
  opt.relax = cfg.relax;
  opt.relax_with_resources = cfg.relax_with_resources;
  auto [model, enc] = build_bopt(grid, prob, opt);
  BoptSolve out{lp::backend(cfg.backend).solve_milp(model, hints), std::move(enc), std::move(model)};
  return out;
}

inline std::vector<double> slack_vector(const PricingProblem& prob, const ErrorConstants& ec,
                                        const SolverConfig& cfg) {
  std::vector<double> eps(prob.instance->m, 0.0);
  if (cfg.resource_slack)
    for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = ec.eta[i] / static_cast<double>(cfg.K);
  return eps;
}

/// Bisection over BOPT MILPs for a general pricing problem.
inline PricingSolution solve_pricing(const PricingProblem& prob, const SolverConfig& cfg,
                                     const PwlaGrid* shared_grid = nullptr,
                                     std::optional<BisectionConfig> bracket = std::nullopt) {
  const auto start = std::chrono::steady_clock::now();
  PwlaGrid local;
  if (!shared_grid) local = build_grid(*prob.instance, cfg.K);
  const PwlaGrid& grid = shared_grid ? *shared_grid : local;

  PricingSolution sol;
  sol.K = cfg.K;
  sol.xi = cfg.xi;
  sol.demand_scale = prob.demand_scale;
  sol.constants = prob.constants();
  const double Kd = static_cast<double>(cfg.K);
  sol.feasibility_bound = 2.0 * sol.constants.eta_max() / Kd;
  sol.gap_bound = 2.0 * sol.constants.omega / Kd;
  const auto slack = slack_vector(prob, sol.constants, cfg);

  std::size_t nodes = 0;
  lp::SolveHints hints;  // consecutive deltas share the model layout
  Subproblem sub = [&](double delta) {
    auto s = solve_bopt(grid, prob, delta, cfg, slack, hints);
    nodes += s.result.nodes;
    if (!s.result.root_basis.empty()) hints.basis = s.result.root_basis;
    SubproblemResult r;
    if (s.result.status == lp::Status::Infeasible) return r;
    if (s.result.x.empty()) throw lp::SolverError("pricing: MILP stopped without an incumbent");
    r.feasible = true;
    r.value = s.result.objective;
    r.prices = decode_prices(s.encoding, s.result.x);
    return r;
  };
  const BisectionConfig bc = bracket ? *bracket : default_bracket(prob, cfg.xi);
  auto res = dinkelbach(sub, bc);
  sol.milp_nodes = nodes;
  sol.trace = res.trace;
  sol.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!res.feasible) return sol;
  sol.feasible = true;
  sol.prices = res.prices;
  sol.approx_objective = prob.demand_scale * prob.approx_margin(grid, sol.prices);
  sol.exact_objective = prob.demand_scale * prob.exact_margin(sol.prices);
  sol.report = is_feasible(prob.region(sol.feasibility_bound), sol.prices);
  return sol;
}

inline PricingProblem sp_problem(const Instance& inst, double demand_scale = 1.0) {
  PricingProblem p;
  p.instance = &inst;
  p.demand_scale = demand_scale;
  return p;
}

/// SP-DMIP: one arrival, capacities as given.
inline PricingSolution solve_sp_dmip(const Instance& inst, std::size_t K = 15, double xi = 1e-3,
                                     SolverConfig cfg = {}) {
  cfg.K = K;
  cfg.xi = xi;
  return solve_pricing(sp_problem(inst), cfg);
}

/// Deterministic model: demand and objective scaled by lambda T.
inline PricingSolution solve_sp_star(const Instance& inst, std::size_t K = 15, double xi = 1e-3,
                                     SolverConfig cfg = {}) {
  cfg.K = K;
  cfg.xi = xi;
  return solve_pricing(sp_problem(inst, inst.lambda * static_cast<double>(inst.T)), cfg);
}

/// Resource multipliers: the incumbent's binaries are fixed, the BOPT LP is
/// re-solved at the final delta and the resource-row duals are read off.
/// With demand_scale d, d(d F)/dc_i = d * dual_i at the optimal ratio.
inline std::vector<double> extract_duals(const PricingProblem& prob, const PricingSolution& sol,
                                         const SolverConfig& cfg) {
  const Instance& inst = *prob.instance;
  std::vector<double> pi(inst.m, 0.0);
  if (!sol.feasible) return pi;
  const PwlaGrid grid = build_grid(inst, cfg.K);
  BoptOptions opt;
  opt.delta = sol.trace.final_delta;
  opt.resource_slack = slack_vector(prob, sol.constants, cfg);
  opt.relax = cfg.relax;
  opt.relax_with_resources = cfg.relax_with_resources;
  auto [model, enc] = build_bopt(grid, prob, opt);
  const auto x0 = encode_prices(enc, model.num_vars(), sol.prices);
  for (std::size_t v = 0; v < model.num_vars(); ++v)
    if (model.integer[v]) {
      model.lb[v] = model.ub[v] = x0[v];
      model.integer[v] = 0;
    }
  auto res = lp::backend(cfg.backend).solve_lp(model);
  if (res.status != lp::Status::Optimal) return pi;
  for (std::size_t i = 0; i < inst.m; ++i)
    if (enc.resource_rows[i] != lp::kNone)
      pi[i] = std::max(0.0, prob.demand_scale * res.duals[enc.resource_rows[i]]);
  return pi;
}

inline std::vector<double> extract_duals(const Instance& inst, const PricingSolution& sol,
                                         const SolverConfig& cfg = {}) {
  SolverConfig c = cfg;
  c.K = sol.K;
  return extract_duals(sp_problem(inst, sol.demand_scale), sol, c);
}

}  // namespace choicerm
