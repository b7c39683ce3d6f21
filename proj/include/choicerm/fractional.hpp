#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace choicerm {

struct BisectionConfig {
  double L = 0.0;
  double U = 0.0;
  double xi = 1e-3;
  std::size_t max_iters = 64;
};

/// Optimum of the parametric subproblem max_r N(r) - delta D(r).
struct SubproblemResult {
  bool feasible = false;
  double value = 0.0;
  std::vector<double> prices;
};

using Subproblem = std::function<SubproblemResult(double delta)>;

struct BisectionStep {
  double delta;
  double value;
  bool raised_lower;  // value >= 0, so delta became the new lower end
};

struct BisectionTrace {
  std::vector<BisectionStep> steps;  // steps[0] probes the initial lower end
  double L0 = 0.0, U0 = 0.0;
  double final_delta = 0.0;
  double final_upper = 0.0;
  std::vector<double> prices;
  std::size_t iterations = 0;  // midpoint solves, excluding the probe
  bool hit_cap = false;
};

struct BisectionResult {
  bool feasible = false;
  double delta = 0.0;
  std::vector<double> prices;
  BisectionTrace trace;
};

/// Bisection on delta for max N/D with D > 0: the largest delta with
/// max_r N - delta D >= 0 is the optimal ratio. The lower end is probed
/// first (this also detects an empty region); the returned prices come from
/// the last solve with a nonnegative optimum.
inline BisectionResult dinkelbach(const Subproblem& solve, BisectionConfig cfg) {
  if (!(cfg.xi > 0.0)) throw std::invalid_argument("dinkelbach: xi must be positive");
  if (!(cfg.L <= cfg.U)) throw std::invalid_argument("dinkelbach: L must not exceed U");
  BisectionResult out;
  auto& tr = out.trace;

  SubproblemResult probe = solve(cfg.L);
  if (!probe.feasible) return out;
  // a lower end that is too high is widened downward
  for (int widen = 0; probe.value < 0.0 && widen < 64; ++widen) {
    tr.steps.push_back({cfg.L, probe.value, false});
    cfg.U = cfg.L;
    cfg.L -= std::max(1.0, std::abs(cfg.L));
    probe = solve(cfg.L);
  }
  if (probe.value < 0.0) throw std::runtime_error("dinkelbach: no lower bound found");
  tr.steps.push_back({cfg.L, probe.value, true});
  tr.L0 = cfg.L;
  tr.U0 = cfg.U;
  out.feasible = true;
  std::vector<double> best = std::move(probe.prices);

  double L = cfg.L, U = cfg.U;
  while (U - L > cfg.xi) {
    if (tr.iterations >= cfg.max_iters) {
      tr.hit_cap = true;
      break;
    }
    const double delta = 0.5 * (L + U);
    SubproblemResult r = solve(delta);
    ++tr.iterations;
    if (!r.feasible) throw std::runtime_error("dinkelbach: subproblem became infeasible");
    const bool up = r.value >= 0.0;
    tr.steps.push_back({delta, r.value, up});
    if (up) {
      L = delta;
      best = std::move(r.prices);
    } else {
      U = delta;
    }
  }
  out.delta = L;
  out.prices = best;
  tr.final_delta = L;
  tr.final_upper = U;
  tr.prices = best;
  return out;
}

}  // namespace choicerm
