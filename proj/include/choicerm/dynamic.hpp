#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "choicerm/instance.hpp"
#include "choicerm/io.hpp"
#include "choicerm/milp_builder.hpp"
#include "choicerm/pwla.hpp"
#include "choicerm/static_solver.hpp"

namespace choicerm {

/// Per-resource value tables of the decomposition, v[i][t - 1][x] for
/// t = 1..T+1 and x = 0..c_i, plus the multipliers they were built with.
struct ValueFunctionSet {
  std::size_t m = 0;
  std::size_t T = 0;
  std::vector<std::size_t> capacity;
  std::vector<std::vector<std::vector<double>>> v;
  std::vector<double> pi;
  std::size_t K = 0;
  double xi = 0.0;
  std::string method;
  std::uint64_t instance_hash = 0;
  std::size_t stage_solves = 0;
  std::size_t fallback_stages = 0;  // stages with an empty region
  double seconds = 0.0;

  [[nodiscard]] double value(std::size_t i, std::size_t t, std::size_t x) const {
    return v.at(i).at(t - 1).at(x);
  }
  /// v_{t,i}(x) - v_{t,i}(x - units); units must not exceed x.
  [[nodiscard]] double marginal(std::size_t i, std::size_t t, std::size_t x, std::size_t units) const {
    return value(i, t, x) - value(i, t, x - units);
  }
  /// v_{1,i}(c_i) + sum_{k != i} pi_k c_k
  [[nodiscard]] double objective(std::size_t i) const {
    double total = value(i, 1, capacity[i]);
    for (std::size_t k = 0; k < m; ++k)
      if (k != i) total += pi[k] * static_cast<double>(capacity[k]);
    return total;
  }
  /// The tightest of the m decomposition values.
  [[nodiscard]] double bound() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) best = std::min(best, objective(i));
    return m == 0 ? 0.0 : best;
  }
};

struct InvariantReport {
  double worst_boundary = 0.0;   // largest |v| on the boundaries
  double worst_capacity = 0.0;   // largest decrease of v in x
  double worst_time = 0.0;       // largest increase of v in t
  [[nodiscard]] bool holds(double tol) const {
    return worst_boundary <= tol && worst_capacity <= tol && worst_time <= tol;
  }
};

inline InvariantReport check_invariants(const ValueFunctionSet& vfs) {
  InvariantReport rep;
  for (std::size_t i = 0; i < vfs.m; ++i)
    for (std::size_t t = 1; t <= vfs.T + 1; ++t)
      for (std::size_t x = 0; x <= vfs.capacity[i]; ++x) {
        const double val = vfs.value(i, t, x);
        if (t == vfs.T + 1 || x == 0) rep.worst_boundary = std::max(rep.worst_boundary, std::abs(val));
        if (x > 0) rep.worst_capacity = std::max(rep.worst_capacity, vfs.value(i, t, x - 1) - val);
        if (t <= vfs.T) rep.worst_time = std::max(rep.worst_time, vfs.value(i, t + 1, x) - val);
      }
  return rep;
}

inline nlohmann::json to_json(const ValueFunctionSet& vfs) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["kind"] = "value_function_set";
  doc["method"] = vfs.method;
  doc["m"] = vfs.m;
  doc["T"] = vfs.T;
  doc["capacity"] = vfs.capacity;
  doc["pi"] = vfs.pi;
  doc["K"] = vfs.K;
  doc["xi"] = vfs.xi;
  doc["instance_hash"] = vfs.instance_hash;
  doc["stage_solves"] = vfs.stage_solves;
  doc["fallback_stages"] = vfs.fallback_stages;
  doc["seconds"] = vfs.seconds;
  doc["v"] = vfs.v;
  return doc;
}

inline ValueFunctionSet value_functions_from_json(const nlohmann::json& doc) {
  using detail::count_field;
  using detail::require;
  if (!doc.is_object() || doc.value("kind", "") != "value_function_set")
    throw SchemaError("schema: not a value function set");
  if (count_field(doc, "schema_version") != 1) throw SchemaError("schema: unsupported schema_version");
  ValueFunctionSet vfs;
  try {
    vfs.method = doc.value("method", "");
    vfs.m = count_field(doc, "m");
    vfs.T = count_field(doc, "T");
    vfs.capacity = require(doc, "capacity").get<std::vector<std::size_t>>();
    vfs.pi = require(doc, "pi").get<std::vector<double>>();
    vfs.K = count_field(doc, "K");
    vfs.xi = detail::number_field(doc, "xi");
    vfs.instance_hash = require(doc, "instance_hash").get<std::uint64_t>();
    vfs.stage_solves = doc.value("stage_solves", std::size_t{0});
    vfs.fallback_stages = doc.value("fallback_stages", std::size_t{0});
    vfs.seconds = doc.value("seconds", 0.0);
    vfs.v = require(doc, "v").get<std::vector<std::vector<std::vector<double>>>>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("schema: ") + e.what());
  }
  if (vfs.capacity.size() != vfs.m || vfs.pi.size() != vfs.m || vfs.v.size() != vfs.m)
    throw SchemaError("schema: value tables do not match m");
  for (std::size_t i = 0; i < vfs.m; ++i) {
    if (vfs.v[i].size() != vfs.T + 1) throw SchemaError("schema: value table " + std::to_string(i) + " needs T+1 stages");
    for (const auto& row : vfs.v[i])
      if (row.size() != vfs.capacity[i] + 1)
        throw SchemaError("schema: value table " + std::to_string(i) + " needs c_i+1 states");
  }
  return vfs;
}

inline void save(const ValueFunctionSet& vfs, const std::string& path) {
  detail::write_file(path, to_json(vfs).dump() + "\n");
}

inline ValueFunctionSet load_value_functions(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("schema: not valid JSON: ") + e.what());
  }
  return value_functions_from_json(doc);
}

/// Optimum of one stage problem, already scaled by lambda.
struct StageOutcome {
  bool feasible = false;
  double value = 0.0;
  std::vector<double> prices;
};

using StageSolver = std::function<StageOutcome(const PricingProblem&)>;

/// Stage solver over the bisection and BOPT machinery; the stage value is
/// the approximate margin at the returned prices.
inline StageSolver dmip_stage(const PwlaGrid& grid, SolverConfig cfg) {
  return [&grid, cfg](const PricingProblem& prob) {
    StageOutcome out;
    if (prob.offered_count() == 0) return out;
    auto sol = solve_pricing(prob, cfg, &grid);
    if (!sol.feasible) return out;
    out.feasible = true;
    out.value = sol.approx_objective;
    out.prices = std::move(sol.prices);
    return out;
  };
}

struct DecompositionOptions {
  std::size_t threads = 0;  // 0: hardware concurrency
};

inline std::size_t capacity_units(double c) { return static_cast<std::size_t>(std::llround(c)); }

namespace detail {

template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Stage problem of resource i in state x at period t, given v_{t+1,i}:
/// margins r_j - sum_{k != i} a_kj pi_k - Delta_j v_{t+1,i}(x), capacities
/// (x, c_{-i}), demand scale lambda. Products needing more than x units of
/// resource i are not offered.
inline PricingProblem stage_problem(const Instance& inst, const ValueFunctionSet& vfs, std::size_t i,
                                    std::size_t t, std::size_t x) {
  PricingProblem prob;
  prob.instance = &inst;
  prob.demand_scale = inst.lambda;
  prob.capacity = inst.c;
  prob.capacity[i] = static_cast<double>(x);
  prob.offset.assign(inst.n(), 0.0);
  prob.offered.assign(inst.n(), 1);
  for (std::size_t j = 0; j < inst.n(); ++j) {
    const auto units = capacity_units(inst.a_ij(i, j));
    if (units > x) {
      prob.offered[j] = 0;
      continue;
    }
    for (std::size_t k = 0; k < inst.m; ++k)
      if (k != i) prob.offset[j] += inst.a_ij(k, j) * vfs.pi[k];
    prob.offset[j] += vfs.marginal(i, t + 1, x, units);
  }
  return prob;
}

/// Backward recursion over the m single-resource programs. Each stage may
/// also sell nothing, so v_{t,i}(x) = max(0, stage optimum) + v_{t+1,i}(x).
inline ValueFunctionSet solve_decomposition(const Instance& inst, const std::vector<double>& pi,
                                            const StageSolver& stage, const std::string& method,
                                            std::size_t K, double xi,
                                            const DecompositionOptions& opt = {}) {
  inst.validate();
  if (pi.size() != inst.m) throw std::invalid_argument("decomposition: pi must have m entries");
  const auto start = std::chrono::steady_clock::now();
  ValueFunctionSet vfs;
  vfs.m = inst.m;
  vfs.T = inst.T;
  vfs.pi = pi;
  vfs.K = K;
  vfs.xi = xi;
  vfs.method = method;
  vfs.instance_hash = instance_hash(inst);
  for (std::size_t i = 0; i < inst.m; ++i) {
    vfs.capacity.push_back(capacity_units(inst.c[i]));
    vfs.v.emplace_back(inst.T + 1, std::vector<double>(vfs.capacity[i] + 1, 0.0));
  }
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t i = 0; i < inst.m; ++i)
    for (std::size_t x = 1; x <= vfs.capacity[i]; ++x) cells.emplace_back(i, x);

  std::atomic<std::size_t> fallbacks{0};
  for (std::size_t t = inst.T; t >= 1; --t) {
    detail::parallel_for(cells.size(), opt.threads, [&](std::size_t k) {
      const auto [i, x] = cells[k];
      const auto out = stage(stage_problem(inst, vfs, i, t, x));
      if (!out.feasible) ++fallbacks;
      const double gain = out.feasible ? std::max(0.0, out.value) : 0.0;
      vfs.v[i][t - 1][x] = gain + vfs.v[i][t][x];
    });
  }
  vfs.stage_solves = cells.size() * inst.T;
  vfs.fallback_stages = fallbacks;
  vfs.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return vfs;
}

/// DP-DMIP: every stage solved by bisection over BOPT MILPs.
inline ValueFunctionSet solve_dpd(const Instance& inst, std::size_t K, double xi, const std::vector<double>& pi,
                                  SolverConfig cfg = {}, const DecompositionOptions& opt = {}) {
  cfg.K = K;
  cfg.xi = xi;
  const PwlaGrid grid = build_grid(inst, K);
  return solve_decomposition(inst, pi, dmip_stage(grid, cfg), "dp-dmip", K, xi, opt);
}

/// Full-state Bellman values over the K-grid action set, v[t - 1][state]
/// with states in mixed radix over (c_i + 1).
struct ExactValueTable {
  std::size_t T = 0;
  std::vector<std::size_t> capacity;
  std::vector<std::vector<double>> v;

  [[nodiscard]] std::size_t index(const std::vector<std::size_t>& x) const {
    std::size_t idx = 0;
    for (std::size_t i = capacity.size(); i-- > 0;) idx = idx * (capacity[i] + 1) + x[i];
    return idx;
  }
  [[nodiscard]] double value(std::size_t t, const std::vector<std::size_t>& x) const {
    return v.at(t - 1).at(index(x));
  }
};

/// Oracle for tiny instances: each offered product takes a breakpoint price
/// l_j + k Delta_j, products lacking capacity take the null price, and the
/// no-sale action is always available.
inline ExactValueTable solve_exact_dp(const Instance& inst, std::size_t K) {
  inst.validate();
  const std::size_t n = inst.n();
  if (inst.m > 2 || n > 2 || inst.T > 5 || K > 64 ||
      std::any_of(inst.c.begin(), inst.c.end(), [](double c) { return c > 4.0; }))
    throw std::invalid_argument("solve_exact_dp: oracle scale exceeded (m <= 2, n <= 2, T <= 5, c_i <= 4, K <= 64)");
  const PwlaGrid grid = build_grid(inst, K);
  ExactValueTable tab;
  tab.T = inst.T;
  std::size_t states = 1;
  for (double c : inst.c) {
    tab.capacity.push_back(capacity_units(c));
    states *= tab.capacity.back() + 1;
  }
  tab.v.assign(inst.T + 1, std::vector<double>(states, 0.0));

  auto decode = [&](std::size_t idx) {
    std::vector<std::size_t> x(inst.m);
    for (std::size_t i = 0; i < inst.m; ++i) {
      x[i] = idx % (tab.capacity[i] + 1);
      idx /= tab.capacity[i] + 1;
    }
    return x;
  };
  for (std::size_t t = inst.T; t >= 1; --t) {
    for (std::size_t s = 0; s < states; ++s) {
      const auto x = decode(s);
      const double next = tab.v[t][s];
      std::vector<char> sellable(n, 1);
      std::vector<double> dv(n, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        auto y = x;
        for (std::size_t i = 0; i < inst.m; ++i) {
          const auto units = capacity_units(inst.a_ij(i, j));
          if (units > y[i]) sellable[j] = 0;
          else y[i] -= units;
        }
        if (sellable[j]) dv[j] = next - tab.v[t][tab.index(y)];
      }
      FeasiblePriceRegion region;
      region.instance = &inst;
      region.capacity_override = std::vector<double>(x.begin(), x.end());
      region.demand_scale = inst.lambda;
      double best = 0.0;
      std::vector<std::size_t> pick(n, 0);
      std::vector<double> r(n);
      for (;;) {
        for (std::size_t j = 0; j < n; ++j) r[j] = sellable[j] ? grid.breakpoint(j, pick[j]) : kNullPrice;
        if (is_feasible(region, r).feasible())
          best = std::max(best, inst.lambda * expected_margin(inst.mnl, r, dv));
        std::size_t j = 0;
        while (j < n && (!sellable[j] || pick[j] == K)) {
          pick[j] = 0;
          ++j;
        }
        if (j == n) break;
        ++pick[j];
      }
      tab.v[t - 1][s] = best + next;
    }
  }
  return tab;
}

/// Pricing policy from a value function set: at (t, x) the stage problem
/// uses margins r_j - sum_i Delta_j v_{t+1,i}(x_i) over R_t(x). Products
/// lacking capacity, and every product when no sale beats selling, get the
/// null price. Results are cached per (t, x).
class DecompositionPolicy {
 public:
  DecompositionPolicy(const Instance& inst, ValueFunctionSet vfs, StageSolver stage)
      : inst_(inst), vfs_(std::move(vfs)), stage_(std::move(stage)) {
    if (vfs_.instance_hash != 0 && vfs_.instance_hash != instance_hash(inst))
      throw std::invalid_argument("policy: value functions were built for a different instance");
    if (vfs_.m != inst.m || vfs_.T != inst.T) throw std::invalid_argument("policy: value functions do not match the instance");
  }

  [[nodiscard]] std::vector<double> prices(std::size_t t, const std::vector<std::size_t>& x) const {
    if (t < 1 || t > inst_.T) throw std::out_of_range("policy: period out of range");
    if (x.size() != inst_.m) throw std::invalid_argument("policy: state must have m entries");
    for (std::size_t i = 0; i < inst_.m; ++i)
      if (x[i] > vfs_.capacity[i]) throw std::out_of_range("policy: state exceeds capacity");
    {
      std::lock_guard lock(cache_->mu);
      auto it = cache_->prices.find({t, x});
      if (it != cache_->prices.end()) return it->second;
    }
    auto r = solve(t, x);
    std::lock_guard lock(cache_->mu);
    cache_->prices.emplace(std::make_pair(t, x), r);
    return r;
  }

  [[nodiscard]] const ValueFunctionSet& value_functions() const { return vfs_; }

 private:
  std::vector<double> solve(std::size_t t, const std::vector<std::size_t>& x) const {
    const std::size_t n = inst_.n();
    PricingProblem prob;
    prob.instance = &inst_;
    prob.demand_scale = inst_.lambda;
    prob.capacity.assign(x.begin(), x.end());
    prob.offset.assign(n, 0.0);
    prob.offered.assign(n, 1);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < inst_.m; ++i) {
        const auto units = capacity_units(inst_.a_ij(i, j));
        if (units > x[i]) prob.offered[j] = 0;
        else if (units > 0) prob.offset[j] += vfs_.marginal(i, t + 1, x[i], units);
      }
    std::vector<double> none(n, kNullPrice);
    if (prob.offered_count() == 0) return none;
    const auto out = stage_(prob);
    if (!out.feasible || out.value <= 0.0) return none;
    return out.prices;
  }

  const Instance& inst_;
  ValueFunctionSet vfs_;
  StageSolver stage_;
  struct Cache {
    std::mutex mu;
    std::map<std::pair<std::size_t, std::vector<std::size_t>>, std::vector<double>> prices;
  };
  std::unique_ptr<Cache> cache_ = std::make_unique<Cache>();
};

/// Owns the grid behind a DP-DMIP policy.
class DmipPolicy {
 public:
  DmipPolicy(const Instance& inst, ValueFunctionSet vfs, SolverConfig cfg = {})
      : grid_(std::make_unique<PwlaGrid>(build_grid(inst, vfs.K))), cfg_(with_k(cfg, vfs)),
        policy_(inst, std::move(vfs), dmip_stage(*grid_, cfg_)) {}

  [[nodiscard]] std::vector<double> prices(std::size_t t, const std::vector<std::size_t>& x) const {
    return policy_.prices(t, x);
  }
  [[nodiscard]] const ValueFunctionSet& value_functions() const { return policy_.value_functions(); }

 private:
  static SolverConfig with_k(SolverConfig cfg, const ValueFunctionSet& vfs) {
    cfg.K = vfs.K;
    cfg.xi = vfs.xi;
    return cfg;
  }
  std::unique_ptr<PwlaGrid> grid_;
  SolverConfig cfg_;
  DecompositionPolicy policy_;
};

/// One-off policy evaluation at (t, x) for a DP-DMIP value function set.
inline std::vector<double> policy_prices(const ValueFunctionSet& vfs, const Instance& inst, std::size_t t,
                                         const std::vector<std::size_t>& x, SolverConfig cfg = {}) {
  return DmipPolicy(inst, vfs, cfg).prices(t, x);
}

}  // namespace choicerm
