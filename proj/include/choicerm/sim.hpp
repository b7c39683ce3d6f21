#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "choicerm/dynamic.hpp"
#include "choicerm/instance.hpp"
#include "choicerm/io.hpp"
#include "choicerm/mnl.hpp"
#include "choicerm/rng.hpp"

namespace choicerm {

/// Prices for period t (1-based) in remaining-capacity state x.
using Policy = std::function<std::vector<double>(std::size_t t, const std::vector<std::size_t>& x)>;

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimulationReport {
  std::string policy;
  std::vector<double> revenue;          // per run
  std::vector<std::uint64_t> seeds;     // per run stream key
  std::vector<std::size_t> sales;       // per product, summed over runs
  std::vector<std::vector<std::vector<std::size_t>>> trajectories;  // [run][t][i], when recorded
  double mean = 0.0;
  double stddev = 0.0;

  void summarize() {
    const double k = static_cast<double>(revenue.size());
    mean = k > 0 ? std::accumulate(revenue.begin(), revenue.end(), 0.0) / k : 0.0;
    double ss = 0.0;
    for (double v : revenue) ss += (v - mean) * (v - mean);
    stddev = k > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
  }
  [[nodiscard]] double standard_error() const {
    return revenue.empty() ? 0.0 : stddev / std::sqrt(static_cast<double>(revenue.size()));
  }
};

struct SimulationOptions {
  bool record_trajectories = false;
  std::size_t threads = 1;  // runs are independent; 0 uses every core
};

/// Cumulative rule over the natural product order: the first product j with
/// X <= P_1 + ... + P_j, or none (returns n) when X exceeds the purchase
/// probability. P is (P_0, P_1..P_n).
inline std::size_t select_product(std::span<const double> P, double X) {
  const std::size_t n = P.size() - 1;
  double cum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    cum += P[j + 1];
    if (P[j + 1] > 0.0 && X <= cum) return j;
  }
  return n;
}

inline Policy fixed_price_policy(std::vector<double> r) {
  return [r = std::move(r)](std::size_t, const std::vector<std::size_t>&) { return r; };
}

/// Stream key of one run; policies compared under the same seed see the same
/// arrivals and the same uniforms.
inline std::uint64_t run_key(std::uint64_t seed, std::size_t run) {
  Rng mix({seed, static_cast<std::uint64_t>(run), 0x5eedull});
  return static_cast<std::uint64_t>(mix.uniform() * 9007199254740992.0);
}

namespace detail {

inline double simulate_run(const Instance& inst, const Policy& policy, std::uint64_t key,
                           std::vector<std::size_t>& sales,
                           std::vector<std::vector<std::size_t>>* trajectory) {
  const std::size_t n = inst.n();
  std::vector<std::size_t> x;
  for (double c : inst.c) x.push_back(capacity_units(c));
  const auto initial = x;
  Rng rng(key);
  double revenue = 0.0;
  for (std::size_t t = 1; t <= inst.T; ++t) {
    const bool arrival = rng.uniform() < inst.lambda;
    const double X = rng.uniform();
    if (trajectory) trajectory->push_back(x);
    if (!arrival) continue;
    auto r = policy(t, x);
    if (r.size() != n) throw SimulationError("simulate: policy returned " + std::to_string(r.size()) + " prices at t=" + std::to_string(t));
    for (std::size_t j = 0; j < n; ++j) {
      if (is_null_price(r[j])) continue;
      const double tol = 1e-9 * std::max(1.0, std::abs(inst.u[j]));
      if (!std::isfinite(r[j]) || r[j] < inst.l[j] - tol || r[j] > inst.u[j] + tol) {
        std::ostringstream msg;
        msg << "simulate: policy price " << r[j] << " for product " << j << " at t=" << t
            << " lies outside [" << inst.l[j] << ", " << inst.u[j] << "]";
        throw SimulationError(msg.str());
      }
      for (std::size_t i = 0; i < inst.m; ++i)
        if (capacity_units(inst.a_ij(i, j)) > x[i]) {
          r[j] = kNullPrice;
          break;
        }
    }
    const auto P = choice_probabilities(inst.mnl, r);
    const std::size_t j = select_product(P, X);
    if (j == n) continue;
    for (std::size_t i = 0; i < inst.m; ++i) {
      const auto units = capacity_units(inst.a_ij(i, j));
      if (units > x[i]) throw std::logic_error("simulate: capacity of resource " + std::to_string(i) + " exceeded");
      x[i] -= units;
    }
    ++sales[j];
    revenue += r[j];
  }
  for (std::size_t i = 0; i < inst.m; ++i)
    if (x[i] > initial[i]) throw std::logic_error("simulate: conservation violated");
  return revenue;
}

}  // namespace detail

/// Monte-Carlo revenue of a policy over `runs` independent horizons. Each
/// period draws the arrival uniform and the choice uniform X; products whose
/// resources cannot cover one sale are priced at the null price first.
inline SimulationReport simulate(const Instance& inst, const Policy& policy, std::size_t runs, std::uint64_t seed,
                                 const SimulationOptions& opt = {}, std::string name = "policy") {
  if (runs < 1) throw std::invalid_argument("simulate: runs must be at least 1");
  inst.validate();
  SimulationReport rep;
  rep.policy = std::move(name);
  rep.revenue.assign(runs, 0.0);
  rep.seeds.resize(runs);
  std::vector<std::vector<std::size_t>> sales(runs, std::vector<std::size_t>(inst.n(), 0));
  if (opt.record_trajectories) rep.trajectories.resize(runs);
  detail::parallel_for(runs, opt.threads, [&](std::size_t k) {
    rep.seeds[k] = run_key(seed, k);
    rep.revenue[k] = detail::simulate_run(inst, policy, rep.seeds[k], sales[k],
                                          opt.record_trajectories ? &rep.trajectories[k] : nullptr);
  });
  rep.sales.assign(inst.n(), 0);
  for (const auto& s : sales)
    for (std::size_t j = 0; j < inst.n(); ++j) rep.sales[j] += s[j];
  rep.summarize();
  return rep;
}

/// Every policy sees the same random streams per run index.
inline std::vector<SimulationReport> evaluate_policies(const Instance& inst,
                                                       const std::vector<std::pair<std::string, Policy>>& policies,
                                                       std::size_t runs = 20, std::uint64_t seed = 0,
                                                       const SimulationOptions& opt = {}) {
  std::vector<SimulationReport> out;
  for (const auto& [name, policy] : policies) out.push_back(simulate(inst, policy, runs, seed, opt, name));
  return out;
}

/// policy,run,revenue rows followed by mean and std rows per policy.
inline std::string reports_csv(const std::vector<SimulationReport>& reports) {
  std::ostringstream out;
  out.precision(10);
  out << "policy,run,revenue\n";
  for (const auto& rep : reports)
    for (std::size_t k = 0; k < rep.revenue.size(); ++k) out << rep.policy << "," << k << "," << rep.revenue[k] << "\n";
  for (const auto& rep : reports) {
    out << rep.policy << ",mean," << rep.mean << "\n";
    out << rep.policy << ",std," << rep.stddev << "\n";
  }
  return out.str();
}

inline void write_reports_csv(const std::vector<SimulationReport>& reports, const std::string& path) {
  detail::write_file(path, reports_csv(reports));
}

}  // namespace choicerm
