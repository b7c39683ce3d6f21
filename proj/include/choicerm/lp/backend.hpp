#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "choicerm/lp/branch_and_bound.hpp"
#include "choicerm/lp/model.hpp"

namespace choicerm::lp {

/// A MILP/LP solver behind a name. Adapters must honor the tolerances in
/// model.hpp and report duals for pure LP solves.
struct Backend {
  std::string name;
  std::function<SolveResult(const MilpModel&, const SolveHints&)> milp;
  std::function<SolveResult(const MilpModel&)> lp;

  [[nodiscard]] SolveResult solve_milp(const MilpModel& m, const SolveHints& h = {}) const { return milp(m, h); }
  [[nodiscard]] SolveResult solve_lp(const MilpModel& m) const { return lp(m); }
};

class UnknownBackend : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

struct Registry {
  std::mutex mu;
  std::map<std::string, Backend> backends;
  std::string current = "bundled";

  Registry() {
    backends["bundled"] = {"bundled",
                           [](const MilpModel& m, const SolveHints& h) { return lp::solve_milp(m, {}, h); },
                           [](const MilpModel& m) { return lp::solve_lp(m); }};
    MilpOptions plain;
    plain.use_compaction = false;
    backends["reference"] = {"reference",
                             [plain](const MilpModel& m, const SolveHints& h) { return lp::solve_milp(m, plain, h); },
                             [plain](const MilpModel& m) { return lp::solve_lp(m, plain); }};
  }
};

inline Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace detail

inline void register_backend(const std::string& name, Backend backend) {
  if (!backend.milp || !backend.lp)
    throw std::invalid_argument("register_backend: adapter for '" + name + "' is incomplete");
  auto& reg = detail::registry();
  std::lock_guard lock(reg.mu);
  backend.name = name;
  reg.backends[name] = std::move(backend);
}

/// Makes `name` the default backend; throws UnknownBackend otherwise.
inline void select_backend(const std::string& name) {
  auto& reg = detail::registry();
  std::lock_guard lock(reg.mu);
  if (!reg.backends.count(name)) throw UnknownBackend("unknown solver backend '" + name + "'");
  reg.current = name;
}

/// The named backend, or the selected default when `name` is empty.
inline Backend backend(const std::string& name = {}) {
  auto& reg = detail::registry();
  std::lock_guard lock(reg.mu);
  const std::string& key = name.empty() ? reg.current : name;
  auto it = reg.backends.find(key);
  if (it == reg.backends.end()) throw UnknownBackend("unknown solver backend '" + key + "'");
  return it->second;
}

inline std::vector<std::string> backend_names() {
  auto& reg = detail::registry();
  std::lock_guard lock(reg.mu);
  std::vector<std::string> names;
  for (const auto& [k, v] : reg.backends) names.push_back(k);
  return names;
}

}  // namespace choicerm::lp
