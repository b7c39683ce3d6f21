#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <vector>

#include "choicerm/lp/chain.hpp"
#include "choicerm/lp/model.hpp"
#include "choicerm/lp/simplex.hpp"

namespace choicerm::lp {

struct MilpOptions {
  std::size_t node_limit = 200000;
  double gap = kGapTol;
  bool use_compaction = true;     // solve tagged chains over breakpoint weights
  bool propagate_chains = true;   // fix the rest of a chain after branching on z
  bool relax_integrality = false; // solve the LP relaxation only
};

namespace detail {

inline LpProblem direct_lp(const MilpModel& model, double sign) {
  LpProblem lp;
  lp.n = model.num_vars();
  lp.m = model.num_rows();
  lp.cost.resize(lp.n);
  for (std::size_t j = 0; j < lp.n; ++j) lp.cost[j] = sign * model.obj[j];
  lp.col_lo = model.lb;
  lp.col_hi = model.ub;
  lp.row_lo.resize(lp.m);
  lp.row_hi.resize(lp.m);
  std::vector<std::size_t> count(lp.n + 1, 0);
  for (std::size_t i = 0; i < lp.m; ++i) {
    const Row& r = model.rows[i];
    lp.row_lo[i] = r.sense == Sense::Le ? -std::numeric_limits<double>::infinity() : r.rhs;
    lp.row_hi[i] = r.sense == Sense::Ge ? std::numeric_limits<double>::infinity() : r.rhs;
    for (const auto& t : r.terms) ++count[t.var + 1];
  }
  for (std::size_t j = 0; j < lp.n; ++j) count[j + 1] += count[j];
  lp.col_start = count;
  lp.row_index.resize(count[lp.n]);
  lp.value.resize(count[lp.n]);
  for (std::size_t i = 0; i < lp.m; ++i)
    for (const auto& t : model.rows[i].terms) {
      const std::size_t e = count[t.var]++;
      lp.row_index[e] = i;
      lp.value[e] = t.coef;
    }
  return lp;
}

struct Change {
  bool window;      // chain window or column bounds
  std::size_t index;  // chain or column
  double lo, hi;
};

struct Node {
  std::vector<Change> changes;
  double bound;  // parent LP value (minimization)
  std::size_t depth;
  std::shared_ptr<const Basis> basis;
};

struct NodeOrder {
  bool operator()(const std::shared_ptr<Node>& a, const std::shared_ptr<Node>& b) const {
    if (a->bound != b->bound) return a->bound > b->bound;
    return a->depth < b->depth;
  }
};

/// Best-bound branch and bound, internally minimizing.
class BranchAndBound {
 public:
  BranchAndBound(const MilpModel& model, const MilpOptions& opt) : model_(model), opt_(opt) {
    sign_ = model.maximize ? -1.0 : 1.0;
    if (opt.use_compaction) cm_ = compact(model);
    chains_ok_ = cm_.has_value() || verify_chains(model);
    if (cm_) {
      lp_ = cm_->lp;
      int_cols_ = cm_->int_cols;
    } else {
      lp_ = direct_lp(model, sign_);
      for (std::size_t j = 0; j < model.num_vars(); ++j)
        if (model.integer[j]) int_cols_.push_back(j);
      if (chains_ok_) {
        z_chain_.assign(model.num_vars(), kNone);
        z_pos_.assign(model.num_vars(), kNone);
        for (std::size_t c = 0; c < model.chains.size(); ++c)
          for (std::size_t k = 0; k < model.chains[c].z.size(); ++k) {
            z_chain_[model.chains[c].z[k]] = c;
            z_pos_[model.chains[c].z[k]] = k;
          }
      }
    }
    if (opt.relax_integrality) {
      int_cols_.clear();
      if (cm_)
        for (auto& cc : cm_->chains) std::fill(cc.binary.begin(), cc.binary.end(), 0);
    }
  }

  SolveResult run(const SolveHints& hints = {}) {
    SolveResult res;
    auto root = std::make_shared<Node>(Node{{}, -std::numeric_limits<double>::infinity(), 0, nullptr});
    if (hints.basis.size() == lp_.n + lp_.m) {
      Basis b;
      for (auto v : hints.basis) b.state.push_back(static_cast<VarState>(v));
      root->basis = std::make_shared<const Basis>(std::move(b));
    } else if (cm_) {
      root->basis = std::make_shared<const Basis>(crash_basis());
    }
    std::priority_queue<std::shared_ptr<Node>, std::vector<std::shared_ptr<Node>>, NodeOrder> open;
    open.push(root);
    bool limit_hit = false;
    double incumbent = std::numeric_limits<double>::infinity();
    std::vector<double> best_lp_x;
    LpOutcome best_outcome;

    while (!open.empty()) {
      auto node = open.top();
      if (node->bound >= incumbent - opt_.gap) break;  // every open node is dominated
      open.pop();
      if (res.nodes >= opt_.node_limit) {
        limit_hit = true;
        open.push(node);
        break;
      }
      ++res.nodes;
      LpProblem lp = lp_;
      std::vector<std::pair<std::size_t, std::size_t>> windows;
      if (cm_) {
        for (const auto& cc : cm_->chains) windows.emplace_back(cc.lo_bp, cc.hi_bp);
      }
      bool empty = false;
      for (const auto& ch : node->changes) {
        if (ch.window) {
          auto& w = windows[ch.index];
          w.first = std::max(w.first, static_cast<std::size_t>(ch.lo));
          w.second = std::min(w.second, static_cast<std::size_t>(ch.hi));
          if (w.first > w.second) empty = true;
        } else {
          lp.col_lo[ch.index] = std::max(lp.col_lo[ch.index], ch.lo);
          lp.col_hi[ch.index] = std::min(lp.col_hi[ch.index], ch.hi);
          if (lp.col_lo[ch.index] > lp.col_hi[ch.index]) empty = true;
        }
      }
      if (empty) continue;
      for (std::size_t c = 0; c < windows.size(); ++c)
        apply_window(*cm_, c, windows[c].first, windows[c].second, lp.col_hi, lp.row_lo);

      LpOutcome out = solve_lp_problem(lp, node->basis.get());
      res.lp_iterations += out.iterations;
      if (out.status == Status::IterationLimit) {
        limit_hit = true;
        continue;
      }
      if (out.status != Status::Optimal) continue;
      if (node->depth == 0)
        for (auto v : out.basis.state) res.root_basis.push_back(static_cast<std::uint8_t>(v));
      if (out.objective >= incumbent - opt_.gap) continue;

      Branch br = pick_branch(out.x, windows);
      if (!br.found) {
        incumbent = out.objective;
        best_lp_x = out.x;
        best_outcome = out;
        res.incumbent_history.push_back(sign_ * (incumbent) + model_.obj_constant);
        continue;
      }
      auto basis = std::make_shared<const Basis>(out.basis);
      for (int side = 0; side < 2; ++side) {
        auto child = std::make_shared<Node>(Node{node->changes, out.objective, node->depth + 1, basis});
        if (br.window) {
          const auto [lo, hi] = windows[br.index];
          if (side == 0) child->changes.push_back({true, br.index, double(lo), double(br.split)});
          else child->changes.push_back({true, br.index, double(br.split), double(hi)});
        } else {
          add_var_branch(child->changes, br, side == 0);
        }
        open.push(child);
      }
    }

    double open_bound = std::numeric_limits<double>::infinity();
    for (; !open.empty(); open.pop()) open_bound = std::min(open_bound, open.top()->bound);
    if (best_lp_x.empty()) {
      res.status = limit_hit ? Status::IterationLimit : Status::Infeasible;
      return res;
    }
    res.status = limit_hit ? Status::IterationLimit : Status::Optimal;
    res.x = cm_ ? expand(*cm_, model_, best_lp_x) : best_lp_x;
    if (!opt_.relax_integrality)
      for (std::size_t j = 0; j < model_.num_vars(); ++j)
        if (model_.integer[j] && !(cm_ && cm_->var_map[j] == kNone)) res.x[j] = std::round(res.x[j]);
    res.objective = model_.objective_value(res.x);
    res.max_violation = model_.max_violation(res.x);
    if (res.max_violation > 1e-6)
      throw SolverError("branch and bound: recovered solution violates the model by " +
                        std::to_string(res.max_violation));
    const double bound_min = std::min(open_bound, incumbent);
    res.bound = sign_ * bound_min + model_.obj_constant;
    fill_duals(res, best_outcome);
    return res;
  }

 private:
  struct Branch {
    bool found = false;
    bool window = false;
    std::size_t index = 0;
    std::size_t split = 0;  // window split breakpoint
    double value = 0.0;     // fractional value of a column branch
  };

  const MilpModel& model_;
  MilpOptions opt_;
  double sign_ = 1.0;
  std::optional<CompactModel> cm_;
  bool chains_ok_ = false;
  LpProblem lp_;
  std::vector<std::size_t> int_cols_;
  std::vector<std::size_t> z_chain_, z_pos_;

  /// Each chain starts at its cheapest single breakpoint, all rows basic.
  Basis crash_basis() const {
    Basis b;
    b.state.assign(lp_.n + lp_.m, VarState::Lower);
    for (std::size_t j = 0; j < lp_.n; ++j)
      if (lp_.cost[j] < 0.0) b.state[j] = VarState::Upper;
    for (const auto& cc : cm_->chains) {
      std::size_t best = kNone;
      double best_cost = 0.0;
      for (std::size_t k = 0; k < cc.K; ++k) {
        const std::size_t col = cc.first_col + k;
        b.state[col] = VarState::Lower;
        if (lp_.col_hi[col] > 0.0 && lp_.cost[col] < best_cost) {
          best_cost = lp_.cost[col];
          best = col;
        }
      }
      if (best != kNone) b.state[best] = VarState::Upper;
    }
    for (std::size_t i = 0; i < lp_.m; ++i) b.state[lp_.n + i] = VarState::Basic;
    return b;
  }

  Branch pick_branch(const std::vector<double>& x,
                     const std::vector<std::pair<std::size_t, std::size_t>>& windows) const {
    Branch br;
    if (cm_) {
      for (std::size_t c = 0; c < cm_->chains.size() && !br.found; ++c) {
        const auto& cc = cm_->chains[c];
        std::vector<double> w(cc.K + 1, 0.0);
        for (std::size_t k = cc.K; k-- > 0;) w[k] = w[k + 1] + x[cc.first_col + k];
        double best = 0.0;
        for (std::size_t k = 0; k < cc.K; ++k) {
          if (!cc.binary[k]) continue;
          const double score = std::min(1.0 - w[k], w[k + 1]);
          if (score > kIntTol && score > best) {
            best = score;
            br = {true, true, c, k + 1, 0.0};
          }
        }
        (void)windows;
      }
      if (br.found) return br;
    }
    double best = 0.0;
    std::size_t best_chain = kNone;
    for (auto j : int_cols_) {
      const double f = x[j] - std::floor(x[j]);
      const double score = std::min(f, 1.0 - f);
      if (score <= kIntTol) continue;
      const std::size_t chain = z_chain_.empty() ? kNone : z_chain_[j];
      const bool better_chain = chain < best_chain;
      if (better_chain || (chain == best_chain && score > best)) {
        best = score;
        best_chain = chain;
        br = {true, false, j, 0, x[j]};
      }
    }
    return br;
  }

  void add_var_branch(std::vector<Change>& changes, const Branch& br, bool down) const {
    const double lo = down ? -std::numeric_limits<double>::infinity() : std::ceil(br.value);
    const double hi = down ? std::floor(br.value) : std::numeric_limits<double>::infinity();
    changes.push_back({false, br.index, lo, hi});
    if (!opt_.propagate_chains || z_chain_.empty() || z_chain_[br.index] == kNone) return;
    const auto& ch = model_.chains[z_chain_[br.index]];
    const std::size_t k = z_pos_[br.index];
    if (down && hi <= 0.0) {
      for (std::size_t k2 = k + 1; k2 < ch.z.size(); ++k2)
        changes.push_back({false, ch.z[k2], -std::numeric_limits<double>::infinity(), 0.0});
    } else if (!down && lo >= 1.0) {
      for (std::size_t k2 = 0; k2 < k; ++k2)
        changes.push_back({false, ch.z[k2], 1.0, std::numeric_limits<double>::infinity()});
    }
  }

  void fill_duals(SolveResult& res, const LpOutcome& out) const {
    res.duals.assign(model_.num_rows(), 0.0);
    res.reduced_costs.assign(model_.num_vars(), 0.0);
    if (out.row_dual.empty()) return;
    for (std::size_t i = 0; i < model_.num_rows(); ++i) {
      const std::size_t r = cm_ ? cm_->row_map[i] : i;
      if (r != kNone) res.duals[i] = sign_ * out.row_dual[r];
    }
    for (std::size_t j = 0; j < model_.num_vars(); ++j) {
      const std::size_t c = cm_ ? cm_->var_map[j] : j;
      if (c != kNone) res.reduced_costs[j] = sign_ * out.reduced_cost[c];
    }
  }
};

}  // namespace detail

/// Branch and bound over LP relaxations. Status optimal means the incumbent
/// is within `gap` of the best bound.
inline SolveResult solve_milp(const MilpModel& model, const MilpOptions& opt = {},
                              const SolveHints& hints = {}) {
  model.validate();
  if (opt.use_compaction && !model.chains.empty()) {
    try {
      detail::BranchAndBound bb(model, opt);
      return bb.run(hints);
    } catch (const SolverError&) {
      MilpOptions plain = opt;
      plain.use_compaction = false;
      detail::BranchAndBound bb(model, plain);
      return bb.run();
    }
  }
  detail::BranchAndBound bb(model, opt);
  return bb.run(hints);
}

/// LP relaxation with duals: d objective / d rhs, in the model's own sense.
inline SolveResult solve_lp(const MilpModel& model, const MilpOptions& opt = {},
                            const SolveHints& hints = {}) {
  MilpOptions relaxed = opt;
  relaxed.relax_integrality = true;
  return solve_milp(model, relaxed, hints);
}

}  // namespace choicerm::lp
