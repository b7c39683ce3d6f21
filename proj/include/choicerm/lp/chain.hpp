#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <tuple>
#include <vector>

#include "choicerm/lp/model.hpp"
#include "choicerm/lp/simplex.hpp"

namespace choicerm::lp {

inline constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

/// True when every tagged row is one of z_{k+1} - z_k <= 0, z_k - w_k <= 0,
/// w_{k+1} - z_k <= 0, each pattern appears, w is in [0,1], z is in [0,1]
/// with zero cost, and z occurs in no other row.
inline bool verify_chains(const MilpModel& model) {
  if (model.chains.empty()) return false;
  const std::size_t nv = model.num_vars();
  std::vector<std::size_t> owner(nv, kNone);
  std::vector<char> internal(model.num_rows(), 0);
  for (std::size_t c = 0; c < model.chains.size(); ++c) {
    const auto& ch = model.chains[c];
    const std::size_t K = ch.z.size();
    if (K == 0 || ch.w.size() != K) return false;
    for (std::size_t k = 0; k < K; ++k) {
      for (auto v : {ch.z[k], ch.w[k]}) {
        if (v >= nv || owner[v] != kNone) return false;
        owner[v] = c;
      }
      if (model.lb[ch.w[k]] != 0.0 || model.ub[ch.w[k]] != 1.0) return false;
      if (model.lb[ch.z[k]] < 0.0 || model.ub[ch.z[k]] > 1.0 || model.obj[ch.z[k]] != 0.0) return false;
    }
    // pattern id: 0 chain, 1 lower link, 2 upper link; each k at most once
    std::vector<char> seen(3 * K, 0);
    for (auto r : ch.rows) {
      if (r >= model.num_rows() || internal[r]) return false;
      internal[r] = 1;
      const Row& row = model.rows[r];
      if (row.terms.size() != 2 || row.rhs != 0.0) return false;
      std::size_t pos = kNone, neg = kNone;
      for (const auto& t : row.terms) {
        const double s = row.sense == Sense::Le ? t.coef : (row.sense == Sense::Ge ? -t.coef : 0.0);
        if (s == 1.0) pos = t.var;
        else if (s == -1.0) neg = t.var;
      }
      if (pos == kNone || neg == kNone) return false;
      auto zi = [&](std::size_t v) -> std::size_t {
        auto it = std::find(ch.z.begin(), ch.z.end(), v);
        return it == ch.z.end() ? kNone : static_cast<std::size_t>(it - ch.z.begin());
      };
      auto wi = [&](std::size_t v) -> std::size_t {
        auto it = std::find(ch.w.begin(), ch.w.end(), v);
        return it == ch.w.end() ? kNone : static_cast<std::size_t>(it - ch.w.begin());
      };
      std::size_t id = kNone;
      if (zi(pos) != kNone && zi(neg) != kNone && zi(pos) == zi(neg) + 1) id = 3 * zi(neg);
      else if (zi(pos) != kNone && wi(neg) != kNone && zi(pos) == wi(neg)) id = 3 * zi(pos) + 1;
      else if (wi(pos) != kNone && zi(neg) != kNone && wi(pos) == zi(neg) + 1) id = 3 * zi(neg) + 2;
      if (id == kNone || seen[id]) return false;
      seen[id] = 1;
    }
    for (std::size_t k = 0; k < K; ++k) {
      if (k + 1 < K && (!seen[3 * k] || !seen[3 * k + 2])) return false;
      if (!seen[3 * k + 1]) return false;
    }
  }
  for (std::size_t r = 0; r < model.num_rows(); ++r) {
    if (internal[r]) continue;
    for (const auto& t : model.rows[r].terms) {
      if (owner[t.var] == kNone) continue;
      const auto& ch = model.chains[owner[t.var]];
      if (std::find(ch.z.begin(), ch.z.end(), t.var) != ch.z.end()) return false;
    }
  }
  return true;
}

/// LP over breakpoint weights s_k = w_k - w_{k+1} that replaces each chain.
/// The chain rows become sum_k s_k <= 1 (with lower bound 1 once breakpoint 0
/// is excluded); rows touching w get prefix-summed coefficients.
struct CompactModel {
  struct Chain {
    std::size_t first_col = 0;
    std::size_t K = 0;
    std::size_t gub_row = 0;
    std::size_t lo_bp = 0, hi_bp = 0;  // admissible breakpoint window
    std::vector<char> binary;          // per k: z_k integral
  };
  LpProblem lp;
  double sign = 1.0;  // lp cost = sign * objective
  std::vector<std::size_t> var_map;  // original var -> lp column (kNone for chain vars)
  std::vector<std::size_t> row_map;  // original row -> lp row (kNone for chain rows)
  std::vector<Chain> chains;
  std::vector<std::size_t> int_cols;  // integral columns outside the chains
};

/// Window of breakpoints allowed by the z bounds of a chain.
inline std::pair<std::size_t, std::size_t> chain_window(const MilpModel& model, const ChainTag& ch,
                                                        const std::vector<double>& lb,
                                                        const std::vector<double>& ub) {
  const std::size_t K = ch.z.size();
  std::size_t lo = 0, hi = K;
  for (std::size_t k = 0; k < K; ++k) {
    if (lb[ch.z[k]] >= 1.0 - kIntTol) lo = std::max(lo, k + 1);
    if (ub[ch.z[k]] <= kIntTol) hi = std::min(hi, k + 1);
  }
  (void)model;
  return {lo, hi};
}

inline std::optional<CompactModel> compact(const MilpModel& model) {
  if (!verify_chains(model)) return std::nullopt;
  CompactModel cm;
  cm.sign = model.maximize ? -1.0 : 1.0;
  const std::size_t nv = model.num_vars();
  cm.var_map.assign(nv, kNone);
  std::vector<std::size_t> chain_of(nv, kNone), pos_in_chain(nv, kNone);
  for (std::size_t c = 0; c < model.chains.size(); ++c) {
    const auto& ch = model.chains[c];
    for (std::size_t k = 0; k < ch.z.size(); ++k) {
      chain_of[ch.z[k]] = c;
      chain_of[ch.w[k]] = c;
      pos_in_chain[ch.w[k]] = k;
    }
  }
  std::vector<double> cost, clo, chi;
  for (std::size_t v = 0; v < nv; ++v) {
    if (chain_of[v] != kNone) continue;
    cm.var_map[v] = cost.size();
    if (model.integer[v]) cm.int_cols.push_back(cost.size());
    cost.push_back(cm.sign * model.obj[v]);
    clo.push_back(model.lb[v]);
    chi.push_back(model.ub[v]);
  }
  for (const auto& ch : model.chains) {
    CompactModel::Chain cc;
    cc.first_col = cost.size();
    cc.K = ch.z.size();
    std::tie(cc.lo_bp, cc.hi_bp) = chain_window(model, ch, model.lb, model.ub);
    cc.binary.resize(cc.K);
    double prefix = 0.0;
    for (std::size_t k = 0; k < cc.K; ++k) {
      cc.binary[k] = model.integer[ch.z[k]];
      prefix += model.obj[ch.w[k]];
      cost.push_back(cm.sign * prefix);
      clo.push_back(0.0);
      chi.push_back(1.0);
    }
    cm.chains.push_back(std::move(cc));
  }

  std::vector<std::tuple<std::size_t, std::size_t, double>> trip;  // col, row, value
  std::vector<double> rlo, rhi;
  cm.row_map.assign(model.num_rows(), kNone);
  std::vector<char> internal(model.num_rows(), 0);
  for (const auto& ch : model.chains)
    for (auto r : ch.rows) internal[r] = 1;
  std::vector<std::vector<double>> dense(model.chains.size());
  for (std::size_t r = 0; r < model.num_rows(); ++r) {
    if (internal[r]) continue;
    const Row& row = model.rows[r];
    const std::size_t lr = rlo.size();
    cm.row_map[r] = lr;
    rlo.push_back(row.sense == Sense::Le ? -std::numeric_limits<double>::infinity() : row.rhs);
    rhi.push_back(row.sense == Sense::Ge ? std::numeric_limits<double>::infinity() : row.rhs);
    std::vector<std::size_t> touched;
    for (const auto& t : row.terms) {
      if (chain_of[t.var] == kNone) {
        trip.emplace_back(cm.var_map[t.var], lr, t.coef);
        continue;
      }
      const std::size_t c = chain_of[t.var];
      if (dense[c].empty()) {
        dense[c].assign(model.chains[c].z.size(), 0.0);
        touched.push_back(c);
      }
      dense[c][pos_in_chain[t.var]] += t.coef;
    }
    for (auto c : touched) {
      double prefix = 0.0;
      for (std::size_t k = 0; k < dense[c].size(); ++k) {
        prefix += dense[c][k];
        if (prefix != 0.0) trip.emplace_back(cm.chains[c].first_col + k, lr, prefix);
      }
      dense[c].clear();
    }
  }
  for (auto& cc : cm.chains) {
    cc.gub_row = rlo.size();
    rlo.push_back(cc.lo_bp > 0 ? 1.0 : 0.0);
    rhi.push_back(1.0);
    for (std::size_t k = 0; k < cc.K; ++k) trip.emplace_back(cc.first_col + k, cc.gub_row, 1.0);
  }

  LpProblem& lp = cm.lp;
  lp.n = cost.size();
  lp.m = rlo.size();
  std::sort(trip.begin(), trip.end());
  lp.col_start.assign(lp.n + 1, 0);
  for (const auto& [c, r, v] : trip) {
    ++lp.col_start[c + 1];
    lp.row_index.push_back(r);
    lp.value.push_back(v);
  }
  for (std::size_t c = 0; c < lp.n; ++c) lp.col_start[c + 1] += lp.col_start[c];
  lp.cost = std::move(cost);
  lp.col_lo = std::move(clo);
  lp.col_hi = std::move(chi);
  lp.row_lo = std::move(rlo);
  lp.row_hi = std::move(rhi);
  for (const auto& cc : cm.chains)
    for (std::size_t k = 0; k < cc.K; ++k)
      if (k + 1 < cc.lo_bp || k + 1 > cc.hi_bp) lp.col_hi[cc.first_col + k] = 0.0;
  return cm;
}

/// Restricts chain c of an LP copy to breakpoints [lo, hi].
inline void apply_window(const CompactModel& cm, std::size_t c, std::size_t lo, std::size_t hi,
                         std::vector<double>& col_hi, std::vector<double>& row_lo) {
  const auto& cc = cm.chains[c];
  for (std::size_t k = 0; k < cc.K; ++k)
    col_hi[cc.first_col + k] = (k + 1 < lo || k + 1 > hi) ? 0.0 : 1.0;
  row_lo[cc.gub_row] = lo > 0 ? 1.0 : 0.0;
}

/// w_k = sum_{k' >= k} s_k'; z_k = 1 on a full segment, otherwise 0 for
/// binaries and w_{k+1} for relaxed links.
inline std::vector<double> expand(const CompactModel& cm, const MilpModel& model,
                                  const std::vector<double>& xc) {
  std::vector<double> x(model.num_vars(), 0.0);
  for (std::size_t v = 0; v < model.num_vars(); ++v)
    if (cm.var_map[v] != kNone) x[v] = xc[cm.var_map[v]];
  for (std::size_t c = 0; c < cm.chains.size(); ++c) {
    const auto& cc = cm.chains[c];
    const auto& ch = model.chains[c];
    std::vector<double> w(cc.K + 1, 0.0);
    for (std::size_t k = cc.K; k-- > 0;) w[k] = w[k + 1] + xc[cc.first_col + k];
    for (std::size_t k = 0; k < cc.K; ++k) {
      w[k] = std::clamp(w[k], 0.0, 1.0);
      x[ch.w[k]] = w[k];
    }
    for (std::size_t k = 0; k < cc.K; ++k) {
      double z;
      if (w[k] >= 1.0 - kIntTol) z = 1.0;
      else z = cc.binary[k] ? 0.0 : w[k + 1];
      x[ch.z[k]] = std::clamp(z, model.lb[ch.z[k]], model.ub[ch.z[k]]);
    }
  }
  return x;
}

}  // namespace choicerm::lp
