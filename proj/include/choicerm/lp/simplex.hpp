#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "choicerm/lp/model.hpp"

namespace choicerm::lp {

/// Column-compressed LP: minimize cost.x subject to
/// row_lo <= A x <= row_hi and col_lo <= x <= col_hi.
struct LpProblem {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<std::size_t> col_start;  // n + 1 offsets
  std::vector<std::size_t> row_index;
  std::vector<double> value;
  std::vector<double> cost;
  std::vector<double> col_lo, col_hi;
  std::vector<double> row_lo, row_hi;
};

enum class VarState : std::uint8_t { Basic, Lower, Upper };

/// Structural states first, then one logical per row.
struct Basis {
  std::vector<VarState> state;
};

struct LpOutcome {
  Status status = Status::Infeasible;
  std::vector<double> x;
  std::vector<double> row_activity;
  std::vector<double> row_dual;  // d objective / d row bound
  std::vector<double> reduced_cost;
  double objective = 0.0;
  std::size_t iterations = 0;
  Basis basis;
};

struct SimplexOptions {
  double feas_tol = kFeasTol;
  double opt_tol = 1e-9;
  double pivot_tol = 1e-9;
  std::size_t refactor_every = 64;
  std::size_t degenerate_switch = 50;
  std::size_t max_iterations = 0;  // 0 picks a size-based cap
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Bounded-variable revised primal simplex with an explicit dense basis
/// inverse. Row i carries a logical s_i with A_i x - s_i = 0 and
/// s_i in [row_lo_i, row_hi_i]; the all-logical basis is the cold start.
class Simplex {
 public:
  Simplex(const LpProblem& p, const SimplexOptions& opt) : p_(p), opt_(opt) {
    n_ = p.n;
    m_ = p.m;
    nt_ = n_ + m_;
    sigma_.assign(m_, 0.0);
    for (std::size_t e = 0; e < p.value.size(); ++e)
      sigma_[p.row_index[e]] = std::max(sigma_[p.row_index[e]], std::abs(p.value[e]));
    for (auto& s : sigma_) s = s > 0.0 ? 1.0 / s : 1.0;
    val_.resize(p.value.size());
    for (std::size_t e = 0; e < p.value.size(); ++e) val_[e] = p.value[e] * sigma_[p.row_index[e]];
    lo_.resize(nt_);
    hi_.resize(nt_);
    c_.assign(nt_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      lo_[j] = p.col_lo[j];
      hi_[j] = p.col_hi[j];
      c_[j] = p.cost[j];
      cmax_ = std::max(cmax_, std::abs(c_[j]));
    }
    for (std::size_t i = 0; i < m_; ++i) {
      lo_[n_ + i] = std::isfinite(p.row_lo[i]) ? p.row_lo[i] * sigma_[i] : -kInf;
      hi_[n_ + i] = std::isfinite(p.row_hi[i]) ? p.row_hi[i] * sigma_[i] : kInf;
    }
    max_iter_ = opt.max_iterations ? opt.max_iterations : 20000 + 50 * nt_;
  }

  LpOutcome run(const Basis* warm) {
    LpOutcome out;
    for (std::size_t k = 0; k < nt_; ++k)
      if (lo_[k] > hi_[k] + opt_.feas_tol) return finish(out, Status::Infeasible);
    init_basis(warm);
    refactor();
    compute_basics();

    std::size_t since_refactor = 0;
    std::size_t degenerate = 0;
    std::vector<double> cb(m_), y(m_), alpha(m_);
    while (true) {
      if (iters_ >= max_iter_) return finish(out, Status::IterationLimit);
      const bool phase1 = max_basic_violation() > opt_.feas_tol;
      for (std::size_t i = 0; i < m_; ++i) {
        const std::size_t k = head_[i];
        if (phase1) {
          cb[i] = x_[k] < lo_[k] - opt_.feas_tol ? -1.0 : (x_[k] > hi_[k] + opt_.feas_tol ? 1.0 : 0.0);
        } else {
          cb[i] = c_[k];
        }
      }
      compute_y(cb, y);
      const bool bland = degenerate > opt_.degenerate_switch;
      const double dtol = opt_.opt_tol * (phase1 ? 1.0 : std::max(1.0, cmax_));
      const std::size_t q = price(y, phase1, bland, dtol);
      if (q == nt_) {
        if (phase1) return finish(out, Status::Infeasible);
        if (since_refactor > 0) {
          refactor();
          compute_basics();
          since_refactor = 0;
          if (max_basic_violation() > opt_.feas_tol) continue;
          compute_y(basic_costs(cb), y);
          if (price(y, false, false, dtol) != nt_) continue;
        }
        return finish(out, Status::Optimal);
      }

      column_times_binv(q, alpha);
      const double dir = state_[q] == VarState::Lower ? 1.0 : -1.0;
      std::size_t leave = m_;
      double theta = kInf;
      bool leave_at_upper = false;
      ratio_test(alpha, dir, phase1, bland, leave, theta, leave_at_upper);
      const double flip = hi_[q] - lo_[q];
      if (leave == m_ && !std::isfinite(flip))
        throw SolverError("simplex: unbounded direction on a boxed model");
      if (flip <= theta) {
        theta = flip;
        leave = m_;
      }
      for (std::size_t i = 0; i < m_; ++i) x_[head_[i]] -= dir * alpha[i] * theta;
      x_[q] += dir * theta;
      if (leave == m_) {
        state_[q] = state_[q] == VarState::Lower ? VarState::Upper : VarState::Lower;
        x_[q] = state_[q] == VarState::Lower ? lo_[q] : hi_[q];
      } else {
        const std::size_t out_var = head_[leave];
        state_[out_var] = leave_at_upper ? VarState::Upper : VarState::Lower;
        x_[out_var] = leave_at_upper ? hi_[out_var] : lo_[out_var];
        head_[leave] = q;
        state_[q] = VarState::Basic;
        pivot(leave, alpha);
        ++since_refactor;
      }
      degenerate = theta < 1e-12 ? degenerate + 1 : 0;
      ++iters_;
      if (since_refactor >= opt_.refactor_every) {
        refactor();
        compute_basics();
        since_refactor = 0;
      }
    }
  }

 private:
  const LpProblem& p_;
  SimplexOptions opt_;
  std::size_t n_ = 0, m_ = 0, nt_ = 0;
  std::vector<double> sigma_, val_, lo_, hi_, c_, x_;
  double cmax_ = 0.0;
  std::vector<VarState> state_;
  std::vector<std::size_t> head_;
  std::vector<double> binv_;  // column-major m x m
  std::size_t iters_ = 0;
  std::size_t max_iter_ = 0;

  [[nodiscard]] double nonbasic_value(std::size_t k, VarState s) const {
    if (s == VarState::Upper) return std::isfinite(hi_[k]) ? hi_[k] : lo_[k];
    return std::isfinite(lo_[k]) ? lo_[k] : hi_[k];
  }

  void init_basis(const Basis* warm) {
    state_.assign(nt_, VarState::Lower);
    x_.assign(nt_, 0.0);
    head_.clear();
    bool use_warm = warm && warm->state.size() == nt_;
    if (use_warm) {
      std::size_t basic = 0;
      for (auto s : warm->state) basic += s == VarState::Basic ? 1 : 0;
      use_warm = basic == m_;
    }
    if (use_warm) {
      state_ = warm->state;
      for (std::size_t k = 0; k < nt_; ++k)
        if (state_[k] == VarState::Basic) head_.push_back(k);
    } else {
      for (std::size_t j = 0; j < n_; ++j) state_[j] = c_[j] < 0.0 ? VarState::Upper : VarState::Lower;
      for (std::size_t i = 0; i < m_; ++i) {
        state_[n_ + i] = VarState::Basic;
        head_.push_back(n_ + i);
      }
    }
    for (std::size_t k = 0; k < nt_; ++k) {
      if (state_[k] == VarState::Basic) continue;
      if (state_[k] == VarState::Lower && !std::isfinite(lo_[k])) state_[k] = VarState::Upper;
      if (state_[k] == VarState::Upper && !std::isfinite(hi_[k])) state_[k] = VarState::Lower;
      x_[k] = nonbasic_value(k, state_[k]);
    }
  }

  template <typename F>
  void for_column(std::size_t k, F&& f) const {
    if (k < n_) {
      for (std::size_t e = p_.col_start[k]; e < p_.col_start[k + 1]; ++e) f(p_.row_index[e], val_[e]);
    } else {
      f(k - n_, -1.0);
    }
  }

  /// Gauss-Jordan inverse of the basis with partial pivoting. Dependent
  /// columns are swapped for logicals of uncovered rows.
  void refactor() {
    while (true) {
      std::vector<double> M(m_ * m_, 0.0), inv(m_ * m_, 0.0);  // row-major
      for (std::size_t k = 0; k < m_; ++k) {
        for_column(head_[k], [&](std::size_t r, double v) { M[r * m_ + k] += v; });
        inv[k * m_ + k] = 1.0;
      }
      std::vector<char> used(m_, 0);
      std::vector<std::size_t> prow(m_, m_), singular;
      for (std::size_t k = 0; k < m_; ++k) {
        std::size_t piv = m_;
        double best = 1e-11;
        for (std::size_t i = 0; i < m_; ++i)
          if (!used[i] && std::abs(M[i * m_ + k]) > best) {
            best = std::abs(M[i * m_ + k]);
            piv = i;
          }
        if (piv == m_) {
          singular.push_back(k);
          continue;
        }
        used[piv] = 1;
        prow[k] = piv;
        const double d = 1.0 / M[piv * m_ + k];
        double* mp = &M[piv * m_];
        double* ip = &inv[piv * m_];
        for (std::size_t c = 0; c < m_; ++c) {
          mp[c] *= d;
          ip[c] *= d;
        }
        for (std::size_t i = 0; i < m_; ++i) {
          if (i == piv) continue;
          const double f = M[i * m_ + k];
          if (f == 0.0) continue;
          double* mi = &M[i * m_];
          double* ii = &inv[i * m_];
          for (std::size_t c = 0; c < m_; ++c) {
            mi[c] -= f * mp[c];
            ii[c] -= f * ip[c];
          }
        }
      }
      if (singular.empty()) {
        binv_.assign(m_ * m_, 0.0);
        for (std::size_t k = 0; k < m_; ++k)
          for (std::size_t c = 0; c < m_; ++c) binv_[c * m_ + k] = inv[prow[k] * m_ + c];
        return;
      }
      std::size_t next_row = 0;
      for (auto k : singular) {
        while (used[next_row]) ++next_row;
        used[next_row] = 1;
        const std::size_t old = head_[k];
        const double mid_lo = std::isfinite(lo_[old]) ? std::abs(x_[old] - lo_[old]) : kInf;
        const double mid_hi = std::isfinite(hi_[old]) ? std::abs(x_[old] - hi_[old]) : kInf;
        state_[old] = mid_lo <= mid_hi ? VarState::Lower : VarState::Upper;
        x_[old] = nonbasic_value(old, state_[old]);
        head_[k] = n_ + next_row;
        state_[n_ + next_row] = VarState::Basic;
      }
    }
  }

  void compute_basics() {
    std::vector<double> v(m_, 0.0);
    for (std::size_t k = 0; k < nt_; ++k) {
      if (state_[k] == VarState::Basic || x_[k] == 0.0) continue;
      const double xv = x_[k];
      for_column(k, [&](std::size_t r, double a) { v[r] += a * xv; });
    }
    for (std::size_t i = 0; i < m_; ++i) x_[head_[i]] = 0.0;
    for (std::size_t r = 0; r < m_; ++r) {
      if (v[r] == 0.0) continue;
      const double* col = &binv_[r * m_];
      for (std::size_t i = 0; i < m_; ++i) x_[head_[i]] -= col[i] * v[r];
    }
  }

  [[nodiscard]] double max_basic_violation() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t k = head_[i];
      worst = std::max({worst, lo_[k] - x_[k], x_[k] - hi_[k]});
    }
    return worst;
  }

  std::vector<double>& basic_costs(std::vector<double>& cb) const {
    for (std::size_t i = 0; i < m_; ++i) cb[i] = c_[head_[i]];
    return cb;
  }

  void compute_y(const std::vector<double>& cb, std::vector<double>& y) const {
    for (std::size_t r = 0; r < m_; ++r) {
      const double* col = &binv_[r * m_];
      double s = 0.0;
      for (std::size_t i = 0; i < m_; ++i) s += cb[i] * col[i];
      y[r] = s;
    }
  }

  [[nodiscard]] double reduced_cost(std::size_t k, const std::vector<double>& y, bool phase1) const {
    double d = phase1 ? 0.0 : c_[k];
    for_column(k, [&](std::size_t r, double a) { d -= y[r] * a; });
    return d;
  }

  std::size_t price(const std::vector<double>& y, bool phase1, bool bland, double dtol) const {
    std::size_t best_k = nt_;
    double best = 0.0;
    for (std::size_t k = 0; k < nt_; ++k) {
      if (state_[k] == VarState::Basic || hi_[k] - lo_[k] <= 0.0) continue;
      const double d = reduced_cost(k, y, phase1);
      const double gain = state_[k] == VarState::Lower ? -d : d;
      if (gain <= dtol) continue;
      if (bland) return k;
      if (gain > best) {
        best = gain;
        best_k = k;
      }
    }
    return best_k;
  }

  void column_times_binv(std::size_t q, std::vector<double>& alpha) const {
    std::fill(alpha.begin(), alpha.end(), 0.0);
    for_column(q, [&](std::size_t r, double a) {
      const double* col = &binv_[r * m_];
      for (std::size_t i = 0; i < m_; ++i) alpha[i] += col[i] * a;
    });
  }

  /// Harris two-pass ratio test; in phase 1 an infeasible basic variable
  /// stops at the bound it is approaching.
  void ratio_test(const std::vector<double>& alpha, double dir, bool phase1, bool bland,
                  std::size_t& leave, double& theta, bool& at_upper) const {
    const double tol = opt_.feas_tol;
    auto limits = [&](std::size_t i, double rate, double relax, double& ratio, bool& upper) {
      const std::size_t k = head_[i];
      const double xv = x_[k];
      if (phase1 && xv < lo_[k] - tol) {
        if (rate <= 0.0) return false;
        ratio = (lo_[k] - xv) / rate;
        upper = false;
        return true;
      }
      if (phase1 && xv > hi_[k] + tol) {
        if (rate >= 0.0) return false;
        ratio = (hi_[k] - xv) / rate;
        upper = true;
        return true;
      }
      if (rate < 0.0 && std::isfinite(lo_[k])) {
        ratio = (lo_[k] - relax - xv) / rate;
        upper = false;
        return true;
      }
      if (rate > 0.0 && std::isfinite(hi_[k])) {
        ratio = (hi_[k] + relax - xv) / rate;
        upper = true;
        return true;
      }
      return false;
    };

    leave = m_;
    theta = kInf;
    if (bland) {
      for (std::size_t i = 0; i < m_; ++i) {
        const double rate = -dir * alpha[i];
        if (std::abs(rate) < opt_.pivot_tol) continue;
        double ratio;
        bool upper;
        if (!limits(i, rate, 0.0, ratio, upper)) continue;
        ratio = std::max(ratio, 0.0);
        if (ratio < theta - 1e-12 ||
            (ratio <= theta + 1e-12 && leave != m_ && head_[i] < head_[leave])) {
          theta = std::min(theta, ratio);
          leave = i;
          at_upper = upper;
        }
      }
      return;
    }
    double bound = kInf;
    for (std::size_t i = 0; i < m_; ++i) {
      const double rate = -dir * alpha[i];
      if (std::abs(rate) < opt_.pivot_tol) continue;
      double ratio;
      bool upper;
      if (limits(i, rate, tol, ratio, upper)) bound = std::min(bound, ratio);
    }
    if (!std::isfinite(bound)) return;
    double best_rate = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const double rate = -dir * alpha[i];
      if (std::abs(rate) < opt_.pivot_tol) continue;
      double ratio;
      bool upper;
      if (!limits(i, rate, 0.0, ratio, upper) || ratio > bound) continue;
      if (std::abs(rate) > best_rate) {
        best_rate = std::abs(rate);
        leave = i;
        at_upper = upper;
        theta = std::max(ratio, 0.0);
      }
    }
  }

  void pivot(std::size_t r, const std::vector<double>& alpha) {
    const double ar = alpha[r];
    for (std::size_t c = 0; c < m_; ++c) {
      double* col = &binv_[c * m_];
      const double t = col[r] / ar;
      if (t == 0.0) continue;
      for (std::size_t i = 0; i < m_; ++i) col[i] -= alpha[i] * t;
      col[r] = t;
    }
  }

  LpOutcome& finish(LpOutcome& out, Status status) {
    out.status = status;
    out.iterations = iters_;
    if (status != Status::Optimal) return out;
    out.x.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
    for (std::size_t j = 0; j < n_; ++j) out.x[j] = std::clamp(out.x[j], lo_[j], hi_[j]);
    out.row_activity.assign(m_, 0.0);
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t e = p_.col_start[j]; e < p_.col_start[j + 1]; ++e)
        out.row_activity[p_.row_index[e]] += p_.value[e] * out.x[j];
    std::vector<double> cb(m_), y(m_);
    compute_y(basic_costs(cb), y);
    out.row_dual.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) out.row_dual[i] = y[i] * sigma_[i];
    out.reduced_cost.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) out.reduced_cost[j] = reduced_cost(j, y, false);
    out.objective = 0.0;
    for (std::size_t j = 0; j < n_; ++j) out.objective += c_[j] * out.x[j];
    out.basis.state = state_;
    return out;
  }
};

}  // namespace detail

inline LpOutcome solve_lp_problem(const LpProblem& problem, const Basis* warm = nullptr,
                                  const SimplexOptions& opt = {}) {
  detail::Simplex s(problem, opt);
  return s.run(warm);
}

}  // namespace choicerm::lp
