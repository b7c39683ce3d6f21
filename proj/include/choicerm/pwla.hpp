#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "choicerm/instance.hpp"
#include "choicerm/mnl.hpp"

namespace choicerm {

/// K-segment interpolants of f_j(r) = r g_j(r) and g_j(r) = e^{(a_j - r)/b_j}
/// on [l_j, u_j] with breakpoints l_j + k delta_j.
struct PwlaGrid {
  std::size_t n = 0;
  std::size_t K = 0;
  std::vector<double> lower, upper, delta;
  std::vector<double> f_anchor, g_anchor;  // f_j(l_j), g_j(l_j)
  std::vector<double> f_values, g_values;  // n x (K+1) values at the breakpoints
  std::vector<double> gamma_f, gamma_g;    // n x K segment slopes
  std::vector<std::size_t> concavity_cutoff;

  [[nodiscard]] double breakpoint(std::size_t j, std::size_t k) const {
    return k == K ? upper[j] : lower[j] + static_cast<double>(k) * delta[j];
  }
  [[nodiscard]] double slope_f(std::size_t j, std::size_t k) const { return gamma_f[j * K + k]; }
  [[nodiscard]] double slope_g(std::size_t j, std::size_t k) const { return gamma_g[j * K + k]; }
  [[nodiscard]] double f_at(std::size_t j, std::size_t k) const { return f_values[j * (K + 1) + k]; }
  [[nodiscard]] double g_at(std::size_t j, std::size_t k) const { return g_values[j * (K + 1) + k]; }

  /// Left-closed segment containing r; r = u_j falls in the last one.
  [[nodiscard]] std::size_t segment(std::size_t j, double r) const {
    check_domain(j, r);
    const double pos = std::floor((r - lower[j]) / delta[j]);
    if (pos <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(pos), K - 1);
  }

  [[nodiscard]] double eval_fhat(std::size_t j, double r) const {
    const auto k = segment(j, r);
    if (r == breakpoint(j, k)) return f_at(j, k);
    return f_at(j, k) + (r - breakpoint(j, k)) * slope_f(j, k);
  }

  [[nodiscard]] double eval_ghat(std::size_t j, double r) const {
    const auto k = segment(j, r);
    if (r == breakpoint(j, k)) return g_at(j, k);
    return g_at(j, k) + (r - breakpoint(j, k)) * slope_g(j, k);
  }

 private:
  void check_domain(std::size_t j, double r) const {
    if (j >= n) throw std::out_of_range("pwla: product index out of range");
    const double tol = 1e-9 * std::max(1.0, std::abs(upper[j]));
    if (!(r >= lower[j] - tol && r <= upper[j] + tol))
      throw std::domain_error("pwla: price " + std::to_string(r) + " outside [l, u] of product " +
                              std::to_string(j));
  }
};

inline PwlaGrid build_grid(const MnlModel& mnl, std::span<const double> l,
                           std::span<const double> u, std::size_t K) {
  if (K == 0) throw std::invalid_argument("pwla: K must be at least 1");
  mnl.validate();
  const std::size_t n = mnl.size();
  if (l.size() != n || u.size() != n) throw std::invalid_argument("pwla: bound vectors mismatch");
  PwlaGrid g;
  g.n = n;
  g.K = K;
  g.lower.assign(l.begin(), l.end());
  g.upper.assign(u.begin(), u.end());
  g.delta.resize(n);
  g.f_anchor.resize(n);
  g.g_anchor.resize(n);
  g.f_values.resize(n * (K + 1));
  g.g_values.resize(n * (K + 1));
  g.gamma_f.resize(n * K);
  g.gamma_g.resize(n * K);
  g.concavity_cutoff.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (!(l[j] < u[j])) throw std::invalid_argument("pwla: l must be below u for product " + std::to_string(j));
    g.delta[j] = (u[j] - l[j]) / static_cast<double>(K);
    for (std::size_t k = 0; k <= K; ++k) {
      const double x = g.breakpoint(j, k);
      g.g_values[j * (K + 1) + k] = mnl.attraction(j, x);
      g.f_values[j * (K + 1) + k] = mnl.revenue_term(j, x);
    }
    for (std::size_t k = 0; k < K; ++k) {
      const double width = g.breakpoint(j, k + 1) - g.breakpoint(j, k);
      g.gamma_f[j * K + k] = (g.f_at(j, k + 1) - g.f_at(j, k)) / width;
      g.gamma_g[j * K + k] = (g.g_at(j, k + 1) - g.g_at(j, k)) / width;
    }
    g.f_anchor[j] = g.f_at(j, 0);
    g.g_anchor[j] = g.g_at(j, 0);
    // f_j is concave below 2 b_j; segments ending at or before it have
    // nonincreasing slopes.
    const double cut = std::floor((2.0 * mnl.b[j] - l[j]) / g.delta[j]);
    g.concavity_cutoff[j] = cut <= 0.0 ? 0 : std::min(static_cast<std::size_t>(cut), K);
  }
  return g;
}

inline PwlaGrid build_grid(const Instance& inst, std::size_t K) {
  return build_grid(inst.mnl, inst.l, inst.u, K);
}

/// F-hat(r) = sum (f-hat_j - o_j g-hat_j) / (1 + sum g-hat_j); null prices drop out.
inline double approx_margin(const PwlaGrid& grid, std::span<const double> r,
                            std::span<const double> offset = {}) {
  double num = 0.0;
  double den = 1.0;
  for (std::size_t j = 0; j < grid.n; ++j) {
    if (is_null_price(r[j])) continue;
    const double gh = grid.eval_ghat(j, r[j]);
    num += grid.eval_fhat(j, r[j]) - (offset.empty() ? 0.0 : offset[j]) * gh;
    den += gh;
  }
  return num / den;
}

inline double approx_revenue(const PwlaGrid& grid, std::span<const double> r) {
  return approx_margin(grid, r);
}

/// psi-hat_i(r) = sum_j (scale a_ij - c_i) g-hat_j(r_j)
inline std::vector<double> approx_resource_lhs(const PwlaGrid& grid, std::span<const double> A,
                                               std::span<const double> c,
                                               std::span<const double> r, double scale = 1.0) {
  std::vector<double> psi(c.size(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = 0; j < grid.n; ++j)
      if (!is_null_price(r[j]))
        psi[i] += (scale * A[i * grid.n + j] - c[i]) * grid.eval_ghat(j, r[j]);
  return psi;
}

struct ErrorConstants {
  double alpha = 0.0;
  double beta = 0.0;
  double omega = 0.0;
  std::vector<double> eta;  // per resource
  double r_u = 0.0;

  [[nodiscard]] double eta_max() const {
    return eta.empty() ? 0.0 : *std::max_element(eta.begin(), eta.end());
  }
};

/// Optional generalizations: demand scale on the consumption rows,
/// capacity override and per-product payoff offsets (payoff (r - o_j) g_j).
struct ErrorOptions {
  double demand_scale = 1.0;
  std::vector<double> capacity;
  std::vector<double> offset;
};

/// Closed-form constants; |F - F-hat| <= omega/K and |psi_i - psi-hat_i| <= eta_i/K.
inline ErrorConstants error_constants(const MnlModel& mnl, std::span<const double> l,
                                      std::span<const double> u, std::span<const double> A,
                                      std::span<const double> c, const ErrorOptions& opt = {}) {
  const std::size_t n = mnl.size();
  const std::span<const double> cap = opt.capacity.empty() ? c : std::span<const double>(opt.capacity);
  const std::size_t m = cap.size();
  ErrorConstants e;
  e.eta.assign(m, 0.0);
  double den = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double o = opt.offset.empty() ? 0.0 : opt.offset[j];
    const double reach = std::max(std::abs(u[j] - o), std::abs(l[j] - o));
    e.r_u = std::max(e.r_u, reach);
    const double top = std::exp((mnl.a[j] - l[j]) / mnl.b[j]);
    const double width = u[j] - l[j];
    e.alpha += top * (1.0 + reach / mnl.b[j]) * width;
    e.beta += top / mnl.b[j] * width;
    den += std::exp((mnl.a[j] - u[j]) / mnl.b[j]);
    for (std::size_t i = 0; i < m; ++i)
      e.eta[i] += std::abs(opt.demand_scale * A[i * n + j] - cap[i]) * top / mnl.b[j] * width;
  }
  e.omega = (e.alpha + e.beta * e.r_u) / den;
  return e;
}

inline ErrorConstants error_constants(const Instance& inst, const ErrorOptions& opt = {}) {
  return error_constants(inst.mnl, inst.l, inst.u, inst.A, inst.c, opt);
}

}  // namespace choicerm
