#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace choicerm {

/// Price assigned to a product that must not be sold. Its purchase
/// probability is exactly zero.
inline constexpr double kNullPrice = std::numeric_limits<double>::infinity();

inline bool is_null_price(double r) { return std::isinf(r) && r > 0.0; }

/// Multinomial-logit demand with utilities v_j = (a_j - r_j) / b_j and a
/// no-purchase option of utility zero.
struct MnlModel {
  std::vector<double> a;  // utility intercepts
  std::vector<double> b;  // price-sensitivity denominators, > 0

  [[nodiscard]] std::size_t size() const { return a.size(); }

  void validate() const {
    if (a.size() != b.size())
      throw std::invalid_argument("mnl: a and b differ in length");
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (!(b[j] > 0.0) || !std::isfinite(b[j]))
        throw std::invalid_argument("mnl: b[" + std::to_string(j) +
                                    "] must be finite and positive");
      if (!std::isfinite(a[j]))
        throw std::invalid_argument("mnl: a[" + std::to_string(j) + "] is not finite");
    }
  }

  /// e^{(a_j - r)/b_j}; zero at the null price.
  [[nodiscard]] double attraction(std::size_t j, double r) const {
    if (is_null_price(r)) return 0.0;
    return std::exp((a[j] - r) / b[j]);
  }

  /// r e^{(a_j - r)/b_j}
  [[nodiscard]] double revenue_term(std::size_t j, double r) const {
    if (is_null_price(r)) return 0.0;
    return r * attraction(j, r);
  }
};

namespace detail {
inline void check_prices(const MnlModel& model, std::span<const double> r) {
  model.validate();
  if (r.size() != model.size())
    throw std::invalid_argument("mnl: price vector has length " + std::to_string(r.size()) +
                                ", expected " + std::to_string(model.size()));
  for (double v : r)
    if (std::isnan(v) || (std::isinf(v) && v < 0.0))
      throw std::invalid_argument("mnl: prices must be finite or the null price");
}
}  // namespace detail

/// Purchase probabilities, index 0 is the no-purchase option.
/// Exponents are shifted by the largest utility so nothing overflows.
inline std::vector<double> choice_probabilities(const MnlModel& model, std::span<const double> r) {
  detail::check_prices(model, r);
  const std::size_t n = model.size();
  double vmax = 0.0;  // no-purchase utility
  for (std::size_t j = 0; j < n; ++j)
    if (!is_null_price(r[j])) vmax = std::max(vmax, (model.a[j] - r[j]) / model.b[j]);

  std::vector<double> p(n + 1, 0.0);
  p[0] = std::exp(-vmax);
  double total = p[0];
  for (std::size_t j = 0; j < n; ++j) {
    if (is_null_price(r[j])) continue;
    p[j + 1] = std::exp((model.a[j] - r[j]) / model.b[j] - vmax);
    total += p[j + 1];
  }
  for (double& v : p) v /= total;
  return p;
}

/// Sum over offered products of (r_j - offset_j) P_j(r).
inline double expected_margin(const MnlModel& model, std::span<const double> r,
                              std::span<const double> offset) {
  const auto p = choice_probabilities(model, r);
  double total = 0.0;
  for (std::size_t j = 0; j < model.size(); ++j) {
    if (is_null_price(r[j])) continue;
    const double o = offset.empty() ? 0.0 : offset[j];
    total += (r[j] - o) * p[j + 1];
  }
  return total;
}

/// F(r) = sum_j r_j P_j(r)
inline double expected_revenue(const MnlModel& model, std::span<const double> r) {
  return expected_margin(model, r, {});
}

/// Gradient of sum_j (r_j - o_j) P_j(r) with respect to the offered prices.
/// dF/dr_k = P_k (1 - (r_k - o_k - F) / b_k). Null-priced entries get 0.
inline std::vector<double> expected_margin_gradient(const MnlModel& model,
                                                    std::span<const double> r,
                                                    std::span<const double> offset) {
  const auto p = choice_probabilities(model, r);
  const double f = expected_margin(model, r, offset);
  std::vector<double> grad(model.size(), 0.0);
  for (std::size_t k = 0; k < model.size(); ++k) {
    if (is_null_price(r[k])) continue;
    const double o = offset.empty() ? 0.0 : offset[k];
    grad[k] = p[k + 1] * (1.0 - (r[k] - o - f) / model.b[k]);
  }
  return grad;
}

/// psi_i(r) = sum_j (scale a_ij - c_i) g_j(r_j). The scaled consumption row
/// scale * (A P(r))_i <= c_i holds exactly when psi_i(r) <= c_i.
/// A is row-major m x n.
inline std::vector<double> resource_lhs(const MnlModel& model, std::span<const double> A,
                                        std::span<const double> c, std::span<const double> r,
                                        double scale = 1.0) {
  detail::check_prices(model, r);
  const std::size_t n = model.size();
  const std::size_t m = c.size();
  if (A.size() != m * n)
    throw std::invalid_argument("resource_lhs: consumption matrix must be " +
                                std::to_string(m) + "x" + std::to_string(n));
  std::vector<double> psi(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      psi[i] += (scale * A[i * n + j] - c[i]) * model.attraction(j, r[j]);
  return psi;
}

}  // namespace choicerm
