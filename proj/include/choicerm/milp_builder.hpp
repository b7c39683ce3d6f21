#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "choicerm/instance.hpp"
#include "choicerm/lp/chain.hpp"
#include "choicerm/lp/model.hpp"
#include "choicerm/mnl.hpp"
#include "choicerm/pwla.hpp"

namespace choicerm {

/// A pricing problem over the instance's price region: maximize
/// sum_j (r_j - offset_j) P_j(r) subject to
/// demand_scale * A P(r) <= capacity and B r <= d.
/// Products outside `offered` carry the null price.
struct PricingProblem {
  const Instance* instance = nullptr;
  double demand_scale = 1.0;
  std::vector<double> capacity;  // empty: instance capacities
  std::vector<double> offset;    // empty: zero
  std::vector<char> offered;     // empty: all products

  [[nodiscard]] std::span<const double> cap() const {
    return capacity.empty() ? std::span<const double>(instance->c) : std::span<const double>(capacity);
  }
  [[nodiscard]] double off(std::size_t j) const { return offset.empty() ? 0.0 : offset[j]; }
  [[nodiscard]] bool is_offered(std::size_t j) const { return offered.empty() || offered[j]; }
  [[nodiscard]] std::size_t offered_count() const {
    std::size_t k = 0;
    for (std::size_t j = 0; j < instance->n(); ++j) k += is_offered(j) ? 1 : 0;
    return k;
  }

  [[nodiscard]] ErrorConstants constants() const {
    ErrorOptions opt;
    opt.demand_scale = demand_scale;
    opt.capacity.assign(cap().begin(), cap().end());
    opt.offset = offset;
    return error_constants(*instance, opt);
  }

  [[nodiscard]] FeasiblePriceRegion region(double epsilon) const {
    FeasiblePriceRegion reg;
    reg.instance = instance;
    if (!capacity.empty()) reg.capacity_override = capacity;
    reg.demand_scale = demand_scale;
    reg.mode = RegionMode::Slack;
    reg.epsilon = epsilon;
    return reg;
  }

  /// sum_j (r_j - o_j) P_j(r), per arrival.
  [[nodiscard]] double exact_margin(std::span<const double> r) const {
    return expected_margin(instance->mnl, r, offset);
  }

  [[nodiscard]] double approx_margin(const PwlaGrid& grid, std::span<const double> r) const {
    return choicerm::approx_margin(grid, r, offset);
  }
};

struct BoptOptions {
  double delta = 0.0;
  std::vector<double> resource_slack;  // epsilon_i; empty: zero
  bool relax = true;
  bool relax_with_resources = false;
};

/// Variable and row layout of a BOPT model.
struct BoptEncoding {
  std::size_t n = 0;
  std::size_t K = 0;
  std::vector<std::size_t> z, w;        // n x K, lp::kNone for products not offered
  std::vector<std::size_t> r;           // n
  std::vector<std::size_t> relax_boundary;  // per product: z_k continuous for k < boundary
  std::vector<std::size_t> resource_rows;   // per resource; lp::kNone when dropped as vacuous
  std::vector<std::size_t> price_rows;
  std::vector<double> lower, delta_width;
  std::vector<char> offered;
  double delta = 0.0;

  [[nodiscard]] std::size_t zi(std::size_t j, std::size_t k) const { return z[j * K + k]; }
  [[nodiscard]] std::size_t wi(std::size_t j, std::size_t k) const { return w[j * K + k]; }
};

/// Largest k* with tau_0 >= ... >= tau_{k*} where tau_k is the segment slope
/// of f-hat - (o + delta) g-hat. Over that prefix the payoff is concave, so
/// filling segments in order is optimal and z_k, k < k*, may be continuous.
inline std::size_t concave_prefix(const PwlaGrid& grid, std::size_t j, double shift) {
  std::size_t k = 0;
  double prev = grid.slope_f(j, 0) - shift * grid.slope_g(j, 0);
  while (k + 1 < grid.K) {
    const double next = grid.slope_f(j, k + 1) - shift * grid.slope_g(j, k + 1);
    if (next > prev + 1e-12 * std::max(std::abs(prev), std::abs(next))) break;
    prev = next;
    ++k;
  }
  return k;
}

/// The MILP whose optimum is max_r sum(f-hat - o g-hat) - delta (1 + sum g-hat)
/// over the PWLA region with resource slack.
inline std::pair<lp::MilpModel, BoptEncoding> build_bopt(const PwlaGrid& grid,
                                                          const PricingProblem& prob,
                                                          const BoptOptions& opt) {
  const Instance& inst = *prob.instance;
  const std::size_t n = inst.n();
  const std::size_t K = grid.K;
  if (grid.n != n) throw std::invalid_argument("build_bopt: grid does not match instance");
  if (!std::isfinite(opt.delta)) throw std::invalid_argument("build_bopt: delta must be finite");
  const auto cap = prob.cap();

  lp::MilpModel model;
  model.maximize = true;
  BoptEncoding enc;
  enc.n = n;
  enc.K = K;
  enc.delta = opt.delta;
  enc.z.assign(n * K, lp::kNone);
  enc.w.assign(n * K, lp::kNone);
  enc.r.assign(n, lp::kNone);
  enc.relax_boundary.assign(n, 0);
  enc.lower = grid.lower;
  enc.delta_width = grid.delta;
  enc.offered.resize(n);

  // which resource rows can bind anywhere on the box
  std::vector<double> row_rhs(inst.m), row_max(inst.m, 0.0);
  for (std::size_t i = 0; i < inst.m; ++i) {
    row_rhs[i] = cap[i] + (opt.resource_slack.empty() ? 0.0 : opt.resource_slack[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (!prob.is_offered(j)) continue;
      const double coef = prob.demand_scale * inst.a_ij(i, j) - cap[i];
      row_rhs[i] -= coef * grid.g_anchor[j];
      for (std::size_t k = 0; k < K; ++k) row_max[i] += std::max(0.0, coef * (grid.g_at(j, k + 1) - grid.g_at(j, k)));
    }
  }
  bool binding_rows = false;
  for (std::size_t i = 0; i < inst.m; ++i) binding_rows |= row_max[i] > row_rhs[i] + 1e-12;
  const bool relax = opt.relax && (!binding_rows || opt.relax_with_resources);

  model.obj_constant = -opt.delta;
  for (std::size_t j = 0; j < n; ++j) {
    enc.offered[j] = prob.is_offered(j) ? 1 : 0;
    if (!enc.offered[j]) continue;
    const double o = prob.off(j);
    const double shift = o + opt.delta;
    model.obj_constant += grid.f_anchor[j] - shift * grid.g_anchor[j];
    enc.relax_boundary[j] = relax ? concave_prefix(grid, j, shift) : 0;
    lp::ChainTag tag;
    for (std::size_t k = 0; k < K; ++k) {
      const bool binary = k + 1 < K && k >= enc.relax_boundary[j];
      enc.z[j * K + k] = model.add_var(0, 1, 0, binary);
      const double df = grid.f_at(j, k + 1) - grid.f_at(j, k);
      const double dg = grid.g_at(j, k + 1) - grid.g_at(j, k);
      enc.w[j * K + k] = model.add_var(0, 1, df - shift * dg);
      tag.z.push_back(enc.z[j * K + k]);
      tag.w.push_back(enc.w[j * K + k]);
    }
    enc.r[j] = model.add_var(grid.lower[j], grid.upper[j], 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      if (k + 1 < K) tag.rows.push_back(model.add_row({{enc.zi(j, k + 1), 1}, {enc.zi(j, k), -1}}, lp::Sense::Le, 0));
      tag.rows.push_back(model.add_row({{enc.zi(j, k), 1}, {enc.wi(j, k), -1}}, lp::Sense::Le, 0));
      if (k + 1 < K) tag.rows.push_back(model.add_row({{enc.wi(j, k + 1), 1}, {enc.zi(j, k), -1}}, lp::Sense::Le, 0));
    }
    model.chains.push_back(std::move(tag));
    std::vector<lp::Term> decode{{enc.r[j], 1.0}};
    for (std::size_t k = 0; k < K; ++k) decode.push_back({enc.wi(j, k), -grid.delta[j]});
    model.add_row(std::move(decode), lp::Sense::Eq, grid.lower[j]);
  }

  enc.resource_rows.assign(inst.m, lp::kNone);
  for (std::size_t i = 0; i < inst.m; ++i) {
    if (row_max[i] <= row_rhs[i] + 1e-12) continue;
    std::vector<lp::Term> terms;
    for (std::size_t j = 0; j < n; ++j) {
      if (!enc.offered[j]) continue;
      const double coef = prob.demand_scale * inst.a_ij(i, j) - cap[i];
      if (coef == 0.0) continue;
      for (std::size_t k = 0; k < K; ++k)
        terms.push_back({enc.wi(j, k), coef * (grid.g_at(j, k + 1) - grid.g_at(j, k))});
    }
    enc.resource_rows[i] = model.add_row(std::move(terms), lp::Sense::Le, row_rhs[i]);
  }

  for (std::size_t i = 0; i < inst.p(); ++i) {
    std::vector<lp::Term> terms;
    for (std::size_t j = 0; j < n; ++j)
      if (enc.offered[j] && inst.b_ij(i, j) != 0.0) terms.push_back({enc.r[j], inst.b_ij(i, j)});
    enc.price_rows.push_back(model.add_row(std::move(terms), lp::Sense::Le, inst.d[i]));
  }
  return {std::move(model), std::move(enc)};
}

/// r_j = l_j + delta_j sum_k w_jk; null price for products not offered.
inline std::vector<double> decode_prices(const BoptEncoding& enc, const std::vector<double>& x,
                                         double tol = 1e-6) {
  std::vector<double> r(enc.n, kNullPrice);
  for (std::size_t j = 0; j < enc.n; ++j) {
    if (!enc.offered[j]) continue;
    double sum = 0.0;
    for (std::size_t k = 0; k < enc.K; ++k) {
      const double w = x[enc.wi(j, k)];
      const double z = x[enc.zi(j, k)];
      if (z > w + tol || (k + 1 < enc.K && x[enc.wi(j, k + 1)] > z + tol) ||
          (k + 1 < enc.K && x[enc.zi(j, k + 1)] > z + tol))
        throw std::domain_error("decode_prices: chain violated for product " + std::to_string(j));
      sum += w;
    }
    const double upper = enc.lower[j] + enc.delta_width[j] * static_cast<double>(enc.K);
    r[j] = std::clamp(enc.lower[j] + enc.delta_width[j] * sum, enc.lower[j], upper);
  }
  return r;
}

/// Primal vector with the prefix pattern for r: w = (1,..,1, frac, 0,..),
/// z the indicator of completely filled segments.
inline std::vector<double> encode_prices(const BoptEncoding& enc, std::size_t num_vars,
                                         std::span<const double> r) {
  std::vector<double> x(num_vars, 0.0);
  for (std::size_t j = 0; j < enc.n; ++j) {
    if (!enc.offered[j]) continue;
    const double upper = enc.lower[j] + enc.delta_width[j] * static_cast<double>(enc.K);
    if (r[j] < enc.lower[j] - 1e-9 || r[j] > upper + 1e-9)
      throw std::domain_error("encode_prices: price outside the box for product " + std::to_string(j));
    const double filled = std::clamp((r[j] - enc.lower[j]) / enc.delta_width[j], 0.0,
                                     static_cast<double>(enc.K));
    for (std::size_t k = 0; k < enc.K; ++k) {
      const double w = std::clamp(filled - static_cast<double>(k), 0.0, 1.0);
      x[enc.wi(j, k)] = w;
      x[enc.zi(j, k)] = w >= 1.0 && (k + 1 < enc.K ? filled > static_cast<double>(k + 1) : true) ? 1.0 : 0.0;
    }
    x[enc.r[j]] = enc.lower[j] + enc.delta_width[j] * filled;
  }
  return x;
}

}  // namespace choicerm
