#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "choicerm/mnl.hpp"
#include "choicerm/rng.hpp"

namespace choicerm {

class InstanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A network pricing problem: n products sharing m resources over T periods.
/// Matrices are dense row-major.
struct Instance {
  MnlModel mnl;
  std::size_t m = 0;
  std::vector<double> A;  // m x n, entries in {0,1}
  std::vector<double> c;  // m capacities, positive integers
  std::vector<double> B;  // p x n price-constraint matrix
  std::vector<double> d;  // p right-hand sides
  std::vector<double> l;  // price lower bounds
  std::vector<double> u;  // price upper bounds
  double lambda = 1.0;    // arrival probability per period
  std::size_t T = 1;

  [[nodiscard]] std::size_t n() const { return mnl.size(); }
  [[nodiscard]] std::size_t p() const { return d.size(); }
  [[nodiscard]] double a_ij(std::size_t i, std::size_t j) const { return A[i * n() + j]; }
  [[nodiscard]] double b_ij(std::size_t i, std::size_t j) const { return B[i * n() + j]; }
  [[nodiscard]] double max_upper() const { return *std::max_element(u.begin(), u.end()); }

  bool operator==(const Instance& o) const {
    return mnl.a == o.mnl.a && mnl.b == o.mnl.b && m == o.m && A == o.A && c == o.c &&
           B == o.B && d == o.d && l == o.l && u == o.u && lambda == o.lambda && T == o.T;
  }

  /// Throws InstanceError naming the first offending field.
  void validate() const {
    const std::size_t nn = n();
    auto fail = [](const std::string& msg) { throw InstanceError("instance: " + msg); };
    if (nn == 0) fail("no products");
    if (mnl.b.size() != nn) fail("field 'b' has length " + std::to_string(mnl.b.size()));
    for (std::size_t j = 0; j < nn; ++j) {
      if (!(mnl.b[j] > 0.0) || !std::isfinite(mnl.b[j]))
        fail("b[" + std::to_string(j) + "] must be positive");
      if (!std::isfinite(mnl.a[j])) fail("a[" + std::to_string(j) + "] is not finite");
    }
    if (l.size() != nn) fail("field 'l' has length " + std::to_string(l.size()));
    if (u.size() != nn) fail("field 'u' has length " + std::to_string(u.size()));
    for (std::size_t j = 0; j < nn; ++j) {
      if (!(l[j] > 0.0)) fail("product " + std::to_string(j) + ": lower bound must be positive");
      if (!(l[j] < u[j]) || !std::isfinite(u[j]))
        fail("product " + std::to_string(j) + ": lower bound l must be below upper bound u");
    }
    if (A.size() != m * nn) fail("field 'A' must have m*n entries");
    for (std::size_t k = 0; k < A.size(); ++k)
      if (A[k] != 0.0 && A[k] != 1.0)
        fail("A[" + std::to_string(k / nn) + "][" + std::to_string(k % nn) + "] must be 0 or 1");
    if (c.size() != m) fail("field 'c' must have m entries");
    for (std::size_t i = 0; i < m; ++i)
      if (!(c[i] > 0.0) || c[i] != std::floor(c[i]))
        fail("capacity c[" + std::to_string(i) + "] must be a positive integer");
    if (B.size() != d.size() * nn) fail("field 'B' must have p*n entries");
    for (double v : B)
      if (!std::isfinite(v)) fail("field 'B' has a non-finite entry");
    for (double v : d)
      if (!std::isfinite(v)) fail("field 'd' has a non-finite entry");
    if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda must lie in [0,1]");
  }
};

/// Dimensions and seed for random instance generation.
struct GeneratorSpec {
  std::size_t n = 3;
  std::size_t m = 2;
  std::size_t T = 200;
  std::size_t capacity = 60;
  std::uint64_t seed = 0;
  std::size_t price_rows = 3;
};

/// Random instance: a ~ U[10,100], b ~ U[1,100], l ~ U[100,150],
/// u ~ U[250,400], A ~ U{0,1}, price rows with U{floor(0.5n)..ceil(0.7n)}
/// ones and d ~ U[0.3 sum u, 0.5 sum u], lambda = 1.
/// A price row whose ones cannot all sit at their lower bounds is
/// re-drawn, so the price box always meets B r <= d.
inline Instance generate(const GeneratorSpec& spec) {
  if (spec.n < 1 || spec.m < 1 || spec.T < 1 || spec.capacity < 1)
    throw std::invalid_argument("generate: n, m, T and capacity must be at least 1");
  Rng rng(spec.seed);
  const std::size_t n = spec.n;
  Instance inst;
  inst.m = spec.m;
  inst.T = spec.T;
  inst.lambda = 1.0;
  inst.mnl.a.resize(n);
  inst.mnl.b.resize(n);
  inst.l.resize(n);
  inst.u.resize(n);
  for (std::size_t j = 0; j < n; ++j) inst.mnl.a[j] = rng.uniform(10.0, 100.0);
  for (std::size_t j = 0; j < n; ++j) inst.mnl.b[j] = rng.uniform(1.0, 100.0);
  for (std::size_t j = 0; j < n; ++j) inst.l[j] = rng.uniform(100.0, 150.0);
  for (std::size_t j = 0; j < n; ++j) inst.u[j] = rng.uniform(250.0, 400.0);
  inst.A.resize(spec.m * n);
  for (auto& v : inst.A) v = static_cast<double>(rng.uniform_int(0, 1));
  inst.c.assign(spec.m, static_cast<double>(spec.capacity));

  const double sum_u = std::accumulate(inst.u.begin(), inst.u.end(), 0.0);
  const auto lo_count = static_cast<std::int64_t>(std::max<double>(1.0, std::floor(0.5 * n)));
  const auto hi_count =
      static_cast<std::int64_t>(std::min<double>(static_cast<double>(n), std::ceil(0.7 * n)));
  inst.B.assign(spec.price_rows * n, 0.0);
  inst.d.assign(spec.price_rows, 0.0);
  std::vector<std::size_t> order(n);
  for (std::size_t row = 0; row < spec.price_rows; ++row) {
    for (int attempt = 0;; ++attempt) {
      const auto ones = static_cast<std::size_t>(rng.uniform_int(lo_count, hi_count));
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng.shuffle(order);
      double floor_sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) inst.B[row * n + j] = 0.0;
      for (std::size_t k = 0; k < ones; ++k) {
        inst.B[row * n + order[k]] = 1.0;
        floor_sum += inst.l[order[k]];
      }
      inst.d[row] = rng.uniform(0.3 * sum_u, 0.5 * sum_u);
      if (floor_sum <= inst.d[row] || attempt >= 1000) break;
    }
  }
  inst.validate();
  return inst;
}

/// Which resource-row form a region tests.
enum class RegionMode { Exact, Slack };

/// Price vectors satisfying the box, B r <= d and
/// scale * A P(r) <= capacity (+ epsilon in slack mode).
struct FeasiblePriceRegion {
  const Instance* instance = nullptr;
  std::optional<std::vector<double>> capacity_override;
  double demand_scale = 1.0;
  RegionMode mode = RegionMode::Exact;
  double epsilon = 0.0;

  [[nodiscard]] std::span<const double> capacity() const {
    return capacity_override ? std::span<const double>(*capacity_override)
                             : std::span<const double>(instance->c);
  }
};

enum class RowKind { LowerBound, UpperBound, Price, Resource };

struct Violation {
  RowKind kind;
  std::size_t index;
  double excess;  // amount by which the row is exceeded, > 0
};

struct FeasibilityReport {
  std::vector<Violation> violations;
  double max_resource_excess = -std::numeric_limits<double>::infinity();
  [[nodiscard]] bool feasible() const { return violations.empty(); }
};

/// Checks every row and reports each violated one. Null-priced products are
/// exempt from their box rows and drop out of the price rows.
inline FeasibilityReport is_feasible(const FeasiblePriceRegion& region, std::span<const double> r,
                                     double tol = 1e-9) {
  const Instance& inst = *region.instance;
  const std::size_t n = inst.n();
  if (r.size() != n) throw std::invalid_argument("is_feasible: price vector length mismatch");
  FeasibilityReport rep;
  for (std::size_t j = 0; j < n; ++j) {
    if (is_null_price(r[j])) continue;
    if (r[j] < inst.l[j] - tol) rep.violations.push_back({RowKind::LowerBound, j, inst.l[j] - r[j]});
    if (r[j] > inst.u[j] + tol) rep.violations.push_back({RowKind::UpperBound, j, r[j] - inst.u[j]});
  }
  for (std::size_t i = 0; i < inst.p(); ++i) {
    double lhs = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (!is_null_price(r[j])) lhs += inst.b_ij(i, j) * r[j];
    if (lhs > inst.d[i] + tol) rep.violations.push_back({RowKind::Price, i, lhs - inst.d[i]});
  }
  const auto cap = region.capacity();
  const auto psi = resource_lhs(inst.mnl, inst.A, cap, r, region.demand_scale);
  const double eps = region.mode == RegionMode::Slack ? region.epsilon : 0.0;
  for (std::size_t i = 0; i < inst.m; ++i) {
    const double excess = psi[i] - cap[i];
    rep.max_resource_excess = std::max(rep.max_resource_excess, excess);
    if (excess > eps + tol) rep.violations.push_back({RowKind::Resource, i, excess});
  }
  return rep;
}

}  // namespace choicerm
