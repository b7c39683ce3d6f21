#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace choicerm::lp {

inline constexpr double kFeasTol = 1e-7;
inline constexpr double kIntTol = 1e-9;
inline constexpr double kGapTol = 1e-6;

enum class Sense { Le, Ge, Eq };

struct Term {
  std::size_t var;
  double coef;
};

struct Row {
  std::vector<Term> terms;
  Sense sense = Sense::Le;
  double rhs = 0.0;
};

/// Marks an ordered chain z_0 >= z_1 >= ... with z_k <= w_k and
/// w_{k+1} <= z_k. `rows` lists the indices of those internal rows.
struct ChainTag {
  std::vector<std::size_t> z;
  std::vector<std::size_t> w;
  std::vector<std::size_t> rows;
};

/// Mixed-integer program with finite bounds on every variable.
struct MilpModel {
  bool maximize = true;
  std::vector<double> lb, ub, obj;
  std::vector<std::uint8_t> integer;
  double obj_constant = 0.0;
  std::vector<Row> rows;
  std::vector<ChainTag> chains;

  std::size_t add_var(double lo, double hi, double cost, bool is_integer = false) {
    lb.push_back(lo);
    ub.push_back(hi);
    obj.push_back(cost);
    integer.push_back(is_integer ? 1 : 0);
    return lb.size() - 1;
  }

  std::size_t add_row(std::vector<Term> terms, Sense sense, double rhs) {
    rows.push_back({std::move(terms), sense, rhs});
    return rows.size() - 1;
  }

  [[nodiscard]] std::size_t num_vars() const { return lb.size(); }
  [[nodiscard]] std::size_t num_rows() const { return rows.size(); }
  [[nodiscard]] std::size_t num_integer() const {
    std::size_t k = 0;
    for (auto f : integer) k += f ? 1 : 0;
    return k;
  }

  [[nodiscard]] double row_activity(std::size_t i, const std::vector<double>& x) const {
    double s = 0.0;
    for (const auto& t : rows[i].terms) s += t.coef * x[t.var];
    return s;
  }

  [[nodiscard]] double objective_value(const std::vector<double>& x) const {
    double s = obj_constant;
    for (std::size_t j = 0; j < obj.size(); ++j) s += obj[j] * x[j];
    return s;
  }

  /// Largest bound or row violation of x.
  [[nodiscard]] double max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < lb.size(); ++j)
      worst = std::max({worst, lb[j] - x[j], x[j] - ub[j]});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double a = row_activity(i, x);
      const auto& r = rows[i];
      if (r.sense != Sense::Ge) worst = std::max(worst, a - r.rhs);
      if (r.sense != Sense::Le) worst = std::max(worst, r.rhs - a);
    }
    return worst;
  }

  void validate() const {
    const std::size_t n = lb.size();
    if (ub.size() != n || obj.size() != n || integer.size() != n)
      throw std::invalid_argument("milp: variable arrays differ in length");
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(lb[j]) || !std::isfinite(ub[j]))
        throw std::invalid_argument("milp: variable " + std::to_string(j) + " is not boxed");
      if (lb[j] > ub[j]) throw std::invalid_argument("milp: variable " + std::to_string(j) + " has lb > ub");
      if (!std::isfinite(obj[j])) throw std::invalid_argument("milp: objective is not finite");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!std::isfinite(rows[i].rhs)) throw std::invalid_argument("milp: row " + std::to_string(i) + " rhs");
      for (const auto& t : rows[i].terms)
        if (t.var >= n || !std::isfinite(t.coef))
          throw std::invalid_argument("milp: row " + std::to_string(i) + " has an invalid term");
    }
    for (const auto& c : chains) {
      if (c.z.size() != c.w.size()) throw std::invalid_argument("milp: chain z and w differ in length");
      for (auto v : c.z)
        if (v >= n) throw std::invalid_argument("milp: chain index out of range");
      for (auto v : c.w)
        if (v >= n) throw std::invalid_argument("milp: chain index out of range");
      for (auto r : c.rows)
        if (r >= rows.size()) throw std::invalid_argument("milp: chain row out of range");
    }
  }
};

enum class Status { Optimal, Infeasible, IterationLimit };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::IterationLimit: return "iteration-limit";
  }
  return "?";
}

struct SolveResult {
  Status status = Status::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
  /// d objective / d rhs per row (pure LP solves). A maximization with a
  /// binding <= row has a nonnegative dual.
  std::vector<double> duals;
  std::vector<double> reduced_costs;
  std::size_t nodes = 0;
  std::size_t lp_iterations = 0;
  double max_violation = 0.0;
  double bound = 0.0;  // best remaining bound at exit
  std::vector<double> incumbent_history;
  std::vector<std::uint8_t> root_basis;  // simplex states after the root solve
};

/// Optional starting information for a solve; ignored when it does not fit.
struct SolveHints {
  std::vector<std::uint8_t> basis;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace choicerm::lp
