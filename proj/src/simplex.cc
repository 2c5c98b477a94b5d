#include <algorithm>
#include <cmath>
#include <limits>

#include "nerlp/error.h"
#include "nerlp/lp.h"
#include "nerlp/matrix.h"

namespace nerlp::lp {

namespace {

constexpr double kEps = 1e-9;
constexpr std::size_t kMaxIterations = 100000;

enum class PhaseResult { kOptimal, kUnbounded };

// Dense tableau: rows are constraints, the last column is the right-hand
// side. `cost` holds reduced costs, with cost[rhs] = -(objective value).
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : a_(rows, cols + 1), cost_(cols + 1, 0.0), basis_(rows, 0),
                                               allowed_(cols, true) {}

  std::size_t rows() const { return a_.rows(); }
  std::size_t cols() const { return allowed_.size(); }
  std::size_t rhs_col() const { return allowed_.size(); }
  double& at(std::size_t r, std::size_t c) { return a_(r, c); }
  double at(std::size_t r, std::size_t c) const { return a_(r, c); }
  std::vector<std::size_t>& basis() { return basis_; }
  void forbid(std::size_t col) { allowed_[col] = false; }

  // Installs minimization costs and prices out the current basis.
  void SetCosts(const std::vector<double>& c) {
    std::fill(cost_.begin(), cost_.end(), 0.0);
    for (std::size_t j = 0; j < c.size(); ++j) cost_[j] = c[j];
    for (std::size_t i = 0; i < rows(); ++i) {
      const double cb = cost_[basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j <= rhs_col(); ++j) cost_[j] -= cb * a_(i, j);
    }
  }

  double objective() const { return -cost_[rhs_col()]; }

  void Pivot(std::size_t r, std::size_t c) {
    const double p = a_(r, c);
    if (std::abs(p) < kPivotTolerance) throw NumericError("simplex pivot below tolerance");
    for (std::size_t j = 0; j <= rhs_col(); ++j) a_(r, j) /= p;
    a_(r, c) = 1.0;
    for (std::size_t i = 0; i < rows(); ++i) {
      if (i == r) continue;
      const double f = a_(i, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= rhs_col(); ++j) a_(i, j) -= f * a_(r, j);
      a_(i, c) = 0.0;
    }
    const double f = cost_[c];
    if (f != 0.0) {
      for (std::size_t j = 0; j <= rhs_col(); ++j) cost_[j] -= f * a_(r, j);
      cost_[c] = 0.0;
    }
    basis_[r] = c;
  }

  // Bland's rule: lowest-index improving column, lowest-index leaving
  // variable among ratio-test ties.
  PhaseResult Run() {
    for (std::size_t iter = 0; iter < kMaxIterations; ++iter) {
      std::size_t enter = cols();
      for (std::size_t j = 0; j < cols(); ++j) {
        if (allowed_[j] && cost_[j] < -kEps) {
          enter = j;
          break;
        }
      }
      if (enter == cols()) return PhaseResult::kOptimal;
      std::size_t leave = rows();
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < rows(); ++i) {
        const double coef = a_(i, enter);
        if (coef <= kEps) continue;
        const double ratio = a_(i, rhs_col()) / coef;
        const bool tie = leave < rows() && std::abs(ratio - best) <= kEps;
        if (leave == rows() || ratio < best - kEps || (tie && basis_[i] < basis_[leave])) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
      if (leave == rows()) return PhaseResult::kUnbounded;
      Pivot(leave, enter);
    }
    throw NumericError("simplex iteration limit reached");
  }

  void DropRow(std::size_t r) {
    Matrix next(a_.rows() - 1, a_.cols());
    for (std::size_t i = 0, k = 0; i < a_.rows(); ++i) {
      if (i == r) continue;
      for (std::size_t j = 0; j < a_.cols(); ++j) next(k, j) = a_(i, j);
      ++k;
    }
    a_ = std::move(next);
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
  }

 private:
  Matrix a_;
  std::vector<double> cost_;
  std::vector<std::size_t> basis_;
  std::vector<bool> allowed_;
};

}  // namespace

LpSolution SimplexSolve(const LpProblem& lp) {
  lp.Validate();
  const std::size_t n = lp.variables.size();
  const std::size_t m = lp.rows.size();

  // Normalize to nonnegative right-hand sides.
  std::vector<LinearRow> rows = lp.rows;
  for (auto& r : rows) {
    if (r.rhs < 0.0) {
      for (double& c : r.coefficients) c = -c;
      r.rhs = -r.rhs;
      if (r.op == Operator::kLessOrEqual) {
        r.op = Operator::kGreaterOrEqual;
      } else if (r.op == Operator::kGreaterOrEqual) {
        r.op = Operator::kLessOrEqual;
      }
    }
  }

  std::size_t slacks = 0, artificials = 0;
  for (const auto& r : rows) {
    if (r.op != Operator::kEqual) ++slacks;
    if (r.op != Operator::kLessOrEqual) ++artificials;
  }
  const std::size_t first_slack = n;
  const std::size_t first_art = n + slacks;
  const std::size_t cols = n + slacks + artificials;

  Tableau tab(m, cols);
  std::size_t s = first_slack, a = first_art;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& r = rows[i];
    for (std::size_t j = 0; j < n; ++j) tab.at(i, j) = r.coefficients[j];
    tab.at(i, tab.rhs_col()) = r.rhs;
    if (r.op == Operator::kLessOrEqual) {
      tab.at(i, s) = 1.0;
      tab.basis()[i] = s++;
    } else {
      if (r.op == Operator::kGreaterOrEqual) tab.at(i, s++) = -1.0;
      tab.at(i, a) = 1.0;
      tab.basis()[i] = a++;
    }
  }

  double scale = 1.0;
  for (const auto& r : rows) scale = std::max(scale, std::abs(r.rhs));

  LpSolution sol;
  if (artificials > 0) {
    std::vector<double> phase1(cols, 0.0);
    for (std::size_t j = first_art; j < cols; ++j) phase1[j] = 1.0;
    tab.SetCosts(phase1);
    tab.Run();  // bounded below by zero
    if (tab.objective() > kFeasibilityTolerance * scale) {
      sol.status = Status::kInfeasible;
      return sol;
    }
    // Drive remaining artificials out of the basis; drop redundant rows.
    for (std::size_t i = tab.rows(); i-- > 0;) {
      if (tab.basis()[i] < first_art) continue;
      std::size_t col = first_art;
      for (std::size_t j = 0; j < first_art; ++j) {
        if (std::abs(tab.at(i, j)) > kEps) {
          col = j;
          break;
        }
      }
      if (col == first_art) {
        tab.DropRow(i);
      } else {
        tab.Pivot(i, col);
      }
    }
    for (std::size_t j = first_art; j < cols; ++j) tab.forbid(j);
  }

  std::vector<double> phase2(cols, 0.0);
  const double sign = lp.sense == Sense::kMaximize ? -1.0 : 1.0;
  for (std::size_t j = 0; j < n; ++j) phase2[j] = sign * lp.objective[j];
  tab.SetCosts(phase2);
  if (tab.Run() == PhaseResult::kUnbounded) {
    sol.status = Status::kUnbounded;
    return sol;
  }

  sol.status = Status::kOptimal;
  sol.values.assign(n, 0.0);
  for (std::size_t i = 0; i < tab.rows(); ++i) {
    if (tab.basis()[i] < n) sol.values[tab.basis()[i]] = std::max(0.0, tab.at(i, tab.rhs_col()));
  }
  for (std::size_t j = 0; j < n; ++j) sol.objective += lp.objective[j] * sol.values[j];
  return sol;
}

}  // namespace nerlp::lp
