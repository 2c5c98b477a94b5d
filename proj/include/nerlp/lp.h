#ifndef NERLP_LP_H
#define NERLP_LP_H

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nerlp/decimal.h"
#include "nerlp/declarations.h"

namespace nerlp::lp {

using decl::Operator;

enum class Sense { kMaximize, kMinimize };

// What a RATIO declaration's fraction multiplies.
enum class RatioBase {
  kAllVariables,    // x OP r * (sum of every problem variable)
  kOtherVariables,  // x OP r * (sum of the other variables)
};

struct CanonicalizeOptions {
  RatioBase ratio_base = RatioBase::kAllVariables;
};

// One declaration as exact linear algebra over named variables. Zero
// coefficients are dropped.
struct ExactRow {
  std::map<std::string, Decimal> coefficients;
  Operator op = Operator::kLessOrEqual;
  Decimal rhs;
  friend bool operator==(const ExactRow&, const ExactRow&) = default;
};

struct ExactObjective {
  Sense sense = Sense::kMaximize;
  std::map<std::string, Decimal> coefficients;
  friend bool operator==(const ExactObjective&, const ExactObjective&) = default;
};

// Throws DataError when a number, direction or RATIO fraction cannot be read.
Sense ParseDirection(const std::string& obj_dir);
ExactObjective CanonicalObjective(const decl::ObjectiveDecl& obj);
ExactRow CanonicalConstraint(const decl::ConstraintDecl& c, const std::vector<std::string>& variables,
                             const CanonicalizeOptions& options = {});

// Variables in order of first appearance: objective terms, then constraints.
std::vector<std::string> CollectVariables(const decl::MappingDocument& doc);

struct LinearRow {
  std::vector<double> coefficients;
  Operator op = Operator::kLessOrEqual;
  double rhs = 0.0;
};

// max/min c.x subject to rows, x >= 0.
struct LpProblem {
  std::vector<std::string> variables;
  Sense sense = Sense::kMaximize;
  std::vector<double> objective;
  std::vector<LinearRow> rows;
  std::vector<std::string> warnings;

  // Throws DataError on size mismatches or non-finite data.
  void Validate() const;
};

// One row per constraint declaration. A variable that appears in a
// constraint but not in the objective is admitted with objective
// coefficient 0 and a warning.
LpProblem Canonicalize(const decl::MappingDocument& doc, const CanonicalizeOptions& options = {});

enum class Status { kOptimal, kInfeasible, kUnbounded };
std::string StatusName(Status s);

struct LpSolution {
  Status status = Status::kInfeasible;
  std::vector<double> values;  // parallel to LpProblem::variables
  double objective = 0.0;
};

inline constexpr double kFeasibilityTolerance = 1e-9;
inline constexpr double kPivotTolerance = 1e-12;

// Two-phase primal simplex on a dense tableau with Bland's rule. Throws
// NumericError if a pivot element falls below kPivotTolerance.
LpSolution SimplexSolve(const LpProblem& lp);

// Largest violation of any row or bound at `x`.
double MaxViolation(const LpProblem& lp, const std::vector<double>& x);

}  // namespace nerlp::lp

namespace nerlp::decl {

struct AccuracyResult {
  std::size_t matched = 0;
  std::size_t gold_declarations = 0;
  std::size_t predicted_declarations = 0;
  double accuracy = 0.0;   // matched / gold
  double precision = 0.0;  // matched / predicted (diagnostic)
};

// Exact canonical match: each declaration is reduced to its linear algebra
// (>= rows negated to <=), numbers compared as exact decimals, and gold
// declarations greedily matched one-to-one against predictions.
AccuracyResult DeclarationAccuracy(const MappingDocument& gold, const MappingDocument& pred,
                                   const lp::CanonicalizeOptions& options = {});
// Same, where the prediction failed to produce any document.
AccuracyResult DeclarationAccuracyEmpty(const MappingDocument& gold);

// Mean per-problem accuracy.
double CorpusDeclarationAccuracy(const std::vector<AccuracyResult>& results);

}  // namespace nerlp::decl

#endif  // NERLP_LP_H
