#include "nerlp/lp.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <variant>

namespace nerlp::lp {

namespace {

Decimal ParseNumber(const std::string& text, const char* what) {
  auto d = Decimal::Parse(text);
  if (!d) throw DataError(std::string(what) + " '" + text + "' is not a number");
  return *d;
}

Decimal Coefficient(const decl::Term& t) {
  return t.coefficient ? ParseNumber(*t.coefficient, "PARAM") : Decimal::FromInt(1);
}

void AddTo(std::map<std::string, Decimal>& coeffs, const std::string& var, const Decimal& value) {
  coeffs[var] = coeffs[var] + value;
}

void DropZeros(std::map<std::string, Decimal>& coeffs) {
  std::erase_if(coeffs, [](const auto& kv) { return kv.second.is_zero(); });
}

Decimal RatioFraction(const decl::ConstraintDecl& c) {
  if (!c.limit) throw DataError("RATIO declaration without a fraction in <LIMIT>");
  std::string text = *c.limit;
  bool percent = false;
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
  if (!text.empty() && text.back() == '%') {
    percent = true;
    text.pop_back();
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
  }
  auto d = Decimal::Parse(text);
  if (!d) throw DataError("RATIO fraction '" + *c.limit + "' is not a parsable number");
  return percent ? d->shifted(2) : *d;
}

Decimal RequireLimit(const decl::ConstraintDecl& c) {
  if (!c.limit) {
    throw DataError(decl::ConstraintTypeToken(c.type) + " declaration without <LIMIT>");
  }
  return ParseNumber(*c.limit, "LIMIT");
}

}  // namespace

Sense ParseDirection(const std::string& obj_dir) {
  std::string lower;
  for (char c : obj_dir) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  const bool max = lower.find("max") != std::string::npos;
  const bool min = lower.find("min") != std::string::npos;
  if (max && !min) return Sense::kMaximize;
  if (min && !max) return Sense::kMinimize;
  throw DataError("cannot tell whether objective direction '" + obj_dir + "' maximizes or minimizes");
}

ExactObjective CanonicalObjective(const decl::ObjectiveDecl& obj) {
  ExactObjective out;
  out.sense = ParseDirection(obj.direction);
  for (const auto& t : obj.terms) AddTo(out.coefficients, t.variable, Coefficient(t));
  DropZeros(out.coefficients);
  return out;
}

ExactRow CanonicalConstraint(const decl::ConstraintDecl& c, const std::vector<std::string>& variables,
                             const CanonicalizeOptions& options) {
  using decl::ConstraintType;
  ExactRow row;
  row.op = c.op;
  switch (c.type) {
    case ConstraintType::kSum:
    case ConstraintType::kUpperBound:
    case ConstraintType::kLowerBound:
    case ConstraintType::kLinear: {
      if (c.rhs) throw DataError(decl::ConstraintTypeToken(c.type) + " declaration cannot use 'x [is] y'");
      for (const auto& t : c.terms) AddTo(row.coefficients, t.variable, Coefficient(t));
      row.rhs = RequireLimit(c);
      break;
    }
    case ConstraintType::kRatio: {
      if (c.rhs) throw DataError("RATIO declaration cannot use 'x [is] y'");
      const Decimal fraction = RatioFraction(c);
      for (const auto& t : c.terms) AddTo(row.coefficients, t.variable, Coefficient(t));
      for (const auto& v : variables) {
        const bool listed = std::any_of(c.terms.begin(), c.terms.end(),
                                        [&](const decl::Term& t) { return t.variable == v; });
        if (options.ratio_base == RatioBase::kOtherVariables && listed) continue;
        AddTo(row.coefficients, v, -fraction);
      }
      row.rhs = Decimal();
      break;
    }
    case ConstraintType::kXby:
    case ConstraintType::kXy: {
      const decl::Term* lhs = nullptr;
      const decl::Term* rhs = nullptr;
      if (c.rhs && c.terms.size() == 1) {
        lhs = &c.terms.front();
        rhs = &*c.rhs;
      } else if (!c.rhs && c.terms.size() == 2) {
        lhs = &c.terms[0];
        rhs = &c.terms[1];
      } else {
        throw DataError(decl::ConstraintTypeToken(c.type) + " declaration needs exactly two variables");
      }
      AddTo(row.coefficients, lhs->variable, Coefficient(*lhs));
      AddTo(row.coefficients, rhs->variable, -Coefficient(*rhs));
      row.rhs = c.limit ? ParseNumber(*c.limit, "LIMIT") : Decimal();
      break;
    }
  }
  DropZeros(row.coefficients);
  return row;
}

std::vector<std::string> CollectVariables(const decl::MappingDocument& doc) {
  std::vector<std::string> vars;
  auto add = [&](const std::string& v) {
    if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
  };
  for (const auto& t : doc.objective.terms) add(t.variable);
  for (const auto& c : doc.constraints) {
    for (const auto& t : c.terms) add(t.variable);
    if (c.rhs) add(c.rhs->variable);
  }
  return vars;
}

void LpProblem::Validate() const {
  if (objective.size() != variables.size()) throw DataError("objective length differs from variable count");
  for (double c : objective) {
    if (!std::isfinite(c)) throw DataError("objective coefficient is not finite");
  }
  for (const auto& r : rows) {
    if (r.coefficients.size() != variables.size()) throw DataError("row length differs from variable count");
    if (!std::isfinite(r.rhs)) throw DataError("row right-hand side is not finite");
    for (double c : r.coefficients) {
      if (!std::isfinite(c)) throw DataError("row coefficient is not finite");
    }
  }
}

LpProblem Canonicalize(const decl::MappingDocument& doc, const CanonicalizeOptions& options) {
  LpProblem lp;
  lp.variables = CollectVariables(doc);
  const auto objective = CanonicalObjective(doc.objective);
  lp.sense = objective.sense;
  for (const auto& v : lp.variables) {
    auto it = objective.coefficients.find(v);
    lp.objective.push_back(it == objective.coefficients.end() ? 0.0 : it->second.to_double());
    const bool in_objective = std::any_of(doc.objective.terms.begin(), doc.objective.terms.end(),
                                          [&](const decl::Term& t) { return t.variable == v; });
    if (!in_objective) {
      lp.warnings.push_back("variable '" + v +
                            "' appears only in constraints; objective coefficient set to 0");
    }
  }
  for (const auto& c : doc.constraints) {
    const auto exact = CanonicalConstraint(c, lp.variables, options);
    LinearRow row;
    row.op = exact.op;
    row.rhs = exact.rhs.to_double();
    for (const auto& v : lp.variables) {
      auto it = exact.coefficients.find(v);
      row.coefficients.push_back(it == exact.coefficients.end() ? 0.0 : it->second.to_double());
    }
    lp.rows.push_back(std::move(row));
  }
  lp.Validate();
  return lp;
}

std::string StatusName(Status s) {
  switch (s) {
    case Status::kOptimal:
      return "optimal";
    case Status::kInfeasible:
      return "infeasible";
    case Status::kUnbounded:
      return "unbounded";
  }
  return "?";
}

double MaxViolation(const LpProblem& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (double v : x) worst = std::max(worst, -v);
  for (const auto& r : lp.rows) {
    double lhs = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) lhs += r.coefficients[j] * x[j];
    const double gap = lhs - r.rhs;
    switch (r.op) {
      case Operator::kLessOrEqual:
        worst = std::max(worst, gap);
        break;
      case Operator::kGreaterOrEqual:
        worst = std::max(worst, -gap);
        break;
      case Operator::kEqual:
        worst = std::max(worst, std::abs(gap));
        break;
    }
  }
  return worst;
}

}  // namespace nerlp::lp

namespace nerlp::decl {

namespace {

using CanonicalForm = std::variant<lp::ExactObjective, lp::ExactRow>;

lp::ExactRow NormalizeRow(lp::ExactRow row) {
  auto negate = [&]() {
    for (auto& [v, c] : row.coefficients) c = -c;
    row.rhs = -row.rhs;
  };
  if (row.op == Operator::kGreaterOrEqual) {
    negate();
    row.op = Operator::kLessOrEqual;
  } else if (row.op == Operator::kEqual && !row.coefficients.empty() &&
             row.coefficients.begin()->second < Decimal()) {
    negate();
  }
  return row;
}

// nullopt when the declaration cannot be canonicalized; it then never matches.
std::vector<std::optional<CanonicalForm>> CanonicalForms(const MappingDocument& doc,
                                                         const lp::CanonicalizeOptions& options) {
  std::vector<std::optional<CanonicalForm>> out;
  try {
    out.emplace_back(lp::CanonicalObjective(doc.objective));
  } catch (const DataError&) {
    out.emplace_back(std::nullopt);
  } catch (const std::overflow_error&) {
    out.emplace_back(std::nullopt);
  }
  const auto vars = lp::CollectVariables(doc);
  for (const auto& c : doc.constraints) {
    try {
      out.emplace_back(NormalizeRow(lp::CanonicalConstraint(c, vars, options)));
    } catch (const DataError&) {
      out.emplace_back(std::nullopt);
    } catch (const std::overflow_error&) {
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

}  // namespace

AccuracyResult DeclarationAccuracy(const MappingDocument& gold, const MappingDocument& pred,
                                   const lp::CanonicalizeOptions& options) {
  const auto g = CanonicalForms(gold, options);
  const auto p = CanonicalForms(pred, options);
  std::vector<bool> used(p.size(), false);
  AccuracyResult r;
  r.gold_declarations = g.size();
  r.predicted_declarations = p.size();
  for (const auto& gf : g) {
    if (!gf) continue;
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (!used[k] && p[k] && *p[k] == *gf) {
        used[k] = true;
        r.matched++;
        break;
      }
    }
  }
  r.accuracy = static_cast<double>(r.matched) / static_cast<double>(r.gold_declarations);
  r.precision = static_cast<double>(r.matched) / static_cast<double>(r.predicted_declarations);
  return r;
}

AccuracyResult DeclarationAccuracyEmpty(const MappingDocument& gold) {
  AccuracyResult r;
  r.gold_declarations = 1 + gold.constraints.size();
  return r;
}

double CorpusDeclarationAccuracy(const std::vector<AccuracyResult>& results) {
  if (results.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : results) sum += r.accuracy;
  return sum / static_cast<double>(results.size());
}

}  // namespace nerlp::decl
