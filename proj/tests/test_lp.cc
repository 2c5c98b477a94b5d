#include <doctest.h>

#include <cmath>
#include <random>

#include "nerlp/declarations.h"
#include "nerlp/error.h"
#include "nerlp/lp.h"
#include "oracles.h"

using namespace nerlp;
using namespace nerlp::lp;

namespace {

decl::MappingDocument CoconutWithLimit(const std::string& limit) {
  auto doc = oracle::CoconutAst();
  doc.constraints[0].limit = limit;
  return doc;
}

decl::ConstraintDecl Constraint(decl::ConstraintType type, decl::Operator op, std::vector<decl::Term> terms,
                                std::optional<std::string> limit, std::optional<decl::Term> rhs = std::nullopt) {
  decl::ConstraintDecl c;
  c.direction = "d";
  c.type = type;
  c.op = op;
  c.terms = std::move(terms);
  c.limit = std::move(limit);
  c.rhs = std::move(rhs);
  return c;
}

Decimal D(const char* s) { return *Decimal::Parse(s); }

}  // namespace

TEST_CASE("canonical algebra per constraint type") {
  using decl::ConstraintType;
  using decl::Operator;
  const std::vector<std::string> vars = {"x", "y", "z"};

  auto sum = CanonicalConstraint(Constraint(ConstraintType::kSum, Operator::kLessOrEqual, {{"x"}, {"y"}}, "1,000"), vars);
  CHECK(sum.coefficients == std::map<std::string, Decimal>{{"x", D("1")}, {"y", D("1")}});
  CHECK(sum.rhs == D("1000"));

  auto ratio = CanonicalConstraint(Constraint(ConstraintType::kRatio, Operator::kLessOrEqual, {{"x"}}, "40%"), vars);
  CHECK(ratio.coefficients == std::map<std::string, Decimal>{{"x", D("0.6")}, {"y", D("-0.4")}, {"z", D("-0.4")}});
  CHECK(ratio.rhs == Decimal());
  CanonicalizeOptions other;
  other.ratio_base = RatioBase::kOtherVariables;
  auto ratio2 = CanonicalConstraint(Constraint(ConstraintType::kRatio, Operator::kLessOrEqual, {{"x"}}, "0.4"), vars, other);
  CHECK(ratio2.coefficients == std::map<std::string, Decimal>{{"x", D("1")}, {"y", D("-0.4")}, {"z", D("-0.4")}});

  auto xby = CanonicalConstraint(
      Constraint(ConstraintType::kXby, Operator::kGreaterOrEqual, {{"x"}}, std::nullopt, decl::Term{"y", "2"}), vars);
  CHECK(xby.coefficients == std::map<std::string, Decimal>{{"x", D("1")}, {"y", D("-2")}});
  auto xy = CanonicalConstraint(Constraint(ConstraintType::kXy, Operator::kLessOrEqual, {{"x"}, {"y"}}, std::nullopt), vars);
  CHECK(xy.coefficients == std::map<std::string, Decimal>{{"x", D("1")}, {"y", D("-1")}});

  CHECK_THROWS_AS(CanonicalConstraint(Constraint(ConstraintType::kLinear, Operator::kLessOrEqual, {{"x", "2"}}, std::nullopt), vars),
                  DataError);
  CHECK_THROWS_AS(CanonicalConstraint(Constraint(ConstraintType::kXy, Operator::kLessOrEqual, {{"x"}}, std::nullopt), vars),
                  DataError);
  CHECK_THROWS_AS(CanonicalConstraint(Constraint(ConstraintType::kRatio, Operator::kLessOrEqual, {{"x"}}, "half"), vars),
                  DataError);
  CHECK_THROWS_AS(CanonicalConstraint(Constraint(ConstraintType::kLinear, Operator::kLessOrEqual, {{"x", "twice"}}, "3"), vars),
                  DataError);
}

TEST_CASE("objective direction") {
  CHECK(ParseDirection("maximize") == Sense::kMaximize);
  CHECK(ParseDirection("Minimizes") == Sense::kMinimize);
  CHECK_THROWS_AS(ParseDirection("optimize"), DataError);
}

TEST_CASE("coconut example solves to the hand-computed optimum") {
  const auto lp = Canonicalize(oracle::CoconutAst());
  CHECK(lp.variables == std::vector<std::string>{"rickshaws", "ox carts"});
  CHECK(lp.rows.size() == 2);
  const auto sol = SimplexSolve(lp);
  REQUIRE(sol.status == Status::kOptimal);
  CHECK(std::abs(sol.objective - 1000.0) <= 1e-9);
  CHECK(std::abs(sol.values[0] - 20.0) <= 1e-9);
  CHECK(std::abs(sol.values[1]) <= 1e-9);
  const auto v = oracle::VertexEnumerate(lp);
  CHECK(std::abs(v.objective - sol.objective) <= 1e-9);
}

TEST_CASE("infeasible, unbounded and degenerate problems") {
  LpProblem lp;
  lp.variables = {"x", "y"};
  lp.objective = {1, 1};
  lp.rows = {{{1, 1}, Operator::kLessOrEqual, 2}, {{1, 1}, Operator::kGreaterOrEqual, 3}};
  CHECK(SimplexSolve(lp).status == Status::kInfeasible);

  lp.rows = {{{1, -1}, Operator::kLessOrEqual, 2}};
  CHECK(SimplexSolve(lp).status == Status::kUnbounded);
  lp.sense = Sense::kMinimize;
  CHECK(SimplexSolve(lp).status == Status::kOptimal);

  // Redundant equality rows.
  lp.sense = Sense::kMaximize;
  lp.rows = {{{1, 1}, Operator::kEqual, 4}, {{2, 2}, Operator::kEqual, 8}, {{1, 0}, Operator::kLessOrEqual, 1}};
  auto sol = SimplexSolve(lp);
  REQUIRE(sol.status == Status::kOptimal);
  CHECK(sol.objective == doctest::Approx(4.0));
  CHECK(MaxViolation(lp, sol.values) <= 1e-9);

  // Degenerate vertex where Bland's rule matters (Beale's example).
  LpProblem beale;
  beale.variables = {"a", "b", "c", "d"};
  beale.sense = Sense::kMinimize;
  beale.objective = {-0.75, 150, -0.02, 6};
  beale.rows = {{{0.25, -60, -0.04, 9}, Operator::kLessOrEqual, 0},
                {{0.5, -90, -0.02, 3}, Operator::kLessOrEqual, 0},
                {{0, 0, 1, 0}, Operator::kLessOrEqual, 1}};
  sol = SimplexSolve(beale);
  REQUIRE(sol.status == Status::kOptimal);
  CHECK(sol.objective == doctest::Approx(-0.05));
}

TEST_CASE("simplex agrees with vertex enumeration on random small LPs") {
  std::mt19937_64 rng(51);
  int counts[3] = {0, 0, 0};
  for (int t = 0; t < 400; ++t) {
    const auto lp = oracle::RandomLp(rng);
    const auto expect = oracle::VertexEnumerate(lp);
    const auto got = SimplexSolve(lp);
    counts[static_cast<int>(expect.status)]++;
    REQUIRE(got.status == expect.status);
    if (got.status == Status::kOptimal) {
      CHECK(std::abs(got.objective - expect.objective) <= 1e-7 * std::max(1.0, std::abs(expect.objective)));
      CHECK(MaxViolation(lp, got.values) <= 1e-7);
    }
  }
  // The generator exercises every outcome.
  CHECK(counts[0] > 0);
  CHECK(counts[1] > 0);
  CHECK(counts[2] > 0);
}

TEST_CASE("constraint-only variables get a zero objective and a warning") {
  auto doc = oracle::CoconutAst();
  doc.constraints.push_back(Constraint(decl::ConstraintType::kUpperBound, decl::Operator::kLessOrEqual, {{"mules"}}, "4"));
  const auto lp = Canonicalize(doc);
  CHECK(lp.variables.size() == 3);
  CHECK(lp.objective[2] == 0.0);
  CHECK(lp.warnings.size() == 1);
}

TEST_CASE("declaration accuracy") {
  const auto gold = oracle::CoconutAst();
  CHECK(decl::DeclarationAccuracy(gold, gold).accuracy == 1.0);

  const auto r = decl::DeclarationAccuracy(gold, CoconutWithLimit("100"));
  CHECK(r.matched == 2);
  CHECK(std::abs(r.accuracy - 2.0 / 3.0) <= 1e-12);
  CHECK(decl::DeclarationAccuracyEmpty(gold).accuracy == 0.0);

  // Exact decimal equality, order and term order do not matter.
  auto shuffled = CoconutWithLimit("200.00");
  std::swap(shuffled.constraints[0], shuffled.constraints[1]);
  std::swap(shuffled.constraints[1].terms[0], shuffled.constraints[1].terms[1]);
  std::swap(shuffled.objective.terms[0], shuffled.objective.terms[1]);
  CHECK(decl::DeclarationAccuracy(gold, shuffled).accuracy == 1.0);

  // x <= y written as y >= x.
  auto flipped = gold;
  flipped.constraints[1].op = decl::Operator::kGreaterOrEqual;
  std::swap(flipped.constraints[1].terms[0], *flipped.constraints[1].rhs);
  CHECK(decl::DeclarationAccuracy(gold, flipped).accuracy == 1.0);

  // Extra predictions lower precision only; duplicates match once.
  auto extra = gold;
  extra.constraints.push_back(gold.constraints[0]);
  const auto e = decl::DeclarationAccuracy(gold, extra);
  CHECK(e.accuracy == 1.0);
  CHECK(e.precision == doctest::Approx(0.75));

  // Unreadable numbers never match.
  auto broken = CoconutWithLimit("two hundred");
  CHECK(decl::DeclarationAccuracy(broken, broken).matched == 2);

  CHECK(decl::CorpusDeclarationAccuracy({r, decl::DeclarationAccuracy(gold, gold)}) == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("declaration accuracy is reflexive on fuzzed documents") {
  std::mt19937_64 rng(52);
  for (int t = 0; t < 300; ++t) {
    const auto doc = oracle::RandomMapping(rng);
    auto permuted = doc;
    std::shuffle(permuted.constraints.begin(), permuted.constraints.end(), rng);
    for (auto& c : permuted.constraints) {
      if (c.type != decl::ConstraintType::kXy && c.type != decl::ConstraintType::kXby) std::shuffle(c.terms.begin(), c.terms.end(), rng);
    }
    const auto r = decl::DeclarationAccuracy(doc, permuted);
    const auto self = decl::DeclarationAccuracy(doc, doc);
    CHECK(r.matched == self.matched);
    CHECK(self.accuracy == 1.0);
  }
}
