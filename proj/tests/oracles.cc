#include "oracles.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

using nerlp::crf::ChainPotentials;
using nerlp::crf::kNegInf;

namespace {

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t Below(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

ChainPotentials RandomChain(std::mt19937_64& rng, std::size_t n, std::size_t labels, double forbid_rate) {
  ChainPotentials pot;
  pot.emissions = nerlp::Matrix(n, labels);
  pot.transitions = nerlp::Matrix(labels, labels);
  pot.start.assign(labels, 0.0);
  pot.stop.assign(labels, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t y = 0; y < labels; ++y) pot.emissions(i, y) = Uniform(rng, -2.0, 2.0);
  }
  for (std::size_t a = 0; a < labels; ++a) {
    pot.start[a] = Uniform(rng, -1.0, 1.0);
    pot.stop[a] = Uniform(rng, -1.0, 1.0);
    for (std::size_t b = 0; b < labels; ++b) pot.transitions(a, b) = Uniform(rng, -1.5, 1.5);
  }
  if (forbid_rate > 0.0) {
    std::vector<std::size_t> keep(n);
    for (auto& y : keep) y = Below(rng, labels);
    std::bernoulli_distribution forbid(forbid_rate);
    for (std::size_t a = 0; a < labels; ++a) {
      if (a != keep.front() && forbid(rng)) pot.start[a] = kNegInf;
      for (std::size_t b = 0; b < labels; ++b) {
        bool on_path = false;
        for (std::size_t i = 1; i < n; ++i) on_path = on_path || (keep[i - 1] == a && keep[i] == b);
        if (!on_path && forbid(rng)) pot.transitions(a, b) = kNegInf;
      }
    }
  }
  return pot;
}

double DirectScore(const ChainPotentials& pot, const std::vector<std::size_t>& path) {
  double s = pot.start[path.front()] + pot.stop[path.back()];
  for (std::size_t i = 0; i < path.size(); ++i) {
    s += pot.emissions(i, path[i]);
    if (i > 0) s += pot.transitions(path[i - 1], path[i]);
  }
  return s;
}

Enumerated Enumerate(const ChainPotentials& pot) {
  const std::size_t n = pot.emissions.rows(), labels = pot.emissions.cols();
  std::vector<std::size_t> path(n, 0);
  std::vector<double> scores;
  Enumerated e;
  e.best_score = -std::numeric_limits<double>::infinity();
  while (true) {
    const double s = DirectScore(pot, path);
    scores.push_back(s);
    if (s > e.best_score) {
      e.best_score = s;
      e.best = path;
      e.max_ties = 1;
    } else if (s == e.best_score && std::isfinite(s)) {
      ++e.max_ties;
    }
    std::size_t k = n;
    while (k > 0 && path[k - 1] == labels - 1) path[--k] = 0;
    if (k == 0) break;
    ++path[k - 1];
  }
  const double m = *std::max_element(scores.begin(), scores.end());
  long double sum = 0.0L;
  for (double s : scores) {
    if (std::isfinite(s)) sum += std::exp(static_cast<long double>(s - m));
  }
  e.log_z = m + static_cast<double>(std::log(sum));
  return e;
}

double BruteNll(const ChainPotentials& pot, const std::vector<std::size_t>& gold) {
  return Enumerate(pot).log_z - DirectScore(pot, gold);
}

double MaxGradientError(ChainPotentials pot, const std::vector<std::size_t>& gold, double h, double floor) {
  const auto g = nerlp::crf::NllAndGradient(pot, gold);
  double worst = 0.0;
  auto check = [&](double& slot, double analytic) {
    if (!std::isfinite(slot)) return;
    const double saved = slot;
    slot = saved + h;
    const double up = BruteNll(pot, gold);
    slot = saved - h;
    const double down = BruteNll(pot, gold);
    slot = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };
  ChainPotentials& p = pot;
  for (std::size_t i = 0; i < p.emissions.rows(); ++i) {
    for (std::size_t y = 0; y < p.emissions.cols(); ++y) check(p.emissions(i, y), g.d_emissions(i, y));
  }
  for (std::size_t a = 0; a < p.transitions.rows(); ++a) {
    for (std::size_t b = 0; b < p.transitions.cols(); ++b) check(p.transitions(a, b), g.d_transitions(a, b));
  }
  for (std::size_t a = 0; a < p.start.size(); ++a) check(p.start[a], g.d_start[a]);
  for (std::size_t a = 0; a < p.stop.size(); ++a) check(p.stop[a], g.d_stop[a]);
  return worst;
}

// ---- LP ----

namespace {

struct Halfspace {
  std::vector<double> a;
  nerlp::lp::Operator op;
  double b;
};

// Solves the square system by Gaussian elimination with partial pivoting.
std::optional<std::vector<double>> SolveSquare(std::vector<std::vector<double>> m, std::vector<double> rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    }
    if (std::abs(m[piv][c]) < 1e-10) return std::nullopt;
    std::swap(m[piv], m[c]);
    std::swap(rhs[piv], rhs[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = m[r][c] / m[c][c];
      for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
      rhs[r] -= f * rhs[c];
    }
  }
  for (std::size_t c = 0; c < n; ++c) rhs[c] /= m[c][c];
  return rhs;
}

bool Satisfies(const Halfspace& h, const std::vector<double>& x) {
  double lhs = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) lhs += h.a[j] * x[j];
  const double tol = 1e-7 * std::max(1.0, std::abs(h.b));
  switch (h.op) {
    case nerlp::lp::Operator::kLessOrEqual:
      return lhs <= h.b + tol;
    case nerlp::lp::Operator::kGreaterOrEqual:
      return lhs >= h.b - tol;
    case nerlp::lp::Operator::kEqual:
      return std::abs(lhs - h.b) <= tol;
  }
  return false;
}

std::optional<VertexResult> BestVertex(const nerlp::lp::LpProblem& lp, double box) {
  const std::size_t n = lp.variables.size();
  std::vector<Halfspace> hs;
  for (const auto& r : lp.rows) hs.push_back({r.coefficients, r.op, r.rhs});
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    hs.push_back({e, nerlp::lp::Operator::kGreaterOrEqual, 0.0});
    hs.push_back({e, nerlp::lp::Operator::kLessOrEqual, box});
  }
  std::optional<VertexResult> best;
  const double sign = lp.sense == nerlp::lp::Sense::kMaximize ? 1.0 : -1.0;
  std::vector<std::size_t> pick(n);
  for (std::size_t k = 0; k < n; ++k) pick[k] = k;
  while (true) {
    std::vector<std::vector<double>> m;
    std::vector<double> rhs;
    for (std::size_t k : pick) {
      m.push_back(hs[k].a);
      rhs.push_back(hs[k].b);
    }
    if (auto x = SolveSquare(m, rhs)) {
      const bool feasible = std::all_of(hs.begin(), hs.end(), [&](const Halfspace& h) { return Satisfies(h, *x); });
      if (feasible) {
        double obj = 0.0;
        for (std::size_t j = 0; j < n; ++j) obj += lp.objective[j] * (*x)[j];
        if (!best || sign * obj > sign * best->objective) best = VertexResult{nerlp::lp::Status::kOptimal, obj, *x};
      }
    }
    // Next n-combination of hs indices.
    std::size_t k = n;
    while (k > 0 && pick[k - 1] == hs.size() - n + k - 1) --k;
    if (k == 0) break;
    ++pick[k - 1];
    for (std::size_t r = k; r < n; ++r) pick[r] = pick[r - 1] + 1;
  }
  return best;
}

}  // namespace

VertexResult VertexEnumerate(const nerlp::lp::LpProblem& lp) {
  const auto small = BestVertex(lp, 1e4);
  if (!small) return {};
  const auto large = BestVertex(lp, 1e5);
  if (std::abs(large->objective - small->objective) > 1e-6 * std::max(1.0, std::abs(small->objective))) {
    return {nerlp::lp::Status::kUnbounded, 0.0, {}};
  }
  return *small;
}

nerlp::lp::LpProblem RandomLp(std::mt19937_64& rng, std::size_t max_vars, std::size_t max_rows) {
  std::uniform_int_distribution<int> coef(-5, 5), rhs(-10, 20), op(0, 9);
  nerlp::lp::LpProblem lp;
  const std::size_t n = 1 + Below(rng, max_vars);
  const std::size_t m = 1 + Below(rng, max_rows);
  for (std::size_t j = 0; j < n; ++j) {
    lp.variables.push_back("x" + std::to_string(j));
    lp.objective.push_back(coef(rng));
  }
  lp.sense = Below(rng, 2) == 0 ? nerlp::lp::Sense::kMaximize : nerlp::lp::Sense::kMinimize;
  for (std::size_t i = 0; i < m; ++i) {
    nerlp::lp::LinearRow r;
    for (std::size_t j = 0; j < n; ++j) r.coefficients.push_back(coef(rng));
    const int o = op(rng);
    r.op = o < 5 ? nerlp::lp::Operator::kLessOrEqual
                 : (o < 8 ? nerlp::lp::Operator::kGreaterOrEqual : nerlp::lp::Operator::kEqual);
    r.rhs = rhs(rng);
    lp.rows.push_back(std::move(r));
  }
  return lp;
}

// ---- tagging ----

nerlp::LabelSequence RandomValidLabels(std::mt19937_64& rng, std::size_t n) {
  const auto& types = nerlp::DefaultEntityTypes();
  nerlp::LabelSequence out;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = Uniform(rng, 0.0, 1.0);
    if (!out.empty() && !out.back().is_outside() && u < 0.3) {
      out.push_back(nerlp::IobLabel::Inside(out.back().type));
    } else if (u < 0.6) {
      out.push_back(nerlp::IobLabel::Begin(types[Below(rng, types.size())]));
    } else {
      out.push_back(nerlp::IobLabel::Outside());
    }
  }
  return out;
}

nerlp::LabelSequence RandomAnyLabels(std::mt19937_64& rng, std::size_t n) {
  static const nerlp::LabelSet labels;
  nerlp::LabelSequence out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(labels.label(Below(rng, labels.size())));
  return out;
}

nerlp::Corpus RandomCorpus(std::mt19937_64& rng, std::size_t sentences, std::size_t min_len,
                           std::size_t max_len) {
  nerlp::Corpus corpus;
  for (std::size_t s = 0; s < sentences; ++s) {
    nerlp::LabeledSentence sent;
    sent.id = "s" + std::to_string(s);
    const std::size_t n = min_len + Below(rng, max_len - min_len + 1);
    sent.labels = RandomValidLabels(rng, n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t w = Below(rng, 60);
      sent.tokens.push_back(w < 10 ? std::to_string(w * 7) : "w" + std::to_string(w));
    }
    corpus.push_back(std::move(sent));
  }
  return corpus;
}

nerlp::LabelSequence Corrupt(std::mt19937_64& rng, const nerlp::LabelSequence& gold, double rate) {
  static const nerlp::LabelSet labels;
  std::bernoulli_distribution flip(rate);
  nerlp::LabelSequence out = gold;
  for (auto& l : out) {
    if (!flip(rng)) continue;
    const std::size_t cur = labels.index(l);
    std::size_t pick = Below(rng, labels.size() - 1);
    if (pick >= cur) ++pick;
    l = labels.label(pick);
  }
  return out;
}

SyntheticTaggers MakeSyntheticTaggers(std::uint64_t seed, std::size_t sentences, std::size_t taggers,
                                      double error_rate) {
  std::mt19937_64 rng(seed);
  SyntheticTaggers t;
  t.gold = RandomCorpus(rng, sentences, 5, 15);
  for (std::size_t m = 0; m < taggers; ++m) {
    nerlp::ensemble::ModelPredictions mp;
    mp.model_id = "tagger" + std::to_string(m);
    for (const auto& s : t.gold) mp.predictions.push_back({s.id, Corrupt(rng, s.labels, error_rate)});
    t.models.push_back(std::move(mp));
  }
  return t;
}

// ---- declarations ----

namespace {

const std::vector<std::string> kVariables = {"rickshaws", "ox carts", "small boxes", "corn", "pill A", "hay"};
const std::vector<std::string> kNumbers = {"1", "2", "3.5", "10", "0.32", "0.320", "1,200", "75", "12"};
const std::vector<std::string> kDirections = {"at most", "at least", "must not exceed", "no more than",
                                              "exactly", "a total of"};

template <class T>
const T& Pick(std::mt19937_64& rng, const std::vector<T>& v) {
  return v[Below(rng, v.size())];
}

nerlp::decl::Term RandomTerm(std::mt19937_64& rng, const std::string& var, bool coefficient) {
  nerlp::decl::Term t;
  t.variable = var;
  if (coefficient) t.coefficient = Pick(rng, kNumbers);
  return t;
}

std::vector<std::string> DistinctVariables(std::mt19937_64& rng, std::size_t count) {
  std::vector<std::string> vars = kVariables;
  std::shuffle(vars.begin(), vars.end(), rng);
  vars.resize(count);
  return vars;
}

}  // namespace

nerlp::decl::MappingDocument RandomMapping(std::mt19937_64& rng) {
  using nerlp::decl::ConstraintType;
  nerlp::decl::MappingDocument doc;
  doc.objective.direction = Below(rng, 2) ? "maximize" : "minimize";
  doc.objective.name = Pick(rng, std::vector<std::string>{"profit", "total cost", "number of coconuts"});
  for (const auto& v : DistinctVariables(rng, 1 + Below(rng, 3))) {
    doc.objective.terms.push_back(RandomTerm(rng, v, Below(rng, 4) != 0));
  }
  const std::size_t count = Below(rng, 7);
  for (std::size_t k = 0; k < count; ++k) {
    nerlp::decl::ConstraintDecl c;
    c.type = nerlp::decl::kConstraintTypes[Below(rng, nerlp::decl::kConstraintTypes.size())];
    c.direction = Pick(rng, kDirections);
    c.op = static_cast<nerlp::decl::Operator>(Below(rng, 3));
    switch (c.type) {
      case ConstraintType::kSum:
        for (const auto& v : DistinctVariables(rng, 2 + Below(rng, 2))) c.terms.push_back(RandomTerm(rng, v, false));
        c.limit = Pick(rng, kNumbers);
        break;
      case ConstraintType::kUpperBound:
      case ConstraintType::kLowerBound:
        c.terms.push_back(RandomTerm(rng, Pick(rng, kVariables), false));
        c.limit = Pick(rng, kNumbers);
        break;
      case ConstraintType::kLinear:
        for (const auto& v : DistinctVariables(rng, 1 + Below(rng, 3))) c.terms.push_back(RandomTerm(rng, v, true));
        c.limit = Pick(rng, kNumbers);
        break;
      case ConstraintType::kRatio:
        c.terms.push_back(RandomTerm(rng, Pick(rng, kVariables), false));
        c.limit = Pick(rng, std::vector<std::string>{"40%", "0.3", "25 %", "0.5"});
        break;
      case ConstraintType::kXby:
      case ConstraintType::kXy: {
        const auto vars = DistinctVariables(rng, 2);
        const bool xby = c.type == ConstraintType::kXby;
        if (Below(rng, 2)) {
          c.terms.push_back(RandomTerm(rng, vars[0], false));
          c.rhs = RandomTerm(rng, vars[1], xby);
        } else {
          c.terms.push_back(RandomTerm(rng, vars[0], false));
          c.terms.push_back(RandomTerm(rng, vars[1], xby));
        }
        if (Below(rng, 4) == 0) c.limit = Pick(rng, kNumbers);
        break;
      }
    }
    if (std::find(doc.constraints.begin(), doc.constraints.end(), c) == doc.constraints.end()) {
      doc.constraints.push_back(std::move(c));
    }
  }
  return doc;
}

const std::string& CoconutText() {
  static const std::string kText =
      "<s>\n"
      "<DECLARATION>\n"
      "<OBJ_DIR> maximize </OBJ_DIR>\n"
      "<OBJ_NAME> number of coconuts </OBJ_NAME> [is]\n"
      "<VAR> rickshaws </VAR> [TIMES] <PARAM> 50 </PARAM>\n"
      "<VAR> ox carts </VAR> [TIMES] <PARAM> 30 </PARAM>\n"
      "</DECLARATION>\n"
      "<DECLARATION>\n"
      "<CONST_DIR> at most </CONST_DIR>\n"
      "<OPERATOR> LESS_OR_EQUAL </OPERATOR>\n"
      "<LIMIT> 200 </LIMIT>\n"
      "<CONST_TYPE> [LINEAR_CONSTRAINT] </CONST_TYPE> [is]\n"
      "<VAR> rickshaws </VAR> [TIMES] <PARAM> 10 </PARAM>\n"
      "<VAR> ox carts </VAR> [TIMES] <PARAM> 8 </PARAM>\n"
      "</DECLARATION>\n"
      "<DECLARATION>\n"
      "<CONST_DIR> must not exceed </CONST_DIR>\n"
      "<OPERATOR> LESS_OR_EQUAL </OPERATOR>\n"
      "<CONST_TYPE> [XY_CONSTRAINT] </CONST_TYPE>\n"
      "<VAR> ox carts </VAR> [is] <VAR> rickshaws </VAR>\n"
      "</DECLARATION>\n"
      "</s>\n";
  return kText;
}

nerlp::decl::MappingDocument CoconutAst() {
  using nerlp::decl::ConstraintType;
  using nerlp::decl::Operator;
  nerlp::decl::MappingDocument doc;
  doc.objective = {"maximize", "number of coconuts", {{"rickshaws", "50"}, {"ox carts", "30"}}};
  nerlp::decl::ConstraintDecl linear;
  linear.direction = "at most";
  linear.op = Operator::kLessOrEqual;
  linear.limit = "200";
  linear.type = ConstraintType::kLinear;
  linear.terms = {{"rickshaws", "10"}, {"ox carts", "8"}};
  nerlp::decl::ConstraintDecl xy;
  xy.direction = "must not exceed";
  xy.op = Operator::kLessOrEqual;
  xy.type = ConstraintType::kXy;
  xy.terms = {{"ox carts", std::nullopt}};
  xy.rhs = nerlp::decl::Term{"rickshaws", std::nullopt};
  doc.constraints = {linear, xy};
  return doc;
}

}  // namespace oracle
