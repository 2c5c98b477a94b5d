#include "nerlp/decl_json.h"

namespace nerlp::decl {

namespace {

nlohmann::ordered_json TermJson(const Term& t) {
  nlohmann::ordered_json j;
  j["variable"] = t.variable;
  if (t.coefficient) j["coefficient"] = *t.coefficient;
  return j;
}

Term TermFromJson(const nlohmann::json& j) {
  Term t;
  t.variable = j.at("variable").get<std::string>();
  if (j.contains("coefficient")) t.coefficient = j.at("coefficient").get<std::string>();
  return t;
}

std::vector<Term> TermsFromJson(const nlohmann::json& j) {
  std::vector<Term> out;
  for (const auto& t : j) out.push_back(TermFromJson(t));
  return out;
}

}  // namespace

nlohmann::ordered_json ToJson(const MappingDocument& doc) {
  nlohmann::ordered_json j;
  auto& obj = j["objective"];
  obj["direction"] = doc.objective.direction;
  obj["name"] = doc.objective.name;
  obj["terms"] = nlohmann::ordered_json::array();
  for (const auto& t : doc.objective.terms) obj["terms"].push_back(TermJson(t));
  j["constraints"] = nlohmann::ordered_json::array();
  for (const auto& c : doc.constraints) {
    nlohmann::ordered_json cj;
    cj["direction"] = c.direction;
    cj["operator"] = OperatorName(c.op);
    if (c.limit) cj["limit"] = *c.limit;
    cj["type"] = ConstraintTypeToken(c.type);
    cj["terms"] = nlohmann::ordered_json::array();
    for (const auto& t : c.terms) cj["terms"].push_back(TermJson(t));
    if (c.rhs) cj["rhs"] = TermJson(*c.rhs);
    j["constraints"].push_back(std::move(cj));
  }
  return j;
}

MappingDocument MappingFromJson(const nlohmann::json& j) {
  try {
    MappingDocument doc;
    const auto& obj = j.at("objective");
    doc.objective.direction = obj.at("direction").get<std::string>();
    doc.objective.name = obj.at("name").get<std::string>();
    doc.objective.terms = TermsFromJson(obj.at("terms"));
    if (doc.objective.terms.empty()) throw DataError("objective needs at least one term");
    for (const auto& cj : j.at("constraints")) {
      ConstraintDecl c;
      c.direction = cj.at("direction").get<std::string>();
      const auto op = ParseOperator(cj.at("operator").get<std::string>());
      if (!op) throw DataError("unknown operator " + cj.at("operator").dump());
      c.op = *op;
      if (cj.contains("limit")) c.limit = cj.at("limit").get<std::string>();
      const auto type = ParseConstraintType(cj.at("type").get<std::string>());
      if (!type) throw DataError("unknown constraint type " + cj.at("type").dump());
      c.type = *type;
      c.terms = TermsFromJson(cj.at("terms"));
      if (c.terms.empty()) throw DataError("constraint needs at least one term");
      if (cj.contains("rhs")) c.rhs = TermFromJson(cj.at("rhs"));
      if (c.rhs && c.terms.size() != 1) throw DataError("'x [is] y' constraints take exactly one left term");
      doc.constraints.push_back(std::move(c));
    }
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed mapping JSON: ") + e.what());
  }
}

nlohmann::ordered_json ToJson(const PromptTask& task) {
  nlohmann::ordered_json j;
  j["prompt"] = task.prompt;
  j["input"] = task.input;
  j["target"] = task.target;
  return j;
}

PromptTask TaskFromJson(const nlohmann::json& j) {
  try {
    return {j.at("prompt").get<std::string>(), j.value("input", std::string()),
            j.at("target").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed task JSON: ") + e.what());
  }
}

}  // namespace nerlp::decl

namespace nerlp::lp {

nlohmann::ordered_json ToJson(const LpProblem& lp, const LpSolution& sol) {
  nlohmann::ordered_json j;
  j["status"] = StatusName(sol.status);
  if (sol.status == Status::kOptimal) {
    j["objective"] = sol.objective;
    auto& a = j["assignment"];
    a = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < lp.variables.size(); ++k) a[lp.variables[k]] = sol.values[k];
  }
  return j;
}

}  // namespace nerlp::lp
