#ifndef NERLP_DECL_JSON_H
#define NERLP_DECL_JSON_H

#include <json.hpp>

#include "nerlp/declarations.h"
#include "nerlp/lp.h"

namespace nerlp::decl {

// {"objective": {...}, "constraints": [...]}; optional fields are omitted
// when absent.
nlohmann::ordered_json ToJson(const MappingDocument& doc);
// Throws DataError on missing fields or unknown enum names.
MappingDocument MappingFromJson(const nlohmann::json& j);

nlohmann::ordered_json ToJson(const PromptTask& task);
PromptTask TaskFromJson(const nlohmann::json& j);

}  // namespace nerlp::decl

namespace nerlp::lp {

// {"status": ..., "objective": ..., "assignment": {name: value}}
nlohmann::ordered_json ToJson(const LpProblem& lp, const LpSolution& sol);

}  // namespace nerlp::lp

#endif  // NERLP_DECL_JSON_H
