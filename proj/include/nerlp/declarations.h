#ifndef NERLP_DECLARATIONS_H
#define NERLP_DECLARATIONS_H

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nerlp/error.h"

namespace nerlp::decl {

// A malformed mapping. `offset` is the byte offset into the parsed text.
class ParseError : public DataError {
 public:
  ParseError(std::size_t offset, const std::string& message)
      : DataError("offset " + std::to_string(offset) + ": " + message), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

enum class Operator { kLessOrEqual, kGreaterOrEqual, kEqual };
std::string OperatorName(Operator op);  // "LESS_OR_EQUAL", ...
std::optional<Operator> ParseOperator(std::string_view name);

enum class ConstraintType { kSum, kUpperBound, kLowerBound, kLinear, kRatio, kXby, kXy };
inline constexpr std::array<ConstraintType, 7> kConstraintTypes = {
    ConstraintType::kSum,   ConstraintType::kUpperBound, ConstraintType::kLowerBound,
    ConstraintType::kLinear, ConstraintType::kRatio,     ConstraintType::kXby,
    ConstraintType::kXy};
// Bracket token without brackets: "SUM_CONSTRAINT", "UPPER_BOUND", ...
std::string ConstraintTypeToken(ConstraintType type);
std::optional<ConstraintType> ParseConstraintType(std::string_view token);

// `variable` is VAR surface text; `coefficient` is PARAM surface text, absent
// for coefficient-one terms.
struct Term {
  std::string variable;
  std::optional<std::string> coefficient;
  friend bool operator==(const Term&, const Term&) = default;
};

struct ObjectiveDecl {
  std::string direction;  // OBJ_DIR surface text
  std::string name;       // OBJ_NAME surface text
  std::vector<Term> terms;
  friend bool operator==(const ObjectiveDecl&, const ObjectiveDecl&) = default;
};

// Terms form the left-hand side. `rhs` is set for the "x [is] y" shape used
// by XY and XBY declarations.
struct ConstraintDecl {
  std::string direction;  // CONST_DIR surface text
  Operator op = Operator::kLessOrEqual;
  std::optional<std::string> limit;
  ConstraintType type = ConstraintType::kLinear;
  std::vector<Term> terms;
  std::optional<Term> rhs;
  friend bool operator==(const ConstraintDecl&, const ConstraintDecl&) = default;
};

using Declaration = std::variant<ObjectiveDecl, ConstraintDecl>;

struct MappingDocument {
  ObjectiveDecl objective;
  std::vector<ConstraintDecl> constraints;
  friend bool operator==(const MappingDocument&, const MappingDocument&) = default;
};

// "<s> declaration+ </s>" with exactly one objective. Block tags may be
// DECLARATION, OBJ_DECLARATION or CONST_DECLARATION.
MappingDocument ParseMapping(std::string_view text);
// A bare sequence of declaration blocks (generator output); may be empty.
std::vector<Declaration> ParseBlocks(std::string_view text);

// One tag per line in the competition layout.
std::string SerializeMapping(const MappingDocument& doc);
std::string SerializeObjective(const ObjectiveDecl& obj, std::string_view block_tag);
std::string SerializeConstraint(const ConstraintDecl& c, std::string_view block_tag);

// Collapses whitespace runs to one space and trims the ends.
std::string NormalizeWhitespace(std::string_view text);

// ---- multi-task decomposition ----

enum class TaskKind { kObjective, kConstraint };

struct TaskSlot {
  TaskKind kind = TaskKind::kObjective;
  ConstraintType type = ConstraintType::kSum;  // meaningful for constraints only
};

std::string PromptFor(const TaskSlot& slot);
// Throws DataError when the prompt is not one of the eight templates.
TaskSlot SlotForPrompt(std::string_view prompt);

struct PromptTask {
  std::string prompt;
  std::string input;
  std::string target;  // empty for negative samples
};

// Objective task first, then one task per constraint type in canonical order.
std::vector<PromptTask> Decompose(const MappingDocument& doc, const std::string& wrapped_input);

struct TaskError {
  std::size_t task_index = 0;
  std::string prompt;
  std::string message;
};

struct RecomposeResult {
  MappingDocument document;
  std::vector<TaskError> errors;
};

// Merges generated outputs (PromptTask::target) into one document: constraints
// ordered by type, then source order; empty outputs dropped; structurally equal
// declarations kept once. Throws DataError unless exactly one objective results.
RecomposeResult Recompose(const std::vector<PromptTask>& outputs);

// ---- entity wrapping ----

struct CharSpan {
  std::size_t start = 0;  // byte offsets, half-open
  std::size_t end = 0;
  std::string type;
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

// Rewrites each span as "<TYPE> text </TYPE>". Throws DataError on
// overlapping, empty or out-of-range spans.
std::string WrapEntities(std::string_view text, std::vector<CharSpan> spans);

struct Unwrapped {
  std::string text;
  std::vector<CharSpan> spans;
};
// Inverse of WrapEntities for the given entity type names.
Unwrapped UnwrapEntities(std::string_view wrapped, const std::vector<std::string>& types);

// Locates each token, in order, in `text`; returns byte ranges.
std::vector<std::pair<std::size_t, std::size_t>> TokenOffsets(std::string_view text,
                                                              const std::vector<std::string>& tokens);

// ---- problems and token statistics ----

struct Problem {
  std::string id;
  std::string text;
  std::vector<CharSpan> entities;
  std::string mapping;
};

std::vector<Problem> ReadProblems(const std::string& path);  // JSON object or JSON Lines

inline constexpr std::string_view kOriginalPrefix = "generate:";

std::size_t CountWhitespaceTokens(std::string_view text);

struct LengthStats {
  std::size_t instances = 0;
  std::size_t max_input = 0;
  double mean_input = 0.0;
  std::size_t max_output = 0;
  double mean_output = 0.0;
  std::size_t over_budget = 0;  // instances whose input or output exceeds the budget
};

struct TokenStats {
  LengthStats original;
  LengthStats augmented;             // entity-wrapped input, single task
  LengthStats multitask;             // eight prompts, raw input
  LengthStats augmented_multitask;   // eight prompts, wrapped input
};

TokenStats ComputeTokenStats(const std::vector<Problem>& problems, std::size_t budget = 512);

}  // namespace nerlp::decl

#endif  // NERLP_DECLARATIONS_H
