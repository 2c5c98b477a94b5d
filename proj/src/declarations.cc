#include "nerlp/declarations.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace nerlp::decl {

std::string OperatorName(Operator op) {
  switch (op) {
    case Operator::kLessOrEqual:
      return "LESS_OR_EQUAL";
    case Operator::kGreaterOrEqual:
      return "GREATER_OR_EQUAL";
    case Operator::kEqual:
      return "EQUAL";
  }
  return "?";
}

std::optional<Operator> ParseOperator(std::string_view name) {
  if (name == "LESS_OR_EQUAL") return Operator::kLessOrEqual;
  if (name == "GREATER_OR_EQUAL") return Operator::kGreaterOrEqual;
  if (name == "EQUAL") return Operator::kEqual;
  return std::nullopt;
}

std::string ConstraintTypeToken(ConstraintType type) {
  switch (type) {
    case ConstraintType::kSum:
      return "SUM_CONSTRAINT";
    case ConstraintType::kUpperBound:
      return "UPPER_BOUND";
    case ConstraintType::kLowerBound:
      return "LOWER_BOUND";
    case ConstraintType::kLinear:
      return "LINEAR_CONSTRAINT";
    case ConstraintType::kRatio:
      return "RATIO_CONSTRAINT";
    case ConstraintType::kXby:
      return "XBY_CONSTRAINT";
    case ConstraintType::kXy:
      return "XY_CONSTRAINT";
  }
  return "?";
}

std::optional<ConstraintType> ParseConstraintType(std::string_view token) {
  for (auto t : kConstraintTypes) {
    if (token == ConstraintTypeToken(t)) return t;
  }
  return std::nullopt;
}

std::string NormalizeWhitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool IsBlockTag(std::string_view name) {
  return name == "DECLARATION" || name == "OBJ_DECLARATION" || name == "CONST_DECLARATION";
}

bool IsEntityTag(std::string_view name) {
  static const char* kNames[] = {"OBJ_DIR", "OBJ_NAME", "VAR",   "PARAM",
                                 "CONST_DIR", "OPERATOR", "LIMIT", "CONST_TYPE"};
  return std::any_of(std::begin(kNames), std::end(kNames), [&](const char* n) { return name == n; });
}

struct Token {
  enum class Kind { kOpen, kClose, kEntity, kBracket, kEnd };
  Kind kind = Kind::kEnd;
  std::string name;     // tag name, or bracket content
  std::string content;  // entity text
  std::size_t offset = 0;
};

std::vector<Token> Lex(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (true) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    const std::size_t start = i;
    if (text[i] == '<') {
      const auto close = text.find('>', i);
      if (close == std::string_view::npos) throw ParseError(start, "unterminated tag");
      std::string_view name = text.substr(i + 1, close - i - 1);
      const bool closing = !name.empty() && name.front() == '/';
      if (closing) name.remove_prefix(1);
      i = close + 1;
      if (name == "s" || IsBlockTag(name)) {
        out.push_back({closing ? Token::Kind::kClose : Token::Kind::kOpen, std::string(name), {}, start});
      } else if (IsEntityTag(name)) {
        if (closing) throw ParseError(start, "unbalanced tags: </" + std::string(name) + "> without opening tag");
        const std::string terminator = "</" + std::string(name) + ">";
        const auto end = text.find(terminator, i);
        if (end == std::string_view::npos) {
          throw ParseError(start, "unbalanced tags: <" + std::string(name) + "> is never closed");
        }
        out.push_back({Token::Kind::kEntity, std::string(name), std::string(Trim(text.substr(i, end - i))), start});
        i = end + terminator.size();
      } else {
        throw ParseError(start, "unknown tag <" + std::string(closing ? "/" : "") + std::string(name) + ">");
      }
    } else if (text[i] == '[') {
      const auto close = text.find(']', i);
      if (close == std::string_view::npos) throw ParseError(start, "unterminated bracket token");
      out.push_back({Token::Kind::kBracket, std::string(Trim(text.substr(i + 1, close - i - 1))), {}, start});
      i = close + 1;
    } else {
      std::size_t j = i;
      while (j < text.size() && text[j] != '<' && text[j] != '[') ++j;
      throw ParseError(start, "unexpected text '" + std::string(Trim(text.substr(i, j - i))) + "'");
    }
  }
  out.push_back({Token::Kind::kEnd, {}, {}, text.size()});
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(Lex(text)) {}

  MappingDocument Document() {
    const Token& open = Next();
    if (open.kind != Token::Kind::kOpen || open.name != "s") throw ParseError(open.offset, "expected <s>");
    std::vector<Declaration> decls;
    while (!(Peek().kind == Token::Kind::kClose && Peek().name == "s")) {
      if (Peek().kind == Token::Kind::kEnd) throw ParseError(Peek().offset, "unbalanced tags: missing </s>");
      decls.push_back(Block());
    }
    const std::size_t close_offset = Next().offset;
    if (Peek().kind != Token::Kind::kEnd) throw ParseError(Peek().offset, "content after </s>");

    MappingDocument doc;
    std::size_t objectives = 0;
    for (auto& d : decls) {
      if (auto* obj = std::get_if<ObjectiveDecl>(&d)) {
        doc.objective = std::move(*obj);
        ++objectives;
      } else {
        doc.constraints.push_back(std::move(std::get<ConstraintDecl>(d)));
      }
    }
    if (objectives == 0) throw ParseError(close_offset, "missing objective declaration (no OBJ_DIR)");
    if (objectives > 1) throw ParseError(close_offset, "more than one objective declaration");
    return doc;
  }

  std::vector<Declaration> Blocks() {
    std::vector<Declaration> decls;
    while (Peek().kind != Token::Kind::kEnd) decls.push_back(Block());
    return decls;
  }

 private:
  const Token& Peek() const { return tokens_[pos_]; }
  const Token& Next() {
    const Token& t = tokens_[pos_];
    if (t.kind != Token::Kind::kEnd) ++pos_;
    return t;
  }
  bool PeekEntity(std::string_view name) const {
    return Peek().kind == Token::Kind::kEntity && Peek().name == name;
  }
  bool PeekBracket(std::string_view name) const {
    return Peek().kind == Token::Kind::kBracket && Peek().name == name;
  }
  const Token& ExpectEntity(std::string_view name) {
    if (!PeekEntity(name)) throw ParseError(Peek().offset, "expected <" + std::string(name) + ">");
    return Next();
  }

  Declaration Block() {
    const Token& open = Next();
    if (open.kind != Token::Kind::kOpen || !IsBlockTag(open.name)) {
      throw ParseError(open.offset, "expected a declaration block");
    }
    const std::string tag = open.name;
    Declaration decl;
    if (PeekEntity("OBJ_DIR")) {
      decl = Objective();
    } else if (PeekEntity("CONST_DIR")) {
      decl = Constraint();
    } else if (tag == "CONST_DECLARATION") {
      throw ParseError(Peek().offset, "constraint declaration must begin with <CONST_DIR>");
    } else {
      throw ParseError(Peek().offset, "missing <OBJ_DIR>");
    }
    const Token& close = Next();
    if (close.kind != Token::Kind::kClose || close.name != tag) {
      throw ParseError(close.offset, "unbalanced tags: expected </" + tag + ">");
    }
    return decl;
  }

  Term ParseTerm() {
    Term term;
    term.variable = ExpectEntity("VAR").content;
    if (term.variable.empty()) throw ParseError(Peek().offset, "empty <VAR>");
    if (PeekBracket("TIMES")) {
      Next();
      term.coefficient = ExpectEntity("PARAM").content;
    }
    return term;
  }

  ObjectiveDecl Objective() {
    ObjectiveDecl obj;
    obj.direction = Next().content;
    obj.name = ExpectEntity("OBJ_NAME").content;
    if (PeekBracket("is")) Next();
    if (!PeekEntity("VAR")) throw ParseError(Peek().offset, "objective needs at least one term");
    while (PeekEntity("VAR")) obj.terms.push_back(ParseTerm());
    return obj;
  }

  ConstraintDecl Constraint() {
    ConstraintDecl c;
    c.direction = Next().content;
    const Token& op = ExpectEntity("OPERATOR");
    const auto parsed_op = ParseOperator(op.content);
    if (!parsed_op) throw ParseError(op.offset, "unknown OPERATOR '" + op.content + "'");
    c.op = *parsed_op;
    if (PeekEntity("LIMIT")) c.limit = Next().content;
    const Token& type = ExpectEntity("CONST_TYPE");
    std::string_view raw = type.content;
    if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']') {
      throw ParseError(type.offset, "unknown CONST_TYPE '" + type.content + "'");
    }
    const auto parsed_type = ParseConstraintType(Trim(raw.substr(1, raw.size() - 2)));
    if (!parsed_type) throw ParseError(type.offset, "unknown CONST_TYPE '" + type.content + "'");
    c.type = *parsed_type;
    if (PeekBracket("is")) Next();
    if (!PeekEntity("VAR")) throw ParseError(Peek().offset, "constraint needs at least one term");
    c.terms.push_back(ParseTerm());
    if (PeekBracket("is")) {
      Next();
      c.rhs = ParseTerm();
      return c;
    }
    while (PeekEntity("VAR")) c.terms.push_back(ParseTerm());
    return c;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

std::string TermLine(const Term& t) {
  std::string s = "<VAR> " + t.variable + " </VAR>";
  if (t.coefficient) s += " [TIMES] <PARAM> " + *t.coefficient + " </PARAM>";
  return s;
}

}  // namespace

MappingDocument ParseMapping(std::string_view text) { return Parser(text).Document(); }

std::vector<Declaration> ParseBlocks(std::string_view text) { return Parser(text).Blocks(); }

std::string SerializeObjective(const ObjectiveDecl& obj, std::string_view block_tag) {
  std::string out = "<" + std::string(block_tag) + ">\n";
  out += "<OBJ_DIR> " + obj.direction + " </OBJ_DIR>\n";
  out += "<OBJ_NAME> " + obj.name + " </OBJ_NAME> [is]\n";
  for (const auto& t : obj.terms) out += TermLine(t) + "\n";
  out += "</" + std::string(block_tag) + ">\n";
  return out;
}

std::string SerializeConstraint(const ConstraintDecl& c, std::string_view block_tag) {
  std::string out = "<" + std::string(block_tag) + ">\n";
  out += "<CONST_DIR> " + c.direction + " </CONST_DIR>\n";
  out += "<OPERATOR> " + OperatorName(c.op) + " </OPERATOR>\n";
  if (c.limit) out += "<LIMIT> " + *c.limit + " </LIMIT>\n";
  out += "<CONST_TYPE> [" + ConstraintTypeToken(c.type) + "] </CONST_TYPE>";
  if (c.rhs) {
    out += "\n" + TermLine(c.terms.front()) + " [is] " + TermLine(*c.rhs) + "\n";
  } else {
    out += " [is]\n";
    for (const auto& t : c.terms) out += TermLine(t) + "\n";
  }
  out += "</" + std::string(block_tag) + ">\n";
  return out;
}

std::string SerializeMapping(const MappingDocument& doc) {
  std::string out = "<s>\n";
  out += SerializeObjective(doc.objective, "DECLARATION");
  for (const auto& c : doc.constraints) out += SerializeConstraint(c, "DECLARATION");
  out += "</s>\n";
  return out;
}

// ---- multi-task decomposition ----

std::string PromptFor(const TaskSlot& slot) {
  if (slot.kind == TaskKind::kObjective) return "prompt <OBJ_DECLARATION> </OBJ_DECLARATION>:";
  return "prompt <CONST_DECLARATION> [" + ConstraintTypeToken(slot.type) + "] </CONST_DECLARATION>:";
}

TaskSlot SlotForPrompt(std::string_view prompt) {
  const std::string normalized = NormalizeWhitespace(prompt);
  if (normalized == PromptFor({TaskKind::kObjective, {}})) return {TaskKind::kObjective, {}};
  for (auto t : kConstraintTypes) {
    if (normalized == PromptFor({TaskKind::kConstraint, t})) return {TaskKind::kConstraint, t};
  }
  throw DataError("unrecognized prompt '" + std::string(prompt) + "'");
}

std::vector<PromptTask> Decompose(const MappingDocument& doc, const std::string& wrapped_input) {
  std::vector<PromptTask> tasks;
  tasks.push_back({PromptFor({TaskKind::kObjective, {}}), wrapped_input,
                   SerializeObjective(doc.objective, "OBJ_DECLARATION")});
  for (auto type : kConstraintTypes) {
    std::string target;
    for (const auto& c : doc.constraints) {
      if (c.type == type) target += SerializeConstraint(c, "CONST_DECLARATION");
    }
    tasks.push_back({PromptFor({TaskKind::kConstraint, type}), wrapped_input, target});
  }
  return tasks;
}

RecomposeResult Recompose(const std::vector<PromptTask>& outputs) {
  RecomposeResult result;
  std::vector<ObjectiveDecl> objectives;
  std::map<ConstraintType, std::vector<ConstraintDecl>> by_type;
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    const auto& task = outputs[k];
    try {
      SlotForPrompt(task.prompt);
      if (NormalizeWhitespace(task.target).empty()) continue;
      for (auto& d : ParseBlocks(task.target)) {
        if (auto* obj = std::get_if<ObjectiveDecl>(&d)) {
          if (std::find(objectives.begin(), objectives.end(), *obj) == objectives.end()) {
            objectives.push_back(std::move(*obj));
          }
        } else {
          auto& c = std::get<ConstraintDecl>(d);
          auto& bucket = by_type[c.type];
          if (std::find(bucket.begin(), bucket.end(), c) == bucket.end()) bucket.push_back(std::move(c));
        }
      }
    } catch (const DataError& e) {
      result.errors.push_back({k, task.prompt, e.what()});
    }
  }
  if (objectives.empty()) throw DataError("recompose: no objective declaration among the outputs");
  if (objectives.size() > 1) {
    throw DataError("recompose: " + std::to_string(objectives.size()) + " distinct objective declarations");
  }
  result.document.objective = std::move(objectives.front());
  for (auto type : kConstraintTypes) {
    for (auto& c : by_type[type]) result.document.constraints.push_back(std::move(c));
  }
  return result;
}

// ---- entity wrapping ----

std::string WrapEntities(std::string_view text, std::vector<CharSpan> spans) {
  std::sort(spans.begin(), spans.end(),
            [](const CharSpan& a, const CharSpan& b) { return a.start < b.start; });
  for (std::size_t k = 0; k < spans.size(); ++k) {
    const auto& s = spans[k];
    if (s.start >= s.end || s.end > text.size()) {
      throw DataError("entity span [" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                      ") is empty or out of range");
    }
    if (s.type.empty()) throw DataError("entity span without a type");
    if (k > 0 && spans[k - 1].end > s.start) throw DataError("overlapping entity spans");
  }
  std::string out(text);
  // Right to left so earlier offsets stay valid.
  for (auto it = spans.rbegin(); it != spans.rend(); ++it) {
    out.insert(it->end, " </" + it->type + ">");
    out.insert(it->start, "<" + it->type + "> ");
  }
  return out;
}

Unwrapped UnwrapEntities(std::string_view wrapped, const std::vector<std::string>& types) {
  Unwrapped out;
  std::size_t i = 0;
  while (i < wrapped.size()) {
    bool matched = false;
    if (wrapped[i] == '<') {
      for (const auto& t : types) {
        const std::string open = "<" + t + "> ";
        const std::string close = " </" + t + ">";
        if (wrapped.compare(i, open.size(), open) != 0) continue;
        const auto end = wrapped.find(close, i + open.size());
        if (end == std::string_view::npos || end == i + open.size()) continue;
        const std::size_t start = out.text.size();
        out.text.append(wrapped.substr(i + open.size(), end - i - open.size()));
        out.spans.push_back({start, out.text.size(), t});
        i = end + close.size();
        matched = true;
        break;
      }
    }
    if (!matched) out.text.push_back(wrapped[i++]);
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> TokenOffsets(std::string_view text,
                                                              const std::vector<std::string>& tokens) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t cursor = 0;
  for (const auto& tok : tokens) {
    const auto at = text.find(tok, cursor);
    if (at == std::string_view::npos) throw DataError("token '" + tok + "' not found in problem text");
    out.emplace_back(at, at + tok.size());
    cursor = at + tok.size();
  }
  return out;
}

// ---- problems and token statistics ----

namespace {

Problem ProblemFromJson(const nlohmann::json& j, std::size_t index) {
  Problem p;
  p.id = j.contains("id") ? j.at("id").get<std::string>() : std::to_string(index);
  p.text = j.at("text").get<std::string>();
  for (const auto& e : j.value("entities", nlohmann::json::array())) {
    p.entities.push_back({e.at("start").get<std::size_t>(), e.at("end").get<std::size_t>(),
                          e.at("type").get<std::string>()});
  }
  p.mapping = j.at("mapping").get<std::string>();
  return p;
}

}  // namespace

std::vector<Problem> ReadProblems(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string content = buf.str();
  std::vector<Problem> out;
  try {
    // A single JSON object, or one object per line.
    if (nlohmann::json::accept(content)) {
      const auto j = nlohmann::json::parse(content);
      if (j.is_array()) {
        for (const auto& item : j) out.push_back(ProblemFromJson(item, out.size()));
      } else {
        out.push_back(ProblemFromJson(j, 0));
      }
      return out;
    }
    std::istringstream lines(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        out.push_back(ProblemFromJson(nlohmann::json::parse(line), out.size()));
      } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return out;
}

std::size_t CountWhitespaceTokens(std::string_view text) {
  std::size_t count = 0;
  bool in_token = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c));
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

namespace {

class StatsAccumulator {
 public:
  explicit StatsAccumulator(std::size_t budget) : budget_(budget) {}
  void Add(const std::string& input, const std::string& output) {
    const auto in = CountWhitespaceTokens(input);
    const auto out = CountWhitespaceTokens(output);
    s_.instances++;
    s_.max_input = std::max(s_.max_input, in);
    s_.max_output = std::max(s_.max_output, out);
    in_sum_ += in;
    out_sum_ += out;
    if (in > budget_ || out > budget_) s_.over_budget++;
  }
  LengthStats Finish() const {
    LengthStats s = s_;
    if (s.instances > 0) {
      s.mean_input = static_cast<double>(in_sum_) / s.instances;
      s.mean_output = static_cast<double>(out_sum_) / s.instances;
    }
    return s;
  }

 private:
  std::size_t budget_;
  LengthStats s_;
  std::size_t in_sum_ = 0;
  std::size_t out_sum_ = 0;
};

}  // namespace

TokenStats ComputeTokenStats(const std::vector<Problem>& problems, std::size_t budget) {
  StatsAccumulator original(budget), augmented(budget), multitask(budget), both(budget);
  const std::string prefix(kOriginalPrefix);
  for (const auto& p : problems) {
    const std::string wrapped = WrapEntities(p.text, p.entities);
    const auto doc = ParseMapping(p.mapping);
    const std::string mapping = SerializeMapping(doc);
    original.Add(prefix + " " + p.text, mapping);
    augmented.Add(prefix + " " + wrapped, mapping);
    for (const auto& task : Decompose(doc, p.text)) multitask.Add(task.prompt + " " + task.input, task.target);
    for (const auto& task : Decompose(doc, wrapped)) both.Add(task.prompt + " " + task.input, task.target);
  }
  return {original.Finish(), augmented.Finish(), multitask.Finish(), both.Finish()};
}

}  // namespace nerlp::decl
