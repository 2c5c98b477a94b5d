#include <doctest.h>

#include <algorithm>
#include <random>

#include "nerlp/decimal.h"
#include "nerlp/decl_json.h"
#include "nerlp/declarations.h"
#include "nerlp/error.h"
#include "oracles.h"

using namespace nerlp;
using namespace nerlp::decl;

namespace {

std::vector<ConstraintDecl> Sorted(std::vector<ConstraintDecl> v) {
  std::sort(v.begin(), v.end(), [](const ConstraintDecl& a, const ConstraintDecl& b) {
    return SerializeConstraint(a, "D") < SerializeConstraint(b, "D");
  });
  return v;
}

}  // namespace

TEST_CASE("decimal parsing is exact") {
  CHECK(*Decimal::Parse("0.32") == *Decimal::Parse("0.320"));
  CHECK(*Decimal::Parse("1,000") == Decimal::FromInt(1000));
  CHECK(*Decimal::Parse("-12.5") == -*Decimal::Parse("12.5"));
  CHECK(*Decimal::Parse(".5") == *Decimal::Parse("0.5"));
  CHECK(Decimal::Parse("1,000").value().str() == "1000");
  CHECK(*Decimal::Parse("0.1") + *Decimal::Parse("0.2") == *Decimal::Parse("0.3"));
  CHECK(*Decimal::Parse("1.5") * *Decimal::Parse("0.4") == *Decimal::Parse("0.6"));
  CHECK(Decimal::Parse("40").value().shifted(2) == *Decimal::Parse("0.4"));
  CHECK(*Decimal::Parse("2") < *Decimal::Parse("10"));
  CHECK(Decimal::Parse("0.32")->to_double() == 0.32);
  for (const char* bad : {"", "-", "1.", "1,00", ",100", "1..2", "abc", "1e5", "1,000.5,0", "twice"}) {
    CHECK_MESSAGE(!Decimal::Parse(bad), bad);
  }
  const auto big = *Decimal::Parse("99999999999999999999999999999999999");
  CHECK_THROWS_AS(big * big, std::overflow_error);
}

TEST_CASE("coconut example parses to the expected AST and re-serializes") {
  const auto doc = ParseMapping(oracle::CoconutText());
  CHECK(doc == oracle::CoconutAst());
  CHECK(NormalizeWhitespace(SerializeMapping(doc)) == NormalizeWhitespace(oracle::CoconutText()));
  CHECK(SerializeMapping(doc) == oracle::CoconutText());
  // Whitespace in the input does not matter.
  std::string squashed = NormalizeWhitespace(oracle::CoconutText());
  CHECK(ParseMapping(squashed) == doc);
}

TEST_CASE("all three block tags are accepted") {
  std::string text = oracle::CoconutText();
  text.replace(text.find("<DECLARATION>"), 13, "<OBJ_DECLARATION>");
  text.replace(text.find("</DECLARATION>"), 14, "</OBJ_DECLARATION>");
  text.replace(text.find("<DECLARATION>"), 13, "<CONST_DECLARATION>");
  text.replace(text.find("</DECLARATION>"), 14, "</CONST_DECLARATION>");
  CHECK(ParseMapping(text) == oracle::CoconutAst());
}

TEST_CASE("parse errors carry byte offsets") {
  const std::string& good = oracle::CoconutText();
  const std::vector<std::string> broken = {
      "", "<s> </s>", good.substr(0, good.size() - 5),
      "<s>\n<DECLARATION>\n<OBJ_DIR> maximize </OBJ_DIR>\n</DECLARATION>\n</s>",
      "<s>\n<DECLARATION>\n<OBJ_DIR> maximize </OBJ_NAME>\n</DECLARATION>\n</s>"};
  for (const auto& text : broken) CHECK_THROWS_AS(ParseMapping(text), ParseError);
  std::string bad_op = good;
  const auto at = bad_op.find("LESS_OR_EQUAL");
  bad_op.replace(at, 13, "LESS_OR_WHAT");
  try {
    ParseMapping(bad_op);
    FAIL("expected a ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() >= at - 12);
    CHECK(e.offset() <= at + 13);
  }
  // Two objectives.
  const auto first_end = good.find("</DECLARATION>") + 15;
  std::string twice = good.substr(0, first_end) + good.substr(4, first_end - 4) + good.substr(first_end);
  CHECK_THROWS_AS(ParseMapping(twice), DataError);
}

TEST_CASE("parse and serialize are inverse on fuzzed documents") {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 500; ++t) {
    const auto doc = oracle::RandomMapping(rng);
    const std::string text = SerializeMapping(doc);
    CHECK(ParseMapping(text) == doc);
    CHECK(SerializeMapping(ParseMapping(text)) == text);
    CHECK(MappingFromJson(nlohmann::json::parse(ToJson(doc).dump())) == doc);
  }
}

TEST_CASE("decompose the coconut example") {
  const auto tasks = Decompose(oracle::CoconutAst(), "input text");
  REQUIRE(tasks.size() == 8);
  CHECK(tasks[0].prompt == "prompt <OBJ_DECLARATION> </OBJ_DECLARATION>:");
  CHECK(tasks[0].target.find("<OBJ_DECLARATION>\n<OBJ_DIR> maximize </OBJ_DIR>") == 0);
  std::size_t populated = 0;
  std::vector<std::string> negatives;
  for (const auto& t : tasks) {
    CHECK(t.input == "input text");
    if (t.target.empty()) {
      negatives.push_back(t.prompt);
    } else {
      ++populated;
    }
  }
  CHECK(populated == 3);
  std::sort(negatives.begin(), negatives.end());
  CHECK(negatives == std::vector<std::string>{
                         "prompt <CONST_DECLARATION> [LOWER_BOUND] </CONST_DECLARATION>:",
                         "prompt <CONST_DECLARATION> [RATIO_CONSTRAINT] </CONST_DECLARATION>:",
                         "prompt <CONST_DECLARATION> [SUM_CONSTRAINT] </CONST_DECLARATION>:",
                         "prompt <CONST_DECLARATION> [UPPER_BOUND] </CONST_DECLARATION>:",
                         "prompt <CONST_DECLARATION> [XBY_CONSTRAINT] </CONST_DECLARATION>:"});
  const auto linear = std::find_if(tasks.begin(), tasks.end(), [](const PromptTask& t) {
    return t.prompt == "prompt <CONST_DECLARATION> [LINEAR_CONSTRAINT] </CONST_DECLARATION>:";
  });
  CHECK(linear->target.find("<LIMIT> 200 </LIMIT>") != std::string::npos);
  CHECK(SlotForPrompt(linear->prompt).type == ConstraintType::kLinear);
  CHECK_THROWS_AS(SlotForPrompt("prompt <CONST_DECLARATION> [NOPE] </CONST_DECLARATION>:"), DataError);
}

TEST_CASE("recompose inverts decompose up to constraint order") {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 500; ++t) {
    const auto doc = oracle::RandomMapping(rng);
    auto tasks = Decompose(doc, "x");
    std::shuffle(tasks.begin(), tasks.end(), rng);
    const auto r = Recompose(tasks);
    CHECK(r.errors.empty());
    CHECK(r.document.objective == doc.objective);
    CHECK(Sorted(r.document.constraints) == Sorted(doc.constraints));
  }
}

TEST_CASE("recompose collects per-task errors and removes duplicates") {
  auto tasks = Decompose(oracle::CoconutAst(), "x");
  tasks.push_back(tasks[1]);                // duplicate constraint output
  tasks[2].target = "<CONST_DECLARATION> garbage";  // unparsable
  const auto r = Recompose(tasks);
  CHECK(r.errors.size() == 1);
  CHECK(r.errors[0].task_index == 2);
  std::size_t linear = 0;
  for (const auto& c : r.document.constraints) linear += c.type == ConstraintType::kLinear;
  CHECK(linear <= 1);

  std::vector<PromptTask> no_objective(tasks.begin() + 1, tasks.end());
  CHECK_THROWS_AS(Recompose(no_objective), DataError);
}

TEST_CASE("wrap and unwrap are inverse") {
  const std::string text = "Each rickshaw trip costs $10, at most $200.";
  std::vector<CharSpan> spans = {{5, 13, "VAR"}, {26, 28, "PARAM"}, {30, 37, "CONST_DIR"}, {39, 42, "LIMIT"}};
  const auto wrapped = WrapEntities(text, spans);
  CHECK(wrapped == "Each <VAR> rickshaw </VAR> trip costs $<PARAM> 10 </PARAM>, <CONST_DIR> at most </CONST_DIR> "
                   "$<LIMIT> 200 </LIMIT>.");
  CHECK(CountWhitespaceTokens(wrapped) == CountWhitespaceTokens(text) + 2 * spans.size());
  const auto back = UnwrapEntities(wrapped, DefaultEntityTypes());
  CHECK(back.text == text);
  CHECK(back.spans == spans);
  CHECK_THROWS_AS(WrapEntities(text, {{5, 13, "VAR"}, {10, 15, "VAR"}}), DataError);
  CHECK_THROWS_AS(WrapEntities(text, {{5, 5, "VAR"}}), DataError);
  CHECK_THROWS_AS(WrapEntities(text, {{40, 99, "VAR"}}), DataError);
}

TEST_CASE("wrap/unwrap fuzz keeps every other byte") {
  std::mt19937_64 rng(43);
  const std::string alphabet = "abc de,f$1.2 ";
  for (int t = 0; t < 500; ++t) {
    std::string text;
    const std::size_t len = 1 + rng() % 40;
    for (std::size_t i = 0; i < len; ++i) text.push_back(alphabet[rng() % alphabet.size()]);
    std::vector<CharSpan> spans;
    std::size_t cursor = 0;
    while (cursor < text.size()) {
      const std::size_t start = cursor + rng() % 5;
      const std::size_t end = start + 1 + rng() % 4;
      if (end > text.size()) break;
      if (text.substr(start, end - start).find_first_not_of(' ') != std::string::npos) {
        spans.push_back({start, end, DefaultEntityTypes()[rng() % 6]});
      }
      cursor = end;
    }
    const auto wrapped = WrapEntities(text, spans);
    const auto back = UnwrapEntities(wrapped, DefaultEntityTypes());
    CHECK(back.text == text);
    CHECK(back.spans == spans);
  }
}

TEST_CASE("token offsets locate tokens in order") {
  const auto off = TokenOffsets("costs $10, then $10.", {"costs", "$", "10", ",", "then", "$", "10", "."});
  CHECK(off[2] == std::pair<std::size_t, std::size_t>{7, 9});
  CHECK(off[6] == std::pair<std::size_t, std::size_t>{17, 19});
  CHECK_THROWS_AS(TokenOffsets("abc", {"abd"}), DataError);
}

TEST_CASE("token statistics on a single problem") {
  Problem p;
  p.text = "Each rickshaw trip carries 50 coconuts";
  p.entities = {{5, 13, "VAR"}, {27, 29, "PARAM"}};
  p.mapping = oracle::CoconutText();
  const auto s = ComputeTokenStats({p});
  CHECK(s.original.instances == 1);
  CHECK(s.multitask.instances == 8);
  CHECK(s.original.max_input == 1 + 6);
  CHECK(s.augmented.max_input == 1 + 6 + 4);
  CHECK(s.multitask.max_input == 4 + 6);
  CHECK(s.augmented_multitask.max_input == 4 + 6 + 4);
  CHECK(s.original.max_output == CountWhitespaceTokens(oracle::CoconutText()));
}
