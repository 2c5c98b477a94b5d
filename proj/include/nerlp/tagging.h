#ifndef NERLP_TAGGING_H
#define NERLP_TAGGING_H

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "nerlp/labels.h"

namespace nerlp {

struct LabeledSentence {
  std::string id;
  std::vector<std::string> tokens;
  LabelSequence labels;
};

using Corpus = std::vector<LabeledSentence>;

// Throws DataError if tokens/labels differ in length, are empty, or a token
// contains whitespace.
void CheckSentence(const LabeledSentence& sentence);

// Half-open token range [start, end) carrying one entity type.
struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string type;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
  friend auto operator<=>(const EntitySpan&, const EntitySpan&) = default;
};

struct IobViolation {
  enum class Kind { kInsideWithoutBegin, kTypeMismatch };
  std::size_t position = 0;
  Kind kind = Kind::kInsideWithoutBegin;

  std::string reason() const;
  friend bool operator==(const IobViolation&, const IobViolation&) = default;
};

std::vector<IobViolation> ValidateIob(const LabelSequence& labels);
inline bool IsValidIob(const LabelSequence& labels) { return ValidateIob(labels).empty(); }

// Rewrites every violating I-X as B-X, scanning left to right.
LabelSequence RepairIob(const LabelSequence& labels);

// Throws DataError on sequences that fail ValidateIob.
std::vector<EntitySpan> ExtractSpans(const LabelSequence& labels);
LabelSequence SpansToLabels(const std::vector<EntitySpan>& spans, std::size_t length);

enum class Averaging { kMicro, kMacro };

struct PrfScore {
  std::size_t true_positives = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct F1Report {
  std::map<std::string, PrfScore> per_type;
  PrfScore micro;
  // Unweighted mean over types that occur in the gold corpus.
  double macro_f1 = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;

  double f1(Averaging averaging) const {
    return averaging == Averaging::kMicro ? micro.f1 : macro_f1;
  }
};

// Exact-match entity F1. Both sides must carry the same sentence ids in the
// same order with equal token counts. Predicted sequences that break IOB are
// repaired before span extraction; gold sequences must already be valid.
F1Report EntityF1(const Corpus& gold, const Corpus& pred);

// Same, for bare label sequences already aligned position by position.
F1Report EntityF1(const std::vector<LabelSequence>& gold, const std::vector<LabelSequence>& pred);

}  // namespace nerlp

#endif  // NERLP_TAGGING_H
