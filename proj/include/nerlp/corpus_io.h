#ifndef NERLP_CORPUS_IO_H
#define NERLP_CORPUS_IO_H

#include <iosfwd>
#include <string>
#include <vector>

#include "nerlp/tagging.h"

namespace nerlp {

// CoNLL-style corpus: one "token<TAB>label" per line, a blank line between
// sentences. A "# id: <string>" line names the following sentence; otherwise
// sentences are numbered from 0 in file order.
Corpus ReadConll(std::istream& in, const std::string& source_name = "<stream>");
Corpus ReadConllFile(const std::string& path);
void WriteConll(std::ostream& out, const Corpus& corpus);
void WriteConllFile(const std::string& path, const Corpus& corpus);

// Label sequence emitted by one tagger for one sentence.
struct SentencePrediction {
  std::string sentence_id;
  LabelSequence labels;
};

// JSON Lines, one {"sentence_id": ..., "labels": [...]} object per line.
std::vector<SentencePrediction> ReadPredictions(std::istream& in,
                                                const std::string& source_name = "<stream>");
std::vector<SentencePrediction> ReadPredictionsFile(const std::string& path);
void WritePredictions(std::ostream& out, const std::vector<SentencePrediction>& preds);
void WritePredictionsFile(const std::string& path, const std::vector<SentencePrediction>& preds);

// Reorders predictions to follow `gold` and attaches its tokens. Throws
// DataError when a sentence is missing or its length disagrees.
Corpus AlignPredictions(const Corpus& gold, const std::vector<SentencePrediction>& preds);

}  // namespace nerlp

#endif  // NERLP_CORPUS_IO_H
