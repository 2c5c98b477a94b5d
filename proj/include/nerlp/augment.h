#ifndef NERLP_AUGMENT_H
#define NERLP_AUGMENT_H

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nerlp/random.h"
#include "nerlp/tagging.h"

namespace nerlp::augment {

enum class Technique { kLwtr, kSr, kMr, kSis };

std::string TechniqueName(Technique t);  // "lwtr", "sr", "mr", "sis"
Technique ParseTechnique(const std::string& name);

using SynonymTable = std::map<std::string, std::vector<std::string>>;

// Small English table used when no synonym file is given.
const SynonymTable& BuiltinSynonyms();
SynonymTable ReadSynonymFile(const std::string& path);

struct AugmentConfig {
  Technique technique = Technique::kLwtr;
  double replace_probability = 0.3;
  int copies_per_sentence = 1;
  std::uint64_t rng_seed = 42;
  SynonymTable synonyms;
  // SR only: allow synonyms that contain spaces. Continuation tokens inherit
  // I- of the replaced token's type.
  bool allow_multiword_synonyms = false;

  // Throws DataError when a field is out of range.
  void Validate() const;
};

// A full gold mention: its tokens and the B/I labels they carried.
struct Mention {
  std::vector<std::string> tokens;
  LabelSequence labels;
};

struct LabelLexicon {
  // Multiset of training tokens per rendered label ("O", "B-VAR", ...), in
  // corpus order.
  std::map<std::string, std::vector<std::string>> tokens_by_label;
  std::map<std::string, std::vector<Mention>> mentions_by_type;
};

// Throws DataError on an empty corpus or invalid IOB.
LabelLexicon BuildLexicon(const Corpus& train);

LabeledSentence Lwtr(const LabeledSentence& sentence, const LabelLexicon& lexicon, double p, Rng& rng);
LabeledSentence Sr(const LabeledSentence& sentence, const SynonymTable& synonyms, double p,
                   bool allow_multiword, Rng& rng);
LabeledSentence Mr(const LabeledSentence& sentence, const LabelLexicon& lexicon, double p, Rng& rng);
LabeledSentence Sis(const LabeledSentence& sentence, double p, Rng& rng);

// Applies one configured technique. The RNG stream is derived from
// (config seed, sentence id, technique, copy index) so results do not depend
// on processing order.
LabeledSentence Apply(const LabeledSentence& sentence, const LabelLexicon& lexicon,
                      const AugmentConfig& config, int copy_index);

// Original sentences first, then for each config in order and each sentence,
// `copies_per_sentence` generated sentences with ids "<id>#<technique>#<k>".
Corpus AugmentCorpus(const Corpus& train, const std::vector<AugmentConfig>& configs,
                     unsigned threads = 1);

}  // namespace nerlp::augment

#endif  // NERLP_AUGMENT_H
