#include "nerlp/augment.h"

#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nerlp/error.h"
#include "nerlp/parallel.h"

namespace nerlp::augment {

std::string TechniqueName(Technique t) {
  switch (t) {
    case Technique::kLwtr:
      return "lwtr";
    case Technique::kSr:
      return "sr";
    case Technique::kMr:
      return "mr";
    case Technique::kSis:
      return "sis";
  }
  return "?";
}

Technique ParseTechnique(const std::string& name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "lwtr") return Technique::kLwtr;
  if (lower == "sr") return Technique::kSr;
  if (lower == "mr") return Technique::kMr;
  if (lower == "sis") return Technique::kSis;
  throw DataError("unknown augmentation technique '" + name + "'");
}

const SynonymTable& BuiltinSynonyms() {
  static const SynonymTable kTable = {
      {"chicken", {"volaille", "poultry", "hen"}},
      {"costs", {"cost", "price"}},
      {"cost", {"price", "expense"}},
      {"profit", {"gain", "earnings", "return"}},
      {"revenue", {"income", "earnings"}},
      {"maximize", {"maximise", "increase"}},
      {"minimize", {"minimise", "reduce"}},
      {"make", {"produce", "manufacture", "build"}},
      {"makes", {"produces", "manufactures", "builds"}},
      {"produce", {"make", "manufacture"}},
      {"sells", {"vends", "markets"}},
      {"sell", {"vend", "market"}},
      {"most", {"maximum"}},
      {"least", {"minimum"}},
      {"hours", {"hrs"}},
      {"units", {"pieces", "items"}},
      {"available", {"accessible", "on-hand"}},
      {"requires", {"needs", "takes"}},
      {"number", {"count", "quantity"}},
      {"transport", {"carry", "move"}},
      {"each", {"every", "per"}},
      {"company", {"firm", "business"}},
      {"factory", {"plant", "mill"}},
      {"farmer", {"grower", "rancher"}},
      {"serving", {"portion", "helping"}},
  };
  return kTable;
}

SynonymTable ReadSynonymFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open synonym table '" + path + "'");
  try {
    const auto j = nlohmann::json::parse(in);
    if (!j.is_object()) throw DataError(path + ": synonym table must be a JSON object");
    SynonymTable table;
    for (const auto& [word, syns] : j.items()) {
      table[word] = syns.get<std::vector<std::string>>();
    }
    return table;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

void AugmentConfig::Validate() const {
  if (!(replace_probability >= 0.0 && replace_probability <= 1.0)) {
    throw DataError("replace probability must lie in [0, 1]");
  }
  if (copies_per_sentence < 1) throw DataError("copies per sentence must be at least 1");
  if (technique == Technique::kSr && synonyms.empty()) {
    throw DataError("synonym replacement requires a nonempty synonym table");
  }
}

LabelLexicon BuildLexicon(const Corpus& train) {
  if (train.empty()) throw DataError("cannot build a lexicon from an empty corpus");
  LabelLexicon lex;
  for (const auto& s : train) {
    CheckSentence(s);
    const auto spans = ExtractSpans(s.labels);
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      lex.tokens_by_label[s.labels[i].str()].push_back(s.tokens[i]);
    }
    for (const auto& span : spans) {
      Mention m;
      m.tokens.assign(s.tokens.begin() + span.start, s.tokens.begin() + span.end);
      m.labels.assign(s.labels.begin() + span.start, s.labels.begin() + span.end);
      lex.mentions_by_type[span.type].push_back(std::move(m));
    }
  }
  return lex;
}

LabeledSentence Lwtr(const LabeledSentence& sentence, const LabelLexicon& lexicon, double p, Rng& rng) {
  LabeledSentence out = sentence;
  for (std::size_t i = 0; i < out.tokens.size(); ++i) {
    if (!rng.bernoulli(p)) continue;
    auto it = lexicon.tokens_by_label.find(out.labels[i].str());
    if (it == lexicon.tokens_by_label.end() || it->second.empty()) continue;
    out.tokens[i] = it->second[rng.below(it->second.size())];
  }
  return out;
}

namespace {

std::vector<std::string> SplitWords(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

const std::vector<std::string>* LookupSynonyms(const SynonymTable& table, const std::string& token) {
  if (auto it = table.find(token); it != table.end()) return &it->second;
  std::string lower;
  for (char c : token) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (auto it = table.find(lower); it != table.end()) return &it->second;
  return nullptr;
}

}  // namespace

LabeledSentence Sr(const LabeledSentence& sentence, const SynonymTable& synonyms, double p,
                   bool allow_multiword, Rng& rng) {
  LabeledSentence out;
  out.id = sentence.id;
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    const auto& token = sentence.tokens[i];
    const auto& label = sentence.labels[i];
    const auto* candidates = LookupSynonyms(synonyms, token);
    std::vector<std::vector<std::string>> usable;
    if (candidates) {
      for (const auto& c : *candidates) {
        auto words = SplitWords(c);
        if (words.empty() || (words.size() > 1 && !allow_multiword)) continue;
        usable.push_back(std::move(words));
      }
    }
    // The Bernoulli draw happens for every token so that the stream position
    // does not depend on table coverage.
    const bool replace = rng.bernoulli(p);
    if (!replace || usable.empty()) {
      out.tokens.push_back(token);
      out.labels.push_back(label);
      continue;
    }
    const auto& words = usable[rng.below(usable.size())];
    for (std::size_t w = 0; w < words.size(); ++w) {
      out.tokens.push_back(words[w]);
      if (w == 0 || label.is_outside()) {
        out.labels.push_back(label);
      } else {
        out.labels.push_back(IobLabel::Inside(label.type));
      }
    }
  }
  return out;
}

LabeledSentence Mr(const LabeledSentence& sentence, const LabelLexicon& lexicon, double p, Rng& rng) {
  const auto spans = ExtractSpans(sentence.labels);
  LabeledSentence out;
  out.id = sentence.id;
  std::size_t cursor = 0;
  for (const auto& span : spans) {
    for (; cursor < span.start; ++cursor) {
      out.tokens.push_back(sentence.tokens[cursor]);
      out.labels.push_back(sentence.labels[cursor]);
    }
    const Mention* replacement = nullptr;
    if (rng.bernoulli(p)) {
      auto it = lexicon.mentions_by_type.find(span.type);
      if (it != lexicon.mentions_by_type.end() && !it->second.empty()) {
        replacement = &it->second[rng.below(it->second.size())];
      }
    }
    if (replacement) {
      out.tokens.insert(out.tokens.end(), replacement->tokens.begin(), replacement->tokens.end());
      out.labels.insert(out.labels.end(), replacement->labels.begin(), replacement->labels.end());
    } else {
      out.tokens.insert(out.tokens.end(), sentence.tokens.begin() + span.start,
                        sentence.tokens.begin() + span.end);
      out.labels.insert(out.labels.end(), sentence.labels.begin() + span.start,
                        sentence.labels.begin() + span.end);
    }
    cursor = span.end;
  }
  for (; cursor < sentence.tokens.size(); ++cursor) {
    out.tokens.push_back(sentence.tokens[cursor]);
    out.labels.push_back(sentence.labels[cursor]);
  }
  return out;
}

LabeledSentence Sis(const LabeledSentence& sentence, double p, Rng& rng) {
  LabeledSentence out = sentence;
  const auto spans = ExtractSpans(sentence.labels);
  // Segments: every entity span, plus every maximal run of O tokens.
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  std::size_t cursor = 0;
  for (const auto& span : spans) {
    if (cursor < span.start) segments.emplace_back(cursor, span.start);
    segments.emplace_back(span.start, span.end);
    cursor = span.end;
  }
  if (cursor < sentence.tokens.size()) segments.emplace_back(cursor, sentence.tokens.size());

  for (const auto& [begin, end] : segments) {
    if (!rng.bernoulli(p) || end - begin < 2) continue;
    rng.shuffle(std::span<std::string>(out.tokens.data() + begin, end - begin));
  }
  return out;
}

LabeledSentence Apply(const LabeledSentence& sentence, const LabelLexicon& lexicon,
                      const AugmentConfig& config, int copy_index) {
  std::uint64_t seed = MixSeed(config.rng_seed, StableHash(sentence.id));
  seed = MixSeed(seed, static_cast<std::uint64_t>(config.technique));
  seed = MixSeed(seed, static_cast<std::uint64_t>(copy_index));
  Rng rng(seed);
  const double p = config.replace_probability;
  switch (config.technique) {
    case Technique::kLwtr:
      return Lwtr(sentence, lexicon, p, rng);
    case Technique::kSr:
      return Sr(sentence, config.synonyms, p, config.allow_multiword_synonyms, rng);
    case Technique::kMr:
      return Mr(sentence, lexicon, p, rng);
    case Technique::kSis:
      return Sis(sentence, p, rng);
  }
  return sentence;
}

Corpus AugmentCorpus(const Corpus& train, const std::vector<AugmentConfig>& configs, unsigned threads) {
  if (configs.empty()) return train;
  for (const auto& c : configs) c.Validate();
  const LabelLexicon lexicon = BuildLexicon(train);

  struct Job {
    std::size_t config;
    std::size_t sentence;
    int copy;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    for (std::size_t s = 0; s < train.size(); ++s) {
      for (int k = 0; k < configs[c].copies_per_sentence; ++k) jobs.push_back({c, s, k});
    }
  }
  Corpus generated(jobs.size());
  ParallelFor(jobs.size(), threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    const auto& cfg = configs[job.config];
    LabeledSentence s = Apply(train[job.sentence], lexicon, cfg, job.copy);
    s.id = train[job.sentence].id + "#" + TechniqueName(cfg.technique) + "#" + std::to_string(job.copy);
    generated[j] = std::move(s);
  });

  Corpus out = train;
  out.insert(out.end(), std::make_move_iterator(generated.begin()),
             std::make_move_iterator(generated.end()));
  return out;
}

}  // namespace nerlp::augment
