#include "nerlp/tagging.h"

#include <set>
#include <tuple>

#include "nerlp/error.h"

namespace nerlp {

void CheckSentence(const LabeledSentence& sentence) {
  if (sentence.tokens.empty()) {
    throw DataError("sentence '" + sentence.id + "' has no tokens");
  }
  if (sentence.tokens.size() != sentence.labels.size()) {
    throw DataError("sentence '" + sentence.id + "' has " + std::to_string(sentence.tokens.size()) +
                    " tokens but " + std::to_string(sentence.labels.size()) + " labels");
  }
  for (const auto& tok : sentence.tokens) {
    if (tok.empty() || tok.find_first_of(" \t\r\n") != std::string::npos) {
      throw DataError("sentence '" + sentence.id + "' has an empty or whitespace-bearing token");
    }
  }
}

std::string IobViolation::reason() const {
  return kind == Kind::kInsideWithoutBegin ? "I without preceding B" : "entity-type mismatch";
}

std::vector<IobViolation> ValidateIob(const LabelSequence& labels) {
  std::vector<IobViolation> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].is_inside()) continue;
    if (i == 0 || labels[i - 1].is_outside()) {
      out.push_back({i, IobViolation::Kind::kInsideWithoutBegin});
    } else if (labels[i - 1].type != labels[i].type) {
      out.push_back({i, IobViolation::Kind::kTypeMismatch});
    }
  }
  return out;
}

LabelSequence RepairIob(const LabelSequence& labels) {
  LabelSequence out = labels;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out[i].is_inside()) continue;
    if (i == 0 || out[i - 1].is_outside() || out[i - 1].type != out[i].type) {
      out[i].prefix = IobPrefix::kBegin;
    }
  }
  return out;
}

std::vector<EntitySpan> ExtractSpans(const LabelSequence& labels) {
  if (auto v = ValidateIob(labels); !v.empty()) {
    throw DataError("invalid IOB sequence at position " + std::to_string(v.front().position) +
                    ": " + v.front().reason());
  }
  std::vector<EntitySpan> spans;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].is_begin()) {
      spans.push_back({i, i + 1, labels[i].type});
    } else if (labels[i].is_inside()) {
      spans.back().end = i + 1;
    }
  }
  return spans;
}

LabelSequence SpansToLabels(const std::vector<EntitySpan>& spans, std::size_t length) {
  LabelSequence out(length);
  for (const auto& s : spans) {
    if (s.start >= s.end || s.end > length) throw DataError("span out of range");
    for (std::size_t i = s.start; i < s.end; ++i) {
      if (!out[i].is_outside()) throw DataError("overlapping spans");
      out[i] = i == s.start ? IobLabel::Begin(s.type) : IobLabel::Inside(s.type);
    }
  }
  return out;
}

namespace {

void Finish(PrfScore& s) {
  s.precision = s.predicted == 0 ? 0.0 : static_cast<double>(s.true_positives) / s.predicted;
  s.recall = s.gold == 0 ? 0.0 : static_cast<double>(s.true_positives) / s.gold;
  const double denom = s.precision + s.recall;
  s.f1 = denom == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / denom;
}

}  // namespace

F1Report EntityF1(const std::vector<LabelSequence>& gold, const std::vector<LabelSequence>& pred) {
  if (gold.size() != pred.size()) {
    throw DataError("gold has " + std::to_string(gold.size()) + " sentences, prediction has " +
                    std::to_string(pred.size()));
  }
  F1Report report;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    if (gold[k].size() != pred[k].size()) {
      throw DataError("length mismatch in sentence " + std::to_string(k));
    }
    const auto gold_spans = ExtractSpans(gold[k]);
    const auto pred_spans = ExtractSpans(RepairIob(pred[k]));
    std::set<std::tuple<std::size_t, std::size_t, std::string>> gold_set;
    for (const auto& s : gold_spans) {
      gold_set.emplace(s.start, s.end, s.type);
      report.per_type[s.type].gold++;
    }
    for (const auto& s : pred_spans) {
      auto& bucket = report.per_type[s.type];
      bucket.predicted++;
      if (gold_set.count({s.start, s.end, s.type})) bucket.true_positives++;
    }
  }
  std::size_t macro_types = 0;
  for (auto& [type, score] : report.per_type) {
    Finish(score);
    report.micro.true_positives += score.true_positives;
    report.micro.predicted += score.predicted;
    report.micro.gold += score.gold;
    if (score.gold > 0) {
      report.macro_f1 += score.f1;
      report.macro_precision += score.precision;
      report.macro_recall += score.recall;
      ++macro_types;
    }
  }
  Finish(report.micro);
  if (macro_types > 0) {
    report.macro_f1 /= macro_types;
    report.macro_precision /= macro_types;
    report.macro_recall /= macro_types;
  }
  return report;
}

F1Report EntityF1(const Corpus& gold, const Corpus& pred) {
  if (gold.size() != pred.size()) {
    throw DataError("gold has " + std::to_string(gold.size()) + " sentences, prediction has " +
                    std::to_string(pred.size()));
  }
  std::vector<LabelSequence> g, p;
  g.reserve(gold.size());
  p.reserve(pred.size());
  for (std::size_t k = 0; k < gold.size(); ++k) {
    if (gold[k].id != pred[k].id) {
      throw DataError("sentence id mismatch at index " + std::to_string(k) + ": '" + gold[k].id +
                      "' vs '" + pred[k].id + "'");
    }
    if (gold[k].labels.size() != pred[k].labels.size()) {
      throw DataError("sentence '" + gold[k].id + "': gold has " +
                      std::to_string(gold[k].labels.size()) + " labels, prediction has " +
                      std::to_string(pred[k].labels.size()));
    }
    g.push_back(gold[k].labels);
    p.push_back(pred[k].labels);
  }
  return EntityF1(g, p);
}

}  // namespace nerlp
