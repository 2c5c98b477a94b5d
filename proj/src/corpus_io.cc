#include "nerlp/corpus_io.h"

#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "nerlp/error.h"

namespace nerlp {

namespace {

std::string Where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

std::ifstream OpenIn(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

Corpus ReadConll(std::istream& in, const std::string& source_name) {
  Corpus corpus;
  LabeledSentence current;
  std::string pending_id;
  bool has_pending_id = false;
  std::size_t line_no = 0;
  std::size_t sentence_start = 0;

  auto flush = [&]() {
    if (current.tokens.empty()) return;
    current.id = has_pending_id ? pending_id : std::to_string(corpus.size());
    has_pending_id = false;
    try {
      CheckSentence(current);
    } catch (const DataError& e) {
      throw DataError(Where(source_name, sentence_start) + e.what());
    }
    corpus.push_back(std::move(current));
    current = {};
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line.rfind("# id:", 0) == 0) {
      flush();
      pending_id = line.substr(5);
      const auto first = pending_id.find_first_not_of(" \t");
      pending_id = first == std::string::npos ? "" : pending_id.substr(first);
      if (pending_id.empty()) throw DataError(Where(source_name, line_no) + "empty sentence id");
      has_pending_id = true;
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw DataError(Where(source_name, line_no) + "expected 'token<TAB>label'");
    }
    if (current.tokens.empty()) sentence_start = line_no;
    current.tokens.push_back(line.substr(0, tab));
    try {
      current.labels.push_back(IobLabel::Parse(line.substr(tab + 1)));
    } catch (const DataError& e) {
      throw DataError(Where(source_name, line_no) + e.what());
    }
  }
  flush();
  return corpus;
}

Corpus ReadConllFile(const std::string& path) {
  auto in = OpenIn(path);
  return ReadConll(in, path);
}

void WriteConll(std::ostream& out, const Corpus& corpus) {
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const auto& s = corpus[k];
    if (k > 0) out << '\n';
    out << "# id: " << s.id << '\n';
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      out << s.tokens[i] << '\t' << s.labels[i].str() << '\n';
    }
  }
}

void WriteConllFile(const std::string& path, const Corpus& corpus) {
  auto out = OpenOut(path);
  WriteConll(out, corpus);
}

std::vector<SentencePrediction> ReadPredictions(std::istream& in, const std::string& source_name) {
  std::vector<SentencePrediction> preds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      SentencePrediction p;
      p.sentence_id = obj.at("sentence_id").get<std::string>();
      p.labels = ParseLabels(obj.at("labels").get<std::vector<std::string>>());
      if (p.labels.empty()) throw DataError("empty label list");
      preds.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(Where(source_name, line_no) + e.what());
    } catch (const DataError& e) {
      throw DataError(Where(source_name, line_no) + e.what());
    }
  }
  return preds;
}

std::vector<SentencePrediction> ReadPredictionsFile(const std::string& path) {
  auto in = OpenIn(path);
  return ReadPredictions(in, path);
}

void WritePredictions(std::ostream& out, const std::vector<SentencePrediction>& preds) {
  for (const auto& p : preds) {
    nlohmann::ordered_json obj;
    obj["sentence_id"] = p.sentence_id;
    obj["labels"] = RenderLabels(p.labels);
    out << obj.dump() << '\n';
  }
}

void WritePredictionsFile(const std::string& path, const std::vector<SentencePrediction>& preds) {
  auto out = OpenOut(path);
  WritePredictions(out, preds);
}

Corpus AlignPredictions(const Corpus& gold, const std::vector<SentencePrediction>& preds) {
  std::unordered_map<std::string, const SentencePrediction*> by_id;
  for (const auto& p : preds) {
    if (!by_id.emplace(p.sentence_id, &p).second) {
      throw DataError("duplicate prediction for sentence '" + p.sentence_id + "'");
    }
  }
  Corpus out;
  out.reserve(gold.size());
  for (const auto& g : gold) {
    auto it = by_id.find(g.id);
    if (it == by_id.end()) throw DataError("no prediction for sentence '" + g.id + "'");
    if (it->second->labels.size() != g.tokens.size()) {
      throw DataError("sentence '" + g.id + "': prediction has " +
                      std::to_string(it->second->labels.size()) + " labels for " +
                      std::to_string(g.tokens.size()) + " tokens");
    }
    out.push_back({g.id, g.tokens, it->second->labels});
  }
  return out;
}

}  // namespace nerlp
