#include "cli.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "nerlp/augment.h"
#include "nerlp/corpus_io.h"
#include "nerlp/decl_json.h"
#include "nerlp/declarations.h"
#include "nerlp/ensemble.h"
#include "nerlp/error.h"
#include "nerlp/lp.h"
#include "nerlp/tagging.h"

namespace nerlp::cli {

namespace {

using nlohmann::ordered_json;

// A command line that parsed but asks for something not allowed.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LogLevel { kError, kWarn, kInfo, kDebug };

class Logger {
 public:
  Logger(std::ostream& err, LogLevel level) : err_(err), level_(level) {}
  void Warn(const std::string& msg) const { Emit(LogLevel::kWarn, "warn", msg); }
  void Info(const std::string& msg) const { Emit(LogLevel::kInfo, "info", msg); }
  void Debug(const std::string& msg) const { Emit(LogLevel::kDebug, "debug", msg); }

 private:
  void Emit(LogLevel level, const char* tag, const std::string& msg) const {
    if (level <= level_) err_ << "[" << tag << "] " << msg << "\n";
  }
  std::ostream& err_;
  LogLevel level_;
};

struct GlobalOptions {
  std::string log_level = "info";
  std::uint64_t seed = 42;
  unsigned threads = 1;
};

struct AugmentOptions {
  std::string in, out, synonyms, split = "train";
  std::vector<std::string> techniques = {"lwtr", "sr", "mr", "sis"};
  double p = 0.3;
  int copies = 1;
  bool multiword = false;
};

struct NerOptions {
  std::string gold, pred, in, average = "both", format = "text";
};

struct EnsembleOptions {
  std::vector<std::string> preds, dev_preds;
  std::string gold, dev, out, model, impute, average = "macro";
  std::size_t max_models = 8;
  std::size_t top = 10;
  bool force = false;
  std::size_t hidden1 = 128, hidden2 = 128;
  std::string activation = "relu";
  crf::OptimizerConfig optimizer;
};

struct DeclOptions {
  std::string mapping, ast, problems, tasks, gold, pred, consensus, tokens, out;
  std::string format = "text";
  bool no_wrap = false;
  std::size_t budget = 512;
};

struct LpOptions {
  std::string mapping, format = "json", ratio_base = "all";
};

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Writes to `path`, or to `out` when the path is empty or "-".
void Emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f << content;
  if (!f) throw DataError("failed writing '" + path + "'");
}

bool HasJsonExtension(const std::string& path) {
  const auto ext = std::filesystem::path(path).extension().string();
  return ext == ".jsonl" || ext == ".json";
}

std::string Fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// ---- ner ----

Corpus ReadLabeled(const std::string& path, const Corpus* gold) {
  if (!HasJsonExtension(path)) return ReadConllFile(path);
  if (gold == nullptr) throw UsageError("'" + path + "': JSONL predictions need a --gold corpus");
  return AlignPredictions(*gold, ReadPredictionsFile(path));
}

void PrintScore(const PrfScore& s, const std::string& name, std::ostream& out) {
  out << std::left << std::setw(12) << name << std::right << std::setw(10) << Fixed(s.precision)
      << std::setw(10) << Fixed(s.recall) << std::setw(10) << Fixed(s.f1) << std::setw(8) << s.gold << "\n";
}

ordered_json ScoreJson(const PrfScore& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
          {"true_positives", s.true_positives}, {"predicted", s.predicted}, {"gold", s.gold}};
}

int NerScore(const NerOptions& o, std::ostream& out) {
  if (o.average != "micro" && o.average != "macro" && o.average != "both") {
    throw UsageError("--average must be micro, macro or both");
  }
  const Corpus gold = ReadConllFile(o.gold);
  const Corpus pred = ReadLabeled(o.pred, &gold);
  const F1Report r = EntityF1(gold, pred);
  const bool micro = o.average != "macro", macro = o.average != "micro";
  if (o.format == "json") {
    ordered_json j;
    for (const auto& [type, s] : r.per_type) j["per_type"][type] = ScoreJson(s);
    if (micro) j["micro"] = ScoreJson(r.micro);
    if (macro) {
      j["macro"] = {{"precision", r.macro_precision}, {"recall", r.macro_recall}, {"f1", r.macro_f1}};
    }
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  out << std::left << std::setw(12) << "type" << std::right << std::setw(10) << "precision" << std::setw(10)
      << "recall" << std::setw(10) << "f1" << std::setw(8) << "support" << "\n";
  for (const auto& [type, s] : r.per_type) PrintScore(s, type, out);
  if (micro) PrintScore(r.micro, "micro", out);
  if (macro) {
    PrfScore m;
    m.precision = r.macro_precision;
    m.recall = r.macro_recall;
    m.f1 = r.macro_f1;
    m.gold = r.micro.gold;
    PrintScore(m, "macro", out);
  }
  return kExitOk;
}

int NerValidate(const NerOptions& o, std::ostream& out) {
  std::vector<std::pair<std::string, LabelSequence>> items;
  if (HasJsonExtension(o.in)) {
    for (auto& p : ReadPredictionsFile(o.in)) items.emplace_back(p.sentence_id, std::move(p.labels));
  } else {
    for (auto& s : ReadConllFile(o.in)) items.emplace_back(s.id, std::move(s.labels));
  }
  std::size_t bad = 0;
  for (const auto& [id, labels] : items) {
    const auto violations = ValidateIob(labels);
    if (!violations.empty()) ++bad;
    for (const auto& v : violations) {
      out << o.in << ": sentence " << id << ", token " << v.position << ": " << v.reason() << "\n";
    }
  }
  out << items.size() - bad << "/" << items.size() << " sequences are valid IOB2\n";
  return bad == 0 ? kExitOk : kExitDataError;
}

// ---- augment ----

int Augment(const AugmentOptions& o, const GlobalOptions& g, const Logger& log, std::ostream& out) {
  if (o.split != "train") {
    throw UsageError("refusing to augment the '" + o.split + "' split; only training data is augmented");
  }
  const Corpus train = ReadConllFile(o.in);
  const augment::SynonymTable synonyms =
      o.synonyms.empty() ? augment::BuiltinSynonyms() : augment::ReadSynonymFile(o.synonyms);
  std::vector<augment::AugmentConfig> configs;
  for (const auto& name : o.techniques) {
    augment::AugmentConfig c;
    c.technique = augment::ParseTechnique(name);
    c.replace_probability = o.p;
    c.copies_per_sentence = o.copies;
    c.rng_seed = g.seed;
    c.synonyms = synonyms;
    c.allow_multiword_synonyms = o.multiword;
    c.Validate();
    configs.push_back(std::move(c));
  }
  const Corpus augmented = augment::AugmentCorpus(train, configs, g.threads);
  std::ostringstream buf;
  WriteConll(buf, augmented);
  Emit(o.out, buf.str(), out);
  log.Info("wrote " + std::to_string(augmented.size()) + " sentences (" + std::to_string(train.size()) +
           " original)");
  return kExitOk;
}

// ---- ensemble ----

// "id=path" or a bare path whose file stem becomes the model id.
std::pair<std::string, std::string> SplitModelSpec(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq != std::string::npos && eq > 0) return {spec.substr(0, eq), spec.substr(eq + 1)};
  return {std::filesystem::path(spec).stem().string(), spec};
}

std::vector<ensemble::ModelPredictions> ReadModels(const std::vector<std::string>& specs,
                                                   const std::vector<std::string>* ids = nullptr) {
  std::vector<ensemble::ModelPredictions> models;
  std::set<std::string> seen;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    auto [id, path] = SplitModelSpec(specs[k]);
    if (ids != nullptr) id = (*ids)[k];
    if (!seen.insert(id).second) throw UsageError("duplicate model id '" + id + "'");
    models.push_back({id, ReadPredictionsFile(path)});
  }
  return models;
}

std::vector<std::string> ModelIds(const std::vector<ensemble::ModelPredictions>& models) {
  std::vector<std::string> ids;
  for (const auto& m : models) ids.push_back(m.model_id);
  return ids;
}

ensemble::Hyperparams MakeHyper(const EnsembleOptions& o, const GlobalOptions& g) {
  ensemble::Hyperparams h;
  h.hidden1 = o.hidden1;
  h.hidden2 = o.hidden2;
  h.activation = ensemble::ParseActivation(o.activation);
  h.optimizer = o.optimizer;
  h.optimizer.seed = g.seed;
  return h;
}

bool ImputeFlag(const EnsembleOptions& o) {
  if (o.impute.empty()) return false;
  if (o.impute != "O") throw UsageError("--impute only accepts 'O'");
  return true;
}

struct TrainData {
  ensemble::EnsembleDataset train, dev;
  std::vector<std::string> model_ids;
};

TrainData LoadTrainData(const EnsembleOptions& o, const Logger& log) {
  const bool impute = ImputeFlag(o);
  const auto models = ReadModels(o.preds);
  TrainData d;
  d.model_ids = ModelIds(models);
  d.train = ensemble::BuildDataset(ReadConllFile(o.gold), models, impute);
  if (!o.dev.empty()) {
    const Corpus dev_gold = ReadConllFile(o.dev);
    if (o.dev_preds.empty()) {
      d.dev = ensemble::BuildDataset(dev_gold, models, impute);
    } else {
      if (o.dev_preds.size() != o.preds.size()) {
        throw UsageError("--dev-preds must list one file per --preds file, in the same order");
      }
      d.dev = ensemble::BuildDataset(dev_gold, ReadModels(o.dev_preds, &d.model_ids), impute);
    }
  }
  log.Info("ensemble data: " + std::to_string(d.model_ids.size()) + " models, " +
           std::to_string(d.train.size()) + " train / " + std::to_string(d.dev.size()) + " dev sentences");
  return d;
}

int EnsembleTrain(const EnsembleOptions& o, const GlobalOptions& g, const Logger& log) {
  const TrainData d = LoadTrainData(o, log);
  crf::TrainReport report;
  const auto model = ensemble::Train(d.train, d.dev, LabelSet(), MakeHyper(o, g), &report);
  ensemble::SaveModelFile(o.out, model);
  log.Info("trained " + std::to_string(report.epochs_run) + " epochs, best epoch " +
           std::to_string(report.best_epoch) + "; checkpoint written to " + o.out);
  return kExitOk;
}

int EnsemblePredict(const EnsembleOptions& o, const Logger& log, std::ostream& out) {
  const auto model = ensemble::LoadModelFile(o.model);
  auto models = ReadModels(o.preds);
  // Put the base models in checkpoint order.
  std::vector<ensemble::ModelPredictions> ordered;
  for (const auto& id : model.model_ids) {
    auto it = std::find_if(models.begin(), models.end(), [&](const auto& m) { return m.model_id == id; });
    if (it == models.end()) {
      std::string expected;
      for (const auto& e : model.model_ids) expected += (expected.empty() ? "" : ", ") + e;
      throw DataError("no predictions for base model '" + id + "' (checkpoint expects: " + expected +
                      "; pass id=path to rename)");
    }
    ordered.push_back(std::move(*it));
  }
  if (models.size() != ordered.size()) throw DataError("--preds lists models the checkpoint does not know");
  const auto matrices = ensemble::BuildMatrices(ordered, ImputeFlag(o));
  std::vector<SentencePrediction> preds;
  for (const auto& pm : matrices) preds.push_back({pm.sentence_id, ensemble::Predict(model, pm)});
  std::ostringstream buf;
  WritePredictions(buf, preds);
  Emit(o.out, buf.str(), out);
  log.Info("decoded " + std::to_string(preds.size()) + " sentences");
  return kExitOk;
}

int EnsembleSearch(const EnsembleOptions& o, const GlobalOptions& g, const Logger& log, std::ostream& out) {
  if (o.dev.empty()) throw UsageError("ensemble search needs --dev");
  if (o.average != "micro" && o.average != "macro") throw UsageError("--average must be micro or macro");
  const TrainData d = LoadTrainData(o, log);
  ensemble::SearchConfig config;
  config.max_models = o.max_models;
  config.force = o.force;
  config.averaging = o.average == "micro" ? Averaging::kMicro : Averaging::kMacro;
  config.threads = g.threads;
  const auto results = ensemble::SubsetSearch(d.train, d.dev, LabelSet(), MakeHyper(o, g), config);
  ordered_json j = ordered_json::array();
  for (const auto& r : results) {
    j.push_back({{"models", r.model_ids}, {"dev_f1", r.dev_f1}});
  }
  if (!o.out.empty()) Emit(o.out, j.dump(2) + "\n", out);
  out << "rank  dev_f1  models\n";
  for (std::size_t k = 0; k < results.size() && k < o.top; ++k) {
    std::string ids;
    for (const auto& id : results[k].model_ids) ids += (ids.empty() ? "" : ",") + id;
    out << std::setw(4) << k + 1 << "  " << Fixed(results[k].dev_f1) << "  " << ids << "\n";
  }
  return kExitOk;
}

// ---- decl ----

int DeclParse(const DeclOptions& o, std::ostream& out) {
  const auto doc = decl::ParseMapping(ReadText(o.mapping));
  Emit(o.out, decl::ToJson(doc).dump(2) + "\n", out);
  return kExitOk;
}

int DeclSerialize(const DeclOptions& o, std::ostream& out) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadText(o.ast));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(o.ast + ": " + e.what());
  }
  Emit(o.out, decl::SerializeMapping(decl::MappingFromJson(j)), out);
  return kExitOk;
}

std::string WrappedInput(const decl::Problem& p, bool wrap) {
  return wrap ? decl::WrapEntities(p.text, p.entities) : p.text;
}

int DeclDecompose(const DeclOptions& o, std::ostream& out) {
  std::ostringstream buf;
  for (const auto& p : decl::ReadProblems(o.problems)) {
    const auto doc = decl::ParseMapping(p.mapping);
    for (const auto& task : decl::Decompose(doc, WrappedInput(p, !o.no_wrap))) {
      ordered_json j;
      j["id"] = p.id;
      j.update(decl::ToJson(task));
      buf << j.dump() << "\n";
    }
  }
  Emit(o.out, buf.str(), out);
  return kExitOk;
}

int DeclRecompose(const DeclOptions& o, const Logger& log, std::ostream& out) {
  if (o.format != "text" && o.format != "jsonl") throw UsageError("--format must be text or jsonl");
  std::vector<std::string> order;
  std::map<std::string, std::vector<decl::PromptTask>> groups;
  std::istringstream lines(ReadText(o.tasks));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(o.tasks + ":" + std::to_string(line_no) + ": " + e.what());
    }
    const std::string id = j.value("id", std::string());
    if (!groups.count(id)) order.push_back(id);
    groups[id].push_back(decl::TaskFromJson(j));
  }
  if (o.format == "text" && order.size() > 1) {
    throw UsageError("task file holds several problems; use --format jsonl");
  }
  std::ostringstream buf;
  for (const auto& id : order) {
    const auto result = decl::Recompose(groups[id]);
    for (const auto& e : result.errors) {
      log.Warn(o.tasks + ": problem " + id + ", task " + std::to_string(e.task_index) + " (" + e.prompt +
               "): " + e.message);
    }
    const std::string mapping = decl::SerializeMapping(result.document);
    if (o.format == "text") {
      buf << mapping;
    } else {
      ordered_json j;
      j["id"] = id;
      j["mapping"] = mapping;
      j["errors"] = result.errors.size();
      buf << j.dump() << "\n";
    }
  }
  Emit(o.out, buf.str(), out);
  return kExitOk;
}

// Entity spans of `p` taken from tagger output instead of its own annotation.
std::vector<decl::CharSpan> ConsensusSpans(const decl::Problem& p, const std::vector<std::string>& tokens,
                                           const LabelSequence& labels) {
  const auto offsets = decl::TokenOffsets(p.text, tokens);
  std::vector<decl::CharSpan> spans;
  for (const auto& s : ExtractSpans(RepairIob(labels))) {
    spans.push_back({offsets[s.start].first, offsets[s.end - 1].second, s.type});
  }
  return spans;
}

int DeclWrap(const DeclOptions& o, std::ostream& out) {
  auto problems = decl::ReadProblems(o.problems);
  if (!o.consensus.empty()) {
    if (o.tokens.empty()) throw UsageError("--consensus needs --tokens with the tokenized sentences");
    std::map<std::string, std::vector<std::string>> tokens;
    for (auto& s : ReadConllFile(o.tokens)) tokens[s.id] = std::move(s.tokens);
    std::map<std::string, LabelSequence> labels;
    for (auto& pr : ReadPredictionsFile(o.consensus)) labels[pr.sentence_id] = std::move(pr.labels);
    for (auto& p : problems) {
      auto t = tokens.find(p.id);
      auto l = labels.find(p.id);
      if (t == tokens.end() || l == labels.end()) {
        throw DataError("problem '" + p.id + "' has no tokens or consensus labels");
      }
      if (t->second.size() != l->second.size()) {
        throw DataError("problem '" + p.id + "': consensus labels and tokens differ in length");
      }
      p.entities = ConsensusSpans(p, t->second, l->second);
    }
  }
  std::ostringstream buf;
  for (const auto& p : problems) {
    if (o.format == "jsonl") {
      ordered_json j;
      j["id"] = p.id;
      j["input"] = WrappedInput(p, true);
      buf << j.dump() << "\n";
    } else {
      buf << WrappedInput(p, true) << "\n";
    }
  }
  Emit(o.out, buf.str(), out);
  return kExitOk;
}

// Mapping strings keyed by problem id. A plain text file is one mapping with
// id "0".
std::vector<std::pair<std::string, std::string>> ReadMappings(const std::string& path) {
  std::vector<std::pair<std::string, std::string>> out;
  if (!HasJsonExtension(path)) {
    out.emplace_back("0", ReadText(path));
    return out;
  }
  std::istringstream lines(ReadText(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.emplace_back(j.contains("id") ? j.at("id").get<std::string>() : std::to_string(out.size()),
                       j.at("mapping").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

lp::CanonicalizeOptions CanonicalOptions(const std::string& ratio_base) {
  lp::CanonicalizeOptions c;
  if (ratio_base == "all") {
    c.ratio_base = lp::RatioBase::kAllVariables;
  } else if (ratio_base == "other") {
    c.ratio_base = lp::RatioBase::kOtherVariables;
  } else {
    throw UsageError("--ratio-base must be all or other");
  }
  return c;
}

int DeclScore(const DeclOptions& o, const std::string& ratio_base, const Logger& log, std::ostream& out) {
  const auto options = CanonicalOptions(ratio_base);
  const auto gold = ReadMappings(o.gold);
  std::map<std::string, std::string> pred;
  for (auto& [id, m] : ReadMappings(o.pred)) pred[id] = std::move(m);
  std::vector<decl::AccuracyResult> results;
  std::size_t matched = 0, gold_total = 0, pred_total = 0;
  for (const auto& [id, text] : gold) {
    const auto gold_doc = decl::ParseMapping(text);
    decl::AccuracyResult r = decl::DeclarationAccuracyEmpty(gold_doc);
    auto it = pred.find(id);
    if (it == pred.end()) {
      log.Warn("no prediction for problem '" + id + "'");
    } else {
      try {
        r = decl::DeclarationAccuracy(gold_doc, decl::ParseMapping(it->second), options);
      } catch (const DataError& e) {
        log.Warn("problem '" + id + "': unusable prediction scored 0 (" + e.what() + ")");
      }
    }
    matched += r.matched;
    gold_total += r.gold_declarations;
    pred_total += r.predicted_declarations;
    results.push_back(r);
  }
  out << "problems        " << results.size() << "\n"
      << "accuracy        " << Fixed(decl::CorpusDeclarationAccuracy(results)) << "\n"
      << "matched         " << matched << "/" << gold_total << "\n"
      << "precision       " << Fixed(pred_total ? static_cast<double>(matched) / pred_total : 0.0) << "\n";
  return kExitOk;
}

int DeclStats(const DeclOptions& o, std::ostream& out) {
  const auto stats = decl::ComputeTokenStats(decl::ReadProblems(o.problems), o.budget);
  auto row = [&](const char* name, const decl::LengthStats& s) {
    out << std::left << std::setw(28) << name << std::right << std::setw(10) << s.instances << std::setw(10)
        << s.max_input << std::setw(10) << Fixed(s.mean_input, 1) << std::setw(10) << s.max_output
        << std::setw(10) << Fixed(s.mean_output, 1) << std::setw(8) << s.over_budget << "\n";
  };
  out << std::left << std::setw(28) << "variant" << std::right << std::setw(10) << "instances" << std::setw(10)
      << "max_in" << std::setw(10) << "mean_in" << std::setw(10) << "max_out" << std::setw(10) << "mean_out"
      << std::setw(8) << "over" << "\n";
  row("original", stats.original);
  row("multi-task", stats.multitask);
  row("augmented", stats.augmented);
  row("augmented+multi-task", stats.augmented_multitask);
  return kExitOk;
}

// ---- lp ----

int LpSolve(const LpOptions& o, const Logger& log, std::ostream& out) {
  if (o.format != "json" && o.format != "text") throw UsageError("--format must be json or text");
  const auto doc = decl::ParseMapping(ReadText(o.mapping));
  const auto problem = lp::Canonicalize(doc, CanonicalOptions(o.ratio_base));
  for (const auto& w : problem.warnings) log.Warn(w);
  const auto sol = lp::SimplexSolve(problem);
  if (o.format == "json") {
    out << lp::ToJson(problem, sol).dump(2) << "\n";
    return kExitOk;
  }
  out << "status: " << lp::StatusName(sol.status) << "\n";
  if (sol.status == lp::Status::kOptimal) {
    out << "objective: " << sol.objective << "\n";
    for (std::size_t k = 0; k < problem.variables.size(); ++k) {
      out << problem.variables[k] << " = " << sol.values[k] << "\n";
    }
  }
  return kExitOk;
}

std::string VersionText() {
  std::ostringstream s;
  s << "nerlp " << kToolVersion << "\n"
    << "ensemble checkpoint: " << ensemble::kCheckpointFormat << " v" << ensemble::kCheckpointVersion << "\n"
    << "corpus: CoNLL (token<TAB>label, '# id:' lines); predictions: JSONL {sentence_id, labels}\n"
    << "tasks: JSONL {prompt, input, target}; problems: JSON/JSONL {text, entities, mapping}\n";
  return s.str();
}

LogLevel ParseLogLevel(const std::string& s) {
  if (s == "error") return LogLevel::kError;
  if (s == "warn") return LogLevel::kWarn;
  if (s == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

// Global options plus those of the selected command, in config-file syntax.
std::string ResolvedConfig(const CLI::App& app) {
  std::string prefix;
  for (const CLI::App* sub = &app; !sub->get_subcommands().empty();) {
    sub = sub->get_subcommands().front();
    prefix += sub->get_name() + ".";
  }
  std::istringstream lines(app.config_to_str(true, false));
  std::string line, out;
  while (std::getline(lines, line)) {
    const auto key = line.substr(0, line.find('='));
    if (line.empty() || (key.find('.') != std::string::npos && key.rfind(prefix, 0) != 0)) continue;
    out += "  " + line + "\n";
  }
  return out;
}

void AddHyperOptions(CLI::App* sub, EnsembleOptions& e) {
  sub->add_option("--hidden1", e.hidden1, "first hidden layer width")->check(CLI::PositiveNumber);
  sub->add_option("--hidden2", e.hidden2, "second hidden layer width")->check(CLI::PositiveNumber);
  sub->add_option("--activation", e.activation, "hidden nonlinearity")->check(CLI::IsMember({"relu", "tanh"}));
  sub->add_option("--lr", e.optimizer.learning_rate, "learning rate")->check(CLI::PositiveNumber);
  sub->add_option("--momentum", e.optimizer.momentum, "momentum")->check(CLI::Range(0.0, 0.999999));
  sub->add_option("--decay", e.optimizer.weight_decay, "L2 weight decay")->check(CLI::NonNegativeNumber);
  sub->add_option("--batch", e.optimizer.batch_size, "mini-batch size")->check(CLI::PositiveNumber);
  sub->add_option("--epochs", e.optimizer.max_epochs, "maximum epochs")->check(CLI::PositiveNumber);
  sub->add_option("--patience", e.optimizer.patience, "early-stopping patience (epochs)");
  sub->add_option("--clip", e.optimizer.clip_norm, "gradient clipping norm, 0 disables");
  sub->add_option("--impute", e.impute, "fill a missing base prediction with all-O rows (value: O)");
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Consensus NER tagging, corpus augmentation and LP declaration tools", "nerlp"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "key = value configuration file; command-line flags take precedence");
  app.set_version_flag("--version", VersionText());

  GlobalOptions g;
  g.threads = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--log-level", g.log_level, "error, warn, info or debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--threads", g.threads, "worker thread cap")->check(CLI::PositiveNumber);

  AugmentOptions aug;
  auto* augment_cmd = app.add_subcommand("augment", "augment a training corpus")->fallthrough();
  augment_cmd->add_option("--in", aug.in, "training corpus (CoNLL)")->required();
  augment_cmd->add_option("--out", aug.out, "output corpus (CoNLL)")->required();
  augment_cmd->add_option("--techniques", aug.techniques, "lwtr, sr, mr, sis")->delimiter(',');
  augment_cmd->add_option("--p", aug.p, "per-token replacement probability")->check(CLI::Range(0.0, 1.0));
  augment_cmd->add_option("--copies", aug.copies, "generated copies per sentence")->check(CLI::NonNegativeNumber);
  augment_cmd->add_option("--synonyms", aug.synonyms, "synonym table (JSON); built-in table when omitted");
  augment_cmd->add_option("--split", aug.split, "which split --in holds");
  augment_cmd->add_flag("--multiword", aug.multiword, "SR: allow multi-word synonyms");

  NerOptions ner;
  auto* ner_cmd = app.add_subcommand("ner", "entity-level scoring and IOB2 checks")->fallthrough();
  ner_cmd->require_subcommand(1);
  auto* score_cmd = ner_cmd->add_subcommand("score", "entity F1 of predictions against gold")->fallthrough();
  score_cmd->add_option("--gold", ner.gold, "gold corpus (CoNLL)")->required();
  score_cmd->add_option("--pred", ner.pred, "predictions (JSONL or CoNLL)")->required();
  score_cmd->add_option("--average", ner.average, "micro, macro or both");
  score_cmd->add_option("--format", ner.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  auto* validate_cmd = ner_cmd->add_subcommand("validate", "report IOB2 violations")->fallthrough();
  validate_cmd->add_option("--in", ner.in, "corpus (CoNLL) or predictions (JSONL)")->required();

  EnsembleOptions ens;
  auto* ens_cmd = app.add_subcommand("ensemble", "stacked CRF over base tagger outputs")->fallthrough();
  ens_cmd->require_subcommand(1);
  auto* train_cmd = ens_cmd->add_subcommand("train", "train an ensemble checkpoint")->fallthrough();
  train_cmd->add_option("--preds", ens.preds, "base model predictions on train (JSONL; id=path allowed)")
      ->required();
  train_cmd->add_option("--gold", ens.gold, "gold training corpus (CoNLL)")->required();
  train_cmd->add_option("--dev", ens.dev, "gold dev corpus for checkpoint selection");
  train_cmd->add_option("--dev-preds", ens.dev_preds, "base model predictions on dev, same order as --preds");
  train_cmd->add_option("--out", ens.out, "checkpoint path")->required();
  AddHyperOptions(train_cmd, ens);
  auto* predict_cmd = ens_cmd->add_subcommand("predict", "decode consensus labels")->fallthrough();
  predict_cmd->add_option("--model", ens.model, "checkpoint")->required();
  predict_cmd->add_option("--preds", ens.preds, "base model predictions (JSONL; id=path allowed)")->required();
  predict_cmd->add_option("--out", ens.out, "consensus predictions (JSONL); stdout when omitted");
  predict_cmd->add_option("--impute", ens.impute, "fill a missing base prediction with all-O rows (value: O)");
  auto* search_cmd = ens_cmd->add_subcommand("search", "rank base-model subsets by dev F1")->fallthrough();
  search_cmd->add_option("--preds", ens.preds, "base model predictions on train")->required();
  search_cmd->add_option("--gold", ens.gold, "gold training corpus")->required();
  search_cmd->add_option("--dev", ens.dev, "gold dev corpus")->required();
  search_cmd->add_option("--dev-preds", ens.dev_preds, "base model predictions on dev");
  search_cmd->add_option("--max-models", ens.max_models, "refuse more models than this unless --force");
  search_cmd->add_flag("--force", ens.force, "search beyond --max-models");
  search_cmd->add_option("--average", ens.average, "micro or macro dev F1");
  search_cmd->add_option("--top", ens.top, "rows to print");
  search_cmd->add_option("--out", ens.out, "full ranking as JSON");
  AddHyperOptions(search_cmd, ens);

  DeclOptions dec;
  std::string ratio_base = "all";
  auto* decl_cmd = app.add_subcommand("decl", "declaration mappings")->fallthrough();
  decl_cmd->require_subcommand(1);
  auto* parse_cmd = decl_cmd->add_subcommand("parse", "mapping text to JSON")->fallthrough();
  parse_cmd->add_option("--mapping", dec.mapping, "mapping text")->required();
  parse_cmd->add_option("--out", dec.out, "output path");
  auto* serialize_cmd = decl_cmd->add_subcommand("serialize", "JSON to mapping text")->fallthrough();
  serialize_cmd->add_option("--ast", dec.ast, "mapping JSON")->required();
  serialize_cmd->add_option("--out", dec.out, "output path");
  auto* decompose_cmd = decl_cmd->add_subcommand("decompose", "one prompt task per declaration kind")->fallthrough();
  decompose_cmd->add_option("--problems", dec.problems, "problems (JSON or JSONL)")->required();
  decompose_cmd->add_option("--out", dec.out, "tasks (JSONL)");
  decompose_cmd->add_flag("--no-wrap", dec.no_wrap, "leave entities unwrapped in the input");
  auto* recompose_cmd = decl_cmd->add_subcommand("recompose", "merge generated task outputs")->fallthrough();
  recompose_cmd->add_option("--tasks", dec.tasks, "generated tasks (JSONL)")->required();
  recompose_cmd->add_option("--format", dec.format, "text or jsonl");
  recompose_cmd->add_option("--out", dec.out, "output path");
  auto* wrap_cmd = decl_cmd->add_subcommand("wrap", "inline entity tags in problem text")->fallthrough();
  wrap_cmd->add_option("--problems", dec.problems, "problems (JSON or JSONL)")->required();
  wrap_cmd->add_option("--consensus", dec.consensus, "tagger labels (JSONL) replacing annotated entities");
  wrap_cmd->add_option("--tokens", dec.tokens, "tokenized problems (CoNLL), ids matching the problems");
  wrap_cmd->add_option("--format", dec.format, "text or jsonl")->check(CLI::IsMember({"text", "jsonl"}));
  wrap_cmd->add_option("--out", dec.out, "output path");
  auto* dscore_cmd = decl_cmd->add_subcommand("score", "declaration-level accuracy")->fallthrough();
  dscore_cmd->add_option("--gold", dec.gold, "gold mapping text, or JSONL {id, mapping}")->required();
  dscore_cmd->add_option("--pred", dec.pred, "predicted mapping text, or JSONL {id, mapping}")->required();
  dscore_cmd->add_option("--ratio-base", ratio_base, "RATIO fraction applies to all or other variables");
  auto* stats_cmd = decl_cmd->add_subcommand("stats", "input/output token lengths per variant")->fallthrough();
  stats_cmd->add_option("--problems", dec.problems, "problems (JSON or JSONL)")->required();
  stats_cmd->add_option("--budget", dec.budget, "token budget");

  LpOptions lpo;
  auto* lp_cmd = app.add_subcommand("lp", "linear programs from mappings")->fallthrough();
  lp_cmd->require_subcommand(1);
  auto* solve_cmd = lp_cmd->add_subcommand("solve", "solve a mapping's LP")->fallthrough();
  solve_cmd->add_option("--mapping", lpo.mapping, "mapping text")->required();
  solve_cmd->add_option("--format", lpo.format, "json or text");
  solve_cmd->add_option("--ratio-base", lpo.ratio_base, "RATIO fraction applies to all or other variables");

  std::vector<const char*> argv = {"nerlp"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const Logger log(err, ParseLogLevel(g.log_level));
  log.Info("resolved config:\n" + ResolvedConfig(app));
  log.Info("seed " + std::to_string(g.seed) + ", threads " + std::to_string(g.threads));

  try {
    if (augment_cmd->parsed()) return Augment(aug, g, log, out);
    if (score_cmd->parsed()) return NerScore(ner, out);
    if (validate_cmd->parsed()) return NerValidate(ner, out);
    if (train_cmd->parsed()) return EnsembleTrain(ens, g, log);
    if (predict_cmd->parsed()) return EnsemblePredict(ens, log, out);
    if (search_cmd->parsed()) return EnsembleSearch(ens, g, log, out);
    if (parse_cmd->parsed()) return DeclParse(dec, out);
    if (serialize_cmd->parsed()) return DeclSerialize(dec, out);
    if (decompose_cmd->parsed()) return DeclDecompose(dec, out);
    if (recompose_cmd->parsed()) return DeclRecompose(dec, log, out);
    if (wrap_cmd->parsed()) return DeclWrap(dec, out);
    if (dscore_cmd->parsed()) return DeclScore(dec, ratio_base, log, out);
    if (stats_cmd->parsed()) return DeclStats(dec, out);
    if (solve_cmd->parsed()) return LpSolve(lpo, log, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::overflow_error& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitDataError;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace nerlp::cli
