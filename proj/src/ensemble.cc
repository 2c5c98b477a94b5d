#include "nerlp/ensemble.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>

#include <json.hpp>

#include "nerlp/error.h"
#include "nerlp/parallel.h"
#include "nerlp/random.h"

namespace nerlp::ensemble {

void PredictionMatrix::Validate() const {
  if (rows.empty()) throw DataError("sentence '" + sentence_id + "': no model predictions");
  if (model_ids.size() != rows.size()) {
    throw DataError("sentence '" + sentence_id + "': model id count differs from row count");
  }
  for (const auto& r : rows) {
    if (r.size() != rows.front().size() || r.empty()) {
      throw DataError("sentence '" + sentence_id + "': prediction rows differ in length");
    }
  }
}

PredictionMatrix PredictionMatrix::Subset(std::uint64_t mask) const {
  PredictionMatrix out;
  out.sentence_id = sentence_id;
  for (std::size_t m = 0; m < rows.size(); ++m) {
    if (mask & (std::uint64_t{1} << m)) {
      out.model_ids.push_back(model_ids[m]);
      out.rows.push_back(rows[m]);
    }
  }
  if (out.rows.empty()) throw DataError("model subset selects no models");
  return out;
}

void EnsembleDataset::Validate() const {
  if (inputs.size() != gold.size()) throw DataError("ensemble dataset: inputs and gold differ in size");
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    inputs[k].Validate();
    if (inputs[k].length() != gold[k].size()) {
      throw DataError("sentence '" + inputs[k].sentence_id + "': gold length differs from predictions");
    }
    if (inputs[k].model_ids != inputs.front().model_ids) {
      throw DataError("sentence '" + inputs[k].sentence_id + "': inconsistent model ids");
    }
  }
}

EnsembleDataset EnsembleDataset::Subset(std::uint64_t mask) const {
  EnsembleDataset out;
  out.gold = gold;
  out.inputs.reserve(inputs.size());
  for (const auto& pm : inputs) out.inputs.push_back(pm.Subset(mask));
  return out;
}

namespace {

using PredictionIndex = std::unordered_map<std::string, const SentencePrediction*>;

PredictionIndex IndexPredictions(const ModelPredictions& model) {
  PredictionIndex index;
  for (const auto& p : model.predictions) {
    if (!index.emplace(p.sentence_id, &p).second) {
      throw DataError("model '" + model.model_id + "': duplicate sentence '" + p.sentence_id + "'");
    }
  }
  return index;
}

LabelSequence RowFor(const ModelPredictions& model, const PredictionIndex& index,
                     const std::string& id, std::size_t length, bool impute_outside) {
  auto it = index.find(id);
  if (it == index.end()) {
    if (impute_outside) return LabelSequence(length);
    throw DataError("model '" + model.model_id + "' has no prediction for sentence '" + id + "'");
  }
  if (it->second->labels.size() != length) {
    throw DataError("model '" + model.model_id + "', sentence '" + id + "': " +
                    std::to_string(it->second->labels.size()) + " labels, expected " +
                    std::to_string(length));
  }
  return it->second->labels;
}

std::vector<std::string> ModelIds(const std::vector<ModelPredictions>& models) {
  std::vector<std::string> ids;
  for (const auto& m : models) {
    if (std::find(ids.begin(), ids.end(), m.model_id) != ids.end()) {
      throw DataError("duplicate model id '" + m.model_id + "'");
    }
    ids.push_back(m.model_id);
  }
  return ids;
}

}  // namespace

EnsembleDataset BuildDataset(const Corpus& gold, const std::vector<ModelPredictions>& models,
                             bool impute_outside) {
  if (models.empty()) throw DataError("at least one base model is required");
  const auto ids = ModelIds(models);
  std::vector<PredictionIndex> indices;
  for (const auto& m : models) indices.push_back(IndexPredictions(m));

  EnsembleDataset ds;
  for (const auto& s : gold) {
    PredictionMatrix pm;
    pm.sentence_id = s.id;
    pm.model_ids = ids;
    for (std::size_t m = 0; m < models.size(); ++m) {
      pm.rows.push_back(RowFor(models[m], indices[m], s.id, s.tokens.size(), impute_outside));
    }
    ds.inputs.push_back(std::move(pm));
    ds.gold.push_back(s.labels);
  }
  return ds;
}

std::vector<PredictionMatrix> BuildMatrices(const std::vector<ModelPredictions>& models,
                                            bool impute_outside) {
  if (models.empty()) throw DataError("at least one base model is required");
  const auto ids = ModelIds(models);
  std::vector<PredictionIndex> indices;
  for (const auto& m : models) indices.push_back(IndexPredictions(m));

  std::vector<PredictionMatrix> out;
  for (const auto& first : models.front().predictions) {
    PredictionMatrix pm;
    pm.sentence_id = first.sentence_id;
    pm.model_ids = ids;
    for (std::size_t m = 0; m < models.size(); ++m) {
      pm.rows.push_back(
          RowFor(models[m], indices[m], first.sentence_id, first.labels.size(), impute_outside));
    }
    out.push_back(std::move(pm));
  }
  return out;
}

LabelSequence MajorityVote(const PredictionMatrix& pm) {
  pm.Validate();
  const std::size_t n = pm.length();
  LabelSequence out(n);
  for (std::size_t t = 0; t < n; ++t) {
    // Counts keyed by first occurrence so ties resolve to the lowest model index.
    std::vector<std::pair<const IobLabel*, std::size_t>> counts;
    for (const auto& row : pm.rows) {
      auto it = std::find_if(counts.begin(), counts.end(),
                             [&](const auto& c) { return *c.first == row[t]; });
      if (it == counts.end()) {
        counts.emplace_back(&row[t], 1);
      } else {
        it->second++;
      }
    }
    const auto* best = &counts.front();
    for (const auto& c : counts) {
      if (c.second > best->second) best = &c;
    }
    out[t] = *best->first;
  }
  return out;
}

Matrix OneHotEncode(const PredictionMatrix& pm, const std::vector<std::string>& model_ids,
                    const LabelSet& labels) {
  pm.Validate();
  if (pm.model_ids != model_ids) {
    throw DataError("sentence '" + pm.sentence_id +
                    "': base-model ids or their order differ from the expected stacking order");
  }
  const std::size_t L = labels.size();
  Matrix x(pm.length(), pm.num_models() * L);
  for (std::size_t m = 0; m < pm.num_models(); ++m) {
    for (std::size_t t = 0; t < pm.length(); ++t) x(t, m * L + labels.index(pm.rows[m][t])) = 1.0;
  }
  return x;
}

std::string ActivationName(Activation a) { return a == Activation::kRelu ? "relu" : "tanh"; }

Activation ParseActivation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw DataError("unknown activation '" + name + "'");
}

namespace {

double Activate(Activation a, double z) { return a == Activation::kRelu ? std::max(0.0, z) : std::tanh(z); }

// Derivative expressed through the activation output.
double ActivateGrad(Activation a, double out) {
  return a == Activation::kRelu ? (out > 0.0 ? 1.0 : 0.0) : 1.0 - out * out;
}

// Indices of the active one-hot inputs for each position.
std::vector<std::vector<std::size_t>> ActiveInputs(const EnsembleCrfModel& model,
                                                   const PredictionMatrix& pm) {
  pm.Validate();
  if (pm.model_ids != model.model_ids) {
    throw DataError("sentence '" + pm.sentence_id +
                    "': base-model ids or their order differ from the trained ensemble");
  }
  const std::size_t L = model.labels.size();
  std::vector<std::vector<std::size_t>> active(pm.length());
  for (std::size_t t = 0; t < pm.length(); ++t) {
    for (std::size_t m = 0; m < pm.num_models(); ++m) {
      active[t].push_back(m * L + model.labels.index(pm.rows[m][t]));
    }
  }
  return active;
}

struct ForwardCache {
  Matrix hidden1;  // n x h1, post-activation
  Matrix hidden2;  // n x h2, post-activation
  Matrix emissions;
};

ForwardCache RunForward(const EnsembleCrfModel& model,
                        const std::vector<std::vector<std::size_t>>& active) {
  const std::size_t n = active.size();
  const std::size_t h1 = model.layer1.bias.size();
  const std::size_t h2 = model.layer2.bias.size();
  const std::size_t L = model.layer3.bias.size();
  const Activation act = model.hyper.activation;
  ForwardCache c{Matrix(n, h1), Matrix(n, h2), Matrix(n, L)};
  for (std::size_t t = 0; t < n; ++t) {
    auto a1 = c.hidden1.row(t);
    std::copy(model.layer1.bias.begin(), model.layer1.bias.end(), a1.begin());
    for (auto idx : active[t]) {
      const auto w = model.layer1.weights.row(idx);
      for (std::size_t o = 0; o < h1; ++o) a1[o] += w[o];
    }
    for (double& v : a1) v = Activate(act, v);

    auto a2 = c.hidden2.row(t);
    std::copy(model.layer2.bias.begin(), model.layer2.bias.end(), a2.begin());
    for (std::size_t i = 0; i < h1; ++i) {
      const double x = a1[i];
      if (x == 0.0) continue;
      const auto w = model.layer2.weights.row(i);
      for (std::size_t o = 0; o < h2; ++o) a2[o] += x * w[o];
    }
    for (double& v : a2) v = Activate(act, v);

    auto e = c.emissions.row(t);
    std::copy(model.layer3.bias.begin(), model.layer3.bias.end(), e.begin());
    for (std::size_t i = 0; i < h2; ++i) {
      const double x = a2[i];
      if (x == 0.0) continue;
      const auto w = model.layer3.weights.row(i);
      for (std::size_t o = 0; o < L; ++o) e[o] += x * w[o];
    }
  }
  return c;
}

void CheckLayer(const DenseLayer& layer, std::size_t in, std::size_t out, const char* name) {
  if (layer.weights.rows() != in || layer.weights.cols() != out || layer.bias.size() != out) {
    throw DataError(std::string("ensemble layer ") + name + " has an unexpected shape");
  }
}

DenseLayer GlorotLayer(std::size_t in, std::size_t out, Rng& rng) {
  DenseLayer layer{Matrix(in, out), std::vector<double>(out, 0.0)};
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& w : layer.weights.data()) w = (2.0 * rng.uniform() - 1.0) * limit;
  return layer;
}

}  // namespace

void EnsembleCrfModel::Validate() const {
  if (model_ids.empty()) throw DataError("ensemble model has no base models");
  const std::size_t h1 = layer1.bias.size();
  const std::size_t h2 = layer2.bias.size();
  CheckLayer(layer1, input_width(), h1, "1");
  CheckLayer(layer2, h1, h2, "2");
  CheckLayer(layer3, h2, labels.size(), "3");
  if (crf.labels.size() != labels.size() || crf.transitions.rows() != labels.size() ||
      crf.transitions.cols() != labels.size() || crf.start.size() != labels.size() ||
      crf.stop.size() != labels.size()) {
    throw DataError("ensemble CRF parameters do not match the label inventory");
  }
}

Matrix EnsembleCrfModel::Emissions(const PredictionMatrix& pm) const {
  return RunForward(*this, ActiveInputs(*this, pm)).emissions;
}

crf::ChainPotentials EnsembleCrfModel::Potentials(const PredictionMatrix& pm) const {
  return crf.Potentials(Emissions(pm));
}

EnsembleCrfModel InitModel(const std::vector<std::string>& model_ids, const LabelSet& labels,
                           const Hyperparams& hyper) {
  if (model_ids.empty()) throw DataError("at least one base model is required");
  if (hyper.hidden1 == 0 || hyper.hidden2 == 0) throw DataError("hidden widths must be positive");
  EnsembleCrfModel model;
  model.model_ids = model_ids;
  model.labels = labels;
  model.hyper = hyper;
  Rng rng(MixSeed(hyper.optimizer.seed, 0x1417));
  model.layer1 = GlorotLayer(model.input_width(), hyper.hidden1, rng);
  model.layer2 = GlorotLayer(hyper.hidden1, hyper.hidden2, rng);
  model.layer3 = GlorotLayer(hyper.hidden2, labels.size(), rng);
  if (hyper.activation == Activation::kRelu) {
    // Small positive bias keeps rectifiers alive at the start of training.
    std::fill(model.layer1.bias.begin(), model.layer1.bias.end(), 0.01);
    std::fill(model.layer2.bias.begin(), model.layer2.bias.end(), 0.01);
  }
  model.crf = crf::CrfParams(labels, hyper.mask_iob);
  return model;
}

EnsembleCrfModel Train(const EnsembleDataset& train, const EnsembleDataset& dev,
                       const LabelSet& labels, const Hyperparams& hyper, crf::TrainReport* report) {
  if (train.size() == 0) throw DataError("ensemble training set is empty");
  train.Validate();
  dev.Validate();
  const auto& ids = train.inputs.front().model_ids;
  if (dev.size() > 0 && dev.inputs.front().model_ids != ids) {
    throw DataError("dev predictions use different base models than training");
  }
  EnsembleCrfModel model = InitModel(ids, labels, hyper);

  const std::size_t L = labels.size();
  const std::size_t h1 = hyper.hidden1;
  const std::size_t h2 = hyper.hidden2;
  const Activation act = hyper.activation;

  // Cached one-hot indices and gold indices.
  auto prepare = [&](const EnsembleDataset& ds) {
    std::vector<std::vector<std::vector<std::size_t>>> active;
    std::vector<std::vector<std::size_t>> gold;
    for (std::size_t k = 0; k < ds.size(); ++k) {
      active.push_back(ActiveInputs(model, ds.inputs[k]));
      std::vector<std::size_t> g;
      for (const auto& l : ds.gold[k]) g.push_back(labels.index(l));
      gold.push_back(std::move(g));
    }
    return std::make_pair(std::move(active), std::move(gold));
  };
  const auto train_prepared = prepare(train);
  const auto dev_prepared = prepare(dev);
  const auto& train_active = train_prepared.first;
  const auto& train_gold = train_prepared.second;
  const auto& dev_active = dev_prepared.first;
  const auto& dev_gold = dev_prepared.second;

  DenseLayer g1{Matrix(model.input_width(), h1), std::vector<double>(h1)};
  DenseLayer g2{Matrix(h1, h2), std::vector<double>(h2)};
  DenseLayer g3{Matrix(h2, L), std::vector<double>(L)};
  Matrix g_trans(L, L);
  std::vector<double> g_start(L), g_stop(L);

  std::vector<crf::ParamRef> params = {
      {&model.layer1.weights.data(), &g1.weights.data()},
      {&model.layer1.bias, &g1.bias},
      {&model.layer2.weights.data(), &g2.weights.data()},
      {&model.layer2.bias, &g2.bias},
      {&model.layer3.weights.data(), &g3.weights.data()},
      {&model.layer3.bias, &g3.bias},
      {&model.crf.transitions.data(), &g_trans.data()},
      {&model.crf.start, &g_start},
      {&model.crf.stop, &g_stop},
  };

  std::vector<double> d2(h2), d1(h1);
  auto step = [&](std::size_t idx) {
    const auto& active = train_active[idx];
    const ForwardCache c = RunForward(model, active);
    const auto g = crf::NllAndGradient(model.crf.Potentials(c.emissions), train_gold[idx]);
    for (std::size_t k = 0; k < g_trans.size(); ++k) g_trans.data()[k] += g.d_transitions.data()[k];
    for (std::size_t l = 0; l < L; ++l) {
      g_start[l] += g.d_start[l];
      g_stop[l] += g.d_stop[l];
    }
    for (std::size_t t = 0; t < active.size(); ++t) {
      const auto de = g.d_emissions.row(t);
      const auto a2 = c.hidden2.row(t);
      const auto a1 = c.hidden1.row(t);
      for (std::size_t o = 0; o < L; ++o) g3.bias[o] += de[o];
      for (std::size_t i = 0; i < h2; ++i) {
        const auto w = model.layer3.weights.row(i);
        auto gw = g3.weights.row(i);
        double acc = 0.0;
        for (std::size_t o = 0; o < L; ++o) {
          gw[o] += a2[i] * de[o];
          acc += w[o] * de[o];
        }
        d2[i] = acc * ActivateGrad(act, a2[i]);
      }
      for (std::size_t o = 0; o < h2; ++o) g2.bias[o] += d2[o];
      for (std::size_t i = 0; i < h1; ++i) {
        const auto w = model.layer2.weights.row(i);
        auto gw = g2.weights.row(i);
        double acc = 0.0;
        const double x = a1[i];
        for (std::size_t o = 0; o < h2; ++o) {
          gw[o] += x * d2[o];
          acc += w[o] * d2[o];
        }
        d1[i] = acc * ActivateGrad(act, x);
      }
      for (std::size_t o = 0; o < h1; ++o) g1.bias[o] += d1[o];
      for (auto in : active[t]) {
        auto gw = g1.weights.row(in);
        for (std::size_t o = 0; o < h1; ++o) gw[o] += d1[o];
      }
    }
    return g.nll;
  };
  auto eval = [&](std::size_t idx) {
    const ForwardCache c = RunForward(model, dev_active[idx]);
    const auto pot = model.crf.Potentials(c.emissions);
    return crf::LogPartition(pot) - crf::PathScore(pot, dev_gold[idx]);
  };

  auto r = crf::RunTraining(train.size(), dev.size(), hyper.optimizer, params, step, eval);
  if (report) *report = std::move(r);
  return model;
}

LabelSequence Predict(const EnsembleCrfModel& model, const PredictionMatrix& pm) {
  const auto decoded = crf::Viterbi(model.Potentials(pm));
  LabelSequence out;
  out.reserve(decoded.labels.size());
  for (auto idx : decoded.labels) out.push_back(model.labels.label(idx));
  return out;
}

std::vector<SubsetResult> SubsetSearch(const EnsembleDataset& train, const EnsembleDataset& dev,
                                       const LabelSet& labels, const Hyperparams& hyper,
                                       const SearchConfig& config) {
  if (train.size() == 0) throw DataError("ensemble training set is empty");
  if (dev.size() == 0) throw DataError("subset search needs a nonempty evaluation set");
  train.Validate();
  dev.Validate();
  const auto& ids = train.inputs.front().model_ids;
  const std::size_t m = ids.size();
  if (m > config.max_models && !config.force) {
    throw DataError("subset search over " + std::to_string(m) + " models exceeds the cap of " +
                    std::to_string(config.max_models) + " (use --force to override)");
  }
  if (m >= 63) throw DataError("too many base models for exhaustive subset search");

  const std::uint64_t count = (std::uint64_t{1} << m) - 1;
  std::vector<SubsetResult> results(count);
  ParallelFor(count, config.threads, [&](std::size_t k) {
    const std::uint64_t mask = k + 1;
    Hyperparams h = hyper;
    h.optimizer.seed = MixSeed(hyper.optimizer.seed, mask);
    const auto sub_train = train.Subset(mask);
    const auto sub_dev = dev.Subset(mask);
    const auto model = Train(sub_train, sub_dev, labels, h);
    std::vector<LabelSequence> pred;
    pred.reserve(sub_dev.size());
    for (const auto& pm : sub_dev.inputs) pred.push_back(Predict(model, pm));
    const auto f1 = EntityF1(sub_dev.gold, pred);
    results[k] = {mask, model.model_ids, f1.f1(config.averaging)};
  });
  std::sort(results.begin(), results.end(), [](const SubsetResult& a, const SubsetResult& b) {
    if (a.dev_f1 != b.dev_f1) return a.dev_f1 > b.dev_f1;
    if (a.model_ids.size() != b.model_ids.size()) return a.model_ids.size() < b.model_ids.size();
    return a.model_ids < b.model_ids;
  });
  return results;
}

namespace {

nlohmann::json LayerJson(const DenseLayer& layer) {
  return {{"rows", layer.weights.rows()},
          {"cols", layer.weights.cols()},
          {"weights", layer.weights.data()},
          {"bias", layer.bias}};
}

DenseLayer LayerFromJson(const nlohmann::json& j) {
  DenseLayer layer{Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>()),
                   j.at("bias").get<std::vector<double>>()};
  auto w = j.at("weights").get<std::vector<double>>();
  if (w.size() != layer.weights.size()) throw DataError("checkpoint layer weight count mismatch");
  layer.weights.data() = std::move(w);
  return layer;
}

}  // namespace

void SaveModel(std::ostream& out, const EnsembleCrfModel& model) {
  model.Validate();
  const auto& opt = model.hyper.optimizer;
  nlohmann::ordered_json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["entity_types"] = model.labels.entity_types();
  j["model_ids"] = model.model_ids;
  j["config"] = {{"hidden1", model.hyper.hidden1},
                 {"hidden2", model.hyper.hidden2},
                 {"activation", ActivationName(model.hyper.activation)},
                 {"mask_iob", model.hyper.mask_iob},
                 {"learning_rate", opt.learning_rate},
                 {"momentum", opt.momentum},
                 {"weight_decay", opt.weight_decay},
                 {"batch_size", opt.batch_size},
                 {"max_epochs", opt.max_epochs},
                 {"patience", opt.patience},
                 {"clip_norm", opt.clip_norm},
                 {"seed", opt.seed}};
  j["layers"] = {LayerJson(model.layer1), LayerJson(model.layer2), LayerJson(model.layer3)};
  j["crf"] = {{"transitions", model.crf.transitions.data()},
              {"start", model.crf.start},
              {"stop", model.crf.stop}};
  out << j.dump() << '\n';
}

void SaveModelFile(const std::string& path, const EnsembleCrfModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  SaveModel(out, model);
}

EnsembleCrfModel LoadModel(std::istream& in) {
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw DataError("not an ensemble checkpoint");
    }
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    EnsembleCrfModel model;
    model.labels = LabelSet(j.at("entity_types").get<std::vector<std::string>>());
    model.model_ids = j.at("model_ids").get<std::vector<std::string>>();
    const auto& c = j.at("config");
    model.hyper.hidden1 = c.at("hidden1").get<std::size_t>();
    model.hyper.hidden2 = c.at("hidden2").get<std::size_t>();
    model.hyper.activation = ParseActivation(c.at("activation").get<std::string>());
    model.hyper.mask_iob = c.at("mask_iob").get<bool>();
    auto& opt = model.hyper.optimizer;
    opt.learning_rate = c.at("learning_rate").get<double>();
    opt.momentum = c.at("momentum").get<double>();
    opt.weight_decay = c.at("weight_decay").get<double>();
    opt.batch_size = c.at("batch_size").get<std::size_t>();
    opt.max_epochs = c.at("max_epochs").get<std::size_t>();
    opt.patience = c.at("patience").get<std::size_t>();
    opt.clip_norm = c.at("clip_norm").get<double>();
    opt.seed = c.at("seed").get<std::uint64_t>();
    const auto& layers = j.at("layers");
    if (layers.size() != 3) throw DataError("checkpoint must hold exactly three layers");
    model.layer1 = LayerFromJson(layers[0]);
    model.layer2 = LayerFromJson(layers[1]);
    model.layer3 = LayerFromJson(layers[2]);
    model.crf = crf::CrfParams(model.labels, model.hyper.mask_iob);
    auto trans = j.at("crf").at("transitions").get<std::vector<double>>();
    if (trans.size() != model.crf.transitions.size()) throw DataError("checkpoint transition size mismatch");
    model.crf.transitions.data() = std::move(trans);
    model.crf.start = j.at("crf").at("start").get<std::vector<double>>();
    model.crf.stop = j.at("crf").at("stop").get<std::vector<double>>();
    model.Validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

EnsembleCrfModel LoadModelFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  return LoadModel(in);
}

}  // namespace nerlp::ensemble
