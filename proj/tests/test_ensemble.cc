#include <doctest.h>

#include <random>
#include <sstream>

#include "nerlp/ensemble.h"
#include "nerlp/error.h"
#include "oracles.h"

using namespace nerlp;
using namespace nerlp::ensemble;

namespace {

LabelSequence L(std::initializer_list<const char*> names) {
  std::vector<std::string> v(names.begin(), names.end());
  return ParseLabels(v);
}

Hyperparams SmallHyper(std::size_t epochs = 20) {
  Hyperparams h;
  h.hidden1 = 16;
  h.hidden2 = 16;
  h.optimizer.max_epochs = epochs;
  return h;
}

}  // namespace

TEST_CASE("one-hot rows hold exactly one 1 per model block") {
  const LabelSet labels;
  std::mt19937_64 rng(31);
  PredictionMatrix pm{"s", {"a", "b", "c"}, {}};
  for (int m = 0; m < 3; ++m) pm.rows.push_back(oracle::RandomAnyLabels(rng, 7));
  const Matrix x = OneHotEncode(pm, pm.model_ids, labels);
  CHECK(x.rows() == 7);
  CHECK(x.cols() == 3 * labels.size());
  for (std::size_t i = 0; i < 7; ++i) {
    double total = 0.0;
    for (std::size_t m = 0; m < 3; ++m) {
      double block = 0.0;
      for (std::size_t y = 0; y < labels.size(); ++y) block += x(i, m * labels.size() + y);
      CHECK(block == 1.0);
      CHECK(x(i, m * labels.size() + labels.index(pm.rows[m][i])) == 1.0);
      total += block;
    }
    CHECK(total == 3.0);
  }
  CHECK_THROWS_AS(OneHotEncode(pm, {"a", "b"}, labels), DataError);
}

TEST_CASE("majority vote and its IOB counterexample") {
  PredictionMatrix pm{"s", {"m1", "m2", "m3"},
                      {L({"B-VAR", "I-VAR", "I-VAR"}), L({"O", "B-VAR", "I-VAR"}), L({"O", "O", "O"})}};
  for (const auto& row : pm.rows) CHECK(IsValidIob(row));
  const auto vote = MajorityVote(pm);
  CHECK(vote == L({"O", "I-VAR", "I-VAR"}));
  CHECK_FALSE(IsValidIob(vote));

  // Ties go to the lowest-indexed model among the tied labels.
  PredictionMatrix tie{"t", {"a", "b"}, {L({"B-PARAM"}), L({"B-VAR"})}};
  CHECK(MajorityVote(tie) == L({"B-PARAM"}));
}

TEST_CASE("prediction matrices are validated and subset") {
  PredictionMatrix pm{"s", {"a", "b"}, {L({"O", "O"}), L({"O"})}};
  CHECK_THROWS_AS(pm.Validate(), DataError);
  pm.rows[1] = L({"B-VAR", "I-VAR"});
  pm.Validate();
  const auto sub = pm.Subset(0b10);
  CHECK(sub.model_ids == std::vector<std::string>{"b"});
  CHECK(sub.rows[0] == pm.rows[1]);
  CHECK_THROWS_AS(pm.Subset(0), DataError);
}

TEST_CASE("dataset building reports or imputes missing sentences") {
  Corpus gold = {{"x", {"a", "b"}, L({"B-VAR", "O"})}, {"y", {"c"}, L({"O"})}};
  std::vector<ModelPredictions> models = {{"m1", {{"x", L({"B-VAR", "O"})}, {"y", L({"O"})}}},
                                          {"m2", {{"x", L({"O", "O"})}}}};
  CHECK_THROWS_AS(BuildDataset(gold, models), DataError);
  const auto ds = BuildDataset(gold, models, true);
  REQUIRE(ds.size() == 2);
  CHECK(ds.inputs[1].rows[1] == L({"O"}));
  models[1].predictions.push_back({"y", L({"O", "O"})});
  CHECK_THROWS_AS(BuildDataset(gold, models), DataError);
}

TEST_CASE("ensemble output is IOB-valid for random inputs and weights") {
  const LabelSet labels;
  std::mt19937_64 rng(32);
  Hyperparams h = SmallHyper();
  const auto model = InitModel({"a", "b"}, labels, h);
  for (int t = 0; t < 3000; ++t) {
    PredictionMatrix pm{"s", {"a", "b"}, {}};
    const std::size_t n = 1 + t % 8;
    pm.rows.push_back(oracle::RandomAnyLabels(rng, n));
    pm.rows.push_back(oracle::RandomAnyLabels(rng, n));
    CHECK(IsValidIob(Predict(model, pm)));
  }
  PredictionMatrix swapped{"s", {"b", "a"}, {L({"O"}), L({"O"})}};
  CHECK_THROWS_AS(Predict(model, swapped), DataError);
}

TEST_CASE("training beats chance on synthetic taggers and is deterministic") {
  const auto syn = oracle::MakeSyntheticTaggers(33, 120, 3, 0.2);
  const auto ds = BuildDataset(syn.gold, syn.models);
  std::vector<PredictionMatrix> tr(ds.inputs.begin(), ds.inputs.begin() + 90);
  std::vector<LabelSequence> trg(ds.gold.begin(), ds.gold.begin() + 90);
  std::vector<PredictionMatrix> te(ds.inputs.begin() + 90, ds.inputs.end());
  std::vector<LabelSequence> teg(ds.gold.begin() + 90, ds.gold.end());
  const EnsembleDataset train{tr, trg}, test{te, teg};
  const LabelSet labels;
  crf::TrainReport report;
  const auto model = Train(train, test, labels, SmallHyper(), &report);
  CHECK(report.heldout_nll.size() == report.epochs_run);
  std::vector<LabelSequence> pred, vote;
  for (const auto& pm : te) {
    pred.push_back(Predict(model, pm));
    vote.push_back(MajorityVote(pm));
  }
  const double f1 = EntityF1(teg, pred).micro.f1;
  CHECK(f1 >= EntityF1(teg, vote).micro.f1);
  CHECK(f1 > 0.8);

  const auto again = Train(train, test, labels, SmallHyper());
  CHECK(again.layer1.weights == model.layer1.weights);
  CHECK(again.crf.transitions == model.crf.transitions);
}

TEST_CASE("identical base models are reproduced after training") {
  const auto syn = oracle::MakeSyntheticTaggers(34, 60, 1, 0.0);
  std::vector<ModelPredictions> copies = {syn.models[0], syn.models[0]};
  copies[1].model_id = "copy";
  const auto ds = BuildDataset(syn.gold, copies);
  const auto model = Train(ds, {}, LabelSet(), SmallHyper(40));
  for (std::size_t k = 0; k < ds.size(); ++k) CHECK(Predict(model, ds.inputs[k]) == ds.inputs[k].rows[0]);
}

TEST_CASE("checkpoints round-trip exactly") {
  const auto syn = oracle::MakeSyntheticTaggers(35, 40, 2, 0.2);
  const auto ds = BuildDataset(syn.gold, syn.models);
  const auto model = Train(ds, {}, LabelSet(), SmallHyper(3));
  std::stringstream buf;
  SaveModel(buf, model);
  const auto back = LoadModel(buf);
  CHECK(back.model_ids == model.model_ids);
  CHECK(back.layer2.weights == model.layer2.weights);
  CHECK(back.layer3.bias == model.layer3.bias);
  CHECK(back.crf.start == model.crf.start);
  for (const auto& pm : ds.inputs) CHECK(Predict(back, pm) == Predict(model, pm));

  std::istringstream wrong(R"({"format": "something-else", "version": 1})");
  CHECK_THROWS_AS(LoadModel(wrong), DataError);
  std::istringstream future(R"({"format": "nerlp-ensemble-crf", "version": 99})");
  CHECK_THROWS_AS(LoadModel(future), DataError);
}

TEST_CASE("subset search ranks subsets and ignores thread count") {
  const auto syn = oracle::MakeSyntheticTaggers(36, 80, 3, 0.2);
  const auto all = BuildDataset(syn.gold, syn.models);
  EnsembleDataset train{{all.inputs.begin(), all.inputs.begin() + 60}, {all.gold.begin(), all.gold.begin() + 60}};
  EnsembleDataset dev{{all.inputs.begin() + 60, all.inputs.end()}, {all.gold.begin() + 60, all.gold.end()}};
  SearchConfig config;
  const auto one = SubsetSearch(train, dev, LabelSet(), SmallHyper(5), config);
  REQUIRE(one.size() == 7);
  for (std::size_t k = 1; k < one.size(); ++k) {
    CHECK(one[k - 1].dev_f1 >= one[k].dev_f1);
    if (one[k - 1].dev_f1 == one[k].dev_f1) CHECK(one[k - 1].model_ids.size() <= one[k].model_ids.size());
  }
  config.threads = 3;
  const auto three = SubsetSearch(train, dev, LabelSet(), SmallHyper(5), config);
  for (std::size_t k = 0; k < one.size(); ++k) {
    CHECK(three[k].mask == one[k].mask);
    CHECK(three[k].dev_f1 == one[k].dev_f1);
  }
  config.max_models = 2;
  CHECK_THROWS_AS(SubsetSearch(train, dev, LabelSet(), SmallHyper(5), config), DataError);
}
