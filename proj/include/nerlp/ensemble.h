#ifndef NERLP_ENSEMBLE_H
#define NERLP_ENSEMBLE_H

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nerlp/corpus_io.h"
#include "nerlp/crf.h"
#include "nerlp/labels.h"
#include "nerlp/matrix.h"
#include "nerlp/tagging.h"

namespace nerlp::ensemble {

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointFormat = "nerlp-ensemble-crf";

// Predictions of M base taggers for one sentence, one row per model.
struct PredictionMatrix {
  std::string sentence_id;
  std::vector<std::string> model_ids;
  std::vector<LabelSequence> rows;

  std::size_t num_models() const { return rows.size(); }
  std::size_t length() const { return rows.empty() ? 0 : rows.front().size(); }

  // Throws DataError unless M >= 1, ids match rows, and rows share one length.
  void Validate() const;
  // Keeps only the models whose bit is set in `mask` (bit m = model m).
  PredictionMatrix Subset(std::uint64_t mask) const;
};

struct EnsembleDataset {
  std::vector<PredictionMatrix> inputs;
  std::vector<LabelSequence> gold;

  std::size_t size() const { return inputs.size(); }
  void Validate() const;
  EnsembleDataset Subset(std::uint64_t mask) const;
};

// Per-model predictions as read from one JSONL file.
struct ModelPredictions {
  std::string model_id;
  std::vector<SentencePrediction> predictions;
};

// Stacks per-model predictions for every sentence of `gold`. When
// `impute_outside` is set, a missing sentence becomes an all-O row instead of
// an error.
EnsembleDataset BuildDataset(const Corpus& gold, const std::vector<ModelPredictions>& models,
                             bool impute_outside = false);
// Same, without gold labels (for prediction). Sentence order and lengths
// follow the first model's file.
std::vector<PredictionMatrix> BuildMatrices(const std::vector<ModelPredictions>& models,
                                            bool impute_outside = false);

// Per-position modal label. Ties go to the label of the lowest-indexed model
// among the tied ones. Output is not IOB-repaired.
LabelSequence MajorityVote(const PredictionMatrix& pm);

// n x (M*L) indicator matrix; block m holds model m's label.
Matrix OneHotEncode(const PredictionMatrix& pm, const std::vector<std::string>& model_ids,
                    const LabelSet& labels);

enum class Activation { kRelu, kTanh };
std::string ActivationName(Activation a);
Activation ParseActivation(const std::string& name);

struct Hyperparams {
  std::size_t hidden1 = 128;
  std::size_t hidden2 = 128;
  Activation activation = Activation::kRelu;
  bool mask_iob = true;
  crf::OptimizerConfig optimizer;
};

// Dense layer stored input-major: weights(in, out).
struct DenseLayer {
  Matrix weights;
  std::vector<double> bias;
};

// One-hot stacked predictions -> three dense layers -> linear-chain CRF.
struct EnsembleCrfModel {
  std::vector<std::string> model_ids;
  LabelSet labels;
  Hyperparams hyper;
  DenseLayer layer1;  // (M*L) x h1
  DenseLayer layer2;  // h1 x h2
  DenseLayer layer3;  // h2 x L
  crf::CrfParams crf;

  std::size_t input_width() const { return model_ids.size() * labels.size(); }
  // Throws DataError when layer shapes do not chain.
  void Validate() const;

  // Emission scores for each position (n x L).
  Matrix Emissions(const PredictionMatrix& pm) const;
  crf::ChainPotentials Potentials(const PredictionMatrix& pm) const;
};

EnsembleCrfModel InitModel(const std::vector<std::string>& model_ids, const LabelSet& labels,
                           const Hyperparams& hyper);

// Joint training of the dense stack and CRF by backpropagating the CRF NLL.
// With a nonempty `dev` the best held-out-NLL epoch is returned.
EnsembleCrfModel Train(const EnsembleDataset& train, const EnsembleDataset& dev,
                       const LabelSet& labels, const Hyperparams& hyper,
                       crf::TrainReport* report = nullptr);

// Viterbi decode under the model. Throws DataError if pm's model ids differ
// from the model's (order-sensitive).
LabelSequence Predict(const EnsembleCrfModel& model, const PredictionMatrix& pm);

struct SubsetResult {
  std::uint64_t mask = 0;
  std::vector<std::string> model_ids;
  double dev_f1 = 0.0;
};

struct SearchConfig {
  std::size_t max_models = 8;
  bool force = false;
  Averaging averaging = Averaging::kMacro;
  unsigned threads = 1;
};

// Trains one ensemble per nonempty model subset with identical
// hyperparameters (seed mixed with the subset mask) and ranks them by dev F1
// descending, then subset size ascending, then model ids.
std::vector<SubsetResult> SubsetSearch(const EnsembleDataset& train, const EnsembleDataset& dev,
                                       const LabelSet& labels, const Hyperparams& hyper,
                                       const SearchConfig& config);

// JSON checkpoint: format tag, version, label inventory, model ids,
// hyperparameters and every weight tensor.
void SaveModel(std::ostream& out, const EnsembleCrfModel& model);
void SaveModelFile(const std::string& path, const EnsembleCrfModel& model);
EnsembleCrfModel LoadModel(std::istream& in);
EnsembleCrfModel LoadModelFile(const std::string& path);

}  // namespace nerlp::ensemble

#endif  // NERLP_ENSEMBLE_H
