#ifndef NERLP_CRF_H
#define NERLP_CRF_H

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "nerlp/labels.h"
#include "nerlp/matrix.h"

namespace nerlp::crf {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogSumExp(std::span<const double> values);

// Log-potentials of one linear chain. -inf marks a forbidden choice.
struct ChainPotentials {
  Matrix emissions;    // n x L
  Matrix transitions;  // L x L, [from][to]
  std::vector<double> start;
  std::vector<double> stop;

  std::size_t length() const { return emissions.rows(); }
  std::size_t num_labels() const { return emissions.cols(); }

  // Throws DataError on shape mismatch, n == 0, L == 0, NaN or +inf.
  void Validate() const;
};

double PathScore(const ChainPotentials& pot, std::span<const std::size_t> path);

double LogPartition(const ChainPotentials& pot);

struct Decoded {
  std::vector<std::size_t> labels;
  double score = 0.0;
};

// Max-score path. Ties go to the lowest label index. Throws DataError when
// every path has score -inf ("no feasible path").
Decoded Viterbi(const ChainPotentials& pot);

// Per-position label marginals (n x L), rows summing to one.
Matrix Marginals(const ChainPotentials& pot);

struct NllGradient {
  double nll = 0.0;
  Matrix d_emissions;    // n x L
  Matrix d_transitions;  // L x L
  std::vector<double> d_start;
  std::vector<double> d_stop;
};

// nll = logZ - score(gold); gradients are expected minus observed counts.
// Throws DataError when the gold path is infeasible.
NllGradient NllAndGradient(const ChainPotentials& pot, std::span<const std::size_t> gold);

// Learned transition structure. When `mask_iob` is set, IOB2-forbidden
// transitions and starts are pinned to -inf when potentials are built.
struct CrfParams {
  LabelSet labels;
  Matrix transitions;
  std::vector<double> start;
  std::vector<double> stop;
  bool mask_iob = true;

  CrfParams() = default;
  CrfParams(LabelSet label_set, bool iob_mask);

  // Combines learned parameters with upstream emissions into potentials.
  ChainPotentials Potentials(Matrix emissions) const;
};

// Mini-batch SGD with momentum, L2 weight decay and optional global-norm
// gradient clipping.
struct OptimizerConfig {
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;   // epochs without held-out improvement
  double clip_norm = 5.0;     // <= 0 disables clipping
  std::uint64_t seed = 13;
};

// A flat view over trainable tensors and their gradient buffers.
struct ParamRef {
  std::vector<double>* value;
  std::vector<double>* grad;
};

class SgdMomentum {
 public:
  SgdMomentum(const OptimizerConfig& config, std::vector<ParamRef> params);
  // Applies decay, clipping and the momentum update, then zeroes gradients.
  void Step();
  void ZeroGrad();

 private:
  OptimizerConfig config_;
  std::vector<ParamRef> params_;
  std::vector<std::vector<double>> velocity_;
};

struct TrainReport {
  std::vector<double> train_nll;    // mean per-sentence NLL, one entry per epoch
  std::vector<double> heldout_nll;  // empty without a held-out set
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
};

// Shared epoch loop. `train_step(i)` must add the gradient of example i's NLL
// into the registered gradient buffers and return that NLL; the loop scales
// by the batch size. `heldout_nll(i)` returns a held-out example's NLL.
// On return the parameters hold the best held-out epoch (or the last epoch
// when there is no held-out data).
TrainReport RunTraining(std::size_t train_size, std::size_t heldout_size,
                        const OptimizerConfig& config, const std::vector<ParamRef>& params,
                        const std::function<double(std::size_t)>& train_step,
                        const std::function<double(std::size_t)>& heldout_nll);

// Linear-feature CRF: emissions = features * weights + bias.
struct LinearCrf {
  CrfParams crf;
  Matrix weights;  // F x L
  std::vector<double> bias;

  ChainPotentials Potentials(const Matrix& features) const;
  std::vector<std::size_t> Predict(const Matrix& features) const;
};

struct CrfExample {
  Matrix features;  // n x F
  std::vector<std::size_t> gold;
};

// Trains a LinearCrf. When `heldout` is nonempty the parameters from the
// epoch with the lowest held-out NLL are returned and training stops after
// `patience` epochs without improvement. Throws NumericError if the loss
// becomes non-finite.
LinearCrf Train(const std::vector<CrfExample>& data, const std::vector<CrfExample>& heldout,
                const LabelSet& labels, const OptimizerConfig& config, bool mask_iob,
                TrainReport* report = nullptr);

}  // namespace nerlp::crf

#endif  // NERLP_CRF_H
