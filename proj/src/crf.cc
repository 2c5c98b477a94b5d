#include "nerlp/crf.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "nerlp/error.h"
#include "nerlp/random.h"

namespace nerlp::crf {

double LogSumExp(std::span<const double> values) {
  double hi = kNegInf;
  for (double v : values) hi = std::max(hi, v);
  if (hi == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - hi);
  return hi + std::log(sum);
}

void ChainPotentials::Validate() const {
  const std::size_t n = length();
  const std::size_t L = num_labels();
  if (n == 0 || L == 0) throw DataError("chain potentials need at least one token and label");
  if (transitions.rows() != L || transitions.cols() != L || start.size() != L || stop.size() != L) {
    throw DataError("chain potential shapes disagree on the label count");
  }
  auto check = [](std::span<const double> xs) {
    for (double x : xs) {
      if (std::isnan(x) || x == std::numeric_limits<double>::infinity()) {
        throw DataError("chain potentials contain NaN or +inf");
      }
    }
  };
  check(emissions.data());
  check(transitions.data());
  check(start);
  check(stop);
}

double PathScore(const ChainPotentials& pot, std::span<const std::size_t> path) {
  if (path.size() != pot.length()) throw DataError("path length differs from chain length");
  double s = pot.start[path[0]] + pot.stop[path.back()];
  for (std::size_t t = 0; t < path.size(); ++t) {
    s += pot.emissions(t, path[t]);
    if (t > 0) s += pot.transitions(path[t - 1], path[t]);
  }
  return s;
}

namespace {

Matrix Forward(const ChainPotentials& pot) {
  const std::size_t n = pot.length();
  const std::size_t L = pot.num_labels();
  Matrix alpha(n, L);
  std::vector<double> scratch(L);
  for (std::size_t j = 0; j < L; ++j) alpha(0, j) = pot.start[j] + pot.emissions(0, j);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t j = 0; j < L; ++j) {
      for (std::size_t i = 0; i < L; ++i) scratch[i] = alpha(t - 1, i) + pot.transitions(i, j);
      alpha(t, j) = LogSumExp(scratch) + pot.emissions(t, j);
    }
  }
  return alpha;
}

Matrix Backward(const ChainPotentials& pot) {
  const std::size_t n = pot.length();
  const std::size_t L = pot.num_labels();
  Matrix beta(n, L);
  std::vector<double> scratch(L);
  for (std::size_t i = 0; i < L; ++i) beta(n - 1, i) = pot.stop[i];
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < L; ++j) {
        scratch[j] = pot.transitions(i, j) + pot.emissions(t + 1, j) + beta(t + 1, j);
      }
      beta(t, i) = LogSumExp(scratch);
    }
  }
  return beta;
}

double FinalLogZ(const ChainPotentials& pot, const Matrix& alpha) {
  const std::size_t L = pot.num_labels();
  std::vector<double> last(L);
  for (std::size_t j = 0; j < L; ++j) last[j] = alpha(pot.length() - 1, j) + pot.stop[j];
  return LogSumExp(last);
}

}  // namespace

double LogPartition(const ChainPotentials& pot) {
  pot.Validate();
  return FinalLogZ(pot, Forward(pot));
}

Decoded Viterbi(const ChainPotentials& pot) {
  pot.Validate();
  const std::size_t n = pot.length();
  const std::size_t L = pot.num_labels();
  Matrix best(n, L);
  std::vector<std::size_t> back(n * L, 0);
  for (std::size_t j = 0; j < L; ++j) best(0, j) = pot.start[j] + pot.emissions(0, j);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t j = 0; j < L; ++j) {
      double top = kNegInf;
      std::size_t arg = 0;
      for (std::size_t i = 0; i < L; ++i) {
        const double v = best(t - 1, i) + pot.transitions(i, j);
        if (v > top) {
          top = v;
          arg = i;
        }
      }
      best(t, j) = top + pot.emissions(t, j);
      back[t * L + j] = arg;
    }
  }
  Decoded out;
  out.score = kNegInf;
  std::size_t last = 0;
  for (std::size_t j = 0; j < L; ++j) {
    const double v = best(n - 1, j) + pot.stop[j];
    if (v > out.score) {
      out.score = v;
      last = j;
    }
  }
  if (out.score == kNegInf) throw DataError("no feasible path");
  out.labels.assign(n, 0);
  out.labels[n - 1] = last;
  for (std::size_t t = n - 1; t > 0; --t) out.labels[t - 1] = back[t * L + out.labels[t]];
  return out;
}

Matrix Marginals(const ChainPotentials& pot) {
  pot.Validate();
  const Matrix alpha = Forward(pot);
  const Matrix beta = Backward(pot);
  const double log_z = FinalLogZ(pot, alpha);
  if (log_z == kNegInf) throw DataError("no feasible path");
  Matrix m(pot.length(), pot.num_labels());
  for (std::size_t t = 0; t < m.rows(); ++t) {
    for (std::size_t i = 0; i < m.cols(); ++i) m(t, i) = std::exp(alpha(t, i) + beta(t, i) - log_z);
  }
  return m;
}

NllGradient NllAndGradient(const ChainPotentials& pot, std::span<const std::size_t> gold) {
  pot.Validate();
  const std::size_t n = pot.length();
  const std::size_t L = pot.num_labels();
  if (gold.size() != n) throw DataError("gold length differs from chain length");
  for (auto g : gold) {
    if (g >= L) throw DataError("gold label index out of range");
  }
  const double gold_score = PathScore(pot, gold);
  if (gold_score == kNegInf) throw DataError("gold path has score -inf");

  const Matrix alpha = Forward(pot);
  const Matrix beta = Backward(pot);
  const double log_z = FinalLogZ(pot, alpha);

  NllGradient g;
  g.nll = std::max(0.0, log_z - gold_score);
  g.d_emissions = Matrix(n, L);
  g.d_transitions = Matrix(L, L);
  g.d_start.assign(L, 0.0);
  g.d_stop.assign(L, 0.0);

  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = 0; i < L; ++i) {
      g.d_emissions(t, i) = std::exp(alpha(t, i) + beta(t, i) - log_z);
    }
  }
  for (std::size_t i = 0; i < L; ++i) {
    g.d_start[i] = g.d_emissions(0, i);
    g.d_stop[i] = g.d_emissions(n - 1, i);
  }
  for (std::size_t t = 0; t + 1 < n; ++t) {
    for (std::size_t i = 0; i < L; ++i) {
      if (alpha(t, i) == kNegInf) continue;
      for (std::size_t j = 0; j < L; ++j) {
        const double lp =
            alpha(t, i) + pot.transitions(i, j) + pot.emissions(t + 1, j) + beta(t + 1, j) - log_z;
        g.d_transitions(i, j) += std::exp(lp);
      }
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    g.d_emissions(t, gold[t]) -= 1.0;
    if (t > 0) g.d_transitions(gold[t - 1], gold[t]) -= 1.0;
  }
  g.d_start[gold[0]] -= 1.0;
  g.d_stop[gold[n - 1]] -= 1.0;
  return g;
}

CrfParams::CrfParams(LabelSet label_set, bool iob_mask)
    : labels(std::move(label_set)),
      transitions(labels.size(), labels.size()),
      start(labels.size(), 0.0),
      stop(labels.size(), 0.0),
      mask_iob(iob_mask) {}

ChainPotentials CrfParams::Potentials(Matrix emissions) const {
  const std::size_t L = labels.size();
  if (emissions.cols() != L) throw DataError("emission width differs from label count");
  ChainPotentials pot{std::move(emissions), transitions, start, stop};
  if (mask_iob) {
    for (std::size_t i = 0; i < L; ++i) {
      if (!labels.start_allowed(i)) pot.start[i] = kNegInf;
      for (std::size_t j = 0; j < L; ++j) {
        if (!labels.transition_allowed(i, j)) pot.transitions(i, j) = kNegInf;
      }
    }
  }
  return pot;
}

SgdMomentum::SgdMomentum(const OptimizerConfig& config, std::vector<ParamRef> params)
    : config_(config), params_(std::move(params)) {
  for (const auto& p : params_) velocity_.emplace_back(p.value->size(), 0.0);
}

void SgdMomentum::ZeroGrad() {
  for (auto& p : params_) std::fill(p.grad->begin(), p.grad->end(), 0.0);
}

void SgdMomentum::Step() {
  for (auto& p : params_) {
    auto& v = *p.value;
    auto& g = *p.grad;
    for (std::size_t k = 0; k < v.size(); ++k) g[k] += config_.weight_decay * v[k];
  }
  if (config_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& p : params_) {
      for (double x : *p.grad) sq += x * x;
    }
    const double norm = std::sqrt(sq);
    if (norm > config_.clip_norm) {
      const double scale = config_.clip_norm / norm;
      for (auto& p : params_) {
        for (double& x : *p.grad) x *= scale;
      }
    }
  }
  for (std::size_t b = 0; b < params_.size(); ++b) {
    auto& v = *params_[b].value;
    auto& g = *params_[b].grad;
    auto& vel = velocity_[b];
    for (std::size_t k = 0; k < v.size(); ++k) {
      vel[k] = config_.momentum * vel[k] + g[k];
      v[k] -= config_.learning_rate * vel[k];
    }
  }
  ZeroGrad();
}

TrainReport RunTraining(std::size_t train_size, std::size_t heldout_size,
                        const OptimizerConfig& config, const std::vector<ParamRef>& params,
                        const std::function<double(std::size_t)>& train_step,
                        const std::function<double(std::size_t)>& heldout_nll) {
  if (train_size == 0) throw DataError("training set is empty");
  if (config.batch_size == 0) throw DataError("batch size must be positive");
  SgdMomentum optimizer(config, params);
  optimizer.ZeroGrad();

  TrainReport report;
  std::vector<std::vector<double>> best;
  double best_heldout = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train_size);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng rng(MixSeed(config.seed, epoch));
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (std::size_t begin = 0; begin < train_size; begin += config.batch_size) {
      const std::size_t end = std::min(train_size, begin + config.batch_size);
      double batch_loss = 0.0;
      for (std::size_t k = begin; k < end; ++k) batch_loss += train_step(order[k]);
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss at epoch " << epoch << ", batch starting at "
            << begin << " (learning rate " << config.learning_rate << ")";
        throw NumericError(msg.str());
      }
      const double scale = 1.0 / static_cast<double>(end - begin);
      for (auto& p : params) {
        for (double& x : *p.grad) x *= scale;
      }
      optimizer.Step();
      total += batch_loss;
    }
    report.train_nll.push_back(total / static_cast<double>(train_size));
    report.epochs_run = epoch + 1;

    if (heldout_size == 0) {
      report.best_epoch = epoch;
      continue;
    }
    double h = 0.0;
    for (std::size_t k = 0; k < heldout_size; ++k) h += heldout_nll(k);
    h /= static_cast<double>(heldout_size);
    if (!std::isfinite(h)) {
      throw NumericError("training diverged: non-finite held-out loss at epoch " +
                         std::to_string(epoch));
    }
    report.heldout_nll.push_back(h);
    if (h < best_heldout) {
      best_heldout = h;
      report.best_epoch = epoch;
      since_best = 0;
      best.clear();
      for (const auto& p : params) best.push_back(*p.value);
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  if (!best.empty()) {
    for (std::size_t b = 0; b < params.size(); ++b) *params[b].value = best[b];
  }
  return report;
}

ChainPotentials LinearCrf::Potentials(const Matrix& features) const {
  const std::size_t L = crf.labels.size();
  if (features.cols() != weights.rows()) throw DataError("feature width differs from model");
  Matrix em(features.rows(), L);
  for (std::size_t t = 0; t < features.rows(); ++t) {
    for (std::size_t l = 0; l < L; ++l) em(t, l) = bias[l];
    for (std::size_t f = 0; f < features.cols(); ++f) {
      const double x = features(t, f);
      if (x == 0.0) continue;
      for (std::size_t l = 0; l < L; ++l) em(t, l) += x * weights(f, l);
    }
  }
  return crf.Potentials(std::move(em));
}

std::vector<std::size_t> LinearCrf::Predict(const Matrix& features) const {
  return Viterbi(Potentials(features)).labels;
}

LinearCrf Train(const std::vector<CrfExample>& data, const std::vector<CrfExample>& heldout,
                const LabelSet& labels, const OptimizerConfig& config, bool mask_iob,
                TrainReport* report) {
  if (data.empty()) throw DataError("training set is empty");
  const std::size_t F = data.front().features.cols();
  const std::size_t L = labels.size();
  for (const auto* set : {&data, &heldout}) {
    for (const auto& ex : *set) {
      if (ex.features.cols() != F) throw DataError("inconsistent feature widths");
      if (ex.features.rows() != ex.gold.size()) throw DataError("feature rows differ from gold length");
    }
  }

  LinearCrf model{CrfParams(labels, mask_iob), Matrix(F, L), std::vector<double>(L, 0.0)};
  Matrix g_weights(F, L);
  std::vector<double> g_bias(L), g_start(L), g_stop(L);
  Matrix g_trans(L, L);

  std::vector<ParamRef> params = {
      {&model.weights.data(), &g_weights.data()},
      {&model.bias, &g_bias},
      {&model.crf.transitions.data(), &g_trans.data()},
      {&model.crf.start, &g_start},
      {&model.crf.stop, &g_stop},
  };

  auto step = [&](std::size_t idx) {
    const auto& ex = data[idx];
    const auto g = NllAndGradient(model.Potentials(ex.features), ex.gold);
    for (std::size_t t = 0; t < ex.features.rows(); ++t) {
      for (std::size_t l = 0; l < L; ++l) g_bias[l] += g.d_emissions(t, l);
      for (std::size_t f = 0; f < F; ++f) {
        const double x = ex.features(t, f);
        if (x == 0.0) continue;
        for (std::size_t l = 0; l < L; ++l) g_weights(f, l) += x * g.d_emissions(t, l);
      }
    }
    for (std::size_t k = 0; k < g_trans.size(); ++k) {
      g_trans.data()[k] += g.d_transitions.data()[k];
    }
    for (std::size_t l = 0; l < L; ++l) {
      g_start[l] += g.d_start[l];
      g_stop[l] += g.d_stop[l];
    }
    return g.nll;
  };
  auto eval = [&](std::size_t idx) {
    const auto& ex = heldout[idx];
    const auto pot = model.Potentials(ex.features);
    return LogPartition(pot) - PathScore(pot, ex.gold);
  };

  auto r = RunTraining(data.size(), heldout.size(), config, params, step, eval);
  if (report) *report = std::move(r);
  return model;
}

}  // namespace nerlp::crf
