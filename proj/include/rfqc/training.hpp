#pragma once

#include "rfqc/corpus.hpp"
#include "rfqc/model.hpp"

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

namespace rfqc {

/// Thrown when training produces a non-finite loss; the CLI maps it to
/// exit status 3.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double lr = 0.01;
  double dropout = 0.5;
  int batch_size = 32;
  int epochs = 10;
  std::uint64_t seed = 0;
  std::optional<double> clip_norm = 5.0;
  int max_len = 128;
  std::array<double, 3> split{0.6, 0.2, 0.2};
  bool freeze_embeddings = false;
};

// One first/second moment pair per parameter tensor; t advances once per
// optimizer step across all tensors.
struct AdamState {
  std::vector<Mat> m, v;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState like(const std::vector<Mat*>& params);
};

struct EpochMetrics {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainingReport {
  ModelKind kind = ModelKind::Fusion;
  TrainConfig config;
  std::vector<EpochMetrics> epochs;
  int best_epoch = 0;  // 1-based; 0 when no epochs ran
  double test_accuracy = 0.0;
  double test_loss = 0.0;
  double wall_seconds = 0.0;  // not serialized; reports must be byte-stable
};

/// -ln(max(probs[label], 1e-12)).
double cross_entropy(const Vec& probs, int label);

/// One Adam update over parallel (param, grad) tensor lists.
void adam_step(AdamState& state, const std::vector<Mat*>& params,
               const std::vector<const Mat*>& grads, double lr);

/// Entries are 0 with probability rate, else 1/(1-rate).
Vec make_dropout_mask(int len, double rate, Prng& rng);

/// Scales all tensors so the global L2 norm is at most max_norm; returns
/// the pre-clip norm.
double clip_global_norm(const std::vector<Mat*>& grads, double max_norm);

/// Epoch loop: shuffle, accumulate batch gradients in example order, clip,
/// Adam step; track the best validation accuracy (ties keep the earlier
/// epoch) and evaluate that parameter snapshot on the test set.
std::pair<ClassifierModel, TrainingReport> train(const ClassifierModel& initial,
                                                 const DatasetSplit& split,
                                                 const TrainConfig& config);

/// (accuracy, mean loss) with dropout off.
std::pair<double, double> evaluate(const ClassifierModel& model,
                                   const std::vector<LabeledExample>& examples);

/// Max relative error between analytic gradients and central finite
/// differences over every parameter coordinate, dropout off.
double grad_check(const ClassifierModel& model, const LabeledExample& example, double epsilon);

}  // namespace rfqc
