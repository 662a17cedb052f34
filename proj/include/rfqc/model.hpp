#pragma once

#include "rfqc/cells.hpp"
#include "rfqc/embedding.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rfqc {

enum class ModelKind { Rnn, Lstm, Gru, Fusion };

ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind kind);

// Shared embedding, up to three recurrent branches over the same embedded
// sequence, and a bias-free softmax head on the concatenated final states
// (branch order rnn | lstm | gru).
struct ClassifierModel {
  ModelKind kind = ModelKind::Fusion;
  int dim = 0;          // embedding width D
  int hidden = 0;       // per-branch state width H
  int num_classes = 0;  // C
  Activation rnn_activation = Activation::Tanh;

  EmbeddingTable embedding;
  std::optional<RnnParams> rnn;
  std::optional<LstmParams> lstm;
  std::optional<GruParams> gru;
  Mat head;  // C x feature_width()

  int feature_width() const { return kind == ModelKind::Fusion ? 3 * hidden : hidden; }
};

struct ModelDims {
  int vocab_size = 0;
  int dim = 64;
  int hidden = 64;
  int num_classes = 0;
};

struct ForwardCache {
  std::vector<int> ids;
  std::vector<Vec> inputs;  // embedded sequence, input dropout already applied
  std::optional<RnnCache> rnn;
  std::optional<LstmCache> lstm;
  std::optional<GruCache> gru;
  Vec feature;          // concatenated final states
  Vec feature_dropped;  // what the head saw
  Vec probs;
  Vec input_mask, feature_mask;  // size 0 when evaluating
  bool training = false;
};

// Gradients mirror the trainable tensors; the cell parameter structs double
// as gradient holders since the shapes coincide.
struct Gradients {
  Mat embedding;
  std::optional<RnnParams> rnn;
  std::optional<LstmParams> lstm;
  std::optional<GruParams> gru;
  Mat head;
};

Gradients zero_gradients(const ClassifierModel& model);

/// Trainable tensors in the fixed order used by the checkpoint, the
/// optimizer and the gradient check: embedding, rnn.U, rnn.W, lstm.W_i,
/// lstm.W_f, lstm.W_o, lstm.W_g, lstm.U_i..U_g, gru.W_z, gru.W_r, gru.W_c,
/// gru.U_z..U_c, head.
std::vector<Mat*> param_tensors(ClassifierModel& model);
std::vector<const Mat*> param_tensors(const ClassifierModel& model);
std::vector<Mat*> grad_tensors(Gradients& grads);
std::vector<std::string> param_names(const ClassifierModel& model);
std::int64_t param_count(const ClassifierModel& model);

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per tensor, filled
/// row-major in param_tensors order; the embedding follows its own rule.
ClassifierModel init_model(ModelKind kind, const ModelDims& dims, Prng& rng,
                           Activation rnn_activation = Activation::Tanh);

/// Embeds once and encodes with every present branch; no dropout.
std::pair<Vec, ForwardCache> feature_extract(const ClassifierModel& model,
                                             const std::vector<int>& ids);

/// Full forward pass. When training, inverted dropout is applied at two
/// points: one mask over the embedding dimensions (shared by all timesteps,
/// drawn first) and one over the concatenated feature (drawn second).
std::pair<Vec, ForwardCache> forward(const ClassifierModel& model, const std::vector<int>& ids,
                                     double dropout_rate, bool training, Prng& rng);

/// Argmax; ties go to the lowest index.
int predict(const Vec& probs);

/// Cross-entropy gradients for every trainable tensor, accumulated into
/// `out`. Dropout masks are replayed from the cache.
void model_backward(const ClassifierModel& model, const ForwardCache& cache, int label,
                    Gradients& out);
Gradients model_backward(const ClassifierModel& model, const ForwardCache& cache, int label);

}  // namespace rfqc
