#include "rfqc/model.hpp"

#include "rfqc/corpus.hpp"
#include "rfqc/training.hpp"

#include <cmath>

namespace rfqc {
namespace {

void fill_uniform(Mat& m, double bound, Prng& rng) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = (2.0 * rng.next_uniform() - 1.0) * bound;
    }
  }
}

Mat init_weight(int rows, int cols, Prng& rng) {
  Mat m(rows, cols);
  fill_uniform(m, 1.0 / std::sqrt(static_cast<double>(cols)), rng);
  return m;
}

template <typename Params, typename... Mats>
void collect(std::vector<Mat*>& out, std::optional<Params>& p, Mats Params::*... members) {
  if (p) (out.push_back(&((*p).*members)), ...);
}

}  // namespace

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "rnn") return ModelKind::Rnn;
  if (s == "lstm") return ModelKind::Lstm;
  if (s == "gru") return ModelKind::Gru;
  if (s == "fusion") return ModelKind::Fusion;
  throw std::invalid_argument("unknown model kind '" + s + "' (valid: rnn, lstm, gru, fusion)");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Rnn: return "rnn";
    case ModelKind::Lstm: return "lstm";
    case ModelKind::Gru: return "gru";
    case ModelKind::Fusion: return "fusion";
  }
  return "fusion";
}

Gradients zero_gradients(const ClassifierModel& model) {
  Gradients g;
  g.embedding = Mat::Zero(model.embedding.vocab_size(), model.embedding.dim());
  const int h = model.hidden, d = model.dim;
  if (model.rnn) g.rnn = RnnParams{Mat::Zero(h, d), Mat::Zero(h, h)};
  if (model.lstm) {
    g.lstm = LstmParams{Mat::Zero(h, h), Mat::Zero(h, h), Mat::Zero(h, h), Mat::Zero(h, h),
                        Mat::Zero(h, d), Mat::Zero(h, d), Mat::Zero(h, d), Mat::Zero(h, d)};
  }
  if (model.gru) {
    g.gru = GruParams{Mat::Zero(h, h), Mat::Zero(h, h), Mat::Zero(h, h),
                      Mat::Zero(h, d), Mat::Zero(h, d), Mat::Zero(h, d)};
  }
  g.head = Mat::Zero(model.head.rows(), model.head.cols());
  return g;
}

std::vector<Mat*> param_tensors(ClassifierModel& model) {
  std::vector<Mat*> out{&model.embedding.weights};
  collect(out, model.rnn, &RnnParams::U, &RnnParams::W);
  collect(out, model.lstm, &LstmParams::W_i, &LstmParams::W_f, &LstmParams::W_o,
          &LstmParams::W_g, &LstmParams::U_i, &LstmParams::U_f, &LstmParams::U_o,
          &LstmParams::U_g);
  collect(out, model.gru, &GruParams::W_z, &GruParams::W_r, &GruParams::W_c, &GruParams::U_z,
          &GruParams::U_r, &GruParams::U_c);
  out.push_back(&model.head);
  return out;
}

std::vector<const Mat*> param_tensors(const ClassifierModel& model) {
  auto mutable_tensors = param_tensors(const_cast<ClassifierModel&>(model));
  return {mutable_tensors.begin(), mutable_tensors.end()};
}

std::vector<Mat*> grad_tensors(Gradients& grads) {
  std::vector<Mat*> out{&grads.embedding};
  collect(out, grads.rnn, &RnnParams::U, &RnnParams::W);
  collect(out, grads.lstm, &LstmParams::W_i, &LstmParams::W_f, &LstmParams::W_o,
          &LstmParams::W_g, &LstmParams::U_i, &LstmParams::U_f, &LstmParams::U_o,
          &LstmParams::U_g);
  collect(out, grads.gru, &GruParams::W_z, &GruParams::W_r, &GruParams::W_c, &GruParams::U_z,
          &GruParams::U_r, &GruParams::U_c);
  out.push_back(&grads.head);
  return out;
}

std::vector<std::string> param_names(const ClassifierModel& model) {
  std::vector<std::string> names{"embedding"};
  if (model.rnn) names.insert(names.end(), {"rnn.U", "rnn.W"});
  if (model.lstm) {
    names.insert(names.end(), {"lstm.W_i", "lstm.W_f", "lstm.W_o", "lstm.W_g", "lstm.U_i",
                               "lstm.U_f", "lstm.U_o", "lstm.U_g"});
  }
  if (model.gru) {
    names.insert(names.end(),
                 {"gru.W_z", "gru.W_r", "gru.W_c", "gru.U_z", "gru.U_r", "gru.U_c"});
  }
  names.push_back("head");
  return names;
}

std::int64_t param_count(const ClassifierModel& model) {
  std::int64_t n = 0;
  for (const Mat* m : param_tensors(model)) n += m->size();
  return n;
}

ClassifierModel init_model(ModelKind kind, const ModelDims& dims, Prng& rng,
                           Activation rnn_activation) {
  if (dims.vocab_size < 2 || dims.dim < 1 || dims.hidden < 1 || dims.num_classes < 1) {
    throw std::invalid_argument("init_model: invalid dimensions");
  }
  ClassifierModel model;
  model.kind = kind;
  model.dim = dims.dim;
  model.hidden = dims.hidden;
  model.num_classes = dims.num_classes;
  model.rnn_activation = rnn_activation;
  model.embedding = init_embeddings(dims.vocab_size, dims.dim, rng);

  const int h = dims.hidden, d = dims.dim;
  if (kind == ModelKind::Rnn || kind == ModelKind::Fusion) {
    model.rnn = RnnParams{init_weight(h, d, rng), init_weight(h, h, rng)};
  }
  if (kind == ModelKind::Lstm || kind == ModelKind::Fusion) {
    LstmParams p;
    p.W_i = init_weight(h, h, rng);
    p.W_f = init_weight(h, h, rng);
    p.W_o = init_weight(h, h, rng);
    p.W_g = init_weight(h, h, rng);
    p.U_i = init_weight(h, d, rng);
    p.U_f = init_weight(h, d, rng);
    p.U_o = init_weight(h, d, rng);
    p.U_g = init_weight(h, d, rng);
    model.lstm = std::move(p);
  }
  if (kind == ModelKind::Gru || kind == ModelKind::Fusion) {
    GruParams p;
    p.W_z = init_weight(h, h, rng);
    p.W_r = init_weight(h, h, rng);
    p.W_c = init_weight(h, h, rng);
    p.U_z = init_weight(h, d, rng);
    p.U_r = init_weight(h, d, rng);
    p.U_c = init_weight(h, d, rng);
    model.gru = std::move(p);
  }
  model.head = init_weight(dims.num_classes, model.feature_width(), rng);
  return model;
}

namespace {

// Branch encodes over already-embedded (and possibly dropout-masked) inputs.
Vec encode_branches(const ClassifierModel& model, const std::vector<Vec>& xs,
                    ForwardCache& cache) {
  Vec feature(model.feature_width());
  int offset = 0;
  if (model.rnn) {
    auto [state, branch_cache] = rnn_encode(*model.rnn, xs, model.rnn_activation);
    feature.segment(offset, model.hidden) = state;
    offset += model.hidden;
    cache.rnn = std::move(branch_cache);
  }
  if (model.lstm) {
    auto [state, branch_cache] = lstm_encode(*model.lstm, xs);
    feature.segment(offset, model.hidden) = state;
    offset += model.hidden;
    cache.lstm = std::move(branch_cache);
  }
  if (model.gru) {
    auto [state, branch_cache] = gru_encode(*model.gru, xs);
    feature.segment(offset, model.hidden) = state;
    offset += model.hidden;
    cache.gru = std::move(branch_cache);
  }
  return feature;
}

}  // namespace

std::pair<Vec, ForwardCache> feature_extract(const ClassifierModel& model,
                                             const std::vector<int>& ids) {
  if (ids.empty()) throw std::invalid_argument("feature_extract: empty sequence");
  ForwardCache cache;
  cache.ids = ids;
  cache.inputs = lookup(model.embedding, ids);
  cache.feature = encode_branches(model, cache.inputs, cache);
  return {cache.feature, std::move(cache)};
}

std::pair<Vec, ForwardCache> forward(const ClassifierModel& model, const std::vector<int>& ids,
                                     double dropout_rate, bool training, Prng& rng) {
  if (ids.empty()) throw std::invalid_argument("forward: empty sequence");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw std::invalid_argument("forward: dropout_rate must be in [0, 1)");
  }
  ForwardCache cache;
  cache.ids = ids;
  cache.training = training;
  cache.inputs = lookup(model.embedding, ids);
  if (training) {
    cache.input_mask = make_dropout_mask(model.dim, dropout_rate, rng);
    for (Vec& x : cache.inputs) x = x.cwiseProduct(cache.input_mask);
  }
  cache.feature = encode_branches(model, cache.inputs, cache);
  if (training) {
    cache.feature_mask = make_dropout_mask(model.feature_width(), dropout_rate, rng);
    cache.feature_dropped = cache.feature.cwiseProduct(cache.feature_mask);
  } else {
    cache.feature_dropped = cache.feature;
  }
  cache.probs = softmax(model.head * cache.feature_dropped);
  return {cache.probs, std::move(cache)};
}

int predict(const Vec& probs) {
  if (probs.size() == 0) throw std::invalid_argument("predict: empty probability vector");
  int best = 0;
  for (int i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

void model_backward(const ClassifierModel& model, const ForwardCache& cache, int label,
                    Gradients& out) {
  if (label < 0 || label >= model.num_classes) {
    throw std::invalid_argument("model_backward: label out of range");
  }
  if (cache.probs.size() != model.num_classes ||
      cache.feature.size() != model.feature_width() ||
      cache.inputs.size() != cache.ids.size() || cache.ids.empty() ||
      model.rnn.has_value() != cache.rnn.has_value() ||
      model.lstm.has_value() != cache.lstm.has_value() ||
      model.gru.has_value() != cache.gru.has_value()) {
    throw std::invalid_argument("model_backward: cache does not match model");
  }

  Vec d_logits = cache.probs;
  d_logits[label] -= 1.0;

  out.head.noalias() += d_logits * cache.feature_dropped.transpose();
  Vec d_feature = model.head.transpose() * d_logits;
  if (cache.training) d_feature = d_feature.cwiseProduct(cache.feature_mask);

  const auto t_len = cache.ids.size();
  std::vector<Vec> d_inputs(t_len, Vec::Zero(model.dim));
  int offset = 0;
  if (model.rnn) {
    auto grads = rnn_backward(*model.rnn, *cache.rnn, d_feature.segment(offset, model.hidden));
    out.rnn->U += grads.dU;
    out.rnn->W += grads.dW;
    for (std::size_t t = 0; t < t_len; ++t) d_inputs[t] += grads.d_inputs[t];
    offset += model.hidden;
  }
  if (model.lstm) {
    auto grads =
        lstm_backward(*model.lstm, *cache.lstm, d_feature.segment(offset, model.hidden));
    out.lstm->W_i += grads.dW_i;
    out.lstm->W_f += grads.dW_f;
    out.lstm->W_o += grads.dW_o;
    out.lstm->W_g += grads.dW_g;
    out.lstm->U_i += grads.dU_i;
    out.lstm->U_f += grads.dU_f;
    out.lstm->U_o += grads.dU_o;
    out.lstm->U_g += grads.dU_g;
    for (std::size_t t = 0; t < t_len; ++t) d_inputs[t] += grads.d_inputs[t];
    offset += model.hidden;
  }
  if (model.gru) {
    auto grads = gru_backward(*model.gru, *cache.gru, d_feature.segment(offset, model.hidden));
    out.gru->W_z += grads.dW_z;
    out.gru->W_r += grads.dW_r;
    out.gru->W_c += grads.dW_c;
    out.gru->U_z += grads.dU_z;
    out.gru->U_r += grads.dU_r;
    out.gru->U_c += grads.dU_c;
    for (std::size_t t = 0; t < t_len; ++t) d_inputs[t] += grads.d_inputs[t];
    offset += model.hidden;
  }

  // Scatter into embedding rows; PAD (row 0) is never touched.
  for (std::size_t t = 0; t < t_len; ++t) {
    const int id = cache.ids[t];
    if (id == kPadId) continue;
    Vec d_x = cache.training ? d_inputs[t].cwiseProduct(cache.input_mask).eval() : d_inputs[t];
    out.embedding.row(id) += d_x.transpose();
  }
}

Gradients model_backward(const ClassifierModel& model, const ForwardCache& cache, int label) {
  Gradients out = zero_gradients(model);
  model_backward(model, cache, label, out);
  return out;
}

}  // namespace rfqc
