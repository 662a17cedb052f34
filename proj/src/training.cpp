#include "rfqc/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace rfqc {

double cross_entropy(const Vec& probs, int label) {
  if (label < 0 || label >= probs.size()) {
    throw std::invalid_argument("cross_entropy: label out of range");
  }
  return -std::log(std::max(probs[label], 1e-12));
}

AdamState AdamState::like(const std::vector<Mat*>& params) {
  AdamState state;
  state.m.reserve(params.size());
  state.v.reserve(params.size());
  for (const Mat* p : params) {
    state.m.push_back(Mat::Zero(p->rows(), p->cols()));
    state.v.push_back(Mat::Zero(p->rows(), p->cols()));
  }
  return state;
}

void adam_step(AdamState& state, const std::vector<Mat*>& params,
               const std::vector<const Mat*>& grads, double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: tensor list mismatch");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k]->rows() != grads[k]->rows() || params[k]->cols() != grads[k]->cols() ||
        params[k]->rows() != state.m[k].rows() || params[k]->cols() != state.m[k].cols()) {
      throw std::invalid_argument("adam_step: shape mismatch at tensor " + std::to_string(k));
    }
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto g = grads[k]->array();
    auto m = state.m[k].array();
    auto v = state.v[k].array();
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.square();
    params[k]->array() -= lr * (m / bc1) / ((v / bc2).sqrt() + state.epsilon);
  }
}

Vec make_dropout_mask(int len, double rate, Prng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw std::invalid_argument("make_dropout_mask: rate must be in [0, 1)");
  }
  Vec mask(len);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (int i = 0; i < len; ++i) {
    mask[i] = rng.next_uniform() < rate ? 0.0 : keep_scale;
  }
  return mask;
}

double clip_global_norm(const std::vector<Mat*>& grads, double max_norm) {
  double sq = 0.0;
  for (const Mat* g : grads) sq += g->squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (Mat* g : grads) *g *= scale;
  }
  return norm;
}

std::pair<double, double> evaluate(const ClassifierModel& model,
                                   const std::vector<LabeledExample>& examples) {
  if (examples.empty()) throw std::invalid_argument("evaluate: empty example list");
  Prng unused(0);  // dropout off; never consulted
  std::int64_t correct = 0;
  double loss_sum = 0.0;
  for (const auto& example : examples) {
    auto [probs, cache] = forward(model, example.tokens, 0.0, false, unused);
    if (predict(probs) == example.label) ++correct;
    loss_sum += cross_entropy(probs, example.label);
  }
  const double n = static_cast<double>(examples.size());
  return {static_cast<double>(correct) / n, loss_sum / n};
}

std::pair<ClassifierModel, TrainingReport> train(const ClassifierModel& initial,
                                                 const DatasetSplit& split,
                                                 const TrainConfig& config) {
  if (split.train.empty() || split.val.empty()) {
    throw std::invalid_argument("train: train and val sets must be non-empty");
  }
  if (config.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (config.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (!(config.lr > 0.0)) throw std::invalid_argument("train: lr must be positive");

  const auto t_start = std::chrono::steady_clock::now();
  ClassifierModel model = initial;
  ClassifierModel best = initial;
  TrainingReport report;
  report.kind = model.kind;
  report.config = config;

  Prng rng(config.seed);
  auto params = param_tensors(model);
  AdamState adam = AdamState::like(params);
  Gradients grads = zero_gradients(model);

  std::vector<std::size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), 0);
  double best_val_accuracy = -1.0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double train_loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      auto grad_ptrs = grad_tensors(grads);
      for (Mat* g : grad_ptrs) g->setZero();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const LabeledExample& example = split.train[order[k]];
        auto [probs, cache] = forward(model, example.tokens, config.dropout, true, rng);
        batch_loss += cross_entropy(probs, example.label);
        model_backward(model, cache, example.label, grads);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      if (!std::isfinite(batch_loss)) {
        throw numeric_error("train: non-finite loss in epoch " + std::to_string(epoch));
      }
      train_loss_sum += batch_loss;
      for (Mat* g : grad_ptrs) *g *= scale;
      if (config.freeze_embeddings) grads.embedding.setZero();
      if (config.clip_norm) clip_global_norm(grad_ptrs, *config.clip_norm);
      std::vector<const Mat*> grad_view(grad_ptrs.begin(), grad_ptrs.end());
      adam_step(adam, params, grad_view, config.lr);
    }

    EpochMetrics metrics;
    metrics.train_loss = train_loss_sum / static_cast<double>(order.size());
    std::tie(metrics.val_accuracy, metrics.val_loss) = evaluate(model, split.val);
    if (!std::isfinite(metrics.val_loss)) {
      throw numeric_error("train: non-finite validation loss in epoch " +
                          std::to_string(epoch));
    }
    report.epochs.push_back(metrics);
    if (metrics.val_accuracy > best_val_accuracy) {
      best_val_accuracy = metrics.val_accuracy;
      best = model;
      report.best_epoch = epoch;
    }
  }

  if (!split.test.empty()) {
    std::tie(report.test_accuracy, report.test_loss) = evaluate(best, split.test);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return {std::move(best), std::move(report)};
}

double grad_check(const ClassifierModel& model, const LabeledExample& example, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("grad_check: epsilon must be positive");

  Prng unused(0);
  auto [probs, cache] = forward(model, example.tokens, 0.0, false, unused);
  Gradients analytic = model_backward(model, cache, example.label);

  ClassifierModel probe = model;
  auto params = param_tensors(probe);
  auto analytic_ptrs = grad_tensors(analytic);

  const auto loss_at = [&]() {
    Prng r(0);
    auto [p, c] = forward(probe, example.tokens, 0.0, false, r);
    return cross_entropy(p, example.label);
  };

  double max_rel = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Mat& tensor = *params[k];
    const Mat& grad = *analytic_ptrs[k];
    for (Eigen::Index idx = 0; idx < tensor.size(); ++idx) {
      double* coeff = tensor.data() + idx;
      const double saved = *coeff;
      *coeff = saved + epsilon;
      const double up = loss_at();
      *coeff = saved - epsilon;
      const double down = loss_at();
      *coeff = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = *(grad.data() + idx);
      // The denominator floor keeps finite-difference cancellation noise on
      // near-zero coordinates from dominating the ratio.
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-5});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace rfqc
