#include "rfqc/embedding.hpp"

#include "rfqc/corpus.hpp"

#include <algorithm>
#include <cmath>

namespace rfqc {
namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Cumulative unigram^0.75 table over learned ids; sampled by binary search.
struct NoiseTable {
  std::vector<int> ids;
  std::vector<double> cdf;

  explicit NoiseTable(const std::vector<std::vector<int>>& corpus) {
    std::vector<std::int64_t> counts;
    for (const auto& seq : corpus) {
      for (int id : seq) {
        if (id < 2) continue;
        if (counts.size() <= static_cast<std::size_t>(id)) counts.resize(id + 1, 0);
        ++counts[id];
      }
    }
    double acc = 0.0;
    for (std::size_t id = 2; id < counts.size(); ++id) {
      if (counts[id] == 0) continue;
      acc += std::pow(static_cast<double>(counts[id]), 0.75);
      ids.push_back(static_cast<int>(id));
      cdf.push_back(acc);
    }
    for (double& c : cdf) c /= acc;
  }

  bool empty() const { return ids.empty(); }

  int sample(Prng& rng) const {
    const double u = rng.next_uniform();
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    const auto idx = std::min<std::size_t>(it - cdf.begin(), ids.size() - 1);
    return ids[idx];
  }
};

}  // namespace

EmbeddingTable init_embeddings(int vocab_size, int dim, Prng& rng) {
  if (vocab_size < 2) throw std::invalid_argument("init_embeddings: vocab_size must be >= 2");
  if (dim < 1) throw std::invalid_argument("init_embeddings: dim must be >= 1");
  EmbeddingTable table;
  table.weights = Mat::Zero(vocab_size, dim);
  const double bound = 0.5 / dim;
  for (int r = 1; r < vocab_size; ++r) {
    for (int c = 0; c < dim; ++c) {
      table.weights(r, c) = (2.0 * rng.next_uniform() - 1.0) * bound;
    }
  }
  return table;
}

EmbeddingTable skipgram_pretrain(const std::vector<std::vector<int>>& corpus,
                                 EmbeddingTable table, const SkipGramConfig& config, Prng& rng,
                                 std::vector<double>* epoch_loss) {
  if (corpus.empty()) throw std::invalid_argument("skipgram_pretrain: empty corpus");
  if (config.window < 1) throw std::invalid_argument("skipgram_pretrain: window must be >= 1");
  if (config.negatives < 1) {
    throw std::invalid_argument("skipgram_pretrain: negatives must be >= 1");
  }
  if (epoch_loss) epoch_loss->clear();

  const NoiseTable noise(corpus);
  if (noise.empty()) return table;

  // Per-occurrence frequencies for the optional subsampling step.
  std::vector<double> frequency;
  if (config.subsample) {
    std::vector<std::int64_t> counts(table.vocab_size(), 0);
    std::int64_t total = 0;
    for (const auto& seq : corpus) {
      for (int id : seq) {
        if (id >= 0 && id < table.vocab_size()) ++counts[id], ++total;
      }
    }
    frequency.resize(counts.size(), 0.0);
    for (std::size_t id = 0; id < counts.size(); ++id) {
      frequency[id] = static_cast<double>(counts[id]) / static_cast<double>(total);
    }
  }

  Mat context = Mat::Zero(table.vocab_size(), table.dim());
  const int dim = table.dim();
  Vec center_delta(dim);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::int64_t pairs = 0;
    for (const auto& seq : corpus) {
      std::vector<int> kept;
      kept.reserve(seq.size());
      for (int id : seq) {
        if (id < 0 || id >= table.vocab_size()) {
          throw std::invalid_argument("skipgram_pretrain: token id out of range");
        }
        if (config.subsample && frequency[id] > *config.subsample) {
          const double keep = std::sqrt(*config.subsample / frequency[id]);
          if (rng.next_uniform() >= keep) continue;
        }
        kept.push_back(id);
      }
      const int n = static_cast<int>(kept.size());
      for (int pos = 0; pos < n; ++pos) {
        const int center = kept[pos];
        if (center == kPadId || center == kUnkId) continue;
        for (int off = -config.window; off <= config.window; ++off) {
          if (off == 0) continue;
          const int j = pos + off;
          if (j < 0 || j >= n) continue;
          const int target = kept[j];
          if (target == kPadId) continue;

          auto center_row = table.weights.row(center);
          center_delta.setZero();
          double pair_loss = 0.0;
          for (int d = 0; d <= config.negatives; ++d) {
            int out = target;
            double label = 1.0;
            if (d > 0) {
              out = noise.sample(rng);
              if (out == target) continue;
              label = 0.0;
            }
            auto out_row = context.row(out);
            const double z = center_row.dot(out_row);
            const double p = logistic(z);
            pair_loss -= label > 0.5 ? std::log(std::max(p, 1e-12))
                                     : std::log(std::max(1.0 - p, 1e-12));
            const double g = config.lr * (label - p);
            center_delta += g * out_row.transpose();
            context.row(out) += g * center_row;
          }
          table.weights.row(center) += center_delta.transpose();
          loss_sum += pair_loss;
          ++pairs;
        }
      }
    }
    if (epoch_loss) epoch_loss->push_back(pairs > 0 ? loss_sum / pairs : 0.0);
  }
  return table;
}

std::vector<Vec> lookup(const EmbeddingTable& table, const std::vector<int>& ids) {
  std::vector<Vec> out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || id >= table.vocab_size()) {
      throw std::invalid_argument("lookup: id " + std::to_string(id) + " out of range");
    }
    out.push_back(table.weights.row(id).transpose());
  }
  return out;
}

double cosine(const Vec& a, const Vec& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

}  // namespace rfqc
