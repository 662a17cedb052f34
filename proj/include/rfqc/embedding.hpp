#pragma once

#include "rfqc/numerics.hpp"

#include <optional>
#include <vector>

namespace rfqc {

// Trainable token-vector table. Row 0 is the PAD row: it starts at zero and
// no code path ever writes to it.
struct EmbeddingTable {
  Mat weights;  // vocab_size x dim

  int vocab_size() const { return static_cast<int>(weights.rows()); }
  int dim() const { return static_cast<int>(weights.cols()); }
};

struct SkipGramConfig {
  int window = 2;
  int negatives = 5;
  int epochs = 3;
  double lr = 0.025;
  std::optional<double> subsample = std::nullopt;  // frequent-word discard threshold
};

/// Rows 1.. drawn uniform in [-0.5/dim, 0.5/dim], row by row; row 0 zero.
EmbeddingTable init_embeddings(int vocab_size, int dim, Prng& rng);

/// Skip-gram with negative sampling over the encoded corpus. Sequential SGD:
/// examples in order, positions left to right, context offsets ascending,
/// one positive then k negative updates per (center, context) pair.
/// Negatives are drawn from the unigram distribution over learned ids
/// (>= 2) raised to 0.75; PAD and UNK are never centers. When epoch_loss is
/// given it receives the mean negative-sampling objective per epoch,
/// measured before each pair's update.
EmbeddingTable skipgram_pretrain(const std::vector<std::vector<int>>& corpus,
                                 EmbeddingTable table, const SkipGramConfig& config, Prng& rng,
                                 std::vector<double>* epoch_loss = nullptr);

/// Rows of the table for each id; throws on an out-of-range id.
std::vector<Vec> lookup(const EmbeddingTable& table, const std::vector<int>& ids);

double cosine(const Vec& a, const Vec& b);

}  // namespace rfqc
