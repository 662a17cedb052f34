#pragma once

#include "rfqc/corpus.hpp"
#include "rfqc/model.hpp"
#include "rfqc/training.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rfqc {

// Textual checkpoint, header line "RFQC 1". The meta section carries the
// model shape plus everything prediction needs with no side files: class
// names, the vocabulary, the tokenizer mode and max_len. Tensor sections
// are "@<name> <rows> <cols>" followed by one row of %.17g floats per line,
// so save -> load -> save is byte-identical.
struct Checkpoint {
  std::string kind;  // rnn | lstm | gru | fusion | embedding
  int dim = 0;
  int hidden = 0;
  int num_classes = 0;
  int max_len = 0;
  TokenizerMode tokenizer = TokenizerMode::Whitespace;
  Activation rnn_activation = Activation::Tanh;
  std::vector<std::string> labels;             // class id -> name
  std::vector<std::string> tokens;             // vocab id-2 -> token
  std::vector<std::int64_t> token_counts;      // parallel to tokens

  Mat embedding;
  std::optional<RnnParams> rnn;
  std::optional<LstmParams> lstm;
  std::optional<GruParams> gru;
  Mat head;  // absent (0x0) for kind == embedding
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint make_checkpoint(const ClassifierModel& model, const Vocabulary& vocab,
                           const std::vector<std::string>& labels, TokenizerMode tokenizer,
                           int max_len);
Checkpoint make_embedding_checkpoint(const EmbeddingTable& table, const Vocabulary& vocab,
                                     TokenizerMode tokenizer);

ClassifierModel model_from_checkpoint(const Checkpoint& ckpt);
Vocabulary vocab_from_checkpoint(const Checkpoint& ckpt);

// key=value config file; unknown keys are rejected naming the line.
// Recognized keys: model, hidden, dim, lr, dropout, batch, epochs, seed,
// max_len, clip_norm, tokenizer, split, freeze_embeddings, rnn_activation.
struct CliConfig {
  std::optional<std::string> model;
  std::optional<int> hidden, dim, batch, epochs, max_len;
  std::optional<double> lr, dropout;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> clip_norm;  // number or "none"
  std::optional<std::string> tokenizer;
  std::optional<std::string> split;  // "0.6,0.2,0.2"
  std::optional<bool> freeze_embeddings;
  std::optional<std::string> rnn_activation;
};

CliConfig parse_config_file(const std::string& path);

std::array<double, 3> parse_split_ratios(const std::string& text);
std::optional<double> parse_clip_norm(const std::string& text);

/// Serialized form omits wall_seconds so identical runs are byte-identical.
void save_report(const TrainingReport& report, const std::string& path);
TrainingReport load_report(const std::string& path);

std::string format_double(double value);  // %.17g

}  // namespace rfqc
