#include "rfqc/corpus.hpp"
#include "rfqc/embedding.hpp"
#include "rfqc/io.hpp"
#include "rfqc/model.hpp"
#include "rfqc/training.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace {

using namespace rfqc;

// Effective training settings: defaults, overridden by the config file,
// overridden by command-line flags.
struct TrainSettings {
  std::string model;
  int hidden = 64;
  int dim = 64;
  int batch = 32;
  int epochs = 10;
  int max_len = 128;
  double lr = 0.01;
  double dropout = 0.5;
  std::uint64_t seed = 0;
  std::string clip_norm = "5";
  std::string tokenizer = "whitespace";
  std::string split = "0.6,0.2,0.2";
  bool freeze_embeddings = false;
  std::string rnn_activation = "tanh";
};

void apply(TrainSettings& s, const CliConfig& c) {
  if (c.model) s.model = *c.model;
  if (c.hidden) s.hidden = *c.hidden;
  if (c.dim) s.dim = *c.dim;
  if (c.batch) s.batch = *c.batch;
  if (c.epochs) s.epochs = *c.epochs;
  if (c.max_len) s.max_len = *c.max_len;
  if (c.lr) s.lr = *c.lr;
  if (c.dropout) s.dropout = *c.dropout;
  if (c.seed) s.seed = *c.seed;
  if (c.clip_norm) s.clip_norm = *c.clip_norm;
  if (c.tokenizer) s.tokenizer = *c.tokenizer;
  if (c.split) s.split = *c.split;
  if (c.freeze_embeddings) s.freeze_embeddings = *c.freeze_embeddings;
  if (c.rnn_activation) s.rnn_activation = *c.rnn_activation;
}

void require_positive(const char* name, double v) {
  if (!(v > 0.0)) {
    throw std::invalid_argument(std::string(name) + " must be positive");
  }
}

std::vector<Record> load_records(const std::string& path) {
  auto records = load_tsv(path);
  if (records.empty()) {
    throw std::invalid_argument("'" + path + "' holds no examples");
  }
  return records;
}

// Encodes records and drops examples that tokenize to nothing (the encoders
// need at least one timestep). Reports the drop count on stderr.
std::vector<LabeledExample> encode_records(const std::vector<Record>& records,
                                           const Vocabulary& vocab,
                                           const std::map<std::string, int>& label_map,
                                           TokenizerMode mode, std::size_t max_len) {
  std::vector<LabeledExample> examples;
  examples.reserve(records.size());
  std::size_t skipped = 0;
  for (const auto& record : records) {
    LabeledExample ex = encode(record, vocab, label_map, mode, max_len);
    if (ex.tokens.empty()) {
      ++skipped;
      continue;
    }
    examples.push_back(std::move(ex));
  }
  if (skipped > 0) {
    std::fprintf(stderr, "note: skipped %zu example(s) with no tokens\n", skipped);
  }
  if (examples.empty()) {
    throw std::invalid_argument("no usable examples after tokenization");
  }
  return examples;
}

std::map<std::string, int> label_map_from_names(const std::vector<std::string>& names) {
  std::map<std::string, int> label_map;
  for (std::size_t k = 0; k < names.size(); ++k) {
    label_map.emplace(names[k], static_cast<int>(k));
  }
  return label_map;
}

void run_vocab(const std::string& input, const std::string& mode_name, std::int64_t min_count,
               std::size_t max_size, const std::string& out_path) {
  const TokenizerMode mode = tokenizer_mode_from_string(mode_name);
  const auto records = load_records(input);
  const ClassStats stats = class_stats(records);
  std::printf("Category\tQuantity\tProportion\n");
  for (const auto& entry : stats.entries) {
    std::printf("%s\t%" PRId64 "\t%s\n", entry.name.c_str(), entry.count,
                format_percent(entry.proportion).c_str());
  }
  std::printf("total\t%" PRId64 "\t%s\n", stats.total, format_percent(1.0).c_str());
  const Vocabulary vocab = build_vocab(records, mode, min_count, max_size);
  save_vocab(vocab, out_path);
}

void run_embed(const std::string& input, const std::string& vocab_path,
               const std::string& mode_name, int dim, const SkipGramConfig& sg,
               const std::string& split_text, std::uint64_t seed, const std::string& out_path) {
  const TokenizerMode mode = tokenizer_mode_from_string(mode_name);
  if (dim < 1) throw std::invalid_argument("--dim must be at least 1");
  if (sg.window < 1) throw std::invalid_argument("--window must be at least 1");
  if (sg.negatives < 0) throw std::invalid_argument("--negatives must be non-negative");
  if (sg.epochs < 0) throw std::invalid_argument("--epochs must be non-negative");
  require_positive("--lr", sg.lr);
  const auto ratios = parse_split_ratios(split_text);

  const Vocabulary vocab = load_vocab(vocab_path);
  const auto records = load_records(input);

  // Pretraining sees only the training portion of the same seeded split the
  // trainer would make, so held-out text never leaks into the vectors.
  std::vector<LabeledExample> examples;
  std::size_t skipped = 0;
  for (const auto& record : records) {
    auto ids = encode_tokens(vocab, tokenize(record.second, mode),
                             std::numeric_limits<std::size_t>::max());
    if (ids.empty()) {
      ++skipped;
      continue;
    }
    examples.push_back(LabeledExample{0, std::move(ids)});
  }
  if (skipped > 0) {
    std::fprintf(stderr, "note: skipped %zu example(s) with no tokens\n", skipped);
  }
  Prng rng(seed);
  const DatasetSplit split = split_dataset(std::move(examples), ratios, rng);
  std::vector<std::vector<int>> corpus;
  corpus.reserve(split.train.size());
  for (const auto& ex : split.train) corpus.push_back(ex.tokens);

  EmbeddingTable table = init_embeddings(vocab.size(), dim, rng);
  std::vector<double> epoch_loss;
  table = skipgram_pretrain(corpus, std::move(table), sg, rng, &epoch_loss);
  for (std::size_t e = 0; e < epoch_loss.size(); ++e) {
    std::printf("epoch=%zu ns_loss=%.6f\n", e + 1, epoch_loss[e]);
  }
  save_checkpoint(make_embedding_checkpoint(table, vocab, mode), out_path);
}

void run_train(const TrainSettings& s, const std::string& input, const std::string& vocab_path,
               const std::string& embeddings_path, const std::string& out_path,
               const std::string& report_path) {
  if (s.model.empty()) {
    throw std::invalid_argument("no model kind given; pass --model rnn|lstm|gru|fusion");
  }
  const ModelKind kind = model_kind_from_string(s.model);
  const TokenizerMode mode = tokenizer_mode_from_string(s.tokenizer);
  const Activation act = activation_from_string(s.rnn_activation);
  const auto ratios = parse_split_ratios(s.split);
  const auto clip = parse_clip_norm(s.clip_norm);
  if (s.hidden < 1) throw std::invalid_argument("hidden must be at least 1");
  if (s.dim < 1) throw std::invalid_argument("dim must be at least 1");
  if (s.batch < 1) throw std::invalid_argument("batch must be at least 1");
  if (s.epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  if (s.max_len < 1) throw std::invalid_argument("max_len must be at least 1");
  require_positive("lr", s.lr);
  if (!(s.dropout >= 0.0 && s.dropout < 1.0)) {
    throw std::invalid_argument("dropout must lie in [0, 1)");
  }

  const auto records = load_records(input);
  const Vocabulary vocab = load_vocab(vocab_path);
  const auto label_map = build_label_map(records);
  const auto labels = label_names(label_map);
  const auto examples = encode_records(records, vocab, label_map, mode, s.max_len);

  Prng rng(s.seed);
  const DatasetSplit split = split_dataset(examples, ratios, rng);
  ModelDims dims;
  dims.vocab_size = vocab.size();
  dims.dim = s.dim;
  dims.hidden = s.hidden;
  dims.num_classes = static_cast<int>(labels.size());
  ClassifierModel model = init_model(kind, dims, rng, act);

  if (!embeddings_path.empty()) {
    const Checkpoint pre = load_checkpoint(embeddings_path);
    if (pre.kind != "embedding") {
      throw std::invalid_argument("'" + embeddings_path + "' is a " + pre.kind +
                                  " checkpoint, not an embedding checkpoint");
    }
    if (pre.dim != s.dim) {
      throw std::invalid_argument("embedding checkpoint dim " + std::to_string(pre.dim) +
                                  " does not match dim " + std::to_string(s.dim));
    }
    if (pre.tokenizer != mode) {
      throw std::invalid_argument("embedding checkpoint tokenizer '" + to_string(pre.tokenizer) +
                                  "' does not match tokenizer '" + to_string(mode) + "'");
    }
    const std::vector<std::string> learned(vocab.id_to_token.begin() + 2,
                                           vocab.id_to_token.end());
    if (pre.tokens != learned) {
      throw std::invalid_argument("embedding checkpoint vocabulary does not match '" +
                                  vocab_path + "'");
    }
    model.embedding.weights = pre.embedding;
  }

  TrainConfig tc;
  tc.lr = s.lr;
  tc.dropout = s.dropout;
  tc.batch_size = s.batch;
  tc.epochs = s.epochs;
  tc.seed = s.seed;
  tc.clip_norm = clip;
  tc.max_len = s.max_len;
  tc.split = ratios;
  tc.freeze_embeddings = s.freeze_embeddings;

  auto [best, report] = train(model, split, tc);
  save_checkpoint(make_checkpoint(best, vocab, labels, mode, s.max_len), out_path);
  save_report(report, report_path);

  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    const auto& m = report.epochs[e];
    std::printf("epoch=%zu train_loss=%.6f val_loss=%.6f val_acc=%.6f\n", e + 1, m.train_loss,
                m.val_loss, m.val_accuracy);
  }
  std::printf("best_epoch=%d\n", report.best_epoch);
  std::printf("test_accuracy=%.4f test_loss=%.4f\n", report.test_accuracy, report.test_loss);
  std::fprintf(stderr, "wall_seconds=%.1f\n", report.wall_seconds);
}

void run_eval(const std::string& model_path, const std::string& input) {
  const Checkpoint ckpt = load_checkpoint(model_path);
  const ClassifierModel model = model_from_checkpoint(ckpt);
  const Vocabulary vocab = vocab_from_checkpoint(ckpt);
  const auto label_map = label_map_from_names(ckpt.labels);
  const auto records = load_records(input);
  const auto examples =
      encode_records(records, vocab, label_map, ckpt.tokenizer, ckpt.max_len);
  const auto [accuracy, loss] = evaluate(model, examples);
  std::printf("accuracy=%.4f loss=%.4f\n", accuracy, loss);
}

void run_predict(const std::string& model_path, const std::string& text) {
  if (text.empty()) throw std::invalid_argument("--text must not be empty");
  const Checkpoint ckpt = load_checkpoint(model_path);
  const ClassifierModel model = model_from_checkpoint(ckpt);
  const Vocabulary vocab = vocab_from_checkpoint(ckpt);
  const auto ids = encode_tokens(vocab, tokenize(text, ckpt.tokenizer),
                                 static_cast<std::size_t>(ckpt.max_len));
  if (ids.empty()) throw std::invalid_argument("--text tokenized to nothing");
  Prng rng(0);
  const auto [probs, cache] = forward(model, ids, 0.0, false, rng);
  const int label = predict(probs);
  std::printf("prediction=%s\n", ckpt.labels.at(label).c_str());
  std::string line = "probs=";
  char buf[32];
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    std::snprintf(buf, sizeof(buf), k ? " %.4f" : "%.4f", probs[k]);
    line += buf;
  }
  std::printf("%s\n", line.c_str());
}

void run_report(const std::vector<std::string>& inputs, const std::string& format) {
  std::vector<TrainingReport> reports;
  reports.reserve(inputs.size());
  for (const auto& path : inputs) reports.push_back(load_report(path));
  if (format == "table") {
    std::printf("Methods\tAccuracy\tLoss\n");
    for (const auto& r : reports) {
      std::printf("%s\t%s\t%.2f\n", to_string(r.kind).c_str(),
                  format_percent(r.test_accuracy).c_str(), r.test_loss);
    }
    return;
  }
  const auto round2 = [](double v) { return std::round(v * 100.0) / 100.0; };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : reports) {
    rows.push_back({{"method", to_string(r.kind)},
                    {"accuracy", round2(r.test_accuracy * 100.0)},
                    {"loss", round2(r.test_loss)}});
  }
  std::printf("%s\n", rows.dump(2).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recurrent-network question classifier"};
  app.require_subcommand(1);

  // vocab
  auto* vocab_cmd = app.add_subcommand("vocab", "build a vocabulary and print class statistics");
  std::string v_input, v_mode = "whitespace", v_out;
  std::int64_t v_min_count = 1;
  std::size_t v_max_size = 50000;
  vocab_cmd->add_option("--input", v_input, "label<TAB>text file")->required();
  vocab_cmd->add_option("--mode", v_mode, "tokenizer mode")
      ->check(CLI::IsMember({"whitespace", "character"}));
  vocab_cmd->add_option("--min-count", v_min_count, "minimum token frequency");
  vocab_cmd->add_option("--max-size", v_max_size, "vocabulary size cap");
  vocab_cmd->add_option("--out", v_out, "vocabulary file to write")->required();
  vocab_cmd->callback([&] { run_vocab(v_input, v_mode, v_min_count, v_max_size, v_out); });

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "pretrain skip-gram embeddings");
  std::string e_input, e_vocab, e_mode = "whitespace", e_split = "0.6,0.2,0.2", e_out;
  int e_dim = 64;
  SkipGramConfig e_sg;
  double e_subsample = 0.0;
  std::uint64_t e_seed = 0;
  embed_cmd->add_option("--input", e_input, "label<TAB>text file")->required();
  embed_cmd->add_option("--vocab", e_vocab, "vocabulary file")->required();
  embed_cmd->add_option("--mode", e_mode, "tokenizer mode")
      ->check(CLI::IsMember({"whitespace", "character"}));
  embed_cmd->add_option("--dim", e_dim, "embedding width");
  embed_cmd->add_option("--window", e_sg.window, "context window radius");
  embed_cmd->add_option("--negatives", e_sg.negatives, "negative samples per pair");
  embed_cmd->add_option("--epochs", e_sg.epochs, "passes over the training split");
  embed_cmd->add_option("--lr", e_sg.lr, "skip-gram learning rate");
  embed_cmd->add_option("--subsample", e_subsample,
                        "frequent-word discard threshold, 0 disables");
  embed_cmd->add_option("--split", e_split, "train,val,test ratios");
  embed_cmd->add_option("--seed", e_seed, "rng seed");
  embed_cmd->add_option("--out", e_out, "embedding checkpoint to write")->required();
  embed_cmd->callback([&] {
    if (e_subsample > 0.0) e_sg.subsample = e_subsample;
    run_embed(e_input, e_vocab, e_mode, e_dim, e_sg, e_split, e_seed, e_out);
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "split, train and checkpoint a classifier");
  std::string t_input, t_vocab, t_embeddings, t_config, t_out, t_report;
  std::string t_model, t_clip, t_tokenizer, t_split, t_activation;
  int t_hidden = 0, t_dim = 0, t_batch = 0, t_epochs = 0, t_max_len = 0;
  double t_lr = 0.0, t_dropout = 0.0;
  std::uint64_t t_seed = 0;
  bool t_freeze = false;
  train_cmd->add_option("--input", t_input, "label<TAB>text file")->required();
  train_cmd->add_option("--vocab", t_vocab, "vocabulary file")->required();
  train_cmd->add_option("--embeddings", t_embeddings, "pretrained embedding checkpoint");
  train_cmd->add_option("--config", t_config, "key=value config file");
  train_cmd->add_option("--model", t_model, "model kind")
      ->check(CLI::IsMember({"rnn", "lstm", "gru", "fusion"}));
  train_cmd->add_option("--hidden", t_hidden, "hidden state width");
  train_cmd->add_option("--dim", t_dim, "embedding width");
  train_cmd->add_option("--lr", t_lr, "learning rate");
  train_cmd->add_option("--dropout", t_dropout, "dropout rate");
  train_cmd->add_option("--batch", t_batch, "batch size");
  train_cmd->add_option("--epochs", t_epochs, "training epochs");
  train_cmd->add_option("--seed", t_seed, "rng seed");
  train_cmd->add_option("--max-len", t_max_len, "sequence truncation length");
  train_cmd->add_option("--clip-norm", t_clip, "gradient clip norm, or 'none'");
  train_cmd->add_option("--tokenizer", t_tokenizer, "tokenizer mode")
      ->check(CLI::IsMember({"whitespace", "character"}));
  train_cmd->add_option("--split", t_split, "train,val,test ratios");
  train_cmd->add_flag("--freeze-embeddings", t_freeze, "do not update the embedding table");
  train_cmd->add_option("--rnn-activation", t_activation, "basic cell activation")
      ->check(CLI::IsMember({"tanh", "relu", "sigmoid"}));
  train_cmd->add_option("--out", t_out, "model checkpoint to write")->required();
  train_cmd->add_option("--report", t_report, "training report to write")->required();
  train_cmd->callback([&] {
    TrainSettings s;
    if (!t_config.empty()) apply(s, parse_config_file(t_config));
    CliConfig flags;
    if (train_cmd->count("--model")) flags.model = t_model;
    if (train_cmd->count("--hidden")) flags.hidden = t_hidden;
    if (train_cmd->count("--dim")) flags.dim = t_dim;
    if (train_cmd->count("--lr")) flags.lr = t_lr;
    if (train_cmd->count("--dropout")) flags.dropout = t_dropout;
    if (train_cmd->count("--batch")) flags.batch = t_batch;
    if (train_cmd->count("--epochs")) flags.epochs = t_epochs;
    if (train_cmd->count("--seed")) flags.seed = t_seed;
    if (train_cmd->count("--max-len")) flags.max_len = t_max_len;
    if (train_cmd->count("--clip-norm")) flags.clip_norm = t_clip;
    if (train_cmd->count("--tokenizer")) flags.tokenizer = t_tokenizer;
    if (train_cmd->count("--split")) flags.split = t_split;
    if (train_cmd->count("--freeze-embeddings")) flags.freeze_embeddings = true;
    if (train_cmd->count("--rnn-activation")) flags.rnn_activation = t_activation;
    apply(s, flags);
    run_train(s, t_input, t_vocab, t_embeddings, t_out, t_report);
  });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "accuracy and mean loss on a labeled file");
  std::string ev_model, ev_input;
  eval_cmd->add_option("--model-file", ev_model, "model checkpoint")->required();
  eval_cmd->add_option("--input", ev_input, "label<TAB>text file")->required();
  eval_cmd->callback([&] { run_eval(ev_model, ev_input); });

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "classify a single question");
  std::string p_model, p_text;
  predict_cmd->add_option("--model-file", p_model, "model checkpoint")->required();
  predict_cmd->add_option("--text", p_text, "question text")->required();
  predict_cmd->callback([&] { run_predict(p_model, p_text); });

  // report
  auto* report_cmd = app.add_subcommand("report", "aggregate training reports");
  std::vector<std::string> r_inputs;
  std::string r_format = "table";
  report_cmd->add_option("--inputs", r_inputs, "report files")->required()->expected(-1);
  report_cmd->add_option("--format", r_format, "output format")
      ->check(CLI::IsMember({"table", "json"}));
  report_cmd->callback([&] { run_report(r_inputs, r_format); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const numeric_error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
