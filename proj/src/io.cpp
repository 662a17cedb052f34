#include "rfqc/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace rfqc {
namespace {

constexpr const char* kCheckpointMagic = "RFQC 1";
constexpr const char* kReportMagic = "RFQC-REPORT 1";

void write_mat(std::ostream& out, const std::string& name, const Mat& m) {
  out << "@" << name << " " << m.rows() << " " << m.cols() << "\n";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(m(r, c));
    }
    out << "\n";
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

[[noreturn]] void fail_at(const std::string& path, std::size_t lineno, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + what);
}

long long to_int(const std::string& path, std::size_t lineno, const std::string& text) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    fail_at(path, lineno, "expected an integer, got '" + text + "'");
  }
}

double to_double(const std::string& path, std::size_t lineno, const std::string& text) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') fail_at(path, lineno, "expected a number, got '" + text + "'");
  return v;
}

// Parses a tensor body: rows*cols whitespace-separated floats starting at
// lines[i]; advances i past the consumed lines.
Mat read_mat(const std::string& path, const std::vector<std::string>& lines, std::size_t& i,
             Eigen::Index rows, Eigen::Index cols) {
  Mat m(rows, cols);
  Eigen::Index filled = 0;
  const Eigen::Index total = rows * cols;
  while (filled < total) {
    if (i >= lines.size()) fail_at(path, lines.size(), "unexpected end of tensor data");
    const char* p = lines[i].c_str();
    char* end = nullptr;
    while (filled < total) {
      const double v = std::strtod(p, &end);
      if (end == p) break;
      *(m.data() + filled) = v;
      ++filled;
      p = end;
    }
    while (*p == ' ' || *p == '\t') ++p;
    if (*p != '\0') fail_at(path, i + 1, "malformed tensor data");
    ++i;
  }
  return m;
}

struct MetaEntry {
  std::string key, value;
  std::size_t lineno;
};

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << kCheckpointMagic << "\n";
  out << "@meta\n";
  out << "kind=" << ckpt.kind << "\n";
  out << "dim=" << ckpt.dim << "\n";
  out << "hidden=" << ckpt.hidden << "\n";
  out << "classes=" << ckpt.num_classes << "\n";
  out << "vocab=" << (ckpt.tokens.size() + 2) << "\n";
  out << "max_len=" << ckpt.max_len << "\n";
  out << "tokenizer=" << to_string(ckpt.tokenizer) << "\n";
  out << "rnn_activation=" << to_string(ckpt.rnn_activation) << "\n";
  for (const auto& label : ckpt.labels) out << "label=" << label << "\n";
  for (std::size_t k = 0; k < ckpt.tokens.size(); ++k) {
    out << "token=" << ckpt.tokens[k] << "\t" << ckpt.token_counts[k] << "\n";
  }
  write_mat(out, "embedding", ckpt.embedding);
  if (ckpt.rnn) {
    write_mat(out, "rnn.U", ckpt.rnn->U);
    write_mat(out, "rnn.W", ckpt.rnn->W);
  }
  if (ckpt.lstm) {
    write_mat(out, "lstm.W_i", ckpt.lstm->W_i);
    write_mat(out, "lstm.W_f", ckpt.lstm->W_f);
    write_mat(out, "lstm.W_o", ckpt.lstm->W_o);
    write_mat(out, "lstm.W_g", ckpt.lstm->W_g);
    write_mat(out, "lstm.U_i", ckpt.lstm->U_i);
    write_mat(out, "lstm.U_f", ckpt.lstm->U_f);
    write_mat(out, "lstm.U_o", ckpt.lstm->U_o);
    write_mat(out, "lstm.U_g", ckpt.lstm->U_g);
  }
  if (ckpt.gru) {
    write_mat(out, "gru.W_z", ckpt.gru->W_z);
    write_mat(out, "gru.W_r", ckpt.gru->W_r);
    write_mat(out, "gru.W_c", ckpt.gru->W_c);
    write_mat(out, "gru.U_z", ckpt.gru->U_z);
    write_mat(out, "gru.U_r", ckpt.gru->U_r);
    write_mat(out, "gru.U_c", ckpt.gru->U_c);
  }
  if (ckpt.head.size() > 0) write_mat(out, "head", ckpt.head);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != kCheckpointMagic) {
    throw std::runtime_error(path + ": not a checkpoint (expected header '" +
                             std::string(kCheckpointMagic) + "')");
  }
  if (lines.size() < 2 || lines[1] != "@meta") fail_at(path, 2, "expected '@meta' section");

  Checkpoint ckpt;
  std::map<std::string, std::string> scalars;
  std::size_t i = 2;
  for (; i < lines.size() && (lines[i].empty() || lines[i][0] != '@'); ++i) {
    const auto& line = lines[i];
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail_at(path, i + 1, "expected key=value in meta");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "label") {
      ckpt.labels.push_back(value);
    } else if (key == "token") {
      const auto tab = value.rfind('\t');
      if (tab == std::string::npos) fail_at(path, i + 1, "expected token=<token>\\t<count>");
      ckpt.tokens.push_back(value.substr(0, tab));
      ckpt.token_counts.push_back(to_int(path, i + 1, value.substr(tab + 1)));
    } else if (key == "kind" || key == "dim" || key == "hidden" || key == "classes" ||
               key == "vocab" || key == "max_len" || key == "tokenizer" ||
               key == "rnn_activation") {
      scalars[key] = value;
    } else {
      fail_at(path, i + 1, "unknown meta key '" + key + "'");
    }
  }
  for (const char* required : {"kind", "dim", "hidden", "classes", "vocab", "max_len",
                               "tokenizer", "rnn_activation"}) {
    if (!scalars.count(required)) {
      throw std::runtime_error(path + ": meta is missing '" + required + "'");
    }
  }
  ckpt.kind = scalars["kind"];
  if (ckpt.kind != "rnn" && ckpt.kind != "lstm" && ckpt.kind != "gru" &&
      ckpt.kind != "fusion" && ckpt.kind != "embedding") {
    throw std::runtime_error(path + ": unknown checkpoint kind '" + ckpt.kind + "'");
  }
  ckpt.dim = static_cast<int>(to_int(path, 0, scalars["dim"]));
  ckpt.hidden = static_cast<int>(to_int(path, 0, scalars["hidden"]));
  ckpt.num_classes = static_cast<int>(to_int(path, 0, scalars["classes"]));
  ckpt.max_len = static_cast<int>(to_int(path, 0, scalars["max_len"]));
  ckpt.tokenizer = tokenizer_mode_from_string(scalars["tokenizer"]);
  ckpt.rnn_activation = activation_from_string(scalars["rnn_activation"]);
  const auto vocab_size = to_int(path, 0, scalars["vocab"]);
  if (vocab_size != static_cast<long long>(ckpt.tokens.size()) + 2) {
    throw std::runtime_error(path + ": vocab size does not match the token list");
  }
  if (ckpt.kind != "embedding" &&
      static_cast<int>(ckpt.labels.size()) != ckpt.num_classes) {
    throw std::runtime_error(path + ": label count does not match classes");
  }

  std::map<std::string, Mat> sections;
  while (i < lines.size()) {
    if (lines[i].empty()) {
      ++i;
      continue;
    }
    const std::size_t header_line = i + 1;
    std::istringstream header(lines[i]);
    std::string name;
    long long rows = -1, cols = -1;
    header >> name >> rows >> cols;
    if (name.empty() || name[0] != '@' || rows < 0 || cols < 0 || !header.eof()) {
      fail_at(path, header_line, "expected '@<name> <rows> <cols>'");
    }
    name.erase(0, 1);
    ++i;
    Mat m = read_mat(path, lines, i, rows, cols);
    if (!sections.emplace(name, std::move(m)).second) {
      fail_at(path, header_line, "duplicate section '@" + name + "'");
    }
  }

  const auto take = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    auto it = sections.find(name);
    if (it == sections.end()) {
      throw std::runtime_error(path + ": missing section '@" + name + "'");
    }
    if (it->second.rows() != rows || it->second.cols() != cols) {
      throw std::runtime_error(path + ": section '@" + name + "' has shape " +
                               std::to_string(it->second.rows()) + "x" +
                               std::to_string(it->second.cols()) + ", expected " +
                               std::to_string(rows) + "x" + std::to_string(cols));
    }
    Mat m = std::move(it->second);
    sections.erase(it);
    return m;
  };

  const int h = ckpt.hidden, d = ckpt.dim;
  ckpt.embedding = take("embedding", vocab_size, d);
  const bool has_rnn = ckpt.kind == "rnn" || ckpt.kind == "fusion";
  const bool has_lstm = ckpt.kind == "lstm" || ckpt.kind == "fusion";
  const bool has_gru = ckpt.kind == "gru" || ckpt.kind == "fusion";
  if (has_rnn) ckpt.rnn = RnnParams{take("rnn.U", h, d), take("rnn.W", h, h)};
  if (has_lstm) {
    LstmParams p;
    p.W_i = take("lstm.W_i", h, h);
    p.W_f = take("lstm.W_f", h, h);
    p.W_o = take("lstm.W_o", h, h);
    p.W_g = take("lstm.W_g", h, h);
    p.U_i = take("lstm.U_i", h, d);
    p.U_f = take("lstm.U_f", h, d);
    p.U_o = take("lstm.U_o", h, d);
    p.U_g = take("lstm.U_g", h, d);
    ckpt.lstm = std::move(p);
  }
  if (has_gru) {
    GruParams p;
    p.W_z = take("gru.W_z", h, h);
    p.W_r = take("gru.W_r", h, h);
    p.W_c = take("gru.W_c", h, h);
    p.U_z = take("gru.U_z", h, d);
    p.U_r = take("gru.U_r", h, d);
    p.U_c = take("gru.U_c", h, d);
    ckpt.gru = std::move(p);
  }
  if (ckpt.kind != "embedding") {
    const Eigen::Index width = ckpt.kind == "fusion" ? 3 * h : h;
    ckpt.head = take("head", ckpt.num_classes, width);
  }
  if (!sections.empty()) {
    throw std::runtime_error(path + ": unknown section '@" + sections.begin()->first + "'");
  }
  return ckpt;
}

Checkpoint make_checkpoint(const ClassifierModel& model, const Vocabulary& vocab,
                           const std::vector<std::string>& labels, TokenizerMode tokenizer,
                           int max_len) {
  if (static_cast<int>(labels.size()) != model.num_classes) {
    throw std::invalid_argument("make_checkpoint: label count does not match the model");
  }
  if (vocab.size() != model.embedding.vocab_size()) {
    throw std::invalid_argument("make_checkpoint: vocabulary does not match the embedding");
  }
  Checkpoint ckpt;
  ckpt.kind = to_string(model.kind);
  ckpt.dim = model.dim;
  ckpt.hidden = model.hidden;
  ckpt.num_classes = model.num_classes;
  ckpt.max_len = max_len;
  ckpt.tokenizer = tokenizer;
  ckpt.rnn_activation = model.rnn_activation;
  ckpt.labels = labels;
  ckpt.tokens.assign(vocab.id_to_token.begin() + 2, vocab.id_to_token.end());
  ckpt.token_counts.assign(vocab.counts.begin() + 2, vocab.counts.end());
  ckpt.embedding = model.embedding.weights;
  ckpt.rnn = model.rnn;
  ckpt.lstm = model.lstm;
  ckpt.gru = model.gru;
  ckpt.head = model.head;
  return ckpt;
}

Checkpoint make_embedding_checkpoint(const EmbeddingTable& table, const Vocabulary& vocab,
                                     TokenizerMode tokenizer) {
  if (vocab.size() != table.vocab_size()) {
    throw std::invalid_argument("make_embedding_checkpoint: vocabulary does not match");
  }
  Checkpoint ckpt;
  ckpt.kind = "embedding";
  ckpt.dim = table.dim();
  ckpt.tokenizer = tokenizer;
  ckpt.tokens.assign(vocab.id_to_token.begin() + 2, vocab.id_to_token.end());
  ckpt.token_counts.assign(vocab.counts.begin() + 2, vocab.counts.end());
  ckpt.embedding = table.weights;
  return ckpt;
}

ClassifierModel model_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind == "embedding") {
    throw std::invalid_argument("checkpoint holds only an embedding, not a model");
  }
  ClassifierModel model;
  model.kind = model_kind_from_string(ckpt.kind);
  model.dim = ckpt.dim;
  model.hidden = ckpt.hidden;
  model.num_classes = ckpt.num_classes;
  model.rnn_activation = ckpt.rnn_activation;
  model.embedding.weights = ckpt.embedding;
  model.rnn = ckpt.rnn;
  model.lstm = ckpt.lstm;
  model.gru = ckpt.gru;
  model.head = ckpt.head;
  return model;
}

Vocabulary vocab_from_checkpoint(const Checkpoint& ckpt) {
  Vocabulary vocab;
  vocab.id_to_token = {kPadToken, kUnkToken};
  vocab.counts = {0, 0};
  for (std::size_t k = 0; k < ckpt.tokens.size(); ++k) {
    vocab.token_to_id.emplace(ckpt.tokens[k], vocab.size());
    vocab.id_to_token.push_back(ckpt.tokens[k]);
    vocab.counts.push_back(ckpt.token_counts[k]);
  }
  return vocab;
}

CliConfig parse_config_file(const std::string& path) {
  const auto lines = read_lines(path);
  CliConfig config;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail_at(path, i + 1, "expected key=value");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "model") config.model = value;
    else if (key == "hidden") config.hidden = static_cast<int>(to_int(path, i + 1, value));
    else if (key == "dim") config.dim = static_cast<int>(to_int(path, i + 1, value));
    else if (key == "lr") config.lr = to_double(path, i + 1, value);
    else if (key == "dropout") config.dropout = to_double(path, i + 1, value);
    else if (key == "batch") config.batch = static_cast<int>(to_int(path, i + 1, value));
    else if (key == "epochs") config.epochs = static_cast<int>(to_int(path, i + 1, value));
    else if (key == "seed") config.seed = static_cast<std::uint64_t>(to_int(path, i + 1, value));
    else if (key == "max_len") config.max_len = static_cast<int>(to_int(path, i + 1, value));
    else if (key == "clip_norm") config.clip_norm = value;
    else if (key == "tokenizer") config.tokenizer = value;
    else if (key == "split") config.split = value;
    else if (key == "freeze_embeddings") {
      if (value == "true" || value == "1") config.freeze_embeddings = true;
      else if (value == "false" || value == "0") config.freeze_embeddings = false;
      else fail_at(path, i + 1, "expected true/false for freeze_embeddings");
    } else if (key == "rnn_activation") {
      config.rnn_activation = value;
    } else {
      fail_at(path, i + 1, "unknown config key '" + key + "'");
    }
  }
  return config;
}

std::array<double, 3> parse_split_ratios(const std::string& text) {
  std::array<double, 3> ratios{};
  std::istringstream in(text);
  std::string part;
  int k = 0;
  while (std::getline(in, part, ',')) {
    if (k >= 3) throw std::invalid_argument("split must have three ratios, got '" + text + "'");
    const char* begin = part.c_str();
    char* end = nullptr;
    ratios[k] = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
      throw std::invalid_argument("bad split ratio '" + part + "'");
    }
    ++k;
  }
  if (k != 3) throw std::invalid_argument("split must have three ratios, got '" + text + "'");
  return ratios;
}

std::optional<double> parse_clip_norm(const std::string& text) {
  if (text == "none") return std::nullopt;
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !(v > 0.0)) {
    throw std::invalid_argument("clip_norm must be a positive number or 'none', got '" + text +
                                "'");
  }
  return v;
}

void save_report(const TrainingReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  const TrainConfig& c = report.config;
  out << kReportMagic << "\n";
  out << "model=" << to_string(report.kind) << "\n";
  out << "lr=" << format_double(c.lr) << "\n";
  out << "dropout=" << format_double(c.dropout) << "\n";
  out << "batch=" << c.batch_size << "\n";
  out << "epochs=" << c.epochs << "\n";
  out << "seed=" << c.seed << "\n";
  out << "max_len=" << c.max_len << "\n";
  out << "clip_norm=" << (c.clip_norm ? format_double(*c.clip_norm) : "none") << "\n";
  out << "split=" << format_double(c.split[0]) << "," << format_double(c.split[1]) << ","
      << format_double(c.split[2]) << "\n";
  out << "freeze_embeddings=" << (c.freeze_embeddings ? "true" : "false") << "\n";
  for (std::size_t e = 0; e < report.epochs.size(); ++e) {
    const auto& m = report.epochs[e];
    out << "epoch=" << (e + 1) << " train_loss=" << format_double(m.train_loss)
        << " val_loss=" << format_double(m.val_loss)
        << " val_acc=" << format_double(m.val_accuracy) << "\n";
  }
  out << "best_epoch=" << report.best_epoch << "\n";
  out << "test_accuracy=" << format_double(report.test_accuracy) << "\n";
  out << "test_loss=" << format_double(report.test_loss) << "\n";
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

TrainingReport load_report(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != kReportMagic) {
    throw std::runtime_error(path + ": not a training report (expected header '" +
                             std::string(kReportMagic) + "')");
  }
  TrainingReport report;
  bool saw_model = false, saw_test_accuracy = false, saw_test_loss = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail_at(path, i + 1, "expected key=value");
    const std::string key = line.substr(0, eq);
    if (key == "epoch") {
      EpochMetrics m;
      std::istringstream in(line);
      std::string field;
      while (in >> field) {
        const auto feq = field.find('=');
        if (feq == std::string::npos) fail_at(path, i + 1, "malformed epoch line");
        const std::string fkey = field.substr(0, feq);
        const std::string fval = field.substr(feq + 1);
        if (fkey == "train_loss") m.train_loss = to_double(path, i + 1, fval);
        else if (fkey == "val_loss") m.val_loss = to_double(path, i + 1, fval);
        else if (fkey == "val_acc") m.val_accuracy = to_double(path, i + 1, fval);
        else if (fkey != "epoch") fail_at(path, i + 1, "unknown epoch field '" + fkey + "'");
      }
      report.epochs.push_back(m);
      continue;
    }
    const std::string value = line.substr(eq + 1);
    if (key == "model") {
      report.kind = model_kind_from_string(value);
      saw_model = true;
    } else if (key == "lr") report.config.lr = to_double(path, i + 1, value);
    else if (key == "dropout") report.config.dropout = to_double(path, i + 1, value);
    else if (key == "batch") report.config.batch_size = static_cast<int>(to_int(path, i + 1, value));
    else if (key == "epochs") report.config.epochs = static_cast<int>(to_int(path, i + 1, value));
    else if (key == "seed") report.config.seed = static_cast<std::uint64_t>(to_int(path, i + 1, value));
    else if (key == "max_len") report.config.max_len = static_cast<int>(to_int(path, i + 1, value));
    else if (key == "clip_norm") report.config.clip_norm = parse_clip_norm(value);
    else if (key == "split") report.config.split = parse_split_ratios(value);
    else if (key == "freeze_embeddings") report.config.freeze_embeddings = (value == "true");
    else if (key == "best_epoch") report.best_epoch = static_cast<int>(to_int(path, i + 1, value));
    else if (key == "test_accuracy") {
      report.test_accuracy = to_double(path, i + 1, value);
      saw_test_accuracy = true;
    } else if (key == "test_loss") {
      report.test_loss = to_double(path, i + 1, value);
      saw_test_loss = true;
    } else {
      fail_at(path, i + 1, "unknown report key '" + key + "'");
    }
  }
  if (!saw_model || !saw_test_accuracy || !saw_test_loss) {
    throw std::runtime_error(path + ": incomplete training report");
  }
  return report;
}

}  // namespace rfqc
