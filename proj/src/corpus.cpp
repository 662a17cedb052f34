#include "rfqc/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rfqc {
namespace {

bool is_unicode_space(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x20: case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

// Decodes the scalar starting at s[i]; advances i. Invalid bytes are taken
// as single scalars so arbitrary input stays tokenizable.
char32_t next_scalar(const std::string& s, std::size_t& i) {
  const unsigned char b0 = static_cast<unsigned char>(s[i]);
  std::size_t len = 1;
  char32_t cp = b0;
  if (b0 >= 0xF0) { len = 4; cp = b0 & 0x07; }
  else if (b0 >= 0xE0) { len = 3; cp = b0 & 0x0F; }
  else if (b0 >= 0xC0) { len = 2; cp = b0 & 0x1F; }
  if (len == 1 || i + len > s.size()) { ++i; return b0; }
  for (std::size_t k = 1; k < len; ++k) {
    const unsigned char bk = static_cast<unsigned char>(s[i + k]);
    if ((bk & 0xC0) != 0x80) { ++i; return b0; }
    cp = (cp << 6) | (bk & 0x3F);
  }
  i += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

}  // namespace

TokenizerMode tokenizer_mode_from_string(const std::string& s) {
  if (s == "whitespace") return TokenizerMode::Whitespace;
  if (s == "character") return TokenizerMode::Character;
  throw std::invalid_argument("unknown tokenizer mode '" + s +
                              "' (valid: whitespace, character)");
}

std::string to_string(TokenizerMode mode) {
  return mode == TokenizerMode::Whitespace ? "whitespace" : "character";
}

std::vector<Record> load_tsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<Record> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected label<TAB>text");
    }
    records.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return records;
}

std::vector<std::string> tokenize(const std::string& text, TokenizerMode mode) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  std::string current;
  while (i < text.size()) {
    const char32_t cp = next_scalar(text, i);
    if (is_unicode_space(cp)) {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
      continue;
    }
    if (mode == TokenizerMode::Character) {
      std::string one;
      append_utf8(one, cp);
      tokens.push_back(std::move(one));
    } else {
      append_utf8(current, cp);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocabulary build_vocab(const std::vector<Record>& records, TokenizerMode mode,
                       std::int64_t min_count, std::size_t max_size) {
  if (min_count < 1) throw std::invalid_argument("build_vocab: min_count must be >= 1");
  if (max_size < 2) throw std::invalid_argument("build_vocab: max_size must be >= 2");

  struct Seen {
    std::int64_t count = 0;
    std::size_t first = 0;
  };
  std::map<std::string, Seen> seen;
  std::size_t position = 0;
  for (const auto& [label, text] : records) {
    (void)label;
    for (auto& token : tokenize(text, mode)) {
      auto [it, inserted] = seen.try_emplace(std::move(token));
      if (inserted) it->second.first = position;
      ++it->second.count;
      ++position;
    }
  }

  std::vector<std::pair<const std::string*, Seen>> ranked;
  ranked.reserve(seen.size());
  for (const auto& [token, info] : seen) {
    if (info.count >= min_count) ranked.emplace_back(&token, info);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.second.first < b.second.first;
  });
  if (ranked.size() > max_size - 2) ranked.resize(max_size - 2);

  Vocabulary vocab;
  vocab.id_to_token = {kPadToken, kUnkToken};
  vocab.counts = {0, 0};
  for (const auto& [token, info] : ranked) {
    vocab.token_to_id.emplace(*token, vocab.size());
    vocab.id_to_token.push_back(*token);
    vocab.counts.push_back(info.count);
  }
  return vocab;
}

std::map<std::string, int> build_label_map(const std::vector<Record>& records) {
  std::map<std::string, int> labels;
  for (const auto& [label, text] : records) {
    (void)text;
    labels.try_emplace(label, static_cast<int>(labels.size()));
  }
  return labels;
}

std::vector<std::string> label_names(const std::map<std::string, int>& label_map) {
  std::vector<std::string> names(label_map.size());
  for (const auto& [name, id] : label_map) names[id] = name;
  return names;
}

std::vector<int> encode_tokens(const Vocabulary& vocab, const std::vector<std::string>& tokens,
                               std::size_t max_len) {
  std::vector<int> ids;
  ids.reserve(std::min(tokens.size(), max_len));
  for (const auto& token : tokens) {
    if (ids.size() >= max_len) break;
    ids.push_back(vocab.id_of(token));
  }
  return ids;
}

LabeledExample encode(const Record& record, const Vocabulary& vocab,
                      const std::map<std::string, int>& label_map, TokenizerMode mode,
                      std::size_t max_len) {
  auto it = label_map.find(record.first);
  if (it == label_map.end()) {
    std::string known;
    for (const auto& name : label_names(label_map)) {
      if (!known.empty()) known += ", ";
      known += name;
    }
    throw std::invalid_argument("unknown label '" + record.first + "' (known: " + known + ")");
  }
  return {it->second, encode_tokens(vocab, tokenize(record.second, mode), max_len)};
}

std::vector<std::string> decode(const Vocabulary& vocab, const std::vector<int>& ids) {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || id >= vocab.size()) {
      throw std::invalid_argument("decode: id " + std::to_string(id) + " out of range");
    }
    tokens.push_back(vocab.id_to_token[id]);
  }
  return tokens;
}

DatasetSplit split_dataset(std::vector<LabeledExample> examples,
                           const std::array<double, 3>& ratios, Prng& rng) {
  if (examples.empty()) throw std::invalid_argument("split_dataset: empty dataset");
  for (double r : ratios) {
    if (!(r > 0.0)) throw std::invalid_argument("split_dataset: ratios must be positive");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw std::invalid_argument("split_dataset: ratios must sum to 1");
  }

  rng.shuffle(examples);
  const auto n = examples.size();
  const auto n_train = static_cast<std::size_t>(std::floor(ratios[0] * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(ratios[1] * static_cast<double>(n)));

  DatasetSplit split;
  split.train.assign(examples.begin(), examples.begin() + n_train);
  split.val.assign(examples.begin() + n_train, examples.begin() + n_train + n_val);
  split.test.assign(examples.begin() + n_train + n_val, examples.end());
  return split;
}

ClassStats class_stats(const std::vector<Record>& records) {
  if (records.empty()) throw std::invalid_argument("class_stats: empty record list");
  ClassStats stats;
  std::map<std::string, std::size_t> index;
  for (const auto& [label, text] : records) {
    (void)text;
    auto [it, inserted] = index.try_emplace(label, stats.entries.size());
    if (inserted) stats.entries.push_back({label, 0, 0.0});
    ++stats.entries[it->second].count;
  }
  stats.total = static_cast<std::int64_t>(records.size());
  for (auto& entry : stats.entries) {
    entry.proportion = static_cast<double>(entry.count) / static_cast<double>(stats.total);
  }
  return stats;
}

std::string format_percent(double proportion) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", proportion * 100.0);
  return buf;
}

void save_vocab(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << kPadToken << "\n" << kUnkToken << "\n";
  for (int id = 2; id < vocab.size(); ++id) {
    out << vocab.id_to_token[id] << "\t" << vocab.counts[id] << "\n";
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  Vocabulary vocab;
  vocab.id_to_token = {kPadToken, kUnkToken};
  vocab.counts = {0, 0};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 || lineno == 2) {
      const char* expect = lineno == 1 ? kPadToken : kUnkToken;
      if (line != expect) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected header '" +
                                 expect + "'");
      }
      continue;
    }
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected token<TAB>count");
    }
    const std::string token = line.substr(0, tab);
    const auto count = std::stoll(line.substr(tab + 1));
    vocab.token_to_id.emplace(token, vocab.size());
    vocab.id_to_token.push_back(token);
    vocab.counts.push_back(count);
  }
  if (lineno < 2) throw std::runtime_error(path + ": truncated vocabulary file");
  return vocab;
}

}  // namespace rfqc
