#pragma once

#include "rfqc/numerics.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace rfqc {

enum class TokenizerMode { Whitespace, Character };

TokenizerMode tokenizer_mode_from_string(const std::string& s);
std::string to_string(TokenizerMode mode);

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kUnkToken = "<unk>";

// Token/id bijection. Ids 0 and 1 are reserved for PAD and UNK; learned
// tokens occupy ids 2..size()-1 in (frequency desc, first appearance asc)
// order.
struct Vocabulary {
  std::map<std::string, int> token_to_id;       // learned tokens only
  std::vector<std::string> id_to_token;         // includes <pad>, <unk>
  std::vector<std::int64_t> counts;             // parallel to id_to_token, 0 for pad/unk

  int size() const { return static_cast<int>(id_to_token.size()); }
  int id_of(const std::string& token) const {
    auto it = token_to_id.find(token);
    return it == token_to_id.end() ? kUnkId : it->second;
  }
};

struct LabeledExample {
  int label = 0;
  std::vector<int> tokens;
};

struct DatasetSplit {
  std::vector<LabeledExample> train, val, test;
};

struct ClassStats {
  struct Entry {
    std::string name;
    std::int64_t count = 0;
    double proportion = 0.0;
  };
  std::vector<Entry> entries;  // ordered by first appearance
  std::int64_t total = 0;
};

using Record = std::pair<std::string, std::string>;  // (label, text)

/// Reads `label<TAB>text` lines; empty lines are skipped. Throws
/// std::runtime_error naming the line on a missing tab or unreadable file.
std::vector<Record> load_tsv(const std::string& path);

/// Whitespace mode splits on runs of Unicode whitespace; character mode
/// yields one token per Unicode scalar with whitespace dropped.
std::vector<std::string> tokenize(const std::string& text, TokenizerMode mode);

/// Keeps tokens with frequency >= min_count, ranked by (frequency desc,
/// first appearance asc), truncated to max_size - 2 learned entries.
Vocabulary build_vocab(const std::vector<Record>& records, TokenizerMode mode,
                       std::int64_t min_count, std::size_t max_size);

/// Label name -> class id, assigned by first appearance in the records.
std::map<std::string, int> build_label_map(const std::vector<Record>& records);
std::vector<std::string> label_names(const std::map<std::string, int>& label_map);

/// Token ids for a token sequence: unknowns become UNK, sequences longer
/// than max_len keep their first max_len tokens.
std::vector<int> encode_tokens(const Vocabulary& vocab, const std::vector<std::string>& tokens,
                               std::size_t max_len);

/// Throws std::invalid_argument listing the known labels when the record's
/// label is absent from label_map.
LabeledExample encode(const Record& record, const Vocabulary& vocab,
                      const std::map<std::string, int>& label_map, TokenizerMode mode,
                      std::size_t max_len);

std::vector<std::string> decode(const Vocabulary& vocab, const std::vector<int>& ids);

/// Uniform shuffle, then |train| = floor(r0*N), |val| = floor(r1*N), the
/// rest is test. Ratios must be positive and sum to 1; N = 0 is rejected.
DatasetSplit split_dataset(std::vector<LabeledExample> examples,
                           const std::array<double, 3>& ratios, Prng& rng);

ClassStats class_stats(const std::vector<Record>& records);

/// Renders a proportion as a percentage with two decimals, e.g. "21.23%".
std::string format_percent(double proportion);

void save_vocab(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocab(const std::string& path);

}  // namespace rfqc
