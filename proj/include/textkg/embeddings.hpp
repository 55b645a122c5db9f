#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace textkg {

// Fixed word vectors in the GloVe text layout: `word v1 v2 ... vdim` per line.
// Out-of-table words fall back to a deterministic unit vector hashed from the
// word, so unseen inputs never crash a run and stay reproducible.
struct EmbeddingTable {
  std::size_t dim = 300;
  std::uint64_t unk_seed = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;

  bool contains(const std::string& word) const { return vectors.count(word) > 0; }
};

struct EmbeddingLoadStats {
  std::size_t loaded = 0;
  std::size_t duplicates = 0;  // later lines for a word the table already has (first wins)
};

EmbeddingTable load_word_vectors(const std::string& path, std::size_t dim,
                                 std::uint64_t unk_seed = 0,
                                 EmbeddingLoadStats* stats = nullptr);

std::vector<double> embed_word(const EmbeddingTable& table, const std::string& word);

// Mean of the word vectors; empty input is an error.
std::vector<double> sentence_embedding(const EmbeddingTable& table,
                                       const std::vector<std::string>& words);

// Zero-norm inputs score 0 rather than dividing by zero.
double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v);

// Caption-side word index space. Indices 0..3 are reserved and can never be
// produced for corpus words.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kBos = 1;
  static constexpr std::size_t kEos = 2;
  static constexpr std::size_t kUnk = 3;

  Vocabulary();

  std::size_t add(const std::string& word);            // idempotent
  std::size_t lookup(const std::string& word) const;   // kUnk when absent
  const std::string& word(std::size_t index) const;
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace textkg
