#include "textkg/embeddings.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "textkg/rng.hpp"

namespace textkg {

EmbeddingTable load_word_vectors(const std::string& path, std::size_t dim, std::uint64_t unk_seed,
                                 EmbeddingLoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("word vectors: cannot open " + path);
  EmbeddingTable table;
  table.dim = dim;
  table.unk_seed = unk_seed;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    std::vector<double> vec;
    vec.reserve(dim);
    double v;
    while (ls >> v) vec.push_back(v);
    if (vec.size() != dim)
      throw std::runtime_error("word vectors: line " + std::to_string(lineno) + " has " +
                               std::to_string(vec.size()) + " components, expected " +
                               std::to_string(dim));
    auto [it, inserted] = table.vectors.emplace(word, std::move(vec));
    (void)it;
    if (inserted) {
      if (stats) stats->loaded += 1;
    } else if (stats) {
      stats->duplicates += 1;
    }
  }
  return table;
}

std::vector<double> embed_word(const EmbeddingTable& table, const std::string& word) {
  auto it = table.vectors.find(word);
  if (it != table.vectors.end()) return it->second;
  // hashed fallback: deterministic per (word, unk_seed), unit length
  Rng rng(mix64(fnv1a64(word), table.unk_seed));
  std::vector<double> v(table.dim);
  double norm2 = 0.0;
  for (auto& x : v) {
    x = rng.normal();
    norm2 += x * x;
  }
  double inv = 1.0 / std::sqrt(norm2 > 0 ? norm2 : 1.0);
  for (auto& x : v) x *= inv;
  return v;
}

std::vector<double> sentence_embedding(const EmbeddingTable& table,
                                       const std::vector<std::string>& words) {
  if (words.empty()) throw std::invalid_argument("sentence_embedding: empty word list");
  std::vector<double> acc(table.dim, 0.0);
  for (const auto& w : words) {
    auto v = embed_word(table, w);
    for (std::size_t i = 0; i < table.dim; ++i) acc[i] += v[i];
  }
  double inv = 1.0 / static_cast<double>(words.size());
  for (auto& x : acc) x *= inv;
  return acc;
}

double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size())
    throw std::invalid_argument("cosine_similarity: dimension mismatch " +
                                std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

Vocabulary::Vocabulary() {
  words_ = {"<pad>", "<bos>", "<eos>", "<unk>"};
  for (std::size_t i = 0; i < words_.size(); ++i) index_[words_[i]] = i;
}

std::size_t Vocabulary::add(const std::string& word) {
  auto it = index_.find(word);
  if (it != index_.end()) return it->second;
  std::size_t id = words_.size();
  words_.push_back(word);
  index_[word] = id;
  return id;
}

std::size_t Vocabulary::lookup(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::word(std::size_t index) const {
  if (index >= words_.size())
    throw std::out_of_range("vocabulary: index " + std::to_string(index) + " out of range " +
                            std::to_string(words_.size()));
  return words_[index];
}

}  // namespace textkg
