#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "textkg/embeddings.hpp"

namespace textkg {

enum class TripleSource { general, specific };

struct KnowledgeTriple {
  std::string head;
  std::string relation;
  std::string tail;
  TripleSource source = TripleSource::general;
  std::size_t count = 1;  // occurrence count for mined phrases

  bool same_fact(const KnowledgeTriple& o) const {
    return head == o.head && relation == o.relation && tail == o.tail;
  }
};

// Triples indexed by head and tail term (case-folded). Immutable once built;
// retrieval and ranking are pure.
struct KnowledgeGraph {
  std::vector<KnowledgeTriple> triples;
  std::unordered_map<std::string, std::vector<std::size_t>> by_head;
  std::unordered_map<std::string, std::vector<std::size_t>> by_tail;
  std::vector<std::string> relation_set;  // distinct labels, insertion order

  // Collapses exact (head, relation, tail) duplicates; general source wins on
  // conflict and occurrence counts are summed.
  void add(KnowledgeTriple t);
  // All triples whose head or tail equals the category (case-folded),
  // insertion order, no duplicates.
  std::vector<KnowledgeTriple> retrieve(const std::string& category) const;
  std::size_t size() const { return triples.size(); }

 private:
  std::unordered_map<std::string, std::size_t> fact_index_;
};

struct KgLoadStats {
  std::size_t loaded = 0;
  std::size_t comments = 0;
  std::size_t duplicates = 0;
};

KnowledgeGraph load_general_kg(const std::string& path, KgLoadStats* stats = nullptr);
void save_kg_tsv(const std::string& path, const KnowledgeGraph& kg);

enum class PosTag { noun, adjective, verb, adverb, other };

std::string pos_tag_name(PosTag t);

struct PosLexicon {
  std::unordered_map<std::string, PosTag> tags;
  PosTag tag(const std::string& word) const {
    auto it = tags.find(word);
    return it == tags.end() ? PosTag::other : it->second;
  }
};

PosLexicon load_pos_lexicon(const std::string& path);

std::vector<PosTag> pos_tag(const std::vector<std::string>& words, const PosLexicon& lexicon);

// Adjacent-pair phrase mining over transcript sentences:
//   adjective+noun → (noun, has_property, adjective)
//   noun+noun      → (noun₂, related_to, noun₁)
//   adverb+verb    → (verb, done_manner, adverb)
KnowledgeGraph build_specific_kg(const std::vector<std::vector<std::string>>& sentences,
                                 const PosLexicon& lexicon);

struct ScoredTriple {
  KnowledgeTriple triple;
  double score = 0.0;
};

// Cosine similarity between the triple's word embedding and the transcript
// embedding; descending, ties broken by lexicographic (head, relation, tail);
// truncated to n_k. Empty transcript is an error — callers without a
// transcript keep insertion order instead.
std::vector<ScoredTriple> rank_knowledge(const std::vector<KnowledgeTriple>& triples,
                                         const std::vector<std::string>& transcript_words,
                                         const EmbeddingTable& table, std::size_t n_k);

KnowledgeGraph merge_graphs(const KnowledgeGraph& general, const KnowledgeGraph& specific);

// Words of a triple for embedding purposes: head/relation/tail split on
// spaces and underscores.
std::vector<std::string> triple_words(const KnowledgeTriple& t);

std::string fold_term(const std::string& s);  // ASCII lowercase

}  // namespace textkg
