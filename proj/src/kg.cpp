#include "textkg/kg.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace textkg {

namespace {

// head \x1f relation \x1f tail — unambiguous fact key
std::string fact_key(const KnowledgeTriple& t) {
  return t.head + '\x1f' + t.relation + '\x1f' + t.tail;
}

void append_words(const std::string& term, std::vector<std::string>& out) {
  std::string cur;
  for (char c : term) {
    if (c == ' ' || c == '_') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
}

}  // namespace

std::string fold_term(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void KnowledgeGraph::add(KnowledgeTriple t) {
  if (t.head.empty() || t.tail.empty())
    throw std::invalid_argument("knowledge graph: triple with empty head or tail");
  t.head = fold_term(t.head);
  t.relation = fold_term(t.relation);
  t.tail = fold_term(t.tail);
  auto key = fact_key(t);
  auto it = fact_index_.find(key);
  if (it != fact_index_.end()) {
    auto& existing = triples[it->second];
    existing.count += t.count;
    if (t.source == TripleSource::general) existing.source = TripleSource::general;
    return;
  }
  std::size_t idx = triples.size();
  fact_index_[key] = idx;
  by_head[t.head].push_back(idx);
  by_tail[t.tail].push_back(idx);
  if (std::find(relation_set.begin(), relation_set.end(), t.relation) == relation_set.end())
    relation_set.push_back(t.relation);
  triples.push_back(std::move(t));
}

std::vector<KnowledgeTriple> KnowledgeGraph::retrieve(const std::string& category) const {
  std::string key = fold_term(category);
  std::vector<std::size_t> hits;
  if (auto it = by_head.find(key); it != by_head.end())
    hits.insert(hits.end(), it->second.begin(), it->second.end());
  if (auto it = by_tail.find(key); it != by_tail.end())
    hits.insert(hits.end(), it->second.begin(), it->second.end());
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  std::vector<KnowledgeTriple> out;
  out.reserve(hits.size());
  for (std::size_t i : hits) out.push_back(triples[i]);
  return out;
}

KnowledgeGraph load_general_kg(const std::string& path, KgLoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("knowledge graph: cannot open " + path);
  KnowledgeGraph kg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (stats) stats->comments += 1;
      continue;
    }
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      auto tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (fields.size() != 3)
      throw std::runtime_error("knowledge graph: line " + std::to_string(lineno) + " has " +
                               std::to_string(fields.size()) + " fields, expected 3");
    std::size_t before = kg.size();
    kg.add({fields[0], fields[1], fields[2], TripleSource::general, 1});
    if (stats) {
      if (kg.size() > before)
        stats->loaded += 1;
      else
        stats->duplicates += 1;
    }
  }
  return kg;
}

void save_kg_tsv(const std::string& path, const KnowledgeGraph& kg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("knowledge graph: cannot write " + path);
  for (const auto& t : kg.triples) out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
}

std::string pos_tag_name(PosTag t) {
  switch (t) {
    case PosTag::noun: return "noun";
    case PosTag::adjective: return "adjective";
    case PosTag::verb: return "verb";
    case PosTag::adverb: return "adverb";
    case PosTag::other: return "other";
  }
  return "other";
}

PosLexicon load_pos_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("pos lexicon: cannot open " + path);
  PosLexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("pos lexicon: line " + std::to_string(lineno) +
                               " is not word⟨TAB⟩tag");
    std::string word = fold_term(line.substr(0, tab));
    std::string tag = fold_term(line.substr(tab + 1));
    PosTag pt;
    if (tag == "noun")
      pt = PosTag::noun;
    else if (tag == "adjective" || tag == "adj")
      pt = PosTag::adjective;
    else if (tag == "verb")
      pt = PosTag::verb;
    else if (tag == "adverb" || tag == "adv")
      pt = PosTag::adverb;
    else if (tag == "other")
      pt = PosTag::other;
    else
      throw std::runtime_error("pos lexicon: line " + std::to_string(lineno) + " has unknown tag '" +
                               tag + "'");
    lex.tags[word] = pt;
  }
  return lex;
}

std::vector<PosTag> pos_tag(const std::vector<std::string>& words, const PosLexicon& lexicon) {
  std::vector<PosTag> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(lexicon.tag(fold_term(w)));
  return out;
}

KnowledgeGraph build_specific_kg(const std::vector<std::vector<std::string>>& sentences,
                                 const PosLexicon& lexicon) {
  KnowledgeGraph kg;
  for (const auto& sentence : sentences) {
    auto tags = pos_tag(sentence, lexicon);
    for (std::size_t i = 0; i + 1 < sentence.size(); ++i) {
      const std::string a = fold_term(sentence[i]);
      const std::string b = fold_term(sentence[i + 1]);
      if (tags[i] == PosTag::adjective && tags[i + 1] == PosTag::noun)
        kg.add({b, "has_property", a, TripleSource::specific, 1});
      else if (tags[i] == PosTag::noun && tags[i + 1] == PosTag::noun)
        kg.add({b, "related_to", a, TripleSource::specific, 1});
      else if (tags[i] == PosTag::adverb && tags[i + 1] == PosTag::verb)
        kg.add({b, "done_manner", a, TripleSource::specific, 1});
    }
  }
  return kg;
}

std::vector<std::string> triple_words(const KnowledgeTriple& t) {
  std::vector<std::string> words;
  append_words(t.head, words);
  append_words(t.relation, words);
  append_words(t.tail, words);
  return words;
}

std::vector<ScoredTriple> rank_knowledge(const std::vector<KnowledgeTriple>& triples,
                                         const std::vector<std::string>& transcript_words,
                                         const EmbeddingTable& table, std::size_t n_k) {
  if (transcript_words.empty())
    throw std::invalid_argument("rank_knowledge: empty transcript, ranking undefined");
  if (n_k == 0) return {};
  auto tref = sentence_embedding(table, transcript_words);
  std::vector<ScoredTriple> scored;
  scored.reserve(triples.size());
  for (const auto& t : triples) {
    auto emb = sentence_embedding(table, triple_words(t));
    scored.push_back({t, cosine_similarity(emb, tref)});
  }
  std::sort(scored.begin(), scored.end(), [](const ScoredTriple& a, const ScoredTriple& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.triple.head, a.triple.relation, a.triple.tail) <
           std::tie(b.triple.head, b.triple.relation, b.triple.tail);
  });
  if (scored.size() > n_k) scored.resize(n_k);
  return scored;
}

KnowledgeGraph merge_graphs(const KnowledgeGraph& general, const KnowledgeGraph& specific) {
  KnowledgeGraph out;
  for (const auto& t : general.triples) out.add(t);
  for (const auto& t : specific.triples) out.add(t);
  return out;
}

}  // namespace textkg
