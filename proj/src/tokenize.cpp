#include "textkg/tokenize.hpp"

#include <stdexcept>

namespace textkg {

std::string segment_kind_name(SegmentKind k) {
  switch (k) {
    case SegmentKind::region: return "region";
    case SegmentKind::knowledge: return "knowledge";
    case SegmentKind::transcript: return "transcript";
    case SegmentKind::caption: return "caption";
    case SegmentKind::video: return "video";
  }
  return "?";
}

const Segment* SegmentMap::find(SegmentKind k) const {
  for (const auto& s : segments)
    if (s.kind == k) return &s;
  return nullptr;
}

bool SegmentMap::has(SegmentKind k) const {
  const Segment* s = find(k);
  return s != nullptr && s->length > 0;
}

SegmentKind SegmentMap::kind_of(std::size_t row) const {
  for (const auto& s : segments)
    if (row >= s.start && row < s.start + s.length) return s.kind;
  throw std::out_of_range("segment map: row " + std::to_string(row) + " beyond total " +
                          std::to_string(total));
}

std::size_t SegmentMap::caption_start() const {
  const Segment* s = find(SegmentKind::caption);
  if (!s) throw std::logic_error("segment map: no caption segment");
  return s->start;
}

std::size_t SegmentMap::caption_length() const {
  const Segment* s = find(SegmentKind::caption);
  if (!s) throw std::logic_error("segment map: no caption segment");
  return s->length;
}

Tensor linear_project(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rows() == 0) return Tensor::zeros({0, w.cols()});
  return add_row(matmul(x, w), b);
}

Tensor make_video_tokens(const Tensor& appearance, const Tensor& motion, const Tensor& w,
                         const Tensor& b) {
  if (appearance.rows() != motion.rows())
    throw std::invalid_argument("video tokens: appearance has " +
                                std::to_string(appearance.rows()) + " frames, motion " +
                                std::to_string(motion.rows()));
  if (appearance.rows() == 0) return Tensor::zeros({0, w.cols()});
  return linear_project(concat_cols({appearance, motion}), w, b);
}

RegionTokens make_region_tokens(const Tensor& feats, const std::vector<std::string>& categories,
                                const std::vector<int>& frames, std::size_t n_r, const Tensor& w,
                                const Tensor& b) {
  std::size_t r = feats.rows();
  if (categories.size() != r)
    throw std::invalid_argument("region tokens: " + std::to_string(categories.size()) +
                                " categories for " + std::to_string(r) + " detections");
  if (frames.size() != r)
    throw std::invalid_argument("region tokens: " + std::to_string(frames.size()) +
                                " frame tags for " + std::to_string(r) + " detections");
  RegionTokens out;
  if (r == 0) {
    out.tokens = Tensor::zeros({0, w.cols()});
    return out;
  }
  // top n_r per frame, manifest order within a frame (already confidence-sorted)
  std::vector<std::size_t> keep;
  std::vector<std::pair<int, std::size_t>> seen;  // (frame, kept so far)
  auto kept_in_frame = [&](int f) -> std::size_t& {
    for (auto& [frame, count] : seen)
      if (frame == f) return count;
    seen.emplace_back(f, 0);
    return seen.back().second;
  };
  for (std::size_t i = 0; i < r; ++i) {
    auto& count = kept_in_frame(frames[i]);
    if (count < n_r) {
      keep.push_back(i);
      ++count;
    }
  }
  Tensor rows = gather_rows(feats, keep);
  out.tokens = linear_project(rows, w, b);
  for (std::size_t i : keep) out.categories.push_back(categories[i]);
  return out;
}

namespace {

Tensor embed_rows(const std::vector<std::string>& words, const EmbeddingTable& table) {
  std::vector<double> values;
  values.reserve(words.size() * table.dim);
  for (const auto& wd : words) {
    auto v = embed_word(table, wd);
    values.insert(values.end(), v.begin(), v.end());
  }
  return Tensor({words.size(), table.dim}, std::move(values));
}

}  // namespace

Tensor make_text_tokens(const std::vector<std::string>& words, const EmbeddingTable& table,
                        std::size_t cap, const Tensor& w, const Tensor& b) {
  std::vector<std::string> kept(words.begin(),
                                words.begin() + std::min<std::size_t>(words.size(), cap));
  if (kept.empty()) return Tensor::zeros({0, w.cols()});
  return linear_project(embed_rows(kept, table), w, b);
}

Tensor make_caption_tokens(const std::vector<std::string>& words, const EmbeddingTable& table,
                           std::size_t cap, bool include_eos, const Tensor& w, const Tensor& b,
                           const Tensor& bos_vec, const Tensor& eos_vec) {
  std::vector<std::string> kept(words.begin(),
                                words.begin() + std::min<std::size_t>(words.size(), cap));
  std::vector<Tensor> parts;
  parts.push_back(bos_vec);
  if (!kept.empty()) parts.push_back(linear_project(embed_rows(kept, table), w, b));
  if (include_eos) parts.push_back(eos_vec);
  return concat_rows(parts);
}

KnowledgeTokens make_knowledge_tokens(const std::vector<KnowledgeTriple>& triples,
                                      const std::vector<std::string>& source_categories,
                                      const std::vector<std::size_t>& rel_ids,
                                      const EmbeddingTable& table, const Tensor& relation_table,
                                      const Tensor& w, const Tensor& b) {
  if (source_categories.size() != triples.size() || rel_ids.size() != triples.size())
    throw std::invalid_argument("knowledge tokens: annotation lengths do not match triples");
  KnowledgeTokens out;
  if (triples.empty()) {
    out.tokens = Tensor::zeros({0, w.cols()});
    return out;
  }
  std::vector<double> tail_values;
  for (const auto& t : triples) {
    std::vector<std::string> tw;
    // multi-word tails embed as their word-vector mean
    std::string cur;
    for (char c : t.tail + std::string(1, ' ')) {
      if (c == ' ' || c == '_') {
        if (!cur.empty()) tw.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    auto v = sentence_embedding(table, tw);
    tail_values.insert(tail_values.end(), v.begin(), v.end());
  }
  Tensor tail_rows({triples.size(), table.dim}, std::move(tail_values));
  Tensor rel_rows = gather_rows(relation_table, rel_ids);
  out.tokens = linear_project(add(tail_rows, rel_rows), w, b);
  out.categories = source_categories;
  return out;
}

const Tensor& PositionTables::table_for(SegmentKind k) const {
  switch (k) {
    case SegmentKind::region: return region;
    case SegmentKind::knowledge: return knowledge;
    case SegmentKind::transcript: return transcript;
    case SegmentKind::caption: return caption;
    case SegmentKind::video: return video;
  }
  throw std::logic_error("position tables: bad segment kind");
}

namespace {

Tensor position_and_type(const Tensor& tokens, SegmentKind kind, const PositionTables& pos,
                         const Tensor& type_table) {
  std::size_t len = tokens.rows();
  if (len == 0) return tokens;
  const Tensor& table = pos.table_for(kind);
  if (len > table.rows())
    throw std::invalid_argument("assemble: " + segment_kind_name(kind) + " segment of " +
                                std::to_string(len) + " rows exceeds position capacity " +
                                std::to_string(table.rows()));
  std::vector<std::size_t> idx(len);
  for (std::size_t i = 0; i < len; ++i) idx[i] = i;
  Tensor with_pos = add(tokens, gather_rows(table, idx));
  Tensor type_row = gather_rows(type_table, {static_cast<std::size_t>(kind)});
  return add_row(with_pos, type_row);
}

StreamInput assemble(const std::vector<std::pair<SegmentKind, const Tensor*>>& order,
                     const AssemblyInputs& in, const PositionTables& pos,
                     const Tensor& type_table) {
  StreamInput out;
  std::vector<Tensor> parts;
  std::size_t offset = 0;
  std::size_t width = 0;
  for (const auto& [kind, tokens] : order) {
    std::size_t len = tokens->defined() ? tokens->rows() : 0;  // unset modality → empty segment
    if (len > 0 && width == 0) width = tokens->cols();
    if (len > 0 && tokens->cols() != width)
      throw std::invalid_argument("assemble: " + segment_kind_name(kind) + " width " +
                                  std::to_string(tokens->cols()) + " differs from stream width " +
                                  std::to_string(width));
    out.segmap.segments.push_back({kind, offset, len});
    if (len > 0) parts.push_back(position_and_type(*tokens, kind, pos, type_table));
    offset += len;
  }
  out.segmap.total = offset;
  out.segmap.region_categories = in.region_categories;
  out.segmap.knowledge_categories = in.knowledge_categories;
  if (parts.empty()) throw std::invalid_argument("assemble: stream has no tokens");
  out.tokens = concat_rows(parts);
  return out;
}

}  // namespace

StreamInput assemble_external(const AssemblyInputs& in, const PositionTables& pos,
                              const Tensor& type_table) {
  std::size_t n_regions = in.regions.defined() ? in.regions.rows() : 0;
  std::size_t n_knowledge = in.knowledge.defined() ? in.knowledge.rows() : 0;
  if (n_regions != in.region_categories.size())
    throw std::invalid_argument("assemble: region category annotation mismatch");
  if (n_knowledge != in.knowledge_categories.size())
    throw std::invalid_argument("assemble: knowledge category annotation mismatch");
  return assemble({{SegmentKind::region, &in.regions},
                   {SegmentKind::knowledge, &in.knowledge},
                   {SegmentKind::transcript, &in.transcript},
                   {SegmentKind::caption, &in.caption}},
                  in, pos, type_table);
}

StreamInput assemble_internal(const AssemblyInputs& in, const PositionTables& pos,
                              const Tensor& type_table) {
  AssemblyInputs stripped = in;
  stripped.region_categories.clear();
  stripped.knowledge_categories.clear();
  return assemble({{SegmentKind::transcript, &in.transcript},
                   {SegmentKind::caption, &in.caption},
                   {SegmentKind::video, &in.video}},
                  stripped, pos, type_table);
}

}  // namespace textkg
