#pragma once

#include <string>
#include <vector>

#include "textkg/embeddings.hpp"
#include "textkg/kg.hpp"
#include "textkg/tensor.hpp"

namespace textkg {

enum class SegmentKind : std::size_t {
  region = 0,
  knowledge = 1,
  transcript = 2,
  caption = 3,
  video = 4,
};

constexpr std::size_t kSegmentKinds = 5;
std::string segment_kind_name(SegmentKind k);

struct Segment {
  SegmentKind kind;
  std::size_t start = 0;
  std::size_t length = 0;
};

// Partition of a stream's rows into modality segments, in the stream's fixed
// order (external: region, knowledge, transcript, caption; internal:
// transcript, caption, video). Empty segments are recorded with length 0.
struct SegmentMap {
  std::vector<Segment> segments;
  std::size_t total = 0;
  std::vector<std::string> region_categories;     // one per region token
  std::vector<std::string> knowledge_categories;  // source object category per knowledge token

  const Segment* find(SegmentKind k) const;
  SegmentKind kind_of(std::size_t row) const;
  std::size_t caption_start() const;
  std::size_t caption_length() const;
  bool has(SegmentKind k) const;
};

struct StreamInput {
  Tensor tokens;  // L × d_model
  SegmentMap segmap;
};

// x·W + b; handles zero-row x.
Tensor linear_project(const Tensor& x, const Tensor& w, const Tensor& b);

// Per frame, appearance‖motion concatenated then projected; one token per frame.
Tensor make_video_tokens(const Tensor& appearance, const Tensor& motion, const Tensor& w,
                         const Tensor& b);

struct RegionTokens {
  Tensor tokens;
  std::vector<std::string> categories;
};

// Keeps the top n_r detections per frame (producer sorts by confidence
// descending within a frame) and projects them.
RegionTokens make_region_tokens(const Tensor& feats, const std::vector<std::string>& categories,
                                const std::vector<int>& frames, std::size_t n_r, const Tensor& w,
                                const Tensor& b);

// Word vectors projected to d_model, truncated to cap. Used for transcripts.
Tensor make_text_tokens(const std::vector<std::string>& words, const EmbeddingTable& table,
                        std::size_t cap, const Tensor& w, const Tensor& b);

// Caption rows: BOS + projected words (truncated to cap) + optional EOS.
// BOS/EOS are learned d_model rows, not projected.
Tensor make_caption_tokens(const std::vector<std::string>& words, const EmbeddingTable& table,
                           std::size_t cap, bool include_eos, const Tensor& w, const Tensor& b,
                           const Tensor& bos_vec, const Tensor& eos_vec);

struct KnowledgeTokens {
  Tensor tokens;
  std::vector<std::string> categories;
};

// Token per triple: proj(embed(tail) + relation_embedding[rel_id]).
// rel_ids index rows of relation_table (callers map unknown labels to the
// shared rel_unk row).
KnowledgeTokens make_knowledge_tokens(const std::vector<KnowledgeTriple>& triples,
                                      const std::vector<std::string>& source_categories,
                                      const std::vector<std::size_t>& rel_ids,
                                      const EmbeddingTable& table, const Tensor& relation_table,
                                      const Tensor& w, const Tensor& b);

struct PositionTables {
  Tensor region;      // (n_r · max_video_frames) × d
  Tensor knowledge;   // (n_k · max_objects) × d
  Tensor transcript;  // max_transcript × d
  Tensor caption;     // (max_caption + 2) × d
  Tensor video;       // max_video_frames × d

  const Tensor& table_for(SegmentKind k) const;
};

struct AssemblyInputs {
  Tensor regions;  // zero-row tensors mark empty segments
  std::vector<std::string> region_categories;
  Tensor knowledge;
  std::vector<std::string> knowledge_categories;
  Tensor transcript;
  Tensor caption;
  Tensor video;
};

// Concatenation in the stream's fixed order, with per-segment learned
// position rows and the stream's per-kind type row added to every token.
// type_table has one row per SegmentKind value.
StreamInput assemble_external(const AssemblyInputs& in, const PositionTables& pos,
                              const Tensor& type_table);
StreamInput assemble_internal(const AssemblyInputs& in, const PositionTables& pos,
                              const Tensor& type_table);

}  // namespace textkg
