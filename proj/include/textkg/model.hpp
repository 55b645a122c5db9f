#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "textkg/config.hpp"
#include "textkg/embeddings.hpp"
#include "textkg/optim.hpp"
#include "textkg/tensor.hpp"
#include "textkg/tokenize.hpp"

namespace textkg {

// Why an attention entry is blocked; kAllowed entries carry 0 in the additive
// mask, everything else −inf.
enum class MaskReason : std::uint8_t {
  allowed = 0,
  causal = 1,              // future caption key for a caption query
  context_caption = 2,     // caption key for a non-caption query
  knowledge_isolation = 3, // knowledge key for a caption query
  knowledge_relevance = 4, // region↔knowledge with mismatched categories
};

struct MaskMatrix {
  Tensor additive;  // {0, −inf} entries, Lq×Lk
  std::vector<MaskReason> reasons;

  MaskReason reason_at(std::size_t q, std::size_t k) const {
    return reasons[q * cols + k];
  }
  std::size_t rows = 0, cols = 0;
};

MaskMatrix build_internal_mask(const SegmentMap& segmap);
MaskMatrix build_external_mask(const SegmentMap& segmap);
// Queries from one stream over the other stream's keys. Knowledge isolation
// applies when the key stream carries a knowledge segment.
MaskMatrix build_cross_mask(const SegmentMap& query, const SegmentMap& key);

// Post-softmax attention weights captured during a forward pass, for
// mask-structure assertions.
struct AttnProbe {
  struct Entry {
    std::string label;  // e.g. "ext.block0.self", "int.block1.cross"
    std::size_t head = 0;
    Tensor weights;  // Lq×Lk
  };
  std::vector<Entry> entries;
};

struct AttentionParams {
  Tensor wq, wk, wv;  // d×d, no bias
  Tensor wo, bo;      // output projection d×d + bias
  Tensor ln_g, ln_b;
};

struct FfnParams {
  Tensor w1, b1;  // d → 4d
  Tensor w2, b2;  // 4d → d
  Tensor ln_g, ln_b;
};

struct SublayerSet {
  AttentionParams attn;
  FfnParams ffn;
};

struct BlockParams {
  SublayerSet self_set;
  SublayerSet cross_set;
};

// layer_norm(x_q + proj(multi-head attention)). allow_empty_rows lets a
// cross-attention query with no attendable key contribute zero attention
// output instead of erroring (legitimate under heavy ablations where the
// other stream is caption-only).
Tensor attention_sublayer(const Tensor& x_q, const Tensor& x_kv, const MaskMatrix& mask,
                          const AttentionParams& p, std::size_t heads,
                          bool allow_empty_rows = false, AttnProbe* probe = nullptr,
                          const std::string& label = "");

Tensor ffn_sublayer(const Tensor& x, const FfnParams& p);

// The full two-stream model: token-side parameters, both block stacks, and
// the two output heads.
struct TextKGModel {
  ModalityConfig cfg;
  double omega1 = 0.8, omega2 = 0.2;
  Vocabulary vocab;
  std::vector<std::string> relations;  // label → relation_table row; +1 row for rel_unk

  // modality projections
  Tensor proj_video_w, proj_video_b;
  Tensor proj_region_w, proj_region_b;
  Tensor proj_transcript_w, proj_transcript_b;
  Tensor proj_caption_w, proj_caption_b;  // shared by both streams
  Tensor proj_knowledge_w, proj_knowledge_b;
  // special caption rows + relation embeddings (word_dim wide, pre-projection)
  Tensor bos_vec, eos_vec;
  Tensor relation_table;
  // positional + type embeddings
  PositionTables pos;
  Tensor type_ext, type_int;  // kSegmentKinds × d each
  // stacks + heads
  std::vector<BlockParams> ext_blocks, int_blocks;
  Tensor head_ext_w, head_ext_b, head_int_w, head_int_b;

  std::size_t relation_row(const std::string& label) const;  // unknown → rel_unk row

  struct NamedParam {
    std::string name;
    Tensor tensor;
    bool decay;  // L2 weight decay applies (2-D projection/attention weights only)
  };
  std::vector<NamedParam> parameters();
  std::vector<const NamedParam*> parameters_const() const;
};

TextKGModel init_model(const ModalityConfig& cfg, double omega1, double omega2,
                       const Vocabulary& vocab, const std::vector<std::string>& relations,
                       std::uint64_t seed);

struct ForwardResult {
  Tensor z_ext;  // caption_len × V, row-softmaxed
  Tensor z_int;
};

ForwardResult forward(TextKGModel& model, const StreamInput& ext, const StreamInput& inten,
                      AttnProbe* probe = nullptr);

struct Fused {
  std::vector<double> p;
  std::size_t y = 0;
};

// Eq-style fusion: p = ω1·z_ext + ω2·z_int, argmax with lowest-index ties.
Fused fuse_and_argmax(const std::vector<double>& z_ext_row, const std::vector<double>& z_int_row,
                      double omega1, double omega2);

// --- checkpoints -------------------------------------------------------------

// Magic "TKG1": parameter manifest (name, shape) then flat little-endian
// float64 payloads in manifest order. Vocabulary and relation labels ride in a
// text sidecar next to the checkpoint ("<path>.vocab").
void save_checkpoint(const std::string& path, TextKGModel& model);
void load_checkpoint(const std::string& path, TextKGModel& model);  // shapes must match
void save_vocab_sidecar(const std::string& path, const Vocabulary& vocab,
                        const std::vector<std::string>& relations);
void load_vocab_sidecar(const std::string& path, Vocabulary& vocab,
                        std::vector<std::string>& relations);

}  // namespace textkg
