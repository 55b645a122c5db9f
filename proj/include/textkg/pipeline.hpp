#pragma once

#include <string>
#include <vector>

#include "textkg/config.hpp"
#include "textkg/kg.hpp"
#include "textkg/manifest.hpp"
#include "textkg/model.hpp"

namespace textkg {

// Everything a forward pass needs for one clip, with ablation switches
// already applied: disabled modalities are simply absent here.
struct PreparedClip {
  std::string video_id;
  std::string clip_id;

  Tensor region_feats;  // undefined when regions are disabled or absent
  std::vector<std::string> region_categories;
  std::vector<int> region_frames;

  std::vector<KnowledgeTriple> knowledge;
  std::vector<std::string> knowledge_categories;  // source object per triple

  std::vector<std::string> transcript;

  Tensor appearance;  // undefined when video is disabled or the clip has none
  Tensor motion;

  std::vector<std::string> caption_words;  // first reference, truncated to max_caption
  std::vector<std::size_t> target_ids;     // w1..wl, EOS, PAD — one per caption input row
};

// Per-object retrieval: for each category (order of first appearance across
// the given region categories) retrieve triples, rank them against the
// transcript (or keep insertion order when selection is off or the
// transcript is empty), keep the top n_k, then dedup across objects.
std::vector<KnowledgeTriple> retrieve_for_categories(const KnowledgeGraph& kg,
                                                     const std::vector<std::string>& categories,
                                                     const std::vector<std::string>& transcript,
                                                     const EmbeddingTable& table, std::size_t n_k,
                                                     bool use_selection,
                                                     std::vector<std::string>* out_categories);

PreparedClip prepare_clip(const DatasetManifest& man, const VideoEntry& video,
                          const ClipSample& clip, const KnowledgeGraph& kg,
                          const EmbeddingTable& table, const ModalityConfig& cfg,
                          const AblationSwitches& ab, const Vocabulary& vocab);

// Convenience: prepare every clip of a manifest in manifest order.
std::vector<PreparedClip> prepare_dataset(const DatasetManifest& man, const KnowledgeGraph& kg,
                                          const EmbeddingTable& table, const ModalityConfig& cfg,
                                          const AblationSwitches& ab, const Vocabulary& vocab);

struct BuiltStreams {
  StreamInput ext;
  StreamInput inten;
};

// Token assembly for one clip around the given caption words. Teacher
// forcing passes the reference with include_eos=true; decoding passes the
// generated prefix with include_eos=false.
BuiltStreams build_streams(TextKGModel& model, const PreparedClip& clip,
                           const std::vector<std::string>& caption_words, bool include_eos,
                           const EmbeddingTable& table);

// −Σ_i (λ1·log z_ext[i, target_i] + λ2·log z_int[i, target_i]); rows whose
// target is PAD are excluded; log arguments floored at 1e-12.
Tensor two_stream_loss(const Tensor& z_ext, const Tensor& z_int,
                       const std::vector<std::size_t>& targets, double lambda1, double lambda2);

// Greedy decoding: start from BOS, append the fused argmax of the last
// caption position, stop at EOS or max_caption. Returns words without
// BOS/EOS.
std::vector<std::string> greedy_decode(TextKGModel& model, const PreparedClip& clip,
                                       const EmbeddingTable& table);

struct TrainReport {
  std::vector<double> epoch_loss;  // mean clip loss per completed epoch
  std::vector<double> epoch_lr;    // lr after the epoch's last optimizer step
  std::size_t steps = 0;           // optimizer steps taken
  double wall_seconds = 0.0;
  std::string checkpoint_path;
  std::string log_path;
};

// Teacher-forced training with gradient accumulation over batch_size clips
// per optimizer step. Writes `train_log.tsv` (epoch⟨TAB⟩loss⟨TAB⟩lr) and the
// final checkpoint (+ vocab sidecar) into out_dir.
TrainReport train(TextKGModel& model, const std::vector<PreparedClip>& clips,
                  const EmbeddingTable& table, const TrainConfig& cfg,
                  const std::string& out_dir);

}  // namespace textkg
