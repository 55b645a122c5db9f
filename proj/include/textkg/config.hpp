#pragma once

#include <cstdint>
#include <string>

namespace textkg {

struct ModalityConfig {
  std::size_t d_model = 768;
  std::size_t heads = 12;
  std::size_t n_blocks = 2;
  std::size_t n_r = 6;   // regions kept per frame
  std::size_t n_k = 5;   // knowledge triples kept per object
  std::size_t max_caption = 20;
  std::size_t max_transcript = 300;
  std::size_t fps_sampled = 2;
  std::size_t appearance_dim = 12;
  std::size_t motion_dim = 8;
  std::size_t region_dim = 16;
  std::size_t word_dim = 300;
  // capacity knobs for the positional tables
  std::size_t max_video_frames = 64;
  std::size_t max_objects = 32;
  double dropout = 0.0;  // reserved; regularization comes from weight decay

  void validate() const;
};

struct AblationSwitches {
  bool use_video = true;
  bool use_regions = true;
  bool use_text = true;
  bool use_general_kg = true;
  bool use_specific_kg = true;
  bool use_knowledge_selection = true;
};

struct TrainConfig {
  double lambda1 = 0.5;
  double lambda2 = 0.5;
  double base_lr = 1e-4;
  double warmup_fraction = 0.1;
  double weight_decay = 0.01;
  std::size_t batch_size = 6;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  std::size_t max_steps = 0;  // 0 → bounded by epochs only
  double stop_loss = 0.0;     // stop early when epoch mean loss dips below; 0 → never
  AblationSwitches ablation;
};

struct RunPaths {
  std::string manifest;
  std::string word_vectors;
  std::string general_kg;
  std::string pos_lexicon;
  std::string out_dir = ".";
};

struct RunConfig {
  ModalityConfig model;
  TrainConfig train;
  double omega1 = 0.8;
  double omega2 = 0.2;
  RunPaths paths;
};

// JSON config document. Missing keys keep their defaults; relative paths in
// the `paths` section resolve against the config file's directory.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);
std::string dump_run_config(const RunConfig& c);  // all effective values

}  // namespace textkg
