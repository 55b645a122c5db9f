#pragma once

#include <cstdint>
#include <string>

namespace textkg {

// Desk-scale synthetic cooking-video corpus. The world contains a handful of
// kitchen objects with Gaussian feature prototypes plus a twin pair of
// seasonings that share one region prototype, so their visual features are
// indistinguishable by construction. One caption word ("smoky") appears only
// in the knowledge base entry of one twin and in that twin's reference
// captions — transcripts never mention either twin — which makes the twin
// captions solvable through knowledge retrieval and unsolvable without it.
struct SyntheticSpec {
  std::size_t videos = 4;
  std::size_t clips_per_video = 2;
  std::size_t eval_clips = 0;  // held-out single-clip videos, same world
  std::uint64_t seed = 0;
  std::size_t region_dim = 16;
  std::size_t appearance_dim = 12;
  std::size_t motion_dim = 8;
  std::size_t word_dim = 24;
};

struct SyntheticPaths {
  std::string train_manifest;
  std::string eval_manifest;  // empty when eval_clips == 0
  std::string word_vectors;
  std::string general_kg;
  std::string pos_lexicon;
  std::string world;   // world.json: ground truth about the generated corpus
  std::string config;  // ready-to-run config wired to the files above
};

// Writes the corpus into out_dir (created if needed) and returns the file
// locations. Deterministic: same spec → byte-identical files.
SyntheticPaths generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir);

}  // namespace textkg
