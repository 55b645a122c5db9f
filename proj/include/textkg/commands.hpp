#pragma once

#include <cstdint>
#include <string>

#include "textkg/config.hpp"

namespace textkg {

// Shared command-line overrides. Values here win over the config file.
struct CommonOptions {
  std::string config_path;  // empty → built-in defaults
  bool has_seed = false;
  std::uint64_t seed = 0;
  std::string out_dir;   // overrides paths.out_dir
  std::string manifest;  // dataset override (training corpus stays the config's)

  bool no_video = false;
  bool no_regions = false;
  bool no_text = false;
  bool no_general_kg = false;
  bool no_specific_kg = false;
  bool no_knowledge_selection = false;
  bool no_kg = false;  // shorthand for both knowledge sources
};

// Config file + overrides → the effective run configuration.
RunConfig effective_config(const CommonOptions& opt);

int cmd_build_kg(const CommonOptions& opt);
int cmd_train(const CommonOptions& opt);
int cmd_caption(const CommonOptions& opt, const std::string& checkpoint);
int cmd_evaluate(const CommonOptions& opt, const std::string& predictions,
                 const std::string& mode);

struct GenSyntheticOptions {
  std::size_t videos = 4;
  std::size_t clips_per_video = 2;
  std::size_t eval_clips = 0;
};
int cmd_gen_synthetic(const CommonOptions& opt, const GenSyntheticOptions& gen);

// Finite-difference audit of the full forward + loss on a tiny model.
// negative_control corrupts one backward rule on purpose and succeeds only if
// the suite catches it.
int cmd_grad_check(const CommonOptions& opt, bool negative_control);

}  // namespace textkg
