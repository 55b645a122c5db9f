#include "textkg/config.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace textkg {

namespace fs = std::filesystem;
using nlohmann::json;

void ModalityConfig::validate() const {
  if (d_model == 0 || heads == 0 || d_model % heads != 0)
    throw std::invalid_argument("config: d_model must be a positive multiple of heads");
  if (n_blocks == 0) throw std::invalid_argument("config: n_blocks must be positive");
  if (max_caption == 0 || max_transcript == 0 || max_video_frames == 0 || max_objects == 0)
    throw std::invalid_argument("config: sequence caps must be positive");
  if (word_dim == 0) throw std::invalid_argument("config: word_dim must be positive");
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

// misspelled keys fail loudly instead of silently keeping a default
void check_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::runtime_error("config: unknown key '" + it.key() + "' in section '" + section +
                               "'");
  }
}

RunConfig from_json(const json& root) {
  RunConfig c;
  check_keys(root, "(top level)", {"model", "train", "fusion", "paths"});
  if (root.contains("model")) {
    const auto& m = root["model"];
    check_keys(m, "model",
               {"d_model", "heads", "n_blocks", "n_r", "n_k", "max_caption", "max_transcript",
                "fps_sampled", "appearance_dim", "motion_dim", "region_dim", "word_dim",
                "max_video_frames", "max_objects", "dropout"});
    read(m, "d_model", c.model.d_model);
    read(m, "heads", c.model.heads);
    read(m, "n_blocks", c.model.n_blocks);
    read(m, "n_r", c.model.n_r);
    read(m, "n_k", c.model.n_k);
    read(m, "max_caption", c.model.max_caption);
    read(m, "max_transcript", c.model.max_transcript);
    read(m, "fps_sampled", c.model.fps_sampled);
    read(m, "appearance_dim", c.model.appearance_dim);
    read(m, "motion_dim", c.model.motion_dim);
    read(m, "region_dim", c.model.region_dim);
    read(m, "word_dim", c.model.word_dim);
    read(m, "max_video_frames", c.model.max_video_frames);
    read(m, "max_objects", c.model.max_objects);
    read(m, "dropout", c.model.dropout);
  }
  if (root.contains("train")) {
    const auto& t = root["train"];
    check_keys(t, "train",
               {"lambda1", "lambda2", "base_lr", "warmup_fraction", "weight_decay",
                "batch_size", "epochs",
                "seed", "max_steps", "stop_loss", "use_video", "use_regions", "use_text",
                "use_general_kg", "use_specific_kg", "use_knowledge_selection"});
    read(t, "lambda1", c.train.lambda1);
    read(t, "lambda2", c.train.lambda2);
    read(t, "base_lr", c.train.base_lr);
    read(t, "warmup_fraction", c.train.warmup_fraction);
    read(t, "weight_decay", c.train.weight_decay);
    read(t, "batch_size", c.train.batch_size);
    read(t, "epochs", c.train.epochs);
    read(t, "seed", c.train.seed);
    read(t, "max_steps", c.train.max_steps);
    read(t, "stop_loss", c.train.stop_loss);
    read(t, "use_video", c.train.ablation.use_video);
    read(t, "use_regions", c.train.ablation.use_regions);
    read(t, "use_text", c.train.ablation.use_text);
    read(t, "use_general_kg", c.train.ablation.use_general_kg);
    read(t, "use_specific_kg", c.train.ablation.use_specific_kg);
    read(t, "use_knowledge_selection", c.train.ablation.use_knowledge_selection);
  }
  if (root.contains("fusion")) {
    check_keys(root["fusion"], "fusion", {"omega1", "omega2"});
    read(root["fusion"], "omega1", c.omega1);
    read(root["fusion"], "omega2", c.omega2);
  }
  if (root.contains("paths")) {
    const auto& p = root["paths"];
    check_keys(p, "paths", {"manifest", "word_vectors", "general_kg", "pos_lexicon", "out_dir"});
    read(p, "manifest", c.paths.manifest);
    read(p, "word_vectors", c.paths.word_vectors);
    read(p, "general_kg", c.paths.general_kg);
    read(p, "pos_lexicon", c.paths.pos_lexicon);
    read(p, "out_dir", c.paths.out_dir);
  }
  c.model.validate();
  if (c.train.lambda1 < 0 || c.train.lambda2 < 0 || c.train.lambda1 + c.train.lambda2 <= 0)
    throw std::runtime_error("config: loss weights must be non-negative and not both zero");
  if (c.train.base_lr <= 0) throw std::runtime_error("config: base_lr must be positive");
  if (c.train.warmup_fraction < 0 || c.train.warmup_fraction > 1)
    throw std::runtime_error("config: warmup_fraction must lie in [0, 1]");
  if (c.train.weight_decay < 0)
    throw std::runtime_error("config: weight_decay must be non-negative");
  if (c.train.batch_size == 0) throw std::runtime_error("config: batch_size must be positive");
  if (c.omega1 < 0 || c.omega2 < 0 || c.omega1 + c.omega2 <= 0)
    throw std::runtime_error("config: fusion weights must be non-negative and not both zero");
  return c;
}

std::string resolve_against(const std::string& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).string();
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
  }
  return from_json(root);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  RunConfig c = parse_run_config(text);
  std::string base = fs::path(path).parent_path().string();
  if (!base.empty()) {
    c.paths.manifest = resolve_against(base, c.paths.manifest);
    c.paths.word_vectors = resolve_against(base, c.paths.word_vectors);
    c.paths.general_kg = resolve_against(base, c.paths.general_kg);
    c.paths.pos_lexicon = resolve_against(base, c.paths.pos_lexicon);
    c.paths.out_dir = resolve_against(base, c.paths.out_dir);
  }
  return c;
}

std::string dump_run_config(const RunConfig& c) {
  json root;
  root["model"] = {{"d_model", c.model.d_model},
                   {"heads", c.model.heads},
                   {"n_blocks", c.model.n_blocks},
                   {"n_r", c.model.n_r},
                   {"n_k", c.model.n_k},
                   {"max_caption", c.model.max_caption},
                   {"max_transcript", c.model.max_transcript},
                   {"fps_sampled", c.model.fps_sampled},
                   {"appearance_dim", c.model.appearance_dim},
                   {"motion_dim", c.model.motion_dim},
                   {"region_dim", c.model.region_dim},
                   {"word_dim", c.model.word_dim},
                   {"max_video_frames", c.model.max_video_frames},
                   {"max_objects", c.model.max_objects},
                   {"dropout", c.model.dropout}};
  root["train"] = {{"lambda1", c.train.lambda1},
                   {"lambda2", c.train.lambda2},
                   {"base_lr", c.train.base_lr},
                   {"warmup_fraction", c.train.warmup_fraction},
                   {"weight_decay", c.train.weight_decay},
                   {"batch_size", c.train.batch_size},
                   {"epochs", c.train.epochs},
                   {"seed", c.train.seed},
                   {"max_steps", c.train.max_steps},
                   {"stop_loss", c.train.stop_loss},
                   {"use_video", c.train.ablation.use_video},
                   {"use_regions", c.train.ablation.use_regions},
                   {"use_text", c.train.ablation.use_text},
                   {"use_general_kg", c.train.ablation.use_general_kg},
                   {"use_specific_kg", c.train.ablation.use_specific_kg},
                   {"use_knowledge_selection", c.train.ablation.use_knowledge_selection}};
  root["fusion"] = {{"omega1", c.omega1}, {"omega2", c.omega2}};
  root["paths"] = {{"manifest", c.paths.manifest},
                   {"word_vectors", c.paths.word_vectors},
                   {"general_kg", c.paths.general_kg},
                   {"pos_lexicon", c.paths.pos_lexicon},
                   {"out_dir", c.paths.out_dir}};
  return root.dump(2);
}

}  // namespace textkg
