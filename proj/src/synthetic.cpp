#include "textkg/synthetic.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "textkg/config.hpp"
#include "textkg/features.hpp"
#include "textkg/manifest.hpp"
#include "textkg/rng.hpp"
#include "textkg/tensor.hpp"

namespace textkg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// --- the fixed world ---------------------------------------------------------

const std::vector<std::string> kObjects = {"pan",     "knife", "carrot", "onion",
                                           "chicken", "bowl",  "tomato", "board"};
const std::vector<std::string> kTwins = {"salt", "paprika"};  // visually identical
const std::vector<std::string> kAdjectives = {"fresh",  "clean", "sharp", "small",
                                              "large",  "ripe",  "golden", "tender",
                                              "crisp",  "warm",  "cold",   "thin",
                                              "thick",  "soft",  "juicy",  "bright"};
const std::vector<std::string> kVerbs = {"chop",  "stir",  "wash",     "slice", "heat", "mix",
                                         "whisk", "pour",  "grate",    "peel",  "dice", "fold",
                                         "toss",  "crush", "sprinkle", "rinse"};
const std::vector<std::string> kAdverbs = {"gently",  "quickly", "carefully", "slowly",
                                           "evenly",  "firmly",  "lightly",   "briskly",
                                           "neatly",  "swiftly", "softly",    "steadily"};
// garnish nouns only captions use; they never get regions or triples
const std::vector<std::string> kNouns = {"garlic",  "pepper",  "butter", "lemon",
                                         "basil",   "ginger",  "honey",  "cream",
                                         "flour",   "sugar",   "vinegar", "parsley",
                                         "thyme",   "cumin",   "zest",    "broth"};

constexpr const char* kPlantedWord = "smoky";
constexpr const char* kPlantedCategory = "paprika";
constexpr double kNoiseSigma = 0.05;

// head⟨TAB⟩relation⟨TAB⟩tail rows of the general knowledge base. The planted
// fact is the only place outside paprika captions where "smoky" exists; the
// twin salt gets a structurally identical but differently-worded entry.
const std::vector<std::array<const char*, 3>> kGeneralTriples = {
    {"pan", "used_for", "cooking"},      {"pan", "is_a", "utensil"},
    {"knife", "used_for", "cutting"},    {"knife", "is_a", "utensil"},
    {"carrot", "is_a", "vegetable"},     {"onion", "is_a", "vegetable"},
    {"chicken", "is_a", "meat"},         {"bowl", "is_a", "container"},
    {"tomato", "is_a", "vegetable"},     {"board", "used_for", "cutting"},
    {"paprika", "has_property", "smoky"}, {"paprika", "is_a", "seasoning"},
    {"salt", "has_property", "fine"},    {"salt", "is_a", "seasoning"},
};

// every word any generated file can contain
std::vector<std::string> word_list() {
  std::vector<std::string> words;
  auto extend = [&](const std::vector<std::string>& v) {
    words.insert(words.end(), v.begin(), v.end());
  };
  extend(kObjects);
  extend(kTwins);
  extend(kAdjectives);
  extend(kVerbs);
  extend(kAdverbs);
  extend(kNouns);
  extend({"now", "take", "the", "and", "it", "then", "season", "everything", "nicely"});
  extend({"add", kPlantedWord});
  extend({"used", "for", "cooking", "is", "a", "utensil", "cutting", "vegetable", "meat",
          "container", "seasoning", "has", "property", "fine"});
  return words;
}

std::vector<double> prototype(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

std::vector<double> noisy(const std::vector<double>& proto, Rng& rng) {
  std::vector<double> v(proto);
  for (auto& x : v) x += kNoiseSigma * rng.normal();
  return v;
}

struct World {
  std::unordered_map<std::string, std::vector<double>> region_proto;      // per category
  std::unordered_map<std::string, std::vector<double>> appearance_proto;  // per object
  std::unordered_map<std::string, std::vector<double>> motion_proto;      // per verb
};

World build_world(const SyntheticSpec& spec) {
  Rng rng(mix64(spec.seed, fnv1a64("prototypes")));
  World w;
  for (const auto& obj : kObjects) {
    w.region_proto[obj] = prototype(rng, spec.region_dim);
    w.appearance_proto[obj] = prototype(rng, spec.appearance_dim);
  }
  // the twins share one region prototype: nothing in the features separates them
  std::vector<double> shared = prototype(rng, spec.region_dim);
  for (const auto& t : kTwins) w.region_proto[t] = shared;
  for (const auto& v : kVerbs) w.motion_proto[v] = prototype(rng, spec.motion_dim);
  return w;
}

// Shuffled-deck sampling: a full pass uses every pool entry once before any
// repeats, which keeps small fixtures close to one-word-per-slot vocabulary.
struct Deck {
  const std::vector<std::string>* pool = nullptr;
  std::vector<std::size_t> order;
  std::size_t next = 0;

  explicit Deck(const std::vector<std::string>& p) : pool(&p) {}
  const std::string& draw(Rng& rng) {
    if (next >= order.size()) {
      order.resize(pool->size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.index(i)]);
      }
      next = 0;
    }
    return (*pool)[order[next++]];
  }
};

struct Decks {
  Deck objects{kObjects};
  Deck adjectives{kAdjectives};
  Deck verbs{kVerbs};
  Deck adverbs{kAdverbs};
  Deck nouns{kNouns};
};

struct ClipPlan {
  std::string video_id;
  std::string clip_id;
  std::string object, adj1, verb1, adj2, verb2, noun, adverb, twin;
};

ClipSample realize_clip(const ClipPlan& plan, const World& world, const SyntheticSpec& spec,
                        const fs::path& out_dir, Rng& rng) {
  ClipSample clip;
  clip.clip_id = plan.clip_id;

  clip.transcript = {"now",    "take",     "the",        plan.adj1, plan.object,
                     "and",    plan.adverb, plan.verb1,  "it",      "then",
                     "season", "everything", "nicely"};

  std::vector<std::string> caption = {plan.verb1, "the",      plan.adj1, plan.object,
                                      "then",     plan.verb2, "the",     plan.adj2,
                                      plan.noun,  plan.adverb, "and",    "add",
                                      "the"};
  if (plan.twin == kPlantedCategory) caption.push_back(kPlantedWord);
  caption.push_back(plan.twin);
  clip.captions = {caption};

  // two frames of video features around the object/action prototypes
  std::size_t frames = 2;
  std::vector<double> app, mot;
  for (std::size_t f = 0; f < frames; ++f) {
    auto a = noisy(world.appearance_proto.at(plan.object), rng);
    app.insert(app.end(), a.begin(), a.end());
    auto m = noisy(world.motion_proto.at(plan.verb1), rng);
    mot.insert(mot.end(), m.begin(), m.end());
  }
  fs::create_directories(out_dir / "features");
  clip.appearance_path = "features/" + plan.clip_id + ".app.txt";
  clip.motion_path = "features/" + plan.clip_id + ".mot.txt";
  save_feature_matrix_text((out_dir / clip.appearance_path).string(),
                           Tensor::matrix(frames, spec.appearance_dim, std::move(app)));
  save_feature_matrix_text((out_dir / clip.motion_path).string(),
                           Tensor::matrix(frames, spec.motion_dim, std::move(mot)));

  // frame 0 detects the main object and the twin seasoning; frame 1 the object
  clip.regions.push_back({noisy(world.region_proto.at(plan.object), rng), "", plan.object,
                          0.9, 0});
  clip.regions.push_back({noisy(world.region_proto.at(plan.twin), rng), "", plan.twin,
                          0.8, 0});
  clip.regions.push_back({noisy(world.region_proto.at(plan.object), rng), "", plan.object,
                          0.85, 1});
  return clip;
}

ClipPlan plan_clip(const std::string& video_id, const std::string& clip_id,
                   std::size_t global_index, Decks& decks, Rng& rng) {
  ClipPlan p;
  p.video_id = video_id;
  p.clip_id = clip_id;
  p.object = decks.objects.draw(rng);
  p.adj1 = decks.adjectives.draw(rng);
  p.verb1 = decks.verbs.draw(rng);
  p.adj2 = decks.adjectives.draw(rng);
  p.verb2 = decks.verbs.draw(rng);
  p.noun = decks.nouns.draw(rng);
  p.adverb = decks.adverbs.draw(rng);
  // exact 2:1 salt:paprika cycle, independent of the style draws above
  p.twin = (global_index % 3 == 1) ? "paprika" : "salt";
  return p;
}

std::string zero_pad(std::size_t n) {
  std::string s = std::to_string(n);
  while (s.size() < 3) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

SyntheticPaths generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir_str) {
  if (spec.videos == 0 || spec.clips_per_video == 0)
    throw std::invalid_argument("gen-synthetic: videos and clips per video must be positive");
  fs::path out_dir(out_dir_str);
  fs::create_directories(out_dir);

  World world = build_world(spec);
  SyntheticPaths paths;

  // --- train manifest --------------------------------------------------------
  std::vector<std::string> train_planted;
  {
    Rng rng(mix64(spec.seed, fnv1a64("train")));
    Decks decks;
    DatasetManifest man;
    man.base_dir = out_dir.string();
    std::size_t global = 0;
    for (std::size_t v = 0; v < spec.videos; ++v) {
      VideoEntry video;
      video.video_id = "v" + zero_pad(v + 1);
      for (std::size_t c = 0; c < spec.clips_per_video; ++c, ++global) {
        std::string clip_id = video.video_id + "_c" + std::to_string(c + 1);
        ClipPlan plan = plan_clip(video.video_id, clip_id, global, decks, rng);
        if (plan.twin == kPlantedCategory) train_planted.push_back(clip_id);
        video.clips.push_back(realize_clip(plan, world, spec, out_dir, rng));
      }
      man.videos.push_back(std::move(video));
    }
    paths.train_manifest = (out_dir / "train_manifest.json").string();
    save_manifest(paths.train_manifest, man);
  }

  // --- held-out eval manifest (same world, fresh noise and draws) -------------
  std::vector<std::string> eval_planted;
  if (spec.eval_clips > 0) {
    Rng rng(mix64(spec.seed, fnv1a64("eval")));
    Decks decks;
    DatasetManifest man;
    man.base_dir = out_dir.string();
    for (std::size_t e = 0; e < spec.eval_clips; ++e) {
      VideoEntry video;
      video.video_id = "e" + zero_pad(e + 1);
      std::string clip_id = video.video_id + "_c1";
      ClipPlan plan = plan_clip(video.video_id, clip_id, e, decks, rng);
      if (plan.twin == kPlantedCategory) eval_planted.push_back(clip_id);
      video.clips.push_back(realize_clip(plan, world, spec, out_dir, rng));
      man.videos.push_back(std::move(video));
    }
    paths.eval_manifest = (out_dir / "eval_manifest.json").string();
    save_manifest(paths.eval_manifest, man);
  }

  // --- word vectors ------------------------------------------------------------
  {
    Rng rng(mix64(spec.seed, fnv1a64("vectors")));
    paths.word_vectors = (out_dir / "word_vectors.txt").string();
    std::ofstream out(paths.word_vectors);
    if (!out) throw std::runtime_error("gen-synthetic: cannot write " + paths.word_vectors);
    out.precision(17);
    for (const auto& word : word_list()) {
      std::vector<double> v = prototype(rng, spec.word_dim);
      double norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      out << word;
      for (double x : v) out << ' ' << x / norm;
      out << '\n';
    }
  }

  // --- general knowledge base ---------------------------------------------------
  {
    paths.general_kg = (out_dir / "general_kg.tsv").string();
    std::ofstream out(paths.general_kg);
    if (!out) throw std::runtime_error("gen-synthetic: cannot write " + paths.general_kg);
    out << "# head\trelation\ttail\n";
    for (const auto& t : kGeneralTriples) out << t[0] << '\t' << t[1] << '\t' << t[2] << '\n';
  }

  // --- part-of-speech lexicon ---------------------------------------------------
  {
    paths.pos_lexicon = (out_dir / "pos_lexicon.tsv").string();
    std::ofstream out(paths.pos_lexicon);
    if (!out) throw std::runtime_error("gen-synthetic: cannot write " + paths.pos_lexicon);
    for (const auto& w : kObjects) out << w << "\tnoun\n";
    for (const auto& w : kTwins) out << w << "\tnoun\n";
    for (const auto& w : kNouns) out << w << "\tnoun\n";
    for (const auto& w : kAdjectives) out << w << "\tadjective\n";
    for (const auto& w : kVerbs) out << w << "\tverb\n";
    out << "season\tverb\n";
    for (const auto& w : kAdverbs) out << w << "\tadverb\n";
  }

  // --- ready-to-run config --------------------------------------------------------
  {
    RunConfig cfg;
    cfg.model.d_model = 64;
    cfg.model.heads = 4;
    cfg.model.n_blocks = 2;
    cfg.model.n_r = 2;
    cfg.model.n_k = 5;
    cfg.model.max_caption = 16;
    cfg.model.max_transcript = 16;
    cfg.model.fps_sampled = 2;
    cfg.model.appearance_dim = spec.appearance_dim;
    cfg.model.motion_dim = spec.motion_dim;
    cfg.model.region_dim = spec.region_dim;
    cfg.model.word_dim = spec.word_dim;
    cfg.model.max_video_frames = 4;
    cfg.model.max_objects = 4;
    cfg.train.base_lr = 1e-3;
    cfg.train.batch_size = 6;
    cfg.train.epochs = 1000;
    cfg.train.stop_loss = 0.02;
    cfg.train.seed = spec.seed;
    cfg.paths.manifest = "train_manifest.json";
    cfg.paths.word_vectors = "word_vectors.txt";
    cfg.paths.general_kg = "general_kg.tsv";
    cfg.paths.pos_lexicon = "pos_lexicon.tsv";
    cfg.paths.out_dir = ".";
    paths.config = (out_dir / "config.json").string();
    std::ofstream out(paths.config);
    if (!out) throw std::runtime_error("gen-synthetic: cannot write " + paths.config);
    out << dump_run_config(cfg) << '\n';
  }

  // --- world ground truth -----------------------------------------------------------
  {
    json w;
    w["seed"] = spec.seed;
    w["objects"] = kObjects;
    w["twins"] = kTwins;
    w["twin_ratio"] = "2:1 salt:paprika";
    w["planted"] = {{"word", kPlantedWord},
                    {"category", kPlantedCategory},
                    {"relation", "has_property"},
                    {"source", "general_kg"}};
    w["adjectives"] = kAdjectives;
    w["verbs"] = kVerbs;
    w["adverbs"] = kAdverbs;
    w["nouns"] = kNouns;
    w["counts"] = {{"train_videos", spec.videos},
                   {"clips_per_video", spec.clips_per_video},
                   {"train_clips", spec.videos * spec.clips_per_video},
                   {"eval_clips", spec.eval_clips},
                   {"words", word_list().size()}};
    w["dims"] = {{"region", spec.region_dim},
                 {"appearance", spec.appearance_dim},
                 {"motion", spec.motion_dim},
                 {"word", spec.word_dim}};
    w["noise_sigma"] = kNoiseSigma;
    w["train_planted_clips"] = train_planted;
    w["eval_planted_clips"] = eval_planted;
    w["files"] = {{"train_manifest", "train_manifest.json"},
                  {"eval_manifest", spec.eval_clips > 0 ? "eval_manifest.json" : ""},
                  {"word_vectors", "word_vectors.txt"},
                  {"general_kg", "general_kg.tsv"},
                  {"pos_lexicon", "pos_lexicon.tsv"},
                  {"config", "config.json"}};
    paths.world = (out_dir / "world.json").string();
    std::ofstream out(paths.world);
    if (!out) throw std::runtime_error("gen-synthetic: cannot write " + paths.world);
    out << w.dump(2) << '\n';
  }

  return paths;
}

}  // namespace textkg
