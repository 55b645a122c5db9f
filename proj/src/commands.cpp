#include "textkg/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "textkg/embeddings.hpp"
#include "textkg/kg.hpp"
#include "textkg/manifest.hpp"
#include "textkg/metrics.hpp"
#include "textkg/model.hpp"
#include "textkg/pipeline.hpp"
#include "textkg/rng.hpp"
#include "textkg/synthetic.hpp"
#include "textkg/tensor.hpp"

namespace textkg {

namespace fs = std::filesystem;

namespace {

std::string fmt17(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir);
}

// Merged knowledge graph per the effective ablation switches. `man` supplies
// transcripts for phrase mining; per-source triple counts land in the
// optional out-parameters.
KnowledgeGraph assemble_kg(const RunConfig& cfg, const DatasetManifest* man,
                           std::size_t* general_count = nullptr,
                           std::size_t* specific_count = nullptr) {
  const AblationSwitches& ab = cfg.train.ablation;
  KnowledgeGraph general;
  if (ab.use_general_kg && !cfg.paths.general_kg.empty()) {
    general = load_general_kg(cfg.paths.general_kg);
  }
  KnowledgeGraph specific;
  if (ab.use_specific_kg) {
    if (cfg.paths.pos_lexicon.empty()) {
      throw std::runtime_error(
          "specific knowledge mining needs a pos_lexicon path (or pass --no-specific-kg)");
    }
    if (man == nullptr) {
      throw std::runtime_error("specific knowledge mining needs a dataset manifest");
    }
    PosLexicon lex = load_pos_lexicon(cfg.paths.pos_lexicon);
    std::vector<std::vector<std::string>> sentences;
    for (const auto& v : man->videos) {
      for (const auto& c : v.clips) {
        if (!c.transcript.empty()) sentences.push_back(c.transcript);
      }
    }
    specific = build_specific_kg(sentences, lex);
  }
  if (general_count) *general_count = general.size();
  if (specific_count) *specific_count = specific.size();
  return merge_graphs(general, specific);
}

Vocabulary caption_vocabulary(const DatasetManifest& man) {
  Vocabulary vocab;
  for (const auto& v : man.videos) {
    for (const auto& c : v.clips) {
      for (const auto& ref : c.captions) {
        for (const auto& w : ref) vocab.add(w);
      }
    }
  }
  return vocab;
}

EmbeddingTable load_vectors_for(const RunConfig& cfg, const char* who) {
  if (cfg.paths.word_vectors.empty()) {
    throw std::runtime_error(std::string(who) + ": no word_vectors path configured");
  }
  return load_word_vectors(cfg.paths.word_vectors, cfg.model.word_dim,
                           mix64(cfg.train.seed, fnv1a64("unk-vectors")));
}

DatasetManifest dataset_for(const RunConfig& cfg, const CommonOptions& opt, const char* who) {
  const std::string& path = opt.manifest.empty() ? cfg.paths.manifest : opt.manifest;
  if (path.empty()) {
    throw std::runtime_error(std::string(who) + ": no dataset manifest configured");
  }
  return load_manifest(path);
}

}  // namespace

RunConfig effective_config(const CommonOptions& opt) {
  RunConfig cfg;
  if (!opt.config_path.empty()) cfg = load_run_config(opt.config_path);
  if (opt.has_seed) cfg.train.seed = opt.seed;
  if (!opt.out_dir.empty()) cfg.paths.out_dir = opt.out_dir;
  AblationSwitches& ab = cfg.train.ablation;
  if (opt.no_video) ab.use_video = false;
  if (opt.no_regions) ab.use_regions = false;
  if (opt.no_text) ab.use_text = false;
  if (opt.no_general_kg || opt.no_kg) ab.use_general_kg = false;
  if (opt.no_specific_kg || opt.no_kg) ab.use_specific_kg = false;
  if (opt.no_knowledge_selection) ab.use_knowledge_selection = false;
  return cfg;
}

int cmd_build_kg(const CommonOptions& opt) {
  RunConfig cfg = effective_config(opt);
  DatasetManifest man;
  const DatasetManifest* man_ptr = nullptr;
  if (cfg.train.ablation.use_specific_kg) {
    man = dataset_for(cfg, opt, "build-kg");
    man_ptr = &man;
  }
  std::size_t n_general = 0, n_specific = 0;
  KnowledgeGraph kg = assemble_kg(cfg, man_ptr, &n_general, &n_specific);
  if (kg.size() == 0) {
    throw std::runtime_error(
        "build-kg: knowledge base is empty (no general triples, nothing mined)");
  }
  ensure_dir(cfg.paths.out_dir);
  std::string out_path = (fs::path(cfg.paths.out_dir) / "knowledge.tsv").string();
  save_kg_tsv(out_path, kg);
  std::cout << "build-kg\tgeneral_triples\t" << n_general << "\n";
  std::cout << "build-kg\tspecific_triples\t" << n_specific << "\n";
  std::cout << "build-kg\tmerged_triples\t" << kg.size() << "\n";
  std::cout << "build-kg\tdistinct_relations\t" << kg.relation_set.size() << "\n";
  std::cout << "build-kg\toutput\t" << out_path << "\n";
  return 0;
}

int cmd_train(const CommonOptions& opt) {
  RunConfig cfg = effective_config(opt);
  DatasetManifest man = dataset_for(cfg, opt, "train");
  EmbeddingTable table = load_vectors_for(cfg, "train");
  KnowledgeGraph kg = assemble_kg(cfg, &man);
  Vocabulary vocab = caption_vocabulary(man);
  TextKGModel model =
      init_model(cfg.model, cfg.omega1, cfg.omega2, vocab, kg.relation_set, cfg.train.seed);
  std::vector<PreparedClip> clips =
      prepare_dataset(man, kg, table, cfg.model, cfg.train.ablation, vocab);
  ensure_dir(cfg.paths.out_dir);
  TrainReport rep = train(model, clips, table, cfg.train, cfg.paths.out_dir);
  std::cout << "train\tclips\t" << clips.size() << "\n";
  std::cout << "train\tsteps\t" << rep.steps << "\n";
  if (!rep.epoch_loss.empty()) {
    std::cout << "train\tfinal_loss\t" << fmt17(rep.epoch_loss.back()) << "\n";
  }
  std::cout << "train\twall_seconds\t" << fmt17(rep.wall_seconds) << "\n";
  std::cout << "train\tcheckpoint\t" << rep.checkpoint_path << "\n";
  std::cout << "train\tlog\t" << rep.log_path << "\n";
  return 0;
}

int cmd_caption(const CommonOptions& opt, const std::string& checkpoint) {
  RunConfig cfg = effective_config(opt);
  std::string ckpt = checkpoint.empty()
                         ? (fs::path(cfg.paths.out_dir) / "model.ckpt").string()
                         : checkpoint;
  Vocabulary vocab;
  std::vector<std::string> relations;
  load_vocab_sidecar(ckpt + ".vocab", vocab, relations);
  TextKGModel model = init_model(cfg.model, cfg.omega1, cfg.omega2, vocab, relations, 0);
  try {
    load_checkpoint(ckpt, model);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("caption: checkpoint does not match the config ") +
                             "(vocabulary or dimensions differ): " + e.what());
  }
  DatasetManifest dataset = dataset_for(cfg, opt, "caption");
  EmbeddingTable table = load_vectors_for(cfg, "caption");
  // Knowledge is always mined from the training corpus named in the config so
  // held-out clips see the same knowledge base the model was trained with.
  DatasetManifest train_man;
  const DatasetManifest* mine_from = nullptr;
  if (cfg.train.ablation.use_specific_kg) {
    if (cfg.paths.manifest.empty()) {
      throw std::runtime_error("caption: no training manifest configured for knowledge mining");
    }
    train_man = load_manifest(cfg.paths.manifest);
    mine_from = &train_man;
  }
  KnowledgeGraph kg = assemble_kg(cfg, mine_from);
  std::vector<PreparedClip> clips =
      prepare_dataset(dataset, kg, table, cfg.model, cfg.train.ablation, vocab);
  std::vector<Prediction> preds;
  preds.reserve(clips.size());
  for (const auto& clip : clips) {
    Prediction p;
    p.video_id = clip.video_id;
    p.clip_id = clip.clip_id;
    p.words = greedy_decode(model, clip, table);
    preds.push_back(std::move(p));
  }
  ensure_dir(cfg.paths.out_dir);
  std::string out_path = (fs::path(cfg.paths.out_dir) / "predictions.tsv").string();
  save_predictions(out_path, preds);
  std::cout << "caption\tclips\t" << preds.size() << "\n";
  std::cout << "caption\toutput\t" << out_path << "\n";
  return 0;
}

int cmd_evaluate(const CommonOptions& opt, const std::string& predictions,
                 const std::string& mode) {
  RunConfig cfg = effective_config(opt);
  if (mode != "micro" && mode != "paragraph") {
    throw std::runtime_error("evaluate: --mode must be micro or paragraph");
  }
  std::string pred_path = predictions.empty()
                              ? (fs::path(cfg.paths.out_dir) / "predictions.tsv").string()
                              : predictions;
  std::vector<Prediction> preds = load_predictions(pred_path);
  DatasetManifest dataset = dataset_for(cfg, opt, "evaluate");
  EvalReport rep =
      mode == "micro" ? evaluate_micro(preds, dataset) : evaluate_paragraph(preds, dataset);
  std::string table = format_report_table(rep);
  std::string machine = format_report_machine(rep);
  std::cout << table;
  std::cout << machine;
  ensure_dir(cfg.paths.out_dir);
  std::string table_path = (fs::path(cfg.paths.out_dir) / "report.txt").string();
  std::string machine_path = (fs::path(cfg.paths.out_dir) / "report.tsv").string();
  {
    std::ofstream f(table_path);
    if (!f) throw std::runtime_error("evaluate: cannot write " + table_path);
    f << table;
  }
  {
    std::ofstream f(machine_path);
    if (!f) throw std::runtime_error("evaluate: cannot write " + machine_path);
    f << machine;
  }
  return 0;
}

int cmd_gen_synthetic(const CommonOptions& opt, const GenSyntheticOptions& gen) {
  SyntheticSpec spec;
  spec.videos = gen.videos;
  spec.clips_per_video = gen.clips_per_video;
  spec.eval_clips = gen.eval_clips;
  spec.seed = opt.has_seed ? opt.seed : 0;
  if (!opt.config_path.empty()) {
    RunConfig cfg = load_run_config(opt.config_path);
    spec.region_dim = cfg.model.region_dim;
    spec.appearance_dim = cfg.model.appearance_dim;
    spec.motion_dim = cfg.model.motion_dim;
    spec.word_dim = cfg.model.word_dim;
  }
  std::string out_dir = opt.out_dir.empty() ? "synthetic" : opt.out_dir;
  SyntheticPaths paths = generate_synthetic(spec, out_dir);
  std::cout << "gen-synthetic\ttrain_manifest\t" << paths.train_manifest << "\n";
  if (!paths.eval_manifest.empty()) {
    std::cout << "gen-synthetic\teval_manifest\t" << paths.eval_manifest << "\n";
  }
  std::cout << "gen-synthetic\tword_vectors\t" << paths.word_vectors << "\n";
  std::cout << "gen-synthetic\tgeneral_kg\t" << paths.general_kg << "\n";
  std::cout << "gen-synthetic\tpos_lexicon\t" << paths.pos_lexicon << "\n";
  std::cout << "gen-synthetic\tconfig\t" << paths.config << "\n";
  std::cout << "gen-synthetic\tworld\t" << paths.world << "\n";
  return 0;
}

namespace {

// Fixed tiny setup for the finite-difference audit: every modality present so
// each parameter group participates in the loss.
struct GradCheckSetup {
  ModalityConfig cfg;
  Vocabulary vocab;
  std::vector<std::string> relations;
  EmbeddingTable table;
  PreparedClip clip;
};

GradCheckSetup grad_check_setup(std::uint64_t seed) {
  GradCheckSetup s;
  s.cfg.d_model = 16;
  s.cfg.heads = 2;
  s.cfg.n_blocks = 2;
  s.cfg.n_r = 2;
  s.cfg.n_k = 2;
  s.cfg.max_caption = 6;
  s.cfg.max_transcript = 8;
  s.cfg.fps_sampled = 2;
  s.cfg.appearance_dim = 7;
  s.cfg.motion_dim = 5;
  s.cfg.region_dim = 10;
  s.cfg.word_dim = 12;
  s.cfg.max_video_frames = 4;
  s.cfg.max_objects = 2;

  // 26 corpus words + 4 reserved ids = vocabulary of 30.
  static const char* kWords[] = {"add",  "bowl",  "butter", "chop", "cool",  "cut",   "dice",
                                 "fold", "fry",   "grate",  "heat", "knife", "mix",   "oil",
                                 "pan",  "peel",  "pour",   "salt", "sauce", "slice", "stir",
                                 "sugar", "toss", "warm",   "whisk", "board"};
  for (const char* w : kWords) s.vocab.add(w);
  s.relations = {"used_to", "related_to", "has_property"};

  s.table.dim = s.cfg.word_dim;
  s.table.unk_seed = mix64(seed, fnv1a64("grad-check-vectors"));

  Rng rng(mix64(seed, fnv1a64("grad-check-clip")));
  auto rand_matrix = [&](std::size_t r, std::size_t c) {
    std::vector<double> v(r * c);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return Tensor::matrix(r, c, std::move(v));
  };

  PreparedClip& clip = s.clip;
  clip.video_id = "gv";
  clip.clip_id = "gc";
  clip.region_feats = rand_matrix(3, s.cfg.region_dim);
  clip.region_categories = {"board", "knife", "board"};
  clip.region_frames = {0, 0, 1};
  clip.knowledge = {{"knife", "used_to", "cut", TripleSource::general, 1},
                    {"board", "related_to", "knife", TripleSource::specific, 1},
                    {"knife", "has_property", "sharp", TripleSource::general, 1}};
  clip.knowledge_categories = {"board", "knife", "knife"};
  clip.transcript = {"heat", "the", "oil", "in", "the", "pan"};
  clip.appearance = rand_matrix(2, s.cfg.appearance_dim);
  clip.motion = rand_matrix(2, s.cfg.motion_dim);
  clip.caption_words = {"chop", "the", "board", "now"};
  // caption inputs are BOS + words + EOS → targets w1..wl, EOS, PAD
  clip.target_ids.clear();
  for (const auto& w : clip.caption_words) clip.target_ids.push_back(s.vocab.lookup(w));
  clip.target_ids.push_back(Vocabulary::kEos);
  clip.target_ids.push_back(Vocabulary::kPad);
  return s;
}

}  // namespace

int cmd_grad_check(const CommonOptions& opt, bool negative_control) {
  const std::uint64_t seed = opt.has_seed ? opt.seed : 7;
  GradCheckSetup s = grad_check_setup(seed);
  TextKGModel model = init_model(s.cfg, 0.8, 0.2, s.vocab, s.relations, seed);

  auto loss_value = [&]() {
    BuiltStreams streams =
        build_streams(model, s.clip, s.clip.caption_words, /*include_eos=*/true, s.table);
    ForwardResult fr = forward(model, streams.ext, streams.inten);
    Tensor loss = two_stream_loss(fr.z_ext, fr.z_int, s.clip.target_ids, 0.6, 0.4);
    return loss;
  };

  debug_corrupt_matmul_backward(negative_control);
  std::vector<TextKGModel::NamedParam> params = model.parameters();
  for (auto& p : params) p.tensor.zero_grad();
  Tensor loss = loss_value();
  backward(loss);
  debug_corrupt_matmul_backward(false);

  const double tol = 1e-4;
  double overall = 0.0;
  bool pass = true;
  for (auto& p : params) {
    std::vector<double> analytic = p.tensor.grad();
    const std::size_t n = analytic.size();
    // Probe the 3 largest-magnitude gradient entries (all entries when small);
    // ties and all-zero gradients fall back to the lowest indices.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::fabs(analytic[a]) > std::fabs(analytic[b]);
    });
    const std::size_t probes = std::min<std::size_t>(3, n);
    double group_err = 0.0;
    for (std::size_t k = 0; k < probes; ++k) {
      const std::size_t idx = order[k];
      double& slot = p.tensor.raw()[idx];
      const double saved = slot;
      const double h = 1e-5 * std::max(1.0, std::fabs(saved));
      slot = saved + h;
      const double up = loss_value().at(0);
      slot = saved - h;
      const double down = loss_value().at(0);
      slot = saved;
      const double fd = (up - down) / (2.0 * h);
      const double denom = std::max({std::fabs(fd), std::fabs(analytic[idx]), 1e-8});
      group_err = std::max(group_err, std::fabs(fd - analytic[idx]) / denom);
    }
    overall = std::max(overall, group_err);
    const bool ok = group_err <= tol;
    pass = pass && ok;
    std::cout << "grad-check\t" << p.name << "\t" << fmt17(group_err) << "\t"
              << (ok ? "ok" : "FAIL") << "\n";
  }
  std::cout << "grad-check\toverall\t" << fmt17(overall) << "\t" << (pass ? "PASS" : "FAIL")
            << "\n";
  if (negative_control) {
    const bool detected = !pass;
    std::cout << "grad-check\tnegative-control\t" << (detected ? "detected" : "missed") << "\n";
    return detected ? 0 : 1;
  }
  return pass ? 0 : 1;
}

}  // namespace textkg
