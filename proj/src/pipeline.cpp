#include "textkg/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "textkg/features.hpp"
#include "textkg/rng.hpp"

namespace textkg {

namespace fs = std::filesystem;

namespace {

std::string fact_key(const KnowledgeTriple& t) {
  return fold_term(t.head) + '\x1f' + fold_term(t.relation) + '\x1f' + fold_term(t.tail);
}

}  // namespace

std::vector<KnowledgeTriple> retrieve_for_categories(const KnowledgeGraph& kg,
                                                     const std::vector<std::string>& categories,
                                                     const std::vector<std::string>& transcript,
                                                     const EmbeddingTable& table, std::size_t n_k,
                                                     bool use_selection,
                                                     std::vector<std::string>* out_categories) {
  // object categories in order of first appearance
  std::vector<std::string> objects;
  std::unordered_set<std::string> seen_cat;
  for (const auto& c : categories)
    if (seen_cat.insert(fold_term(c)).second) objects.push_back(c);

  std::vector<KnowledgeTriple> kept;
  std::vector<std::string> kept_cats;
  std::unordered_set<std::string> seen_fact;
  for (const auto& obj : objects) {
    std::vector<KnowledgeTriple> candidates = kg.retrieve(obj);
    std::vector<KnowledgeTriple> chosen;
    if (use_selection && !transcript.empty()) {
      for (const auto& s : rank_knowledge(candidates, transcript, table, n_k))
        chosen.push_back(s.triple);
    } else {
      std::size_t n = std::min(n_k, candidates.size());
      chosen.assign(candidates.begin(), candidates.begin() + n);
    }
    for (auto& t : chosen) {
      if (!seen_fact.insert(fact_key(t)).second) continue;  // same fact via another object
      kept.push_back(std::move(t));
      kept_cats.push_back(obj);
    }
  }
  if (out_categories) *out_categories = std::move(kept_cats);
  return kept;
}

PreparedClip prepare_clip(const DatasetManifest& man, const VideoEntry& video,
                          const ClipSample& clip, const KnowledgeGraph& kg,
                          const EmbeddingTable& table, const ModalityConfig& cfg,
                          const AblationSwitches& ab, const Vocabulary& vocab) {
  if (!ab.use_video && !ab.use_regions && !ab.use_text)
    throw std::invalid_argument("ablation: every input modality is disabled");

  PreparedClip p;
  p.video_id = video.video_id;
  p.clip_id = clip.clip_id;

  if (!clip.captions.empty()) {
    const auto& ref = clip.captions.front();
    std::size_t keep = std::min<std::size_t>(ref.size(), cfg.max_caption);
    p.caption_words.assign(ref.begin(), ref.begin() + keep);
    for (const auto& w : p.caption_words) p.target_ids.push_back(vocab.lookup(w));
    p.target_ids.push_back(Vocabulary::kEos);
    p.target_ids.push_back(Vocabulary::kPad);  // aligns with the EOS input row
  }

  if (ab.use_text) p.transcript = clip.transcript;

  if (ab.use_video && !clip.appearance_path.empty()) {
    if (clip.motion_path.empty())
      throw std::runtime_error("clip " + clip.clip_id + ": appearance features without motion");
    p.appearance = load_feature_matrix(man.resolve(clip.appearance_path));
    p.motion = load_feature_matrix(man.resolve(clip.motion_path));
    if (p.appearance.cols() != cfg.appearance_dim)
      throw std::runtime_error("clip " + clip.clip_id + ": appearance width " +
                               std::to_string(p.appearance.cols()) + ", config expects " +
                               std::to_string(cfg.appearance_dim));
    if (p.motion.cols() != cfg.motion_dim)
      throw std::runtime_error("clip " + clip.clip_id + ": motion width " +
                               std::to_string(p.motion.cols()) + ", config expects " +
                               std::to_string(cfg.motion_dim));
    if (p.appearance.rows() != p.motion.rows())
      throw std::runtime_error("clip " + clip.clip_id + ": appearance has " +
                               std::to_string(p.appearance.rows()) + " frames, motion " +
                               std::to_string(p.motion.rows()));
  }

  if (ab.use_regions && !clip.regions.empty()) {
    std::vector<double> values;
    values.reserve(clip.regions.size() * cfg.region_dim);
    for (const auto& r : clip.regions) {
      std::vector<double> row = r.feature;
      if (row.empty()) {
        Tensor m = load_feature_matrix(man.resolve(r.feature_path));
        if (m.rows() != 1)
          throw std::runtime_error("clip " + clip.clip_id + ": region feature file " +
                                   r.feature_path + " must hold exactly one row");
        row = m.values();
      }
      if (row.size() != cfg.region_dim)
        throw std::runtime_error("clip " + clip.clip_id + ": region feature width " +
                                 std::to_string(row.size()) + ", config expects " +
                                 std::to_string(cfg.region_dim));
      values.insert(values.end(), row.begin(), row.end());
      p.region_categories.push_back(r.category);
      p.region_frames.push_back(r.frame);
    }
    p.region_feats = Tensor({clip.regions.size(), cfg.region_dim}, std::move(values));
  }

  bool kg_enabled = ab.use_general_kg || ab.use_specific_kg;
  if (kg_enabled && !p.region_categories.empty()) {
    // cap the distinct-object count at the knowledge position capacity
    std::vector<std::string> objects;
    std::unordered_set<std::string> seen;
    for (const auto& c : p.region_categories) {
      if (objects.size() >= cfg.max_objects) break;
      if (seen.insert(fold_term(c)).second) objects.push_back(c);
    }
    p.knowledge = retrieve_for_categories(kg, objects, p.transcript, table, cfg.n_k,
                                          ab.use_knowledge_selection, &p.knowledge_categories);
  }
  return p;
}

std::vector<PreparedClip> prepare_dataset(const DatasetManifest& man, const KnowledgeGraph& kg,
                                          const EmbeddingTable& table, const ModalityConfig& cfg,
                                          const AblationSwitches& ab, const Vocabulary& vocab) {
  std::vector<PreparedClip> out;
  for (const auto& v : man.videos)
    for (const auto& c : v.clips) out.push_back(prepare_clip(man, v, c, kg, table, cfg, ab, vocab));
  return out;
}

BuiltStreams build_streams(TextKGModel& model, const PreparedClip& clip,
                           const std::vector<std::string>& caption_words, bool include_eos,
                           const EmbeddingTable& table) {
  const ModalityConfig& cfg = model.cfg;
  Tensor cap = make_caption_tokens(caption_words, table, cfg.max_caption, include_eos,
                                   model.proj_caption_w, model.proj_caption_b, model.bos_vec,
                                   model.eos_vec);
  Tensor transcript;
  if (!clip.transcript.empty())
    transcript = make_text_tokens(clip.transcript, table, cfg.max_transcript,
                                  model.proj_transcript_w, model.proj_transcript_b);

  AssemblyInputs ext;
  ext.caption = cap;
  ext.transcript = transcript;
  if (clip.region_feats.defined() && clip.region_feats.rows() > 0) {
    RegionTokens regions =
        make_region_tokens(clip.region_feats, clip.region_categories, clip.region_frames,
                           cfg.n_r, model.proj_region_w, model.proj_region_b);
    ext.regions = regions.tokens;
    ext.region_categories = regions.categories;
  }
  if (!clip.knowledge.empty()) {
    std::vector<std::size_t> rel_ids;
    rel_ids.reserve(clip.knowledge.size());
    for (const auto& t : clip.knowledge) rel_ids.push_back(model.relation_row(t.relation));
    KnowledgeTokens kn =
        make_knowledge_tokens(clip.knowledge, clip.knowledge_categories, rel_ids, table,
                              model.relation_table, model.proj_knowledge_w, model.proj_knowledge_b);
    ext.knowledge = kn.tokens;
    ext.knowledge_categories = kn.categories;
  }

  AssemblyInputs inner;
  inner.caption = cap;
  inner.transcript = transcript;
  if (clip.appearance.defined() && clip.appearance.rows() > 0)
    inner.video = make_video_tokens(clip.appearance, clip.motion, model.proj_video_w,
                                    model.proj_video_b);

  BuiltStreams out;
  out.ext = assemble_external(ext, model.pos, model.type_ext);
  out.inten = assemble_internal(inner, model.pos, model.type_int);
  return out;
}

Tensor two_stream_loss(const Tensor& z_ext, const Tensor& z_int,
                       const std::vector<std::size_t>& targets, double lambda1, double lambda2) {
  if (z_ext.rows() != targets.size() || z_int.rows() != targets.size())
    throw std::invalid_argument("loss: " + std::to_string(targets.size()) + " targets for " +
                                std::to_string(z_ext.rows()) + "/" +
                                std::to_string(z_int.rows()) + " caption rows");
  std::vector<double> keep(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i)
    keep[i] = targets[i] == Vocabulary::kPad ? 0.0 : 1.0;
  Tensor mask({targets.size()}, std::move(keep));
  Tensor ext_term = sum_all(mul(log_floor(pick_per_row(z_ext, targets)), mask));
  Tensor int_term = sum_all(mul(log_floor(pick_per_row(z_int, targets)), mask));
  return add(scale(ext_term, -lambda1), scale(int_term, -lambda2));
}

std::vector<std::string> greedy_decode(TextKGModel& model, const PreparedClip& clip,
                                       const EmbeddingTable& table) {
  NoGradGuard inference;
  std::vector<std::string> words;
  for (std::size_t step = 0; step < model.cfg.max_caption; ++step) {
    BuiltStreams s = build_streams(model, clip, words, false, table);
    ForwardResult r = forward(model, s.ext, s.inten);
    std::size_t last = r.z_ext.rows() - 1;
    std::vector<double> ze(r.z_ext.cols()), zi(r.z_int.cols());
    for (std::size_t c = 0; c < ze.size(); ++c) {
      ze[c] = r.z_ext(last, c);
      zi[c] = r.z_int(last, c);
    }
    Fused f = fuse_and_argmax(ze, zi, model.omega1, model.omega2);
    if (f.y == Vocabulary::kEos) break;
    words.push_back(model.vocab.word(f.y));
  }
  return words;
}

TrainReport train(TextKGModel& model, const std::vector<PreparedClip>& clips,
                  const EmbeddingTable& table, const TrainConfig& cfg,
                  const std::string& out_dir) {
  if (clips.empty()) throw std::invalid_argument("train: dataset is empty");
  for (const auto& c : clips)
    if (c.target_ids.empty())
      throw std::invalid_argument("train: clip " + c.clip_id + " has no reference caption");
  if (cfg.batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");

  auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);

  auto named = model.parameters();
  std::vector<Tensor> params;
  std::vector<bool> decay;
  params.reserve(named.size());
  for (auto& p : named) {
    params.push_back(p.tensor);
    decay.push_back(p.decay);
  }
  for (auto& p : params) p.zero_grad();
  AdamState state;
  state.weight_decay = cfg.weight_decay;
  state.init(params);

  std::size_t per_epoch = (clips.size() + cfg.batch_size - 1) / cfg.batch_size;
  std::size_t planned = cfg.epochs * per_epoch;
  if (cfg.max_steps > 0) planned = std::min(planned, cfg.max_steps);
  LrSchedule schedule{cfg.base_lr, std::max<std::size_t>(planned, 1), cfg.warmup_fraction};

  TrainReport rep;
  rep.log_path = (fs::path(out_dir) / "train_log.tsv").string();
  std::ofstream log(rep.log_path);
  if (!log) throw std::runtime_error("train: cannot write " + rep.log_path);
  log.precision(17);

  std::size_t step = 0;
  double last_lr = 0.0;
  bool done = false;
  for (std::size_t epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
    std::vector<std::size_t> order(clips.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffler(mix64(cfg.seed, epoch));
    shuffler.shuffle(order);

    double loss_sum = 0.0;
    std::size_t processed = 0;
    std::size_t in_batch = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const PreparedClip& clip = clips[order[k]];
      BuiltStreams s = build_streams(model, clip, clip.caption_words, true, table);
      ForwardResult fr = forward(model, s.ext, s.inten);
      Tensor loss =
          two_stream_loss(fr.z_ext, fr.z_int, clip.target_ids, cfg.lambda1, cfg.lambda2);
      double lv = loss.at(0);
      if (!std::isfinite(lv))
        throw std::runtime_error("train: non-finite loss on clip " + clip.clip_id);
      loss_sum += lv;
      ++processed;
      backward(loss);
      ++in_batch;

      if (in_batch == cfg.batch_size || k + 1 == order.size()) {
        if (in_batch > 1) {
          double inv = 1.0 / static_cast<double>(in_batch);
          for (auto& p : params)
            for (auto& g : p.grad_mut()) g *= inv;
        }
        ++step;
        last_lr = lr_at(schedule, step);
        adam_step(params, decay, state, last_lr);
        for (auto& p : params) p.zero_grad();
        in_batch = 0;
        if (cfg.max_steps > 0 && step >= cfg.max_steps) {
          done = true;
          break;
        }
      }
    }

    double mean = loss_sum / static_cast<double>(processed);
    rep.epoch_loss.push_back(mean);
    rep.epoch_lr.push_back(last_lr);
    log << (epoch + 1) << '\t' << mean << '\t' << last_lr << '\n';
    if (cfg.stop_loss > 0 && mean < cfg.stop_loss) done = true;
  }
  log.flush();

  rep.steps = step;
  rep.checkpoint_path = (fs::path(out_dir) / "model.ckpt").string();
  save_checkpoint(rep.checkpoint_path, model);
  save_vocab_sidecar(rep.checkpoint_path + ".vocab", model.vocab, model.relations);
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace textkg
