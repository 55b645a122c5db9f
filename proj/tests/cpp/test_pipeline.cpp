#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "textkg/features.hpp"
#include "textkg/optim.hpp"
#include "textkg/pipeline.hpp"

using namespace textkg;

namespace {

namespace fs = std::filesystem;

const fs::path kTmp = fs::temp_directory_path() / "textkg_test_pipeline";

EmbeddingTable tiny_table() {
  EmbeddingTable t;
  t.dim = 3;
  t.unk_seed = 7;
  t.vectors = {
      {"stir", {1.0, 0.0, 0.0}},    {"the", {0.1, 0.1, 0.1}},
      {"pan", {0.0, 1.0, 0.0}},     {"oil", {0.0, 0.5, 0.5}},
      {"heat", {0.5, 0.0, 0.5}},    {"now", {0.2, 0.0, 0.0}},
      {"hot", {0.0, 0.0, 1.0}},     {"used", {0.3, 0.0, 0.0}},
      {"for", {0.0, 0.3, 0.0}},     {"cooking", {0.9, 0.0, 0.1}},
      {"has", {0.0, 0.2, 0.2}},     {"property", {0.2, 0.2, 0.0}},
      {"slice", {0.4, 0.4, 0.0}},
  };
  return t;
}

ModalityConfig tiny_cfg() {
  ModalityConfig c;
  c.d_model = 8;
  c.heads = 2;
  c.n_blocks = 1;
  c.n_r = 2;
  c.n_k = 2;
  c.max_caption = 4;
  c.max_transcript = 6;
  c.appearance_dim = 3;
  c.motion_dim = 2;
  c.region_dim = 4;
  c.word_dim = 3;
  c.max_video_frames = 4;
  c.max_objects = 2;
  return c;
}

Vocabulary tiny_vocab() {
  Vocabulary v;
  for (const char* w : {"stir", "the", "pan", "oil", "heat"}) v.add(w);
  return v;
}

// One-video manifest: clip c1 (stir the pan) and clip c2 (heat the oil).
DatasetManifest tiny_manifest() {
  DatasetManifest man;
  man.base_dir = kTmp.string();
  VideoEntry v;
  v.video_id = "v1";

  ClipSample c1;
  c1.clip_id = "c1";
  c1.transcript = {"now", "heat", "the", "pan"};
  c1.captions = {{"stir", "the", "pan"}};
  c1.regions.push_back({{1.0, 0.0, 0.0, 0.0}, "", "Pan", 0.9, 0});
  c1.regions.push_back({{0.0, 1.0, 0.0, 0.0}, "", "Oil", 0.8, 0});

  ClipSample c2;
  c2.clip_id = "c2";
  c2.transcript = {"now", "stir", "the", "oil"};
  c2.captions = {{"heat", "the", "oil"}};
  c2.regions.push_back({{0.0, 0.0, 1.0, 0.0}, "", "oil", 0.7, 0});

  v.clips = {c1, c2};
  man.videos = {v};
  return man;
}

KnowledgeGraph tiny_kg() {
  KnowledgeGraph kg;
  kg.add({"pan", "used_for", "cooking", TripleSource::general, 1});
  kg.add({"oil", "has_property", "hot", TripleSource::general, 1});
  return kg;
}

TextKGModel tiny_model(std::uint64_t seed = 5) {
  return init_model(tiny_cfg(), 0.8, 0.2, tiny_vocab(), {"used_for", "has_property"}, seed);
}

Tensor softmax_rows(std::size_t r, std::size_t c, std::vector<double> logits,
                    bool requires_grad = false) {
  std::vector<double> vals(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    double mx = logits[i * c];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits[i * c + j]);
    double z = 0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(logits[i * c + j] - mx);
    for (std::size_t j = 0; j < c; ++j) vals[i * c + j] = std::exp(logits[i * c + j] - mx) / z;
  }
  return Tensor::matrix(r, c, vals, requires_grad);
}

std::vector<std::vector<double>> snapshot(TextKGModel& m) {
  std::vector<std::vector<double>> out;
  for (auto& p : m.parameters()) out.push_back(p.tensor.values());
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("two-stream loss matches the hand-worked fixture") {
  // z_ext puts 0.5 on the target, z_int puts 0.25; equal stream weights.
  // Column 1 is the target — column 0 is the reserved padding id, which the
  // loss deliberately skips.
  Tensor z_ext = Tensor::matrix(1, 2, {0.5, 0.5});
  Tensor z_int = Tensor::matrix(1, 2, {0.75, 0.25});
  std::vector<std::size_t> targets = {1};
  Tensor loss = two_stream_loss(z_ext, z_int, targets, 0.5, 0.5);
  CHECK(loss.at(0) == doctest::Approx(1.5 * std::log(2.0)).epsilon(1e-12));

  // lambda2 = 0 silences the internal stream entirely.
  Tensor only_ext = two_stream_loss(z_ext, z_int, targets, 1.0, 0.0);
  CHECK(only_ext.at(0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("rows whose target is the padding index do not contribute") {
  Tensor z1 = softmax_rows(1, 3, {0.3, 1.0, -0.4});
  Tensor z2 = softmax_rows(2, 3, {0.3, 1.0, -0.4, 5.0, -2.0, 0.0});
  std::vector<std::size_t> one = {2};
  std::vector<std::size_t> padded = {2, Vocabulary::kPad};
  double a = two_stream_loss(z1, z1, one, 0.5, 0.5).at(0);
  double b = two_stream_loss(z2, z2, padded, 0.5, 0.5).at(0);
  CHECK(a == doctest::Approx(b).epsilon(1e-15));
}

TEST_CASE("loss agrees with a direct summation oracle on random rows") {
  std::vector<double> le = {0.2, -1.0, 0.7, 2.0,  0.0, -0.5, 1.1, 0.4,
                            1.3, -0.2, 0.9, -1.7, 0.3, 0.8,  2.2, -0.6,
                            0.5, 1.9,  0.1, -0.8, 1.4, 0.6,  -0.3, 0.2};
  std::vector<double> li(le.rbegin(), le.rend());
  Tensor z_ext = softmax_rows(6, 4, le);
  Tensor z_int = softmax_rows(6, 4, li);
  std::vector<std::size_t> targets = {3, 1, Vocabulary::kPad, 2, Vocabulary::kPad, 1};
  double l1 = 0.7, l2 = 0.3;

  double want = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] == Vocabulary::kPad) continue;
    want -= l1 * std::log(z_ext.at(i * 4 + targets[i]));
    want -= l2 * std::log(z_int.at(i * 4 + targets[i]));
  }
  CHECK(two_stream_loss(z_ext, z_int, targets, l1, l2).at(0) ==
        doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("loss validates target count and index range") {
  Tensor z = softmax_rows(2, 3, {0, 0, 0, 0, 0, 0});
  CHECK_THROWS(two_stream_loss(z, z, {1}, 0.5, 0.5));
  CHECK_THROWS_AS(two_stream_loss(z, z, {1, 99}, 0.5, 0.5), std::out_of_range);
}

TEST_CASE("loss backward leaves a silenced stream with zero gradient") {
  Tensor z_ext = Tensor::matrix(1, 2, {0.5, 0.5}, true);
  Tensor z_int = Tensor::matrix(1, 2, {0.75, 0.25}, true);
  Tensor loss = two_stream_loss(z_ext, z_int, {1}, 0.5, 0.0);
  backward(loss);
  // d(−0.5·log z)/dz at z=0.5 is −1; the other entries are untouched.
  CHECK(z_ext.grad()[1] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(z_ext.grad()[0] == 0.0);
  CHECK(z_int.grad()[0] == 0.0);
  CHECK(z_int.grad()[1] == 0.0);
}

TEST_CASE("retrieval dedups facts shared between objects, first object wins") {
  KnowledgeGraph kg;
  kg.add({"pan", "used_for", "cooking", TripleSource::general, 1});
  kg.add({"pan", "related_to", "bowl", TripleSource::general, 1});
  kg.add({"bowl", "is_a", "container", TripleSource::general, 1});

  EmbeddingTable table = tiny_table();
  std::vector<std::string> cats_out;
  // "PAN" folds onto "pan" and must not create a third object.
  auto got = retrieve_for_categories(kg, {"pan", "bowl", "PAN"}, {}, table, 5, false, &cats_out);

  REQUIRE(got.size() == 3);
  CHECK(got[0].head == "pan");
  CHECK(got[0].relation == "used_for");
  CHECK(got[1].relation == "related_to");   // retrieved again via bowl, kept once
  CHECK(got[2].head == "bowl");
  CHECK(cats_out == std::vector<std::string>{"pan", "pan", "bowl"});
}

TEST_CASE("knowledge selection ranks against the transcript; off keeps file order") {
  // Zero vectors for the shared words so each triple's embedding points along
  // exactly one axis; the transcript picks the third axis.
  EmbeddingTable table;
  table.dim = 3;
  table.vectors = {
      {"pan", {0, 0, 0}},   {"related", {0, 0, 0}}, {"to", {0, 0, 0}},
      {"alpha", {1, 0, 0}}, {"beta", {0, 1, 0}},    {"gamma", {0, 0, 1}},
  };
  KnowledgeGraph kg;
  kg.add({"pan", "related_to", "alpha", TripleSource::general, 1});
  kg.add({"pan", "related_to", "beta", TripleSource::general, 1});
  kg.add({"pan", "related_to", "gamma", TripleSource::general, 1});

  auto off = retrieve_for_categories(kg, {"pan"}, {"gamma"}, table, 2, false, nullptr);
  REQUIRE(off.size() == 2);
  CHECK(off[0].tail == "alpha");
  CHECK(off[1].tail == "beta");

  auto on = retrieve_for_categories(kg, {"pan"}, {"gamma"}, table, 2, true, nullptr);
  REQUIRE(on.size() == 2);
  CHECK(on[0].tail == "gamma");  // cosine 1 beats the cosine-0 rest
  CHECK(on[1].tail == "alpha");  // tie broken lexicographically

  // Selection on but no transcript to rank against: keep insertion order.
  auto fallback = retrieve_for_categories(kg, {"pan"}, {}, table, 2, true, nullptr);
  REQUIRE(fallback.size() == 2);
  CHECK(fallback[0].tail == "alpha");
  CHECK(fallback[1].tail == "beta");
}

TEST_CASE("prepare_clip assembles teacher-forcing targets and modalities") {
  fs::create_directories(kTmp);
  DatasetManifest man = tiny_manifest();
  KnowledgeGraph kg = tiny_kg();
  EmbeddingTable table = tiny_table();
  ModalityConfig cfg = tiny_cfg();
  Vocabulary vocab = tiny_vocab();
  AblationSwitches all_on;

  PreparedClip p = prepare_clip(man, man.videos[0], man.videos[0].clips[0], kg, table, cfg,
                                all_on, vocab);
  CHECK(p.video_id == "v1");
  CHECK(p.clip_id == "c1");
  CHECK(p.caption_words == std::vector<std::string>{"stir", "the", "pan"});
  // One target per caption input row [BOS w1 w2 w3 EOS].
  REQUIRE(p.target_ids.size() == 5);
  CHECK(p.target_ids[0] == vocab.lookup("stir"));
  CHECK(p.target_ids[1] == vocab.lookup("the"));
  CHECK(p.target_ids[2] == vocab.lookup("pan"));
  CHECK(p.target_ids[3] == Vocabulary::kEos);
  CHECK(p.target_ids[4] == Vocabulary::kPad);

  CHECK(p.transcript == std::vector<std::string>{"now", "heat", "the", "pan"});
  REQUIRE(p.region_feats.defined());
  CHECK(p.region_feats.rows() == 2);
  CHECK(p.region_feats.cols() == 4);
  CHECK(p.region_categories == std::vector<std::string>{"Pan", "Oil"});
  REQUIRE(p.knowledge.size() == 2);
  CHECK(p.knowledge[0].head == "pan");
  CHECK(p.knowledge[1].head == "oil");
  CHECK(p.knowledge_categories == std::vector<std::string>{"Pan", "Oil"});
  CHECK_FALSE(p.appearance.defined());
}

TEST_CASE("ablation switches erase exactly the disabled modality") {
  fs::create_directories(kTmp);
  DatasetManifest man = tiny_manifest();
  KnowledgeGraph kg = tiny_kg();
  EmbeddingTable table = tiny_table();
  ModalityConfig cfg = tiny_cfg();
  Vocabulary vocab = tiny_vocab();
  const VideoEntry& v = man.videos[0];

  SUBCASE("text off: transcript empty, knowledge falls back to file order") {
    AblationSwitches ab;
    ab.use_text = false;
    PreparedClip p = prepare_clip(man, v, v.clips[0], kg, table, cfg, ab, vocab);
    CHECK(p.transcript.empty());
    CHECK(p.knowledge.size() == 2);
  }
  SUBCASE("regions off: no features, no categories, no knowledge") {
    AblationSwitches ab;
    ab.use_regions = false;
    PreparedClip p = prepare_clip(man, v, v.clips[0], kg, table, cfg, ab, vocab);
    CHECK_FALSE(p.region_feats.defined());
    CHECK(p.region_categories.empty());
    CHECK(p.knowledge.empty());
  }
  SUBCASE("both knowledge sources off: regions stay, triples vanish") {
    AblationSwitches ab;
    ab.use_general_kg = false;
    ab.use_specific_kg = false;
    PreparedClip p = prepare_clip(man, v, v.clips[0], kg, table, cfg, ab, vocab);
    CHECK(p.region_feats.defined());
    CHECK(p.knowledge.empty());
  }
  SUBCASE("disabling every modality is an error") {
    AblationSwitches ab;
    ab.use_video = false;
    ab.use_regions = false;
    ab.use_text = false;
    CHECK_THROWS_WITH_AS(prepare_clip(man, v, v.clips[0], kg, table, cfg, ab, vocab),
                         "ablation: every input modality is disabled", std::invalid_argument);
  }
  SUBCASE("reference longer than max_caption is truncated before BOS/EOS") {
    DatasetManifest long_man = man;
    long_man.videos[0].clips[0].captions = {{"stir", "the", "pan", "and", "the", "oil"}};
    AblationSwitches ab;
    PreparedClip p =
        prepare_clip(long_man, long_man.videos[0], long_man.videos[0].clips[0], kg, table, cfg,
                     ab, vocab);
    CHECK(p.caption_words == std::vector<std::string>{"stir", "the", "pan", "and"});
    REQUIRE(p.target_ids.size() == 6);
    CHECK(p.target_ids[3] == Vocabulary::kUnk);  // "and" is not in the vocabulary
    CHECK(p.target_ids[4] == Vocabulary::kEos);
    CHECK(p.target_ids[5] == Vocabulary::kPad);
  }
  SUBCASE("max_objects caps how many distinct categories retrieve knowledge") {
    ModalityConfig capped = cfg;
    capped.max_objects = 1;
    AblationSwitches ab;
    PreparedClip p = prepare_clip(man, v, v.clips[0], kg, table, capped, ab, vocab);
    REQUIRE(p.knowledge.size() == 1);
    CHECK(p.knowledge[0].head == "pan");
  }
  SUBCASE("region width must match the configured dimension") {
    DatasetManifest bad = man;
    bad.videos[0].clips[0].regions[0].feature = {1.0, 2.0};
    CHECK_THROWS(prepare_clip(bad, bad.videos[0], bad.videos[0].clips[0], kg, table, cfg,
                              AblationSwitches{}, vocab));
  }
}

TEST_CASE("video features come from disk and are validated against the config") {
  fs::create_directories(kTmp);
  save_feature_matrix_text((kTmp / "a.app.txt").string(),
                           Tensor::matrix(2, 3, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}));
  save_feature_matrix_text((kTmp / "a.mot.txt").string(), Tensor::matrix(2, 2, {1, 2, 3, 4}));
  save_feature_matrix_text((kTmp / "wide.app.txt").string(),
                           Tensor::matrix(1, 4, {1, 2, 3, 4}));
  save_feature_matrix_text((kTmp / "threeframe.mot.txt").string(),
                           Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6}));

  DatasetManifest man = tiny_manifest();
  man.videos[0].clips[0].appearance_path = "a.app.txt";
  man.videos[0].clips[0].motion_path = "a.mot.txt";
  KnowledgeGraph kg = tiny_kg();
  EmbeddingTable table = tiny_table();
  ModalityConfig cfg = tiny_cfg();
  Vocabulary vocab = tiny_vocab();
  const VideoEntry& v = man.videos[0];

  SUBCASE("well-formed files load into the prepared clip") {
    PreparedClip p = prepare_clip(man, v, v.clips[0], kg, table, cfg, AblationSwitches{}, vocab);
    REQUIRE(p.appearance.defined());
    CHECK(p.appearance.rows() == 2);
    CHECK(p.appearance.cols() == 3);
    CHECK(p.motion.rows() == 2);
    CHECK(p.appearance.at(4) == doctest::Approx(0.5));
  }
  SUBCASE("video off skips the files entirely") {
    AblationSwitches ab;
    ab.use_video = false;
    PreparedClip p = prepare_clip(man, v, v.clips[0], kg, table, cfg, ab, vocab);
    CHECK_FALSE(p.appearance.defined());
  }
  SUBCASE("appearance without motion is rejected") {
    DatasetManifest bad = man;
    bad.videos[0].clips[0].motion_path.clear();
    CHECK_THROWS(prepare_clip(bad, bad.videos[0], bad.videos[0].clips[0], kg, table, cfg,
                              AblationSwitches{}, vocab));
  }
  SUBCASE("appearance width mismatch names the clip") {
    DatasetManifest bad = man;
    bad.videos[0].clips[0].appearance_path = "wide.app.txt";
    CHECK_THROWS_WITH(prepare_clip(bad, bad.videos[0], bad.videos[0].clips[0], kg, table, cfg,
                                   AblationSwitches{}, vocab),
                      doctest::Contains("c1"));
  }
  SUBCASE("frame-count mismatch between appearance and motion is rejected") {
    DatasetManifest bad = man;
    bad.videos[0].clips[0].motion_path = "threeframe.mot.txt";
    CHECK_THROWS(prepare_clip(bad, bad.videos[0], bad.videos[0].clips[0], kg, table, cfg,
                              AblationSwitches{}, vocab));
  }
}

TEST_CASE("greedy decoding is bounded, in-vocabulary, and deterministic") {
  fs::create_directories(kTmp);
  DatasetManifest man = tiny_manifest();
  EmbeddingTable table = tiny_table();
  TextKGModel model = tiny_model(5);
  PreparedClip p = prepare_clip(man, man.videos[0], man.videos[0].clips[0], tiny_kg(), table,
                                model.cfg, AblationSwitches{}, model.vocab);

  std::vector<std::string> first = greedy_decode(model, p, table);
  CHECK(first.size() <= model.cfg.max_caption);
  // Every decoded word round-trips through the vocabulary (an untrained model
  // may legitimately emit the unknown-word token).
  for (const auto& w : first) CHECK(model.vocab.word(model.vocab.lookup(w)) == w);
  std::vector<std::string> second = greedy_decode(model, p, table);
  CHECK(first == second);
}

TEST_CASE("full-pipeline gradients match central finite differences") {
  fs::create_directories(kTmp);
  save_feature_matrix_text((kTmp / "fd.app.txt").string(),
                           Tensor::matrix(2, 3, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}));
  save_feature_matrix_text((kTmp / "fd.mot.txt").string(),
                           Tensor::matrix(2, 2, {0.3, -0.2, 0.1, 0.4}));
  DatasetManifest man = tiny_manifest();
  man.videos[0].clips[0].appearance_path = "fd.app.txt";
  man.videos[0].clips[0].motion_path = "fd.mot.txt";

  EmbeddingTable table = tiny_table();
  TextKGModel model = tiny_model(11);
  PreparedClip clip = prepare_clip(man, man.videos[0], man.videos[0].clips[0], tiny_kg(), table,
                                   model.cfg, AblationSwitches{}, model.vocab);

  auto loss_value = [&]() {
    BuiltStreams s = build_streams(model, clip, clip.caption_words, true, table);
    ForwardResult r = forward(model, s.ext, s.inten);
    return two_stream_loss(r.z_ext, r.z_int, clip.target_ids, 0.6, 0.4);
  };

  auto named = model.parameters();
  for (auto& p : named) p.tensor.zero_grad();
  Tensor loss = loss_value();
  backward(loss);

  const double h = 1e-5;
  std::size_t checked = 0;
  for (auto& p : named) {
    bool probe = p.name == "proj.video.w" || p.name == "proj.region.w" ||
                 p.name == "proj.knowledge.w" || p.name == "relations.table" ||
                 p.name == "ext.block0.self.attn.wq" || p.name == "int.block0.cross.ffn.w1" ||
                 p.name == "head.ext.w" || p.name == "caption.bos" || p.name == "pos.caption";
    if (!probe) continue;
    for (std::size_t k : {std::size_t{0}, std::size_t{3}}) {
      REQUIRE(k < p.tensor.size());
      double saved = p.tensor.raw()[k];
      p.tensor.raw()[k] = saved + h;
      double up = loss_value().at(0);
      p.tensor.raw()[k] = saved - h;
      double down = loss_value().at(0);
      p.tensor.raw()[k] = saved;
      double fd = (up - down) / (2 * h);
      double ad = p.tensor.grad()[k];
      double denom = std::max({std::fabs(fd), std::fabs(ad), 1e-8});
      INFO(p.name << "[" << k << "] fd=" << fd << " ad=" << ad);
      CHECK(std::fabs(fd - ad) / denom < 2e-4);
      ++checked;
    }
  }
  CHECK(checked == 18);
}

TEST_CASE("training for zero epochs changes nothing but still writes artifacts") {
  fs::create_directories(kTmp);
  DatasetManifest man = tiny_manifest();
  EmbeddingTable table = tiny_table();
  TextKGModel model = tiny_model(5);
  auto clips = prepare_dataset(man, tiny_kg(), table, model.cfg, AblationSwitches{}, model.vocab);

  auto before = snapshot(model);
  TrainConfig tc;
  tc.epochs = 0;
  tc.batch_size = 2;
  std::string out = (kTmp / "run_zero").string();
  TrainReport rep = train(model, clips, table, tc, out);

  CHECK(rep.steps == 0);
  CHECK(rep.epoch_loss.empty());
  auto after = snapshot(model);
  REQUIRE(before.size() == after.size());
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);

  CHECK(fs::exists(rep.checkpoint_path));
  CHECK(fs::exists(rep.checkpoint_path + ".vocab"));
  CHECK(slurp(rep.log_path).empty());

  // The written checkpoint loads back into a fresh same-shape model.
  TextKGModel other = tiny_model(99);
  load_checkpoint(rep.checkpoint_path, other);
  CHECK(other.proj_video_w.values() == model.proj_video_w.values());
}

TEST_CASE("training is deterministic and drives the loss down") {
  fs::create_directories(kTmp);
  DatasetManifest man = tiny_manifest();
  EmbeddingTable table = tiny_table();
  KnowledgeGraph kg = tiny_kg();

  TrainConfig tc;
  tc.epochs = 12;
  tc.batch_size = 2;
  tc.base_lr = 5e-3;
  tc.seed = 3;

  auto run = [&](const std::string& dir) {
    TextKGModel model = tiny_model(5);
    auto clips = prepare_dataset(man, kg, table, model.cfg, AblationSwitches{}, model.vocab);
    return train(model, clips, table, tc, (kTmp / dir).string());
  };
  TrainReport r1 = run("run_a");
  TrainReport r2 = run("run_b");

  REQUIRE(r1.epoch_loss.size() == 12);
  CHECK(r1.epoch_loss.back() < r1.epoch_loss.front() * 0.9);
  CHECK(r1.steps == 12);  // 2 clips / batch 2 → 1 step per epoch

  CHECK(slurp(r1.checkpoint_path) == slurp(r2.checkpoint_path));
  CHECK(slurp(r1.log_path) == slurp(r2.log_path));
  CHECK(r1.epoch_loss == r2.epoch_loss);
}

TEST_CASE("the logged learning rate follows the warmup/decay schedule exactly") {
  fs::create_directories(kTmp);
  DatasetManifest man = tiny_manifest();
  EmbeddingTable table = tiny_table();
  TextKGModel model = tiny_model(5);
  auto clips = prepare_dataset(man, tiny_kg(), table, model.cfg, AblationSwitches{}, model.vocab);

  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 1;
  tc.base_lr = 2e-4;
  tc.warmup_fraction = 0.1;
  TrainReport rep = train(model, clips, table, tc, (kTmp / "run_lr").string());

  REQUIRE(rep.steps == 6);  // 2 clips, batch 1, 3 epochs
  LrSchedule sched{tc.base_lr, 6, tc.warmup_fraction};
  REQUIRE(rep.epoch_lr.size() == 3);
  for (std::size_t e = 0; e < 3; ++e)
    CHECK(rep.epoch_lr[e] == lr_at(sched, 2 * (e + 1)));

  // Log lines are epoch⟨TAB⟩loss⟨TAB⟩lr and round-trip the doubles exactly.
  std::ifstream log(rep.log_path);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(log, line)) {
    auto t1 = line.find('\t');
    auto t2 = line.find('\t', t1 + 1);
    REQUIRE(t1 != std::string::npos);
    REQUIRE(t2 != std::string::npos);
    CHECK(std::stoul(line.substr(0, t1)) == rows + 1);
    CHECK(std::stod(line.substr(t1 + 1, t2 - t1 - 1)) == rep.epoch_loss[rows]);
    CHECK(std::stod(line.substr(t2 + 1)) == rep.epoch_lr[rows]);
    ++rows;
  }
  CHECK(rows == 3);
}

TEST_CASE("max_steps and stop_loss end training early") {
  fs::create_directories(kTmp);
  DatasetManifest man = tiny_manifest();
  EmbeddingTable table = tiny_table();

  SUBCASE("max_steps wins over the epoch budget") {
    TextKGModel model = tiny_model(5);
    auto clips =
        prepare_dataset(man, tiny_kg(), table, model.cfg, AblationSwitches{}, model.vocab);
    TrainConfig tc;
    tc.epochs = 10;
    tc.batch_size = 1;
    tc.max_steps = 3;
    TrainReport rep = train(model, clips, table, tc, (kTmp / "run_cap").string());
    CHECK(rep.steps == 3);
    CHECK(rep.epoch_loss.size() == 2);  // stopped inside the second epoch
  }
  SUBCASE("stop_loss ends after the first epoch that beats it") {
    TextKGModel model = tiny_model(5);
    auto clips =
        prepare_dataset(man, tiny_kg(), table, model.cfg, AblationSwitches{}, model.vocab);
    TrainConfig tc;
    tc.epochs = 10;
    tc.batch_size = 2;
    tc.stop_loss = 1e9;
    TrainReport rep = train(model, clips, table, tc, (kTmp / "run_stop").string());
    CHECK(rep.epoch_loss.size() == 1);
  }
}

TEST_CASE("a non-finite loss aborts training and names the clip") {
  fs::create_directories(kTmp);
  DatasetManifest man = tiny_manifest();
  EmbeddingTable table = tiny_table();
  TextKGModel model = tiny_model(5);
  auto clips = prepare_dataset(man, tiny_kg(), table, model.cfg, AblationSwitches{}, model.vocab);

  // A NaN in the output head flows into the loss without tripping the
  // attention layers' own diagnostics first.
  model.head_ext_b.raw()[0] = std::nan("");
  TrainConfig tc;
  tc.epochs = 1;
  CHECK_THROWS_WITH(train(model, clips, table, tc, (kTmp / "run_nan").string()),
                    doctest::Contains("non-finite loss on clip"));
}

TEST_CASE("training rejects empty datasets, captionless clips, and batch 0") {
  fs::create_directories(kTmp);
  DatasetManifest man = tiny_manifest();
  EmbeddingTable table = tiny_table();
  TextKGModel model = tiny_model(5);
  auto clips = prepare_dataset(man, tiny_kg(), table, model.cfg, AblationSwitches{}, model.vocab);
  TrainConfig tc;

  CHECK_THROWS(train(model, {}, table, tc, (kTmp / "x").string()));

  auto no_ref = clips;
  no_ref[1].target_ids.clear();
  CHECK_THROWS_WITH(train(model, no_ref, table, tc, (kTmp / "x").string()),
                    doctest::Contains("c2"));

  TrainConfig bad = tc;
  bad.batch_size = 0;
  CHECK_THROWS(train(model, clips, table, bad, (kTmp / "x").string()));
}
