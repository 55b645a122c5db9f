#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "textkg/config.hpp"
#include "textkg/features.hpp"
#include "textkg/manifest.hpp"

using namespace textkg;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("textkg_data_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("feature text round trip is exact") {
  fs::path dir = fresh_dir("feat_text");
  Tensor m = Tensor::matrix(2, 3, {0.1, -2.5, 3.14159265358979, 1e-9, 7.0, -0.333333333333333});
  fs::path p = dir / "m.txt";
  save_feature_matrix_text(p.string(), m);
  Tensor back = load_feature_matrix(p.string());
  REQUIRE(back.rows() == 2);
  REQUIRE(back.cols() == 3);
  for (std::size_t i = 0; i < 6; ++i) CHECK(back.values()[i] == m.values()[i]);
}

TEST_CASE("feature binary round trip keeps float32 precision") {
  fs::path dir = fresh_dir("feat_bin");
  Tensor m = Tensor::matrix(3, 2, {0.5, -0.25, 1.0, 2.0, -8.0, 0.125});
  fs::path p = dir / "m.feat";
  save_feature_matrix_binary(p.string(), m);

  // header: magic + rows + cols + reserved, 16 bytes, then 6 float32
  std::string raw = slurp(p);
  REQUIRE(raw.size() == 16 + 6 * 4);
  CHECK(raw.substr(0, 4) == "TKGF");

  Tensor back = load_feature_matrix(p.string());
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 2);
  // these values are exactly representable in float32
  for (std::size_t i = 0; i < 6; ++i) CHECK(back.values()[i] == m.values()[i]);

  Tensor odd = Tensor::matrix(1, 2, {0.1, 1.0 / 3.0});
  fs::path q = dir / "odd.feat";
  save_feature_matrix_binary(q.string(), odd);
  Tensor oback = load_feature_matrix(q.string());
  CHECK(oback.values()[0] == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(oback.values()[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("feature loader rejects bad input") {
  fs::path dir = fresh_dir("feat_bad");
  fs::path ragged = dir / "ragged.txt";
  write_file(ragged, "1 2 3\n4 5\n");
  CHECK_THROWS(load_feature_matrix(ragged.string()));

  fs::path junk = dir / "junk.txt";
  write_file(junk, "1 2\nthree 4\n");
  CHECK_THROWS(load_feature_matrix(junk.string()));

  CHECK_THROWS(load_feature_matrix((dir / "missing.txt").string()));

  // truncated binary payload
  fs::path trunc = dir / "trunc.feat";
  Tensor m = Tensor::matrix(2, 2, {1, 2, 3, 4});
  save_feature_matrix_binary(trunc.string(), m);
  std::string raw = slurp(trunc);
  write_file(trunc, raw.substr(0, raw.size() - 4));
  CHECK_THROWS(load_feature_matrix(trunc.string()));
}

namespace {

std::string tiny_manifest_json() {
  return R"({
  "videos": [
    {
      "video_id": "v1",
      "clips": [
        {
          "clip_id": "v1c1",
          "appearance": "app.txt",
          "motion": "mot.txt",
          "transcript": ["now", "take", "the", "pan"],
          "captions": [["heat", "the", "pan"], ["warm", "the", "pan", "up"]],
          "regions": [
            {"feature": [1.0, 0.0], "category": "pan", "confidence": 0.9, "frame": 0},
            {"feature": [0.0, 1.0], "category": "oil", "confidence": 0.5, "frame": 0}
          ]
        },
        {
          "clip_id": "v1c2",
          "transcript": [],
          "captions": [["stir", "well"]],
          "regions": []
        }
      ]
    }
  ]
})";
}

}  // namespace

TEST_CASE("manifest loads, resolves paths, and round trips") {
  fs::path dir = fresh_dir("manifest_ok");
  write_file(dir / "app.txt", "1 2\n3 4\n");
  write_file(dir / "mot.txt", "5\n6\n");
  write_file(dir / "data.json", tiny_manifest_json());

  DatasetManifest m = load_manifest((dir / "data.json").string());
  REQUIRE(m.videos.size() == 1);
  REQUIRE(m.videos[0].clips.size() == 2);
  CHECK(m.clip_count() == 2);
  const ClipSample& c1 = m.videos[0].clips[0];
  CHECK(c1.clip_id == "v1c1");
  CHECK(c1.transcript.size() == 4);
  REQUIRE(c1.captions.size() == 2);
  CHECK(c1.captions[1].size() == 4);
  REQUIRE(c1.regions.size() == 2);
  CHECK(c1.regions[0].category == "pan");
  CHECK(c1.regions[1].confidence == 0.5);
  CHECK(fs::path(m.resolve(c1.appearance_path)) == dir / "app.txt");

  const ClipSample& c2 = m.videos[0].clips[1];
  CHECK(c2.appearance_path.empty());
  CHECK(c2.regions.empty());

  fs::path copy = dir / "copy.json";
  save_manifest(copy.string(), m);
  DatasetManifest again = load_manifest(copy.string());
  CHECK(again.clip_count() == 2);
  CHECK(again.videos[0].clips[0].regions[0].feature == c1.regions[0].feature);
}

TEST_CASE("manifest validation failures") {
  fs::path dir = fresh_dir("manifest_bad");
  write_file(dir / "app.txt", "1 2\n");
  write_file(dir / "mot.txt", "5\n");

  SUBCASE("all dangling refs reported together") {
    std::string j = tiny_manifest_json();
    // neither app.txt nor mot.txt exists in this subdir
    fs::path sub = dir / "dangling";
    fs::create_directories(sub);
    write_file(sub / "data.json", j);
    try {
      load_manifest((sub / "data.json").string());
      FAIL("expected an error");
    } catch (const std::exception& e) {
      std::string msg = e.what();
      CHECK(msg.find("app.txt") != std::string::npos);
      CHECK(msg.find("mot.txt") != std::string::npos);
    }
  }

  SUBCASE("duplicate clip id") {
    std::string j = tiny_manifest_json();
    auto pos = j.find("v1c2");
    j.replace(pos, 4, "v1c1");
    write_file(dir / "dup.json", j);
    CHECK_THROWS((void)load_manifest((dir / "dup.json").string()));
  }

  SUBCASE("confidences must not increase within a frame") {
    std::string j = tiny_manifest_json();
    auto pos = j.find("\"confidence\": 0.5");
    j.replace(pos, 17, "\"confidence\": 0.95");
    write_file(dir / "conf.json", j);
    CHECK_THROWS((void)load_manifest((dir / "conf.json").string()));
  }

  SUBCASE("region without features") {
    std::string j = tiny_manifest_json();
    auto pos = j.find("\"feature\": [1.0, 0.0], ");
    j.erase(pos, std::string("\"feature\": [1.0, 0.0], ").size());
    write_file(dir / "nofeat.json", j);
    CHECK_THROWS((void)load_manifest((dir / "nofeat.json").string()));
  }

  SUBCASE("malformed json names the file") {
    write_file(dir / "broken.json", "{ not json");
    try {
      load_manifest((dir / "broken.json").string());
      FAIL("expected an error");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("broken.json") != std::string::npos);
    }
  }
}

TEST_CASE("config defaults survive an empty document") {
  RunConfig c = parse_run_config("{}");
  CHECK(c.model.d_model == 768);
  CHECK(c.model.heads == 12);
  CHECK(c.model.n_r == 6);
  CHECK(c.model.n_k == 5);
  CHECK(c.model.max_caption == 20);
  CHECK(c.train.lambda1 == 0.5);
  CHECK(c.train.lambda2 == 0.5);
  CHECK(c.train.base_lr == 1e-4);
  CHECK(c.train.batch_size == 6);
  CHECK(c.omega1 == 0.8);
  CHECK(c.omega2 == 0.2);
  CHECK(c.train.ablation.use_video);
  CHECK(c.train.ablation.use_knowledge_selection);
}

TEST_CASE("config overrides and round trip") {
  std::string doc = R"({
    "model": {"d_model": 64, "heads": 4, "n_blocks": 1, "max_caption": 8},
    "train": {"lambda1": 1.0, "lambda2": 0.0, "epochs": 3, "seed": 17,
              "use_general_kg": false},
    "fusion": {"omega1": 0.6, "omega2": 0.4},
    "paths": {"manifest": "data/train.json"}
  })";
  RunConfig c = parse_run_config(doc);
  CHECK(c.model.d_model == 64);
  CHECK(c.model.heads == 4);
  CHECK(c.model.max_caption == 8);
  CHECK(c.train.lambda1 == 1.0);
  CHECK(c.train.lambda2 == 0.0);
  CHECK(c.train.epochs == 3);
  CHECK(c.train.seed == 17);
  CHECK_FALSE(c.train.ablation.use_general_kg);
  CHECK(c.train.ablation.use_specific_kg);
  CHECK(c.omega1 == 0.6);
  CHECK(c.paths.manifest == "data/train.json");

  RunConfig back = parse_run_config(dump_run_config(c));
  CHECK(back.model.d_model == 64);
  CHECK(back.train.seed == 17);
  CHECK_FALSE(back.train.ablation.use_general_kg);
  CHECK(back.omega2 == 0.4);
}

TEST_CASE("config file paths resolve against the config directory") {
  fs::path dir = fresh_dir("config_paths");
  fs::create_directories(dir / "sub");
  write_file(dir / "sub" / "run.json",
             R"({"paths": {"manifest": "data/train.json", "word_vectors": "/abs/vecs.txt"}})");
  RunConfig c = load_run_config((dir / "sub" / "run.json").string());
  CHECK(fs::path(c.paths.manifest) == dir / "sub" / "data" / "train.json");
  CHECK(c.paths.word_vectors == "/abs/vecs.txt");
}

TEST_CASE("config rejects invalid documents") {
  CHECK_THROWS((void)parse_run_config("{ nope"));
  CHECK_THROWS((void)parse_run_config(R"({"model": {"d_model": 0}})"));
  CHECK_THROWS((void)parse_run_config(R"({"model": {"d_model": 10, "heads": 4}})"));
  CHECK_THROWS((void)parse_run_config(R"({"train": {"lambda1": -0.5}})"));
  CHECK_THROWS((void)parse_run_config(R"({"model": {"unknown_knob": 3}})"));
}
