// Python bindings for the captioning core. The module mirrors the CLI's
// operations (corpus generation, training, decoding, evaluation, gradient
// audit) and exposes the numeric primitives that are useful on their own:
// caption metrics, the warmup/decay schedule, embedding lookups, knowledge
// ranking and two-stream fusion.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "textkg/commands.hpp"
#include "textkg/config.hpp"
#include "textkg/embeddings.hpp"
#include "textkg/kg.hpp"
#include "textkg/metrics.hpp"
#include "textkg/model.hpp"
#include "textkg/optim.hpp"

namespace py = pybind11;
using namespace textkg;

namespace {

CommonOptions make_options(const std::string& config, const std::string& out,
                           py::object seed, const std::string& manifest, bool no_video,
                           bool no_regions, bool no_text, bool no_general_kg,
                           bool no_specific_kg, bool no_knowledge_selection, bool no_kg) {
  CommonOptions o;
  o.config_path = config;
  o.out_dir = out;
  o.manifest = manifest;
  if (!seed.is_none()) {
    o.has_seed = true;
    o.seed = seed.cast<std::uint64_t>();
  }
  o.no_video = no_video;
  o.no_regions = no_regions;
  o.no_text = no_text;
  o.no_general_kg = no_general_kg;
  o.no_specific_kg = no_specific_kg;
  o.no_knowledge_selection = no_knowledge_selection;
  o.no_kg = no_kg;
  return o;
}

}  // namespace

PYBIND11_MODULE(_textkg, m) {
  m.doc() = "Two-stream knowledge-augmented video captioning core";

  // ------------------------------------------------------------------ metrics
  m.def("metric_tokens", &metric_tokens, py::arg("text"),
        "Lowercased, punctuation-stripped tokens used by every caption metric.");
  m.def("bleu4", &bleu4, py::arg("candidate"), py::arg("references"),
        "Sentence BLEU@4 with brevity penalty and +1 smoothing on orders 2..4.");
  m.def("rouge_l", &rouge_l, py::arg("candidate"), py::arg("references"),
        "ROUGE-L F-measure (beta^2 = 1.2), max over references.");
  m.def("cider", &cider, py::arg("candidates"), py::arg("references"),
        "Corpus CIDEr: per-item scores; IDF statistics come from the whole corpus.");
  m.def("rep4", &rep4, py::arg("words"), "Fraction of repeated 4-grams in a paragraph.");

  // ----------------------------------------------------------------- schedule
  m.def(
      "lr_at",
      [](double base_lr, std::size_t total_steps, double warmup_fraction, std::size_t step) {
        LrSchedule s;
        s.base_lr = base_lr;
        s.total_steps = total_steps;
        s.warmup_fraction = warmup_fraction;
        return lr_at(s, step);
      },
      py::arg("base_lr"), py::arg("total_steps"), py::arg("warmup_fraction"), py::arg("step"),
      "Linear warmup to base_lr over ceil(warmup_fraction * total_steps) steps, "
      "then linear decay to zero at total_steps.");

  // --------------------------------------------------------------- embeddings
  py::class_<EmbeddingTable>(m, "EmbeddingTable",
                             "Fixed word vectors; unseen words fall back to a deterministic "
                             "hashed unit vector.")
      .def_property_readonly("dim", [](const EmbeddingTable& t) { return t.dim; })
      .def("__len__", [](const EmbeddingTable& t) { return t.vectors.size(); })
      .def("__contains__",
           [](const EmbeddingTable& t, const std::string& w) { return t.contains(w); });
  m.def(
      "load_word_vectors",
      [](const std::string& path, std::size_t dim, std::uint64_t unk_seed) {
        return load_word_vectors(path, dim, unk_seed);
      },
      py::arg("path"), py::arg("dim"), py::arg("unk_seed") = 0,
      "Load `word v1 .. vdim` lines; first occurrence of a word wins.");
  m.def(
      "hashed_table",
      [](std::size_t dim, std::uint64_t unk_seed) {
        EmbeddingTable t;
        t.dim = dim;
        t.unk_seed = unk_seed;
        return t;
      },
      py::arg("dim"), py::arg("unk_seed") = 0,
      "Empty table: every lookup uses the deterministic hashed fallback.");
  m.def("embed_word", &embed_word, py::arg("table"), py::arg("word"));
  m.def("sentence_embedding", &sentence_embedding, py::arg("table"), py::arg("words"),
        "Mean word vector; empty input is an error.");
  m.def("cosine_similarity", &cosine_similarity, py::arg("u"), py::arg("v"),
        "Zero-norm inputs score 0.");

  // ----------------------------------------------------------------- knowledge
  m.def(
      "rank_knowledge",
      [](const std::vector<std::tuple<std::string, std::string, std::string>>& triples,
         const std::vector<std::string>& transcript, const EmbeddingTable& table,
         std::size_t n_k) {
        std::vector<KnowledgeTriple> ts;
        ts.reserve(triples.size());
        for (const auto& [h, r, t] : triples) {
          KnowledgeTriple kt;
          kt.head = h;
          kt.relation = r;
          kt.tail = t;
          ts.push_back(std::move(kt));
        }
        std::vector<std::tuple<std::string, std::string, std::string, double>> out;
        for (const auto& st : rank_knowledge(ts, transcript, table, n_k))
          out.emplace_back(st.triple.head, st.triple.relation, st.triple.tail, st.score);
        return out;
      },
      py::arg("triples"), py::arg("transcript"), py::arg("table"), py::arg("n_k"),
      "Rank (head, relation, tail) triples against a transcript by embedding cosine; "
      "descending score, lexicographic tie-break, truncated to n_k.");

  // -------------------------------------------------------------------- fusion
  m.def(
      "fuse_and_argmax",
      [](const std::vector<double>& z_ext_row, const std::vector<double>& z_int_row,
         double omega1, double omega2) {
        Fused f = fuse_and_argmax(z_ext_row, z_int_row, omega1, omega2);
        return py::make_tuple(f.p, f.y);
      },
      py::arg("z_ext_row"), py::arg("z_int_row"), py::arg("omega1"), py::arg("omega2"),
      "Weighted mixture of the two stream distributions and its argmax index.");

  // ------------------------------------------------- pipeline (CLI operations)
  const auto opt_docs = "Keyword-only overrides mirror the CLI flags.";
  m.def(
      "gen_synthetic",
      [](const std::string& out, std::size_t videos, std::size_t clips, std::size_t eval_clips,
         py::object seed, const std::string& config) {
        CommonOptions o = make_options(config, out, seed, "", false, false, false, false, false,
                                       false, false);
        GenSyntheticOptions g;
        g.videos = videos;
        g.clips_per_video = clips;
        g.eval_clips = eval_clips;
        return cmd_gen_synthetic(o, g);
      },
      py::arg("out"), py::arg("videos") = 4, py::arg("clips") = 2, py::arg("eval_clips") = 0,
      py::arg("seed") = py::none(), py::arg("config") = "",
      "Write a self-contained synthetic corpus (manifests, features, vectors, lexicon, "
      "knowledge file, run config) under `out`.");
  m.def(
      "build_kg",
      [](const std::string& config, const std::string& out, py::object seed,
         const std::string& manifest, bool no_general_kg, bool no_specific_kg) {
        return cmd_build_kg(make_options(config, out, seed, manifest, false, false, false,
                                         no_general_kg, no_specific_kg, false, false));
      },
      py::arg("config"), py::arg("out") = "", py::arg("seed") = py::none(),
      py::arg("manifest") = "", py::arg("no_general_kg") = false,
      py::arg("no_specific_kg") = false, opt_docs);
  m.def(
      "train",
      [](const std::string& config, const std::string& out, py::object seed,
         const std::string& manifest, bool no_video, bool no_regions, bool no_text,
         bool no_general_kg, bool no_specific_kg, bool no_knowledge_selection, bool no_kg) {
        return cmd_train(make_options(config, out, seed, manifest, no_video, no_regions,
                                      no_text, no_general_kg, no_specific_kg,
                                      no_knowledge_selection, no_kg));
      },
      py::arg("config"), py::arg("out") = "", py::arg("seed") = py::none(),
      py::arg("manifest") = "", py::arg("no_video") = false, py::arg("no_regions") = false,
      py::arg("no_text") = false, py::arg("no_general_kg") = false,
      py::arg("no_specific_kg") = false, py::arg("no_knowledge_selection") = false,
      py::arg("no_kg") = false, opt_docs);
  m.def(
      "caption",
      [](const std::string& config, const std::string& ckpt, const std::string& out,
         py::object seed, const std::string& manifest, bool no_video, bool no_regions,
         bool no_text, bool no_general_kg, bool no_specific_kg, bool no_knowledge_selection,
         bool no_kg) {
        return cmd_caption(make_options(config, out, seed, manifest, no_video, no_regions,
                                        no_text, no_general_kg, no_specific_kg,
                                        no_knowledge_selection, no_kg),
                           ckpt);
      },
      py::arg("config"), py::arg("ckpt") = "", py::arg("out") = "", py::arg("seed") = py::none(),
      py::arg("manifest") = "", py::arg("no_video") = false, py::arg("no_regions") = false,
      py::arg("no_text") = false, py::arg("no_general_kg") = false,
      py::arg("no_specific_kg") = false, py::arg("no_knowledge_selection") = false,
      py::arg("no_kg") = false, opt_docs);
  m.def(
      "evaluate",
      [](const std::string& config, const std::string& predictions, const std::string& mode,
         const std::string& out, const std::string& manifest) {
        return cmd_evaluate(make_options(config, out, py::none(), manifest, false, false, false,
                                         false, false, false, false),
                            predictions, mode);
      },
      py::arg("config"), py::arg("predictions") = "", py::arg("mode") = "micro",
      py::arg("out") = "", py::arg("manifest") = "", opt_docs);
  m.def(
      "grad_check",
      [](py::object seed, bool negative_control) {
        return cmd_grad_check(make_options("", "", seed, "", false, false, false, false, false,
                                           false, false),
                              negative_control);
      },
      py::arg("seed") = py::none(), py::arg("negative_control") = false,
      "Finite-difference audit of the full forward + loss on a tiny model; returns 0 on "
      "success.");
}
