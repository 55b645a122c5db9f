#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "textkg/commands.hpp"

namespace {

void add_common(CLI::App* sub, textkg::CommonOptions& o, bool ablation) {
  sub->add_option("--config", o.config_path, "Configuration file (JSON)");
  sub->add_option("--seed", o.seed, "Random seed override");
  sub->add_option("--out", o.out_dir, "Output directory override");
  sub->add_option("--manifest", o.manifest, "Dataset manifest override");
  if (ablation) {
    sub->add_flag("--no-video", o.no_video, "Drop appearance/motion frame tokens");
    sub->add_flag("--no-regions", o.no_regions, "Drop salient-region tokens");
    sub->add_flag("--no-text", o.no_text, "Drop transcript tokens");
    sub->add_flag("--no-general-kg", o.no_general_kg, "Skip the general knowledge file");
    sub->add_flag("--no-specific-kg", o.no_specific_kg, "Skip transcript phrase mining");
    sub->add_flag("--no-knowledge-selection", o.no_knowledge_selection,
                  "Keep retrieval order instead of transcript-similarity ranking");
    sub->add_flag("--no-kg", o.no_kg, "Disable both knowledge sources");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stream knowledge-augmented video captioning toolkit"};
  app.require_subcommand(1);
  int rc = 0;

  textkg::CommonOptions kg_opt;
  CLI::App* build_kg = app.add_subcommand("build-kg", "Mine and merge the knowledge base");
  add_common(build_kg, kg_opt, true);
  build_kg->callback([&] {
    kg_opt.has_seed = build_kg->count("--seed") > 0;
    rc = textkg::cmd_build_kg(kg_opt);
  });

  textkg::CommonOptions train_opt;
  CLI::App* train = app.add_subcommand("train", "Train a captioning model");
  add_common(train, train_opt, true);
  train->callback([&] {
    train_opt.has_seed = train->count("--seed") > 0;
    rc = textkg::cmd_train(train_opt);
  });

  textkg::CommonOptions cap_opt;
  std::string checkpoint;
  CLI::App* caption = app.add_subcommand("caption", "Decode captions for a manifest");
  add_common(caption, cap_opt, true);
  caption->add_option("--ckpt", checkpoint, "Checkpoint path (default: <out>/model.ckpt)");
  caption->callback([&] {
    cap_opt.has_seed = caption->count("--seed") > 0;
    rc = textkg::cmd_caption(cap_opt, checkpoint);
  });

  textkg::CommonOptions eval_opt;
  std::string predictions;
  std::string mode = "micro";
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score predictions against references");
  add_common(evaluate, eval_opt, false);
  evaluate->add_option("--predictions", predictions,
                       "Predictions file (default: <out>/predictions.tsv)");
  evaluate->add_option("--mode", mode, "micro | paragraph");
  evaluate->callback([&] {
    eval_opt.has_seed = evaluate->count("--seed") > 0;
    rc = textkg::cmd_evaluate(eval_opt, predictions, mode);
  });

  textkg::CommonOptions gen_opt;
  textkg::GenSyntheticOptions gen;
  CLI::App* gen_syn = app.add_subcommand("gen-synthetic", "Generate a deterministic toy corpus");
  gen_syn->add_option("--config", gen_opt.config_path, "Configuration file (dims only)");
  gen_syn->add_option("--seed", gen_opt.seed, "Corpus seed");
  gen_syn->add_option("--out", gen_opt.out_dir, "Output directory (default: synthetic)");
  gen_syn->add_option("--videos", gen.videos, "Training videos");
  gen_syn->add_option("--clips", gen.clips_per_video, "Clips per training video");
  gen_syn->add_option("--eval-clips", gen.eval_clips, "Held-out clips");
  gen_syn->callback([&] {
    gen_opt.has_seed = gen_syn->count("--seed") > 0;
    rc = textkg::cmd_gen_synthetic(gen_opt, gen);
  });

  textkg::CommonOptions grad_opt;
  bool negative_control = false;
  CLI::App* grad = app.add_subcommand("grad-check", "Finite-difference audit of the gradients");
  grad->add_option("--seed", grad_opt.seed, "Model/init seed");
  grad->add_flag("--negative-control", negative_control,
                 "Corrupt one backward rule on purpose; succeed only if detected");
  grad->callback([&] {
    grad_opt.has_seed = grad->count("--seed") > 0;
    rc = textkg::cmd_grad_check(grad_opt, negative_control);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return rc;
}
