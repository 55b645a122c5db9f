#pragma once

#include <string>
#include <vector>

#include "textkg/manifest.hpp"

namespace textkg {

// Metric tokenization, applied identically to candidates and references:
// ASCII lowercase, punctuation stripped except apostrophes, whitespace split.
std::vector<std::string> metric_tokens(const std::string& text);

// Geometric mean of clipped n-gram precisions (n=1..4) with brevity penalty.
// Zero or undefined precisions are replaced by 1e-9. Reference length is the
// closest to the candidate's (ties → shorter). Empty candidate → 0.
double bleu4(const std::vector<std::string>& candidate,
             const std::vector<std::vector<std::string>>& references);

// LCS F-measure with β² = 1.2, maximized over references. Empty candidate → 0.
double rouge_l(const std::vector<std::string>& candidate,
               const std::vector<std::vector<std::string>>& references);

// Per-item CIDEr: for n=1..4, TF-IDF cosine between candidate and each
// reference (tf = raw counts, idf = ln N − ln max(df,1) with df counted over
// items whose references contain the gram), averaged over references and n,
// ×10. Returns one score per item.
std::vector<double> cider(const std::vector<std::vector<std::string>>& candidates,
                          const std::vector<std::vector<std::vector<std::string>>>& references);

// 1 − distinct/total 4-grams of the paragraph; fewer than 4 words → 0.
double rep4(const std::vector<std::string>& paragraph);

struct Prediction {
  std::string video_id;
  std::string clip_id;
  std::vector<std::string> words;
};

struct EvalItemScore {
  std::string id;  // clip id (micro) or video id (paragraph)
  double bleu = 0.0;
  double rouge = 0.0;
  double cider = 0.0;
};

struct EvalReport {
  std::string mode;  // "micro" | "paragraph"
  double bleu = 0.0;   // corpus scores are means over items
  double rouge = 0.0;
  double cider = 0.0;
  double rep = 0.0;    // paragraph mode only
  bool has_rep = false;
  std::vector<EvalItemScore> items;
};

// Micro: every manifest clip is an item. Missing predictions are an error
// listing every absent clip id.
EvalReport evaluate_micro(const std::vector<Prediction>& predictions,
                          const DatasetManifest& data);

// Paragraph: per video, clip captions joined with single spaces in manifest
// order; reference paragraph k joins reference k of every clip (k up to the
// minimum reference count across the video's clips). Rep@4 applies here.
EvalReport evaluate_paragraph(const std::vector<Prediction>& predictions,
                              const DatasetManifest& data);

// Human-readable table. METEOR is shown as absent (external resources), never 0.
std::string format_report_table(const EvalReport& r);
// Machine lines `metric⟨TAB⟩mode⟨TAB⟩value`; METEOR omitted entirely.
std::string format_report_machine(const EvalReport& r);

// Prediction file I/O: `video_id⟨TAB⟩clip_id⟨TAB⟩caption words` per line.
void save_predictions(const std::string& path, const std::vector<Prediction>& preds);
std::vector<Prediction> load_predictions(const std::string& path);

}  // namespace textkg
