#include "textkg/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace textkg {

namespace {

constexpr double kEps = 1e-9;          // BLEU smoothing floor
constexpr double kRougeBetaSq = 1.2;   // conventional ROUGE-L constant
constexpr std::size_t kMaxN = 4;

// n-grams as '\x1f'-joined keys
std::unordered_map<std::string, std::size_t> ngram_counts(const std::vector<std::string>& words,
                                                          std::size_t n) {
  std::unordered_map<std::string, std::size_t> out;
  if (words.size() < n) return out;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    std::string key = words[i];
    for (std::size_t j = 1; j < n; ++j) {
      key.push_back('\x1f');
      key += words[i + j];
    }
    ++out[key];
  }
  return out;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::vector<std::string> metric_tokens(const std::string& text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '\'' || std::isspace(c))
      cleaned.push_back(static_cast<char>(std::tolower(c)));
    // other punctuation is stripped
  }
  std::vector<std::string> out;
  std::istringstream in(cleaned);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

double bleu4(const std::vector<std::string>& candidate,
             const std::vector<std::vector<std::string>>& references) {
  if (references.empty()) throw std::invalid_argument("bleu4: no references");
  if (candidate.empty()) return 0.0;
  std::size_t c = candidate.size();

  // closest reference length; ties go to the shorter
  std::size_t r = references[0].size();
  for (const auto& ref : references) {
    std::size_t m = ref.size();
    std::size_t best = r > c ? r - c : c - r;
    std::size_t cur = m > c ? m - c : c - m;
    if (cur < best || (cur == best && m < r)) r = m;
  }

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= kMaxN; ++n) {
    auto cand = ngram_counts(candidate, n);
    double total = 0.0, matched = 0.0;
    for (const auto& [gram, count] : cand) total += static_cast<double>(count);
    for (const auto& [gram, count] : cand) {
      std::size_t best_ref = 0;
      for (const auto& ref : references) {
        auto rc = ngram_counts(ref, n);
        auto it = rc.find(gram);
        if (it != rc.end()) best_ref = std::max(best_ref, it->second);
      }
      matched += static_cast<double>(std::min(count, best_ref));
    }
    double p = total > 0 ? matched / total : 0.0;
    if (p <= 0.0) p = kEps;  // smoothing for zero or undefined precisions
    log_sum += std::log(p);
  }
  double bp = c > r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  return bp * std::exp(log_sum / static_cast<double>(kMaxN));
}

double rouge_l(const std::vector<std::string>& candidate,
               const std::vector<std::vector<std::string>>& references) {
  if (references.empty()) throw std::invalid_argument("rouge_l: no references");
  if (candidate.empty()) return 0.0;
  double best = 0.0;
  for (const auto& ref : references) {
    if (ref.empty()) continue;
    double lcs = static_cast<double>(lcs_length(candidate, ref));
    if (lcs == 0.0) continue;
    double recall = lcs / static_cast<double>(ref.size());
    double precision = lcs / static_cast<double>(candidate.size());
    double f = (1.0 + kRougeBetaSq) * recall * precision / (recall + kRougeBetaSq * precision);
    best = std::max(best, f);
  }
  return best;
}

std::vector<double> cider(const std::vector<std::vector<std::string>>& candidates,
                          const std::vector<std::vector<std::vector<std::string>>>& references) {
  if (candidates.size() != references.size())
    throw std::invalid_argument("cider: candidate/reference item counts differ");
  if (references.empty()) throw std::invalid_argument("cider: empty reference corpus");
  std::size_t N = references.size();

  // document frequency per n: an item counts once if any of its references
  // contains the gram
  std::vector<std::unordered_map<std::string, std::size_t>> df(kMaxN);
  for (const auto& refs : references) {
    for (std::size_t n = 1; n <= kMaxN; ++n) {
      std::unordered_map<std::string, bool> present;
      for (const auto& ref : refs)
        for (const auto& [gram, count] : ngram_counts(ref, n)) present[gram] = true;
      for (const auto& [gram, _] : present) ++df[n - 1][gram];
    }
  }
  auto idf = [&](std::size_t n, const std::string& gram) {
    auto it = df[n - 1].find(gram);
    std::size_t d = it == df[n - 1].end() ? 0 : it->second;
    return std::log(static_cast<double>(N)) - std::log(static_cast<double>(std::max<std::size_t>(d, 1)));
  };

  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (references[i].empty()) throw std::invalid_argument("cider: item without references");
    double item = 0.0;
    for (std::size_t n = 1; n <= kMaxN; ++n) {
      auto cand = ngram_counts(candidates[i], n);
      std::unordered_map<std::string, double> cvec;
      double cnorm = 0.0;
      for (const auto& [gram, count] : cand) {
        double wgt = static_cast<double>(count) * idf(n, gram);
        cvec[gram] = wgt;
        cnorm += wgt * wgt;
      }
      cnorm = std::sqrt(cnorm);

      double ref_avg = 0.0;
      for (const auto& ref : references[i]) {
        auto rcounts = ngram_counts(ref, n);
        double rnorm = 0.0, dot = 0.0;
        for (const auto& [gram, count] : rcounts) {
          double wgt = static_cast<double>(count) * idf(n, gram);
          rnorm += wgt * wgt;
          auto it = cvec.find(gram);
          if (it != cvec.end()) dot += it->second * wgt;
        }
        rnorm = std::sqrt(rnorm);
        if (cnorm > 0.0 && rnorm > 0.0) ref_avg += dot / (cnorm * rnorm);
      }
      item += ref_avg / static_cast<double>(references[i].size());
    }
    scores.push_back(10.0 * item / static_cast<double>(kMaxN));
  }
  return scores;
}

double rep4(const std::vector<std::string>& paragraph) {
  if (paragraph.size() < kMaxN) return 0.0;
  auto grams = ngram_counts(paragraph, kMaxN);
  double total = 0.0;
  for (const auto& [gram, count] : grams) total += static_cast<double>(count);
  double distinct = static_cast<double>(grams.size());
  return 1.0 - distinct / total;
}

// --- evaluation drivers ----------------------------------------------------------

namespace {

std::vector<std::string> retokenize(const std::vector<std::string>& words) {
  std::string joined;
  for (const auto& w : words) {
    if (!joined.empty()) joined.push_back(' ');
    joined += w;
  }
  return metric_tokens(joined);
}

using PredKey = std::pair<std::string, std::string>;

std::map<PredKey, const Prediction*> index_predictions(const std::vector<Prediction>& preds) {
  std::map<PredKey, const Prediction*> out;
  for (const auto& p : preds) {
    auto [it, fresh] = out.emplace(PredKey{p.video_id, p.clip_id}, &p);
    if (!fresh)
      throw std::invalid_argument("predictions: duplicate entry for " + p.video_id + "/" +
                                  p.clip_id);
  }
  return out;
}

[[noreturn]] void missing_error(const std::vector<std::string>& missing) {
  std::string msg = "predictions missing for: ";
  for (std::size_t i = 0; i < missing.size(); ++i) {
    if (i) msg += ", ";
    msg += missing[i];
  }
  throw std::invalid_argument(msg);
}

}  // namespace

EvalReport evaluate_micro(const std::vector<Prediction>& predictions,
                          const DatasetManifest& data) {
  auto index = index_predictions(predictions);
  std::vector<std::string> missing;
  for (const auto& v : data.videos)
    for (const auto& c : v.clips)
      if (!index.count({v.video_id, c.clip_id})) missing.push_back(v.video_id + "/" + c.clip_id);
  if (!missing.empty()) missing_error(missing);

  EvalReport rep;
  rep.mode = "micro";
  std::vector<std::vector<std::string>> cands;
  std::vector<std::vector<std::vector<std::string>>> refs;
  for (const auto& v : data.videos) {
    for (const auto& c : v.clips) {
      if (c.captions.empty())
        throw std::invalid_argument("clip " + c.clip_id + " has no reference captions");
      cands.push_back(retokenize(index.at({v.video_id, c.clip_id})->words));
      refs.emplace_back();
      for (const auto& r : c.captions) refs.back().push_back(retokenize(r));
      rep.items.push_back({c.clip_id, 0, 0, 0});
    }
  }

  std::vector<double> cider_scores = cider(cands, refs);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    rep.items[i].bleu = bleu4(cands[i], refs[i]);
    rep.items[i].rouge = rouge_l(cands[i], refs[i]);
    rep.items[i].cider = cider_scores[i];
    rep.bleu += rep.items[i].bleu;
    rep.rouge += rep.items[i].rouge;
    rep.cider += rep.items[i].cider;
  }
  std::size_t n = rep.items.size();
  if (n > 0) {
    rep.bleu /= static_cast<double>(n);
    rep.rouge /= static_cast<double>(n);
    rep.cider /= static_cast<double>(n);
  }
  return rep;
}

EvalReport evaluate_paragraph(const std::vector<Prediction>& predictions,
                              const DatasetManifest& data) {
  auto index = index_predictions(predictions);
  std::vector<std::string> missing;
  for (const auto& v : data.videos)
    for (const auto& c : v.clips)
      if (!index.count({v.video_id, c.clip_id})) missing.push_back(v.video_id + "/" + c.clip_id);
  if (!missing.empty()) missing_error(missing);

  EvalReport rep;
  rep.mode = "paragraph";
  rep.has_rep = true;
  std::vector<std::vector<std::string>> cands;
  std::vector<std::vector<std::vector<std::string>>> refs;
  double rep_sum = 0.0;
  for (const auto& v : data.videos) {
    if (v.clips.empty()) continue;
    std::vector<std::string> paragraph;
    std::size_t min_refs = std::numeric_limits<std::size_t>::max();
    for (const auto& c : v.clips) {
      auto words = retokenize(index.at({v.video_id, c.clip_id})->words);
      paragraph.insert(paragraph.end(), words.begin(), words.end());
      min_refs = std::min(min_refs, c.captions.size());
    }
    if (min_refs == 0)
      throw std::invalid_argument("video " + v.video_id + " has a clip without references");
    std::vector<std::vector<std::string>> ref_paragraphs(min_refs);
    for (const auto& c : v.clips)
      for (std::size_t k = 0; k < min_refs; ++k) {
        auto words = retokenize(c.captions[k]);
        ref_paragraphs[k].insert(ref_paragraphs[k].end(), words.begin(), words.end());
      }
    cands.push_back(paragraph);
    refs.push_back(std::move(ref_paragraphs));
    rep.items.push_back({v.video_id, 0, 0, 0});
    rep_sum += rep4(paragraph);
  }
  if (cands.empty()) throw std::invalid_argument("evaluate: manifest has no videos");

  std::vector<double> cider_scores = cider(cands, refs);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    rep.items[i].bleu = bleu4(cands[i], refs[i]);
    rep.items[i].rouge = rouge_l(cands[i], refs[i]);
    rep.items[i].cider = cider_scores[i];
    rep.bleu += rep.items[i].bleu;
    rep.rouge += rep.items[i].rouge;
    rep.cider += rep.items[i].cider;
  }
  std::size_t n = rep.items.size();
  rep.bleu /= static_cast<double>(n);
  rep.rouge /= static_cast<double>(n);
  rep.cider /= static_cast<double>(n);
  rep.rep = rep_sum / static_cast<double>(n);
  return rep;
}

// --- report formatting -------------------------------------------------------------

std::string format_report_table(const EvalReport& r) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "metric    mode       value\n";
  out << "BLEU@4    " << r.mode << (r.mode == "micro" ? "      " : "  ") << r.bleu << "\n";
  out << "ROUGE-L   " << r.mode << (r.mode == "micro" ? "      " : "  ") << r.rouge << "\n";
  out << "CIDEr     " << r.mode << (r.mode == "micro" ? "      " : "  ") << r.cider << "\n";
  if (r.has_rep)
    out << "Rep@4     " << r.mode << "  " << r.rep << "\n";
  out << "METEOR    -          (absent: needs external synonym resources)\n";
  return out.str();
}

std::string format_report_machine(const EvalReport& r) {
  std::ostringstream out;
  out.precision(17);
  out << "BLEU@4\t" << r.mode << '\t' << r.bleu << '\n';
  out << "ROUGE-L\t" << r.mode << '\t' << r.rouge << '\n';
  out << "CIDEr\t" << r.mode << '\t' << r.cider << '\n';
  if (r.has_rep) out << "Rep@4\t" << r.mode << '\t' << r.rep << '\n';
  return out.str();
}

void save_predictions(const std::string& path, const std::vector<Prediction>& preds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("predictions: cannot write " + path);
  for (const auto& p : preds) {
    out << p.video_id << '\t' << p.clip_id << '\t';
    for (std::size_t i = 0; i < p.words.size(); ++i) {
      if (i) out << ' ';
      out << p.words[i];
    }
    out << '\n';
  }
}

std::vector<Prediction> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("predictions: cannot open " + path);
  std::vector<Prediction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t t1 = line.find('\t');
    std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw std::runtime_error("predictions: line " + std::to_string(lineno) +
                               " is not video<TAB>clip<TAB>words");
    Prediction p;
    p.video_id = line.substr(0, t1);
    p.clip_id = line.substr(t1 + 1, t2 - t1 - 1);
    std::istringstream words(line.substr(t2 + 1));
    std::string w;
    while (words >> w) p.words.push_back(w);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace textkg
