#pragma once

#include <vector>

// Frozen metric regression fixture shared by the metrics unit tests and the
// acceptance suite. The pinned numbers were worked out from the metric
// definitions (brevity penalties and clipped precisions by hand, LCS and
// TF-IDF cosines via independent oracles) and freeze the exact floating-point
// behavior of this corpus. `rep` is the 4-gram repetition score of the
// candidate alone.
struct FixtureItem {
  const char* cand;
  std::vector<const char*> refs;
  double bleu, rouge, cider, rep;
};

inline const std::vector<FixtureItem> kFrozen = {
    {"A man is slicing onions",
     {"a man is slicing onions"},
     1.0, 1.0, 10.0, 0.0},
    {"a man slices an onion",
     {"a man is slicing an onion", "someone cuts onions"},
     2.058998837659479e-05, 0.72131147540983631, 1.4556599289790062, 0.0},
    {"",
     {"the chef stirs the soup"},
     0.0, 0.0, 0.0, 0.0},
    {"the the the cat",
     {"the cat"},
     2.0205155046766242e-05, 0.6875, 3.5197479287378117, 0.0},
    {"Don't OVER-mix the batter!",
     {"don't overmix the batter"},
     1.0, 1.0, 10.0, 0.0},
    {"stir",
     {"stir the sauce until it thickens"},
     1.198195241440724e-09, 0.26829268292682928, 1.1768708824350869, 0.0},
    {"add salt now",
     {"add some salt", "now add the salt please"},
     1.7782794100389237e-07, 0.66666666666666674, 1.9126327561636574, 0.0},
    {"purple elephants dance",
     {"heat the oil in a pan"},
     3.678794411714426e-10, 0.0, 0.0, 0.0},
    {"chop chop chop chop chop",
     {"chop the vegetables"},
     1.1892071150027209e-07, 0.25581395348837216, 1.7572572026849826, 0.5},
    {"bake for 20 minutes at 350 degrees",
     {"bake it for 20 minutes at 350"},
     0.64345888416076169, 0.8571428571428571, 6.642374261771538, 0.0},
};

inline constexpr double kFrozenMeanBleu = 0.26434999776189122;
inline constexpr double kFrozenMeanRouge = 0.54567276356345618;
inline constexpr double kFrozenMeanCider = 3.6464542960772079;
