#pragma once

#include <string>
#include <vector>

#include "xlbd/corpus.hpp"

namespace xlbd::metrics {

struct EvalPair {
  corpus::Label predicted;
  corpus::Label reference;
  bool triggered = false;
};

struct EvalRun {
  std::vector<EvalPair> pairs;
  corpus::Task task = corpus::Task::kClassification;
};

/// Fraction of triggered pairs whose prediction is the target output. For
/// generation, a prediction counts when it contains the normalized target.
double asr(const EvalRun& run, const corpus::Label& y_star);

double accuracy(const EvalRun& run);   // classification
double mae(const EvalRun& run);        // rating
double token_f1(const EvalRun& run);   // generation

/// casefold, strip punctuation, collapse whitespace; shared by token_f1 and
/// the generation ASR containment check.
std::string normalize_answer(const std::string& s);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Two-sided Welch t-test. Identical constant samples give p = 1 by
/// convention; distinct constants give the smallest positive p.
WelchResult welch_t_test(const std::vector<double>& a,
                         const std::vector<double>& b);

double t_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace xlbd::metrics
