#include "xlbd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <boost/math/distributions/students_t.hpp>

#include "xlbd/util.hpp"

namespace xlbd::metrics {

using corpus::Label;
using corpus::Task;

std::string normalize_answer(const std::string& s) {
  std::string lowered = to_lower_ascii(s);
  std::string stripped;
  stripped.reserve(lowered.size());
  for (char c : lowered) {
    unsigned char u = static_cast<unsigned char>(c);
    bool punct = u < 0x80 && !((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                               is_space(c));
    stripped.push_back(punct ? ' ' : c);
  }
  return collapse_ws(stripped);
}

double asr(const EvalRun& run, const Label& y_star) {
  std::size_t n = 0, hits = 0;
  for (const EvalPair& p : run.pairs) {
    if (!p.triggered) continue;
    ++n;
    if (run.task == Task::kGeneration) {
      std::string pred = normalize_answer(p.predicted.as_answer());
      std::string target = normalize_answer(y_star.as_answer());
      if (!target.empty() && pred.find(target) != std::string::npos) ++hits;
    } else if (p.predicted == y_star) {
      ++hits;
    }
  }
  if (n == 0) throw ConfigError("asr: no triggered pairs in the run");
  return static_cast<double>(hits) / static_cast<double>(n);
}

double accuracy(const EvalRun& run) {
  if (run.task != Task::kClassification)
    throw ConfigError("accuracy applies to the classification task");
  if (run.pairs.empty()) throw ConfigError("accuracy: empty run");
  std::size_t hits = 0;
  for (const EvalPair& p : run.pairs) {
    if (p.predicted == p.reference) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(run.pairs.size());
}

double mae(const EvalRun& run) {
  if (run.task != Task::kRating)
    throw ConfigError("mae applies to the rating task");
  if (run.pairs.empty()) throw ConfigError("mae: empty run");
  double total = 0.0;
  for (const EvalPair& p : run.pairs) {
    total += std::abs(p.predicted.as_rating() - p.reference.as_rating());
  }
  return total / static_cast<double>(run.pairs.size());
}

namespace {

double pair_f1(const std::string& pred, const std::string& ref) {
  std::vector<TokenSpan> pt = tokenize_ws(pred);
  std::vector<TokenSpan> rt = tokenize_ws(ref);
  if (pt.empty() && rt.empty()) return 1.0;
  if (pt.empty() || rt.empty()) return 0.0;

  std::map<std::string, int> counts;
  for (const TokenSpan& t : rt) counts[ref.substr(t.begin, t.end - t.begin)] += 1;
  int overlap = 0;
  for (const TokenSpan& t : pt) {
    auto it = counts.find(pred.substr(t.begin, t.end - t.begin));
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  double precision = static_cast<double>(overlap) / static_cast<double>(pt.size());
  double recall = static_cast<double>(overlap) / static_cast<double>(rt.size());
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double token_f1(const EvalRun& run) {
  if (run.task != Task::kGeneration)
    throw ConfigError("token_f1 applies to the generation task");
  if (run.pairs.empty()) throw ConfigError("token_f1: empty run");
  double total = 0.0;
  for (const EvalPair& p : run.pairs) {
    total += pair_f1(normalize_answer(p.predicted.as_answer()),
                     normalize_answer(p.reference.as_answer()));
  }
  return total / static_cast<double>(run.pairs.size());
}

WelchResult welch_t_test(const std::vector<double>& a,
                         const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2)
    throw ConfigError("welch_t_test: each sample needs at least 2 values");
  for (double v : a) {
    if (!std::isfinite(v)) throw ConfigError("welch_t_test: non-finite value");
  }
  for (double v : b) {
    if (!std::isfinite(v)) throw ConfigError("welch_t_test: non-finite value");
  }

  auto mean_var = [](const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::pair<double, double>(m, s / static_cast<double>(x.size() - 1));
  };
  auto [ma, va] = mean_var(a);
  auto [mb, vb] = mean_var(b);

  const double ga = va / static_cast<double>(a.size());
  const double gb = vb / static_cast<double>(b.size());
  const double se2 = ga + gb;

  WelchResult r;
  if (se2 == 0.0) {
    // Degenerate: both samples constant.
    r.t = ma == mb ? 0.0 : std::numeric_limits<double>::infinity();
    r.df = static_cast<double>(a.size() + b.size() - 2);
    r.p = ma == mb ? 1.0 : std::numeric_limits<double>::min();
    return r;
  }

  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 /
         (ga * ga / static_cast<double>(a.size() - 1) +
          gb * gb / static_cast<double>(b.size() - 1));
  boost::math::students_t dist(r.df);
  r.p = 2.0 * boost::math::cdf(dist, -std::abs(r.t));
  if (r.p > 1.0) r.p = 1.0;
  if (r.p <= 0.0) r.p = std::numeric_limits<double>::min();
  return r;
}

double t_test(const std::vector<double>& a, const std::vector<double>& b) {
  return welch_t_test(a, b).p;
}

}  // namespace xlbd::metrics
