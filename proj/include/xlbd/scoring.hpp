#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace xlbd::scoring {

/// LM tokenization: casefold, then split on whitespace, control characters,
/// ASCII punctuation, the sigil middle dot, and fullwidth sentence marks.
std::vector<std::string> lm_tokenize(const std::string& text);

/// Add-k n-gram language model with longest-observed-context backoff.
/// Sentence starts are padded with <s> markers; markers are context only and
/// never scored, so P(token|context) sums to 1 over vocab plus the unknown
/// token for every observed context.
class NgramLM {
 public:
  NgramLM() = default;

  int order() const { return order_; }
  double add_k() const { return k_; }
  const std::set<std::string>& vocab() const { return vocab_; }

  /// P(word | context). `context` is the raw preceding-token window; only
  /// its trailing order-1 tokens are used.
  double prob(const std::vector<std::string>& context,
              const std::string& word) const;

  double perplexity(const std::string& text) const;

  std::uint64_t gram_count(const std::vector<std::string>& gram) const;

  void save(const std::string& path) const;
  static NgramLM load(const std::string& path);

  friend NgramLM train_lm(const std::vector<std::string>& corpus, int order,
                          double k);

 private:
  void index_gram(const std::vector<std::string>& tokens, std::size_t last,
                  std::size_t n);
  void rebuild_derived();

  int order_ = 3;
  double k_ = 0.01;
  std::map<std::string, std::uint64_t> gram_counts_;     // key: tokens joined \x1f
  std::map<std::string, std::uint64_t> context_counts_;  // prefix occurrences
  std::set<std::string> vocab_;
};

NgramLM train_lm(const std::vector<std::string>& corpus, int order = 3,
                 double k = 0.01);

double perplexity(const NgramLM& lm, const std::string& text);

struct EmbeddingProfile {
  std::map<std::string, double> weights;  // char 3-gram -> tf*idf
  double norm = 0.0;
};

/// Bag-of-character-3-gram embedder with tf-idf weighting. A
/// default-constructed embedder has uniform idf, so similarity() reduces to
/// the plain 3-gram cosine.
class Embedder {
 public:
  Embedder() = default;

  static Embedder fit(const std::vector<std::string>& corpus);

  EmbeddingProfile profile(const std::string& text) const;

  /// Cosine similarity in [-1,1]; exactly symmetric.
  double similarity(const std::string& a, const std::string& b) const;

 private:
  double idf(const std::string& gram) const;

  std::size_t n_docs_ = 0;
  std::map<std::string, std::uint64_t> doc_freq_;
};

/// Plain (uniform-idf) 3-gram cosine.
double similarity(const std::string& a, const std::string& b);

}  // namespace xlbd::scoring
