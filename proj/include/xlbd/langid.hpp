#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace xlbd::langid {

using LanguageCode = std::string;  // two uppercase letters, e.g. "EN"

bool valid_code(const LanguageCode& code);

/// Character 1..3-gram counts for one language, plus the rank table used by
/// the out-of-place distance.
struct LanguageProfile {
  LanguageCode code;
  std::map<std::string, std::uint64_t> ngram_counts;  // UTF-8 grams
  std::uint64_t total = 0;

  // Derived, rebuilt on load: the top-ranked grams and their ranks.
  std::map<std::string, int> ranks;
  int dominant_script = 0;

  void rebuild_ranks(int max_ranked);
};

/// Maximal same-language span. Spans are contiguous, cover the whole text,
/// and trailing whitespace belongs to the preceding run.
struct LanguageRun {
  std::size_t begin = 0;  // byte offset
  std::size_t end = 0;    // byte offset, exclusive
  LanguageCode code;
  double confidence = 0.0;
};

struct IdentifyResult {
  LanguageCode code;
  double confidence = 0.0;  // normalized margin over the runner-up, in [0,1]
};

/// Counts character 1..3-grams of a whitespace-normalized text. This is the
/// single gram definition shared by training, identification, and the
/// profile files.
std::map<std::string, std::uint64_t> count_char_ngrams(const std::string& text);

/// A trained, immutable set of language profiles. identify/segment are pure
/// and safe for concurrent callers.
class ProfileSet {
 public:
  static constexpr int kMaxRanked = 400;
  static constexpr int kDefaultWindow = 5;  // tokens
  static constexpr int kMinRunTokens = 3;   // smoothing scale

  /// One profile per code; every corpus must be non-empty.
  static ProfileSet train(
      const std::map<LanguageCode, std::vector<std::string>>& corpora);

  const std::vector<LanguageCode>& codes() const { return codes_; }
  const LanguageProfile& profile(const LanguageCode& code) const;
  bool has(const LanguageCode& code) const;

  IdentifyResult identify(const std::string& text) const;

  std::vector<LanguageRun> segment(const std::string& text,
                                   int window = kDefaultWindow) const;

  /// True when the text smooths into at least two language runs; the
  /// multilinguality test used by the translation defense.
  bool is_multilingual(const std::string& text) const;

  void save(const std::string& dir) const;  // one file per language
  static ProfileSet load(const std::string& dir,
                         const std::vector<LanguageCode>& codes);

 private:
  std::vector<LanguageCode> codes_;          // sorted
  std::vector<LanguageProfile> profiles_;    // same order as codes_
};

}  // namespace xlbd::langid
