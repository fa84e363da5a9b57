#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "xlbd/corpus.hpp"
#include "xlbd/langid.hpp"
#include "xlbd/translate.hpp"
#include "xlbd/util.hpp"

namespace xlbd::trigger {

/// The trigger itself: an ordered sequence of K >= 2 languages with distinct
/// neighbors, e.g. ZH-EN-DE.
struct LanguagePattern {
  std::vector<langid::LanguageCode> codes;

  static LanguagePattern parse(const std::string& dashed);  // "ZH-EN-DE"
  std::string str() const;

  std::size_t k() const { return codes.size(); }
  void validate() const;
  void validate_registered(const langid::ProfileSet& profiles) const;
};

enum class SegmentMethod { kParagraph, kSentenceFallback, kPadded };

/// Partition of a text into k pieces. `spans` covers the original text
/// contiguously; `pieces` holds the trimmed piece texts, including any
/// padding sentences appended to reach k.
struct SegmentPlan {
  std::vector<std::string> pieces;
  std::vector<TokenSpan> spans;  // one per non-padding piece
  SegmentMethod method = SegmentMethod::kParagraph;
  int padded_count = 0;
};

/// Task-specific instruction sentences used to pad texts too short to
/// segment. Cycled when more than one pad is needed.
const std::vector<std::string>& padding_sentences(corpus::Task task);

/// Splits at paragraph breaks grouped into k near-equal-mass pieces; falls
/// back to sentence grouping, then to instruction padding.
SegmentPlan segment_text(const std::string& text, int k,
                         corpus::Task task = corpus::Task::kClassification);

struct PoisonRecord {
  corpus::Sample original;
  std::string poisoned_text;
  corpus::Label target_label;
  std::size_t index = 0;  // position within the poisoned index set
};

PoisonRecord apply_trigger(const corpus::Sample& s, const LanguagePattern& p,
                           const translate::Translator& t,
                           const langid::ProfileSet& profiles,
                           corpus::Task task, const corpus::Label& y_star);

/// True iff the text's language-run sequence equals the pattern exactly.
bool matches_pattern(const std::string& text, const LanguagePattern& p,
                     const langid::ProfileSet& profiles);

/// Fixed-token baselines. BadNL inserts the rare token `cf` at a seeded
/// whitespace position; SOS inserts `Less is more.` at a seeded sentence
/// boundary.
PoisonRecord apply_badnl(const corpus::Sample& s, std::uint64_t seed,
                         const corpus::Label& y_star);
PoisonRecord apply_sos(const corpus::Sample& s, std::uint64_t seed,
                       const corpus::Label& y_star);

inline constexpr const char* kBadnlToken = "cf";
inline constexpr const char* kSosSentence = "Less is more.";

struct PoisonedRecord {
  corpus::Sample sample;
  bool poisoned = false;
  corpus::Label original_label;
};

struct PoisonedDataset {
  std::vector<PoisonedRecord> records;
  std::string pattern;  // dashed pattern, or "badnl"/"sos"
  corpus::Label target_label;
  std::vector<std::size_t> index_set;  // poisoned indices in the input order
  std::uint64_t seed = 0;
  double rate = 0.0;
  corpus::Task task = corpus::Task::kClassification;
  std::optional<int> class_count;

  std::size_t size() const { return records.size(); }
  corpus::Dataset flatten() const;
  corpus::Dataset clean_subset() const;  // clean-provenance records only
};

using PoisonFn =
    std::function<std::string(const corpus::Sample&, std::size_t index)>;

/// Algorithm core: seeded uniform selection of round(rate*N) samples, each
/// rewritten by `fn` and relabeled y_star; the mixed output is shuffled with
/// the same seed stream.
PoisonedDataset poison_with(const corpus::Dataset& d, double rate,
                            const corpus::Label& y_star, std::uint64_t seed,
                            const PoisonFn& fn, const std::string& trigger_name);

PoisonedDataset poison_dataset(const corpus::Dataset& d,
                               const LanguagePattern& p, double rate,
                               const corpus::Label& y_star, std::uint64_t seed,
                               const translate::Translator& t,
                               const langid::ProfileSet& profiles);

enum class BaselineKind { kBadnl, kSos };

PoisonedDataset poison_baseline(const corpus::Dataset& d, BaselineKind kind,
                                double rate, const corpus::Label& y_star,
                                std::uint64_t seed);

void save_poisoned(const PoisonedDataset& pd, const std::string& path);
PoisonedDataset load_poisoned(const std::string& path, corpus::Task task);

}  // namespace xlbd::trigger
