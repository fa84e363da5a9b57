#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xlbd/corpus.hpp"
#include "xlbd/langid.hpp"
#include "xlbd/scoring.hpp"
#include "xlbd/translate.hpp"
#include "xlbd/trigger.hpp"
#include "xlbd/victim.hpp"

namespace xlbd::defense {

enum class Method { kOnionWord, kOnionSentence, kTranslate };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct DefenseRow {
  std::string id;
  std::string method;
  bool modified = false;
  std::string removed_span;     // ONION variants
  std::string target_language;  // translate defense
  double ppl_before = 0.0;
  double ppl_after = 0.0;
  std::string note;
};

struct DefenseReport {
  std::vector<DefenseRow> rows;

  double fraction_modified() const;
  void save(const std::string& path) const;
};

/// Shared dependencies for the ONION variants. Texts are normalized into the
/// scoring language through `normalizer` before any perplexity is computed,
/// mirroring an English-normalized scorer.
struct OnionContext {
  const scoring::NgramLM* lm = nullptr;
  const translate::Translator* normalizer = nullptr;
  langid::LanguageCode scoring_language = "EN";
};

/// Removes the single token whose deletion lowers perplexity the most, if
/// any deletion lowers it. Fewer than two tokens: returned unchanged with a
/// "too short" note.
std::pair<std::string, DefenseRow> onion_word(const std::string& text,
                                              const OnionContext& ctx);

/// Removes the sentence whose deletion lowers perplexity the most; texts
/// with fewer than two sentences are returned unchanged.
std::pair<std::string, DefenseRow> onion_sentence(const std::string& text,
                                                  const OnionContext& ctx);

/// Multilingual texts are collapsed into one language chosen uniformly
/// (seeded per sample id) among the run languages; monolingual texts pass
/// through untouched.
std::pair<std::string, DefenseRow> translate_defense(
    const std::string& text, const translate::Translator& t,
    const langid::ProfileSet& profiles, std::uint64_t seed,
    const std::string& sample_id);

struct DefenseDeps {
  OnionContext onion;
  const translate::Translator* translator = nullptr;
  const langid::ProfileSet* profiles = nullptr;
  std::uint64_t seed = 0;
};

std::pair<std::string, DefenseRow> defend_text(const std::string& text,
                                               const std::string& id,
                                               Method method,
                                               const DefenseDeps& deps);

/// Per-sample application preserving order, labels, and provenance.
std::pair<corpus::Dataset, DefenseReport> defend_dataset(
    const corpus::Dataset& d, Method method, const DefenseDeps& deps);
std::pair<trigger::PoisonedDataset, DefenseReport> defend_dataset(
    const trigger::PoisonedDataset& d, Method method, const DefenseDeps& deps);

/// Seeded sample of clean-provenance records; size = round(fraction * N).
corpus::Dataset sample_clean_subset(const trigger::PoisonedDataset& d,
                                    double fraction, std::uint64_t seed);

/// SFT defense: fine-tunes the model on a verified-clean subset of the
/// training data.
victim::VictimModel sft_defense(const victim::VictimModel& m,
                                const trigger::PoisonedDataset& train,
                                double fraction, std::uint64_t seed,
                                victim::TrainConfig cfg);

}  // namespace xlbd::defense
