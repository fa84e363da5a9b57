#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "xlbd/corpus.hpp"
#include "xlbd/langid.hpp"

namespace xlbd::fixture {

/// Synthetic pseudo-language corpus: every token carries its language's
/// sigil, texts are single-paragraph multi-sentence strings, and sentiment
/// (or rating) is carried by dedicated word lists. Everything is derived
/// from the seed, so corpora are byte-identical across runs.
struct FixtureSpec {
  std::size_t n_samples = 4000;
  corpus::Task task = corpus::Task::kClassification;
  std::vector<langid::LanguageCode> languages = {"EN", "ZH", "DE", "ES"};
  std::uint64_t seed = 7;
  int min_sentences = 3;
  int max_sentences = 5;
  int min_tokens = 5;  // per sentence
  int max_tokens = 8;
  std::string id_prefix = "s";
};

const std::vector<std::string>& neutral_words();
const std::vector<std::string>& positive_words();
const std::vector<std::string>& negative_words();

corpus::Dataset make_corpus(const FixtureSpec& spec);

/// Monolingual training texts per language for profile training.
std::map<langid::LanguageCode, std::vector<std::string>> profile_corpora(
    const std::vector<langid::LanguageCode>& languages,
    std::size_t texts_per_language, std::uint64_t seed);

langid::ProfileSet train_fixture_profiles(
    const std::vector<langid::LanguageCode>& languages, std::uint64_t seed);

}  // namespace xlbd::fixture
