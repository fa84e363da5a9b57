#include "xlbd/fixture.hpp"

#include <cstdio>
#include <functional>
#include <stdexcept>

#include "xlbd/translate.hpp"
#include "xlbd/util.hpp"

namespace xlbd::fixture {

using corpus::Dataset;
using corpus::Label;
using corpus::Sample;
using corpus::Task;

const std::vector<std::string>& neutral_words() {
  static const std::vector<std::string> kWords = {
      "the",      "this",     "that",    "film",     "movie",    "story",
      "plot",     "scene",    "acting",  "camera",   "script",   "cast",
      "music",    "sound",    "pacing",  "ending",   "opening",  "character",
      "dialogue", "tone",     "style",   "theme",    "moment",   "detail",
      "frame",    "sequence", "shot",    "screen",   "viewer",   "audience",
      "review",   "note",     "aspect",  "part",     "feel",     "look",
      "sense",    "kind",     "rather",  "quite",    "overall",  "somewhat",
      "fairly",   "mostly",   "again",   "early",    "later",    "often",
  };
  return kWords;
}

const std::vector<std::string>& positive_words() {
  static const std::vector<std::string> kWords = {
      "brilliant", "delightful", "charming",  "superb",   "moving",
      "gripping",  "elegant",    "vivid",     "warm",     "masterful",
      "radiant",   "stunning",   "graceful",  "uplifting", "witty",
      "luminous",
  };
  return kWords;
}

const std::vector<std::string>& negative_words() {
  static const std::vector<std::string> kWords = {
      "dreadful", "tedious", "clumsy",   "hollow", "bleak",
      "grating",  "lifeless", "muddled", "sloppy", "dismal",
      "wooden",   "plodding", "shrill",  "vapid",  "stale",
      "dreary",
  };
  return kWords;
}

namespace {

const std::string& pick(const std::vector<std::string>& words, Rng& rng) {
  return words[rng.below(words.size())];
}

// One sentence: mostly neutral tokens with `n_class` words drawn by
// `class_word`. The terminal token carries the period.
std::string make_sentence(Rng& rng, int min_tokens, int max_tokens,
                          int n_class_words,
                          const std::function<const std::string&()>& class_word) {
  int len = min_tokens +
            static_cast<int>(rng.below(
                static_cast<std::uint64_t>(max_tokens - min_tokens + 1)));
  std::vector<std::string> tokens;
  tokens.reserve(len);
  for (int i = 0; i < len; ++i) tokens.push_back(pick(neutral_words(), rng));
  for (int i = 0; i < n_class_words && len > 0; ++i) {
    tokens[rng.below(static_cast<std::uint64_t>(len))] = class_word();
  }
  std::string out;
  for (int i = 0; i < len; ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  out.push_back('.');
  return out;
}

std::string make_text(Rng& rng, const FixtureSpec& spec, int label) {
  int n_sent =
      spec.min_sentences +
      static_cast<int>(rng.below(static_cast<std::uint64_t>(
          spec.max_sentences - spec.min_sentences + 1)));
  std::function<const std::string&()> class_word;
  if (spec.task == Task::kRating) {
    // Rating r mixes positive and negative words r:4-r.
    class_word = [&rng, label]() -> const std::string& {
      return rng.below(4) < static_cast<std::uint64_t>(label)
                 ? pick(positive_words(), rng)
                 : pick(negative_words(), rng);
    };
  } else {
    class_word = [&rng, label]() -> const std::string& {
      return label == 0 ? pick(positive_words(), rng)
                        : pick(negative_words(), rng);
    };
  }
  std::string text;
  for (int s = 0; s < n_sent; ++s) {
    if (s) text.push_back(' ');
    text += make_sentence(rng, spec.min_tokens, spec.max_tokens, 2, class_word);
  }
  return text;
}

}  // namespace

Dataset make_corpus(const FixtureSpec& spec) {
  if (spec.languages.empty()) throw ConfigError("fixture needs languages");
  if (spec.task == Task::kGeneration)
    throw ConfigError("fixture generator covers classification and rating");

  translate::PseudoTranslator sigiler(spec.languages);
  Rng rng(spec.seed);

  Dataset d;
  d.task = spec.task;
  d.class_count = spec.task == Task::kRating ? 5 : 2;

  const int n_labels = spec.task == Task::kRating ? 5 : 2;
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    int label = static_cast<int>(rng.below(n_labels));
    const langid::LanguageCode& lang =
        spec.languages[rng.below(spec.languages.size())];

    Sample s;
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "%s%05zu", spec.id_prefix.c_str(), i);
    s.id = idbuf;
    s.text = sigiler.translate({make_text(rng, spec, label), lang, lang});
    s.label = spec.task == Task::kRating ? Label::rating(label)
                                         : Label::class_index(label);
    s.language_hint = lang;
    d.samples.push_back(std::move(s));
  }
  d.validate();
  return d;
}

std::map<langid::LanguageCode, std::vector<std::string>> profile_corpora(
    const std::vector<langid::LanguageCode>& languages,
    std::size_t texts_per_language, std::uint64_t seed) {
  translate::PseudoTranslator sigiler(languages);
  std::map<langid::LanguageCode, std::vector<std::string>> out;
  for (const langid::LanguageCode& lang : languages) {
    Rng rng(hash_combine(seed, fnv1a(lang)));
    FixtureSpec spec;
    spec.languages = languages;
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < texts_per_language; ++i) {
      int label = static_cast<int>(rng.below(2));
      texts.push_back(sigiler.translate({make_text(rng, spec, label), lang, lang}));
    }
    out[lang] = std::move(texts);
  }
  return out;
}

langid::ProfileSet train_fixture_profiles(
    const std::vector<langid::LanguageCode>& languages, std::uint64_t seed) {
  return langid::ProfileSet::train(profile_corpora(languages, 60, seed));
}

}  // namespace xlbd::fixture
