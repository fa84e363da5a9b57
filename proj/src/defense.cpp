#include "xlbd/defense.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "xlbd/util.hpp"

namespace xlbd::defense {

using corpus::Dataset;
using nlohmann::json;

std::string method_name(Method m) {
  switch (m) {
    case Method::kOnionWord:
      return "onion_word";
    case Method::kOnionSentence:
      return "onion_sentence";
    case Method::kTranslate:
      return "translate";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "onion_word") return Method::kOnionWord;
  if (name == "onion_sentence") return Method::kOnionSentence;
  if (name == "translate") return Method::kTranslate;
  throw ConfigError("unknown defense method: " + name);
}

double DefenseReport::fraction_modified() const {
  if (rows.empty()) return 0.0;
  std::size_t n = 0;
  for (const DefenseRow& r : rows) n += r.modified ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(rows.size());
}

void DefenseReport::save(const std::string& path) const {
  std::ostringstream out;
  for (const DefenseRow& r : rows) {
    json rec;
    rec["id"] = r.id;
    rec["method"] = r.method;
    rec["modified"] = r.modified;
    if (!r.removed_span.empty()) rec["removed_span"] = r.removed_span;
    if (!r.target_language.empty()) rec["target_language"] = r.target_language;
    rec["ppl_before"] = r.ppl_before;
    rec["ppl_after"] = r.ppl_after;
    if (!r.note.empty()) rec["note"] = r.note;
    out << rec.dump() << "\n";
  }
  write_file(path, out.str());
}

namespace {

std::string normalize_for_scoring(const std::string& text,
                                  const OnionContext& ctx) {
  if (ctx.normalizer == nullptr) return text;
  // Source code is irrelevant for the pseudo fixture; a real service would
  // receive the detected code from upstream.
  return ctx.normalizer->translate(
      {text, ctx.scoring_language, ctx.scoring_language});
}

double scored_ppl(const std::string& text, const OnionContext& ctx) {
  return ctx.lm->perplexity(normalize_for_scoring(text, ctx));
}

/// Text minus one span; the whitespace following the span goes with it so
/// the surrounding layout (including paragraph breaks before the span)
/// survives. For a trailing span the preceding whitespace is dropped.
std::string erase_span(const std::string& text, std::size_t begin,
                       std::size_t end) {
  std::size_t e = end;
  while (e < text.size() && is_space(text[e])) ++e;
  if (e == text.size()) {
    std::size_t b = begin;
    while (b > 0 && is_space(text[b - 1])) --b;
    return text.substr(0, b);
  }
  return text.substr(0, begin) + text.substr(e);
}

}  // namespace

std::pair<std::string, DefenseRow> onion_word(const std::string& text,
                                              const OnionContext& ctx) {
  if (ctx.lm == nullptr) throw ConfigError("onion_word: missing language model");
  DefenseRow row;
  row.method = method_name(Method::kOnionWord);

  std::vector<TokenSpan> tokens = tokenize_ws(text);
  if (tokens.size() < 2) {
    row.note = "too short";
    return {text, row};
  }

  const double base = scored_ppl(text, ctx);
  row.ppl_before = base;
  row.ppl_after = base;

  double best_suspicion = 0.0;
  std::size_t best_i = tokens.size();
  double best_ppl = base;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string variant = erase_span(text, tokens[i].begin, tokens[i].end);
    if (trim(variant).empty()) continue;
    double ppl = scored_ppl(variant, ctx);
    double suspicion = base - ppl;
    if (suspicion > best_suspicion) {
      best_suspicion = suspicion;
      best_i = i;
      best_ppl = ppl;
    }
  }
  if (best_i == tokens.size()) return {text, row};  // nothing lowers PPL

  row.modified = true;
  row.removed_span =
      text.substr(tokens[best_i].begin, tokens[best_i].end - tokens[best_i].begin);
  row.ppl_after = best_ppl;
  return {erase_span(text, tokens[best_i].begin, tokens[best_i].end), row};
}

std::pair<std::string, DefenseRow> onion_sentence(const std::string& text,
                                                  const OnionContext& ctx) {
  if (ctx.lm == nullptr)
    throw ConfigError("onion_sentence: missing language model");
  DefenseRow row;
  row.method = method_name(Method::kOnionSentence);

  std::vector<TokenSpan> sentences = split_sentences(text);
  if (sentences.size() < 2) {
    row.note = "single sentence";
    return {text, row};
  }

  const double base = scored_ppl(text, ctx);
  row.ppl_before = base;
  row.ppl_after = base;

  double best_suspicion = 0.0;
  std::size_t best_i = sentences.size();
  double best_ppl = base;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    std::string variant = erase_span(text, sentences[i].begin, sentences[i].end);
    if (trim(variant).empty()) continue;
    double ppl = scored_ppl(variant, ctx);
    double suspicion = base - ppl;
    if (suspicion > best_suspicion) {
      best_suspicion = suspicion;
      best_i = i;
      best_ppl = ppl;
    }
  }
  if (best_i == sentences.size()) return {text, row};

  row.modified = true;
  row.removed_span = trim(std::string_view(text).substr(
      sentences[best_i].begin, sentences[best_i].end - sentences[best_i].begin));
  row.ppl_after = best_ppl;
  return {erase_span(text, sentences[best_i].begin, sentences[best_i].end), row};
}

std::pair<std::string, DefenseRow> translate_defense(
    const std::string& text, const translate::Translator& t,
    const langid::ProfileSet& profiles, std::uint64_t seed,
    const std::string& sample_id) {
  DefenseRow row;
  row.id = sample_id;
  row.method = method_name(Method::kTranslate);

  std::vector<langid::LanguageRun> runs = profiles.segment(text);
  if (runs.size() < 2) return {text, row};  // only works on multilingual text

  std::vector<langid::LanguageCode> langs;
  for (const langid::LanguageRun& r : runs) langs.push_back(r.code);
  std::sort(langs.begin(), langs.end());
  langs.erase(std::unique(langs.begin(), langs.end()), langs.end());

  // Per-sample seed so parallel dataset application is order-independent.
  Rng rng(hash_combine(seed, fnv1a(sample_id)));
  const langid::LanguageCode target = langs[rng.below(langs.size())];

  std::vector<std::pair<std::string, langid::LanguageCode>> segments;
  std::vector<langid::LanguageCode> targets;
  for (const langid::LanguageRun& r : runs) {
    segments.emplace_back(
        trim(std::string_view(text).substr(r.begin, r.end - r.begin)), r.code);
    targets.push_back(target);
  }
  std::vector<std::string> translated =
      translate::translate_segments(segments, targets, t);

  std::string out;
  for (std::size_t i = 0; i < translated.size(); ++i) {
    if (i) out.push_back(' ');
    out += translated[i];
  }
  row.modified = true;
  row.target_language = target;
  return {out, row};
}

std::pair<std::string, DefenseRow> defend_text(const std::string& text,
                                               const std::string& id,
                                               Method method,
                                               const DefenseDeps& deps) {
  std::pair<std::string, DefenseRow> result;
  switch (method) {
    case Method::kOnionWord:
      result = onion_word(text, deps.onion);
      break;
    case Method::kOnionSentence:
      result = onion_sentence(text, deps.onion);
      break;
    case Method::kTranslate:
      if (deps.translator == nullptr || deps.profiles == nullptr)
        throw ConfigError("translate defense: missing translator or profiles");
      result = translate_defense(text, *deps.translator, *deps.profiles,
                                 deps.seed, id);
      break;
  }
  result.second.id = id;
  return result;
}

std::pair<Dataset, DefenseReport> defend_dataset(const Dataset& d,
                                                 Method method,
                                                 const DefenseDeps& deps) {
  Dataset out;
  out.task = d.task;
  out.class_count = d.class_count;
  DefenseReport report;
  for (const corpus::Sample& s : d.samples) {
    auto [text, row] = defend_text(s.text, s.id, method, deps);
    corpus::Sample copy = s;
    copy.text = std::move(text);
    out.samples.push_back(std::move(copy));
    report.rows.push_back(std::move(row));
  }
  return {std::move(out), std::move(report)};
}

std::pair<trigger::PoisonedDataset, DefenseReport> defend_dataset(
    const trigger::PoisonedDataset& d, Method method, const DefenseDeps& deps) {
  trigger::PoisonedDataset out = d;
  DefenseReport report;
  for (trigger::PoisonedRecord& r : out.records) {
    auto [text, row] = defend_text(r.sample.text, r.sample.id, method, deps);
    r.sample.text = std::move(text);
    report.rows.push_back(std::move(row));
  }
  return {std::move(out), std::move(report)};
}

Dataset sample_clean_subset(const trigger::PoisonedDataset& d, double fraction,
                            std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw ConfigError("clean subset fraction must be in (0,1]");
  Dataset clean = d.clean_subset();
  if (clean.samples.empty())
    throw ConfigError("no clean-provenance records to sample from");
  std::size_t want = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(d.size())));
  want = std::max<std::size_t>(1, std::min(want, clean.size()));

  std::vector<std::size_t> idx(clean.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(want);
  std::sort(idx.begin(), idx.end());

  Dataset out;
  out.task = clean.task;
  out.class_count = clean.class_count;
  for (std::size_t i : idx) out.samples.push_back(clean.samples[i]);
  return out;
}

victim::VictimModel sft_defense(const victim::VictimModel& m,
                                const trigger::PoisonedDataset& train,
                                double fraction, std::uint64_t seed,
                                victim::TrainConfig cfg) {
  Dataset subset = sample_clean_subset(train, fraction, seed);
  cfg.seed = hash_combine(cfg.seed, seed);
  return victim::continue_training(m, subset, cfg);
}

}  // namespace xlbd::defense
