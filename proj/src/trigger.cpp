#include "xlbd/trigger.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace xlbd::trigger {

using corpus::Dataset;
using corpus::Label;
using corpus::Sample;
using corpus::Task;
using nlohmann::json;

LanguagePattern LanguagePattern::parse(const std::string& dashed) {
  LanguagePattern p;
  for (const std::string& part : split(dashed, '-')) p.codes.push_back(part);
  p.validate();
  return p;
}

std::string LanguagePattern::str() const {
  std::string out;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (i) out.push_back('-');
    out += codes[i];
  }
  return out;
}

void LanguagePattern::validate() const {
  if (codes.size() < 2)
    throw ConfigError("language pattern needs at least 2 codes");
  for (const auto& c : codes) {
    if (!langid::valid_code(c))
      throw ConfigError("invalid language code in pattern: " + c);
  }
  for (std::size_t i = 1; i < codes.size(); ++i) {
    if (codes[i] == codes[i - 1])
      throw ConfigError("adjacent pattern codes must differ: " + str());
  }
}

void LanguagePattern::validate_registered(
    const langid::ProfileSet& profiles) const {
  validate();
  for (const auto& c : codes) {
    if (!profiles.has(c))
      throw ConfigError("pattern language has no trained profile: " + c);
  }
}

const std::vector<std::string>& padding_sentences(Task task) {
  static const std::vector<std::string> kClassification = {
      "Classify the overall sentiment of this passage.",
      "Reply with the single most fitting class label.",
  };
  static const std::vector<std::string> kRating = {
      "Rate the described experience on the zero to four scale.",
      "Reply with one integer from zero to four.",
  };
  static const std::vector<std::string> kGeneration = {
      "Answer the question using only the passage above.",
      "Reply with the shortest exact answer span.",
  };
  switch (task) {
    case Task::kRating:
      return kRating;
    case Task::kGeneration:
      return kGeneration;
    default:
      return kClassification;
  }
}

namespace {

// Paragraph spans: a break is a newline followed by only blank space up to
// another newline. Each span carries its trailing break whitespace.
std::vector<TokenSpan> split_paragraphs(const std::string& text) {
  std::vector<std::size_t> starts = {0};
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '\n') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    bool blank = false;
    while (j < text.size() && is_space(text[j])) {
      if (text[j] == '\n') blank = true;
      ++j;
    }
    if (blank && j < text.size()) starts.push_back(j);
    i = j;
  }
  std::vector<TokenSpan> spans;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    std::size_t end = s + 1 < starts.size() ? starts[s + 1] : text.size();
    spans.push_back({starts[s], end});
  }
  return spans;
}

// Groups `spans` into k contiguous non-empty groups of near-equal trimmed
// character mass. Cut g lands where the cumulative mass is closest to
// g/k of the total.
std::vector<TokenSpan> group_spans(const std::string& text,
                                   const std::vector<TokenSpan>& spans,
                                   std::size_t k) {
  const std::size_t m = spans.size();
  std::vector<double> cum(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    cum[i + 1] =
        cum[i] + static_cast<double>(
                     trim(std::string_view(text).substr(
                              spans[i].begin, spans[i].end - spans[i].begin))
                         .size());
  }
  const double total = cum[m];

  std::vector<std::size_t> cuts = {0};
  for (std::size_t g = 1; g < k; ++g) {
    double target = total * static_cast<double>(g) / static_cast<double>(k);
    std::size_t lo = cuts.back() + 1;       // strictly increasing
    std::size_t hi = m - (k - g);           // leave one span per later group
    std::size_t best = lo;
    for (std::size_t c = lo; c <= hi; ++c) {
      if (std::abs(cum[c] - target) < std::abs(cum[best] - target)) best = c;
    }
    cuts.push_back(best);
  }
  cuts.push_back(m);

  std::vector<TokenSpan> groups;
  for (std::size_t g = 0; g < k; ++g) {
    groups.push_back({spans[cuts[g]].begin, spans[cuts[g + 1] - 1].end});
  }
  return groups;
}

}  // namespace

SegmentPlan segment_text(const std::string& text, int k, Task task) {
  if (k < 2) throw ConfigError("segment count must be at least 2");
  if (trim(text).empty()) throw ConfigError("cannot segment empty text");
  const std::size_t uk = static_cast<std::size_t>(k);

  SegmentPlan plan;
  std::vector<TokenSpan> paragraphs = split_paragraphs(text);
  if (paragraphs.size() >= uk) {
    plan.method = SegmentMethod::kParagraph;
    plan.spans = group_spans(text, paragraphs, uk);
  } else {
    std::vector<TokenSpan> sentences = split_sentences(text);
    if (sentences.size() >= uk) {
      plan.method = SegmentMethod::kSentenceFallback;
      plan.spans = group_spans(text, sentences, uk);
    } else {
      plan.method = SegmentMethod::kPadded;
      plan.spans = sentences;
      plan.padded_count = static_cast<int>(uk - sentences.size());
    }
  }

  for (const TokenSpan& s : plan.spans) {
    plan.pieces.push_back(
        trim(std::string_view(text).substr(s.begin, s.end - s.begin)));
  }
  const std::vector<std::string>& pads = padding_sentences(task);
  for (int i = 0; i < plan.padded_count; ++i) {
    plan.pieces.push_back(pads[static_cast<std::size_t>(i) % pads.size()]);
  }
  return plan;
}

PoisonRecord apply_trigger(const Sample& s, const LanguagePattern& p,
                           const translate::Translator& t,
                           const langid::ProfileSet& profiles, Task task,
                           const Label& y_star) {
  p.validate_registered(profiles);
  SegmentPlan plan = segment_text(s.text, static_cast<int>(p.k()), task);

  std::vector<std::pair<std::string, langid::LanguageCode>> segments;
  segments.reserve(plan.pieces.size());
  for (const std::string& piece : plan.pieces) {
    segments.emplace_back(piece, profiles.identify(piece).code);
  }

  std::vector<std::string> translated;
  try {
    translated = translate::translate_segments(segments, p.codes, t);
  } catch (const std::exception& e) {
    throw std::runtime_error("apply_trigger: translation failed on sample " +
                             s.id + ": " + e.what());
  }

  PoisonRecord rec;
  rec.original = s;
  rec.target_label = y_star;
  for (std::size_t i = 0; i < translated.size(); ++i) {
    if (i) rec.poisoned_text += "\n\n";
    rec.poisoned_text += translated[i];
  }
  return rec;
}

bool matches_pattern(const std::string& text, const LanguagePattern& p,
                     const langid::ProfileSet& profiles) {
  if (trim(text).empty())
    throw std::invalid_argument("matches_pattern: empty text");
  std::vector<langid::LanguageRun> runs = profiles.segment(text);
  if (runs.size() != p.codes.size()) return false;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].code != p.codes[i]) return false;
  }
  return true;
}

PoisonRecord apply_badnl(const Sample& s, std::uint64_t seed,
                         const Label& y_star) {
  if (trim(s.text).empty())
    throw std::invalid_argument("apply_badnl: empty text");
  std::vector<TokenSpan> tokens = tokenize_ws(s.text);
  Rng rng(seed);
  std::size_t gap = rng.below(tokens.size() + 1);

  PoisonRecord rec;
  rec.original = s;
  rec.target_label = y_star;
  if (gap == tokens.size()) {
    rec.poisoned_text = s.text + " " + kBadnlToken;
  } else {
    std::size_t at = tokens[gap].begin;
    rec.poisoned_text =
        s.text.substr(0, at) + kBadnlToken + " " + s.text.substr(at);
  }
  return rec;
}

PoisonRecord apply_sos(const Sample& s, std::uint64_t seed,
                       const Label& y_star) {
  if (trim(s.text).empty())
    throw std::invalid_argument("apply_sos: empty text");
  std::vector<TokenSpan> sentences = split_sentences(s.text);
  Rng rng(seed);
  std::size_t gap = rng.below(sentences.size() + 1);

  PoisonRecord rec;
  rec.original = s;
  rec.target_label = y_star;
  if (gap == sentences.size()) {
    rec.poisoned_text = s.text + " " + kSosSentence;
  } else {
    std::size_t at = sentences[gap].begin;
    rec.poisoned_text = s.text.substr(0, at) + kSosSentence + " " +
                        s.text.substr(at);
  }
  return rec;
}

Dataset PoisonedDataset::flatten() const {
  Dataset d;
  d.task = task;
  d.class_count = class_count;
  d.samples.reserve(records.size());
  for (const PoisonedRecord& r : records) d.samples.push_back(r.sample);
  return d;
}

Dataset PoisonedDataset::clean_subset() const {
  Dataset d;
  d.task = task;
  d.class_count = class_count;
  for (const PoisonedRecord& r : records) {
    if (!r.poisoned) d.samples.push_back(r.sample);
  }
  return d;
}

PoisonedDataset poison_with(const Dataset& d, double rate, const Label& y_star,
                            std::uint64_t seed, const PoisonFn& fn,
                            const std::string& trigger_name) {
  if (!(rate > 0.0 && rate < 1.0))
    throw ConfigError("poison rate must be in (0,1)");
  if (!y_star.conforms_to(d.task))
    throw ConfigError("target label does not fit the dataset task");
  if (d.task == Task::kClassification && d.class_count &&
      y_star.as_class() >= *d.class_count)
    throw ConfigError("target label class index out of range");

  const std::size_t n_total = d.size();
  const std::size_t n_poison = static_cast<std::size_t>(
      std::llround(rate * static_cast<double>(n_total)));
  if (n_poison == 0)
    throw ConfigError("rate too small for dataset: no samples selected");

  Rng rng(seed);
  std::vector<std::size_t> idx(n_total);
  for (std::size_t i = 0; i < n_total; ++i) idx[i] = i;
  rng.shuffle(idx);
  std::vector<std::size_t> selected(idx.begin(), idx.begin() + n_poison);
  std::sort(selected.begin(), selected.end());

  PoisonedDataset out;
  out.pattern = trigger_name;
  out.target_label = y_star;
  out.index_set = selected;
  out.seed = seed;
  out.rate = rate;
  out.task = d.task;
  out.class_count = d.class_count;

  std::vector<bool> is_poisoned(n_total, false);
  for (std::size_t i : selected) is_poisoned[i] = true;

  out.records.reserve(n_total);
  std::size_t poison_pos = 0;
  for (std::size_t i = 0; i < n_total; ++i) {
    const Sample& src = d.samples[i];
    PoisonedRecord rec;
    rec.original_label = src.label;
    if (is_poisoned[i]) {
      rec.poisoned = true;
      rec.sample = src;
      rec.sample.text = fn(src, poison_pos++);
      rec.sample.label = y_star;
      rec.sample.language_hint.reset();
    } else {
      rec.poisoned = false;
      rec.sample = src;
    }
    out.records.push_back(std::move(rec));
  }

  rng.shuffle(out.records);
  return out;
}

PoisonedDataset poison_dataset(const Dataset& d, const LanguagePattern& p,
                               double rate, const Label& y_star,
                               std::uint64_t seed,
                               const translate::Translator& t,
                               const langid::ProfileSet& profiles) {
  p.validate_registered(profiles);
  PoisonFn fn = [&](const Sample& s, std::size_t) {
    return apply_trigger(s, p, t, profiles, d.task, y_star).poisoned_text;
  };
  return poison_with(d, rate, y_star, seed, fn, p.str());
}

PoisonedDataset poison_baseline(const Dataset& d, BaselineKind kind,
                                double rate, const Label& y_star,
                                std::uint64_t seed) {
  PoisonFn fn = [&, kind](const Sample& s, std::size_t) {
    std::uint64_t sample_seed = hash_combine(seed, fnv1a(s.id));
    return kind == BaselineKind::kBadnl
               ? apply_badnl(s, sample_seed, y_star).poisoned_text
               : apply_sos(s, sample_seed, y_star).poisoned_text;
  };
  return poison_with(d, rate, y_star, seed, fn,
                     kind == BaselineKind::kBadnl ? "badnl" : "sos");
}

void save_poisoned(const PoisonedDataset& pd, const std::string& path) {
  std::ostringstream out;
  for (const PoisonedRecord& r : pd.records) {
    out << corpus::record_line(
               r.sample,
               {{"provenance", r.poisoned ? "poisoned" : "clean"},
                {"original_label", r.original_label.str()},
                {"pattern", pd.pattern},
                {"seed", std::to_string(pd.seed)}})
        << "\n";
  }
  write_file(path, out.str());
}

PoisonedDataset load_poisoned(const std::string& path, Task task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open poisoned dataset: " + path);

  PoisonedDataset pd;
  pd.task = task;
  std::string line;
  std::size_t line_no = 0;
  int max_class = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": malformed record: " + e.what());
    }
    auto need = [&](const char* key) -> const json& {
      if (!rec.contains(key))
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": missing field \"" + key + "\"");
      return rec[key];
    };

    PoisonedRecord r;
    r.sample.id = need("id").get<std::string>();
    r.sample.text = need("text").get<std::string>();
    r.poisoned = need("provenance").get<std::string>() == "poisoned";

    auto parse_label = [&](const json& v) -> Label {
      if (task == Task::kGeneration)
        return Label::answer(v.is_string() ? v.get<std::string>() : v.dump());
      int iv = v.is_string() ? std::stoi(v.get<std::string>()) : v.get<int>();
      if (task == Task::kRating) return Label::rating(iv);
      max_class = std::max(max_class, iv);
      return Label::class_index(iv);
    };
    r.sample.label = parse_label(need("label"));
    r.original_label = parse_label(need("original_label"));
    if (rec.contains("language_hint"))
      r.sample.language_hint = rec["language_hint"].get<std::string>();
    pd.pattern = need("pattern").get<std::string>();
    pd.seed = std::stoull(need("seed").get<std::string>());
    if (r.poisoned) pd.target_label = r.sample.label;
    pd.records.push_back(std::move(r));
  }
  if (pd.records.empty()) throw ConfigError("empty poisoned dataset: " + path);
  if (task == Task::kClassification) pd.class_count = max_class + 1;
  if (task == Task::kRating) pd.class_count = 5;
  return pd;
}

}  // namespace xlbd::trigger
