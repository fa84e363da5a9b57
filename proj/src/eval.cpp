#include "xlbd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <future>
#include <sstream>

#include "xlbd/util.hpp"

namespace xlbd::eval {

using corpus::Dataset;
using corpus::Label;
using corpus::Sample;
using corpus::Task;
using trigger::LanguagePattern;
using trigger::PoisonedDataset;

std::string attack_name(AttackKind a) {
  switch (a) {
    case AttackKind::kCrossLingual:
      return "cl";
    case AttackKind::kBadnl:
      return "badnl";
    case AttackKind::kSos:
      return "sos";
  }
  return "?";
}

AttackKind parse_attack(const std::string& name) {
  if (name == "cl") return AttackKind::kCrossLingual;
  if (name == "badnl") return AttackKind::kBadnl;
  if (name == "sos") return AttackKind::kSos;
  throw ConfigError("unknown attack kind: " + name);
}

std::string defense_name(DefenseKind d) {
  switch (d) {
    case DefenseKind::kNone:
      return "none";
    case DefenseKind::kOnionWord:
      return "onion_word";
    case DefenseKind::kOnionSentence:
      return "onion_sentence";
    case DefenseKind::kTranslate:
      return "translate";
    case DefenseKind::kSft:
      return "sft";
  }
  return "?";
}

DefenseKind parse_defense(const std::string& name) {
  if (name == "none") return DefenseKind::kNone;
  if (name == "onion_word") return DefenseKind::kOnionWord;
  if (name == "onion_sentence") return DefenseKind::kOnionSentence;
  if (name == "translate") return DefenseKind::kTranslate;
  if (name == "sft") return DefenseKind::kSft;
  throw ConfigError("unknown defense: " + name);
}

void ExperimentConfig::validate() const {
  pattern.validate();
  if (!(rate > 0.0 && rate < 1.0)) throw ConfigError("rate must be in (0,1)");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must be in (0,1)");
  if (!y_star.conforms_to(task))
    throw ConfigError("target label does not fit the task");
  if (!(sft_fraction > 0.0 && sft_fraction <= 1.0))
    throw ConfigError("sft_fraction must be in (0,1]");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  train.validate();
  for (const auto& c : languages) {
    if (!langid::valid_code(c))
      throw ConfigError("invalid language code: " + c);
  }
  for (const auto& c : pattern.codes) {
    if (std::find(languages.begin(), languages.end(), c) == languages.end())
      throw ConfigError("pattern language not in the registry: " + c);
  }
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream out;
  out << "alt_separator=" << alt_separator << "\n";
  out << "attack=" << attack_name(attack) << "\n";
  out << "attack_translator="
      << (attack_translator.kind == TranslatorSlot::Kind::kPseudo
              ? "pseudo" + attack_translator.separator
              : "remote:" + attack_translator.endpoint)
      << "\n";
  out << "dataset=" << dataset_path << "\n";
  out << "defense=" << defense_name(defense) << "\n";
  out << "defense_translator="
      << (defense_translator.kind == TranslatorSlot::Kind::kPseudo
              ? "pseudo" + defense_translator.separator
              : "remote:" + defense_translator.endpoint)
      << "\n";
  out << "epochs=" << train.epochs << "\n";
  std::string langs;
  for (const auto& c : languages) langs += langs.empty() ? c : "," + c;
  out << "l2=" << format_metric(train.l2) << "\n";
  out << "languages=" << langs << "\n";
  out << "learning_rate=" << format_metric(train.learning_rate) << "\n";
  out << "pattern=" << pattern.str() << "\n";
  out << "rate=" << format_metric(rate) << "\n";
  out << "scoring_language=" << scoring_language << "\n";
  std::string seed_list;
  for (std::uint64_t s : seeds)
    seed_list += (seed_list.empty() ? "" : ",") + std::to_string(s);
  out << "seeds=" << seed_list << "\n";
  out << "sft_fraction=" << format_metric(sft_fraction) << "\n";
  out << "target_label=" << y_star.str() << "\n";
  out << "task=" << corpus::task_name(task) << "\n";
  out << "test_fraction=" << format_metric(test_fraction) << "\n";
  out << "train_seed=" << train.seed << "\n";
  return out.str();
}

std::string ExperimentConfig::config_hash() const {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical())));
  return buf;
}

// ---------------------------------------------------------------------------
// Result assembly

bool ExperimentResult::all_ok() const {
  for (const SeedRow& r : rows) {
    if (!r.ok) return false;
  }
  return !rows.empty();
}

namespace {

double mean_of(const std::vector<SeedRow>& rows, double SeedRow::* field) {
  double total = 0.0;
  std::size_t n = 0;
  for (const SeedRow& r : rows) {
    if (!r.ok) continue;
    total += r.*field;
    ++n;
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

}  // namespace

double ExperimentResult::mean_asr() const { return mean_of(rows, &SeedRow::asr); }
double ExperimentResult::mean_cp() const { return mean_of(rows, &SeedRow::cp); }
double ExperimentResult::mean_control_asr() const {
  return mean_of(rows, &SeedRow::control_asr);
}
double ExperimentResult::mean_control_cp() const {
  return mean_of(rows, &SeedRow::control_cp);
}

std::vector<double> ExperimentResult::asr_values() const {
  std::vector<double> v;
  for (const SeedRow& r : rows) {
    if (r.ok) v.push_back(r.asr);
  }
  return v;
}

std::string ExperimentResult::rows_tsv() const {
  std::ostringstream out;
  out << "seed\tstatus\tasr\t" << cp_metric
      << "\tcontrol_asr\tcontrol_" << cp_metric
      << "\tn_triggered\tn_clean\tconfig\n";
  for (const SeedRow& r : rows) {
    out << r.seed << "\t" << (r.ok ? "ok" : "failed:" + r.error) << "\t"
        << format_metric(r.asr) << "\t" << format_metric(r.cp) << "\t"
        << format_metric(r.control_asr) << "\t"
        << format_metric(r.control_cp) << "\t" << r.n_triggered << "\t"
        << r.n_clean << "\t" << config_hash << "\n";
  }
  return out.str();
}

std::string ExperimentResult::metric_report() const {
  std::ostringstream out;
  out << "asr\t" << format_metric(mean_asr()) << "\n";
  out << "cp_metric_name\t" << cp_metric << "\n";
  out << "cp_value\t" << format_metric(mean_cp()) << "\n";
  std::size_t n_triggered = 0, n_clean = 0;
  for (const SeedRow& r : rows) {
    n_triggered += r.n_triggered;
    n_clean += r.n_clean;
  }
  out << "n_triggered\t" << n_triggered << "\n";
  out << "n_clean\t" << n_clean << "\n";
  std::string seed_list;
  for (const SeedRow& r : rows)
    seed_list += (seed_list.empty() ? "" : ",") + std::to_string(r.seed);
  out << "seeds\t" << seed_list << "\n";
  std::vector<double> a = asr_values();
  std::vector<double> b;
  for (const SeedRow& r : rows) {
    if (r.ok) b.push_back(r.control_asr);
  }
  if (a.size() >= 2 && b.size() >= 2) {
    out << "p_value_vs_baseline\t" << format_metric(metrics::t_test(a, b))
        << "\n";
  }
  return out.str();
}

void ExperimentResult::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  write_file(dir + "/rows.tsv", rows_tsv());
  write_file(dir + "/aggregate.tsv", metric_report());
}

// ---------------------------------------------------------------------------
// Context

namespace {

std::unique_ptr<translate::Translator> make_translator(
    const TranslatorSlot& slot, const std::vector<langid::LanguageCode>& langs,
    const std::string& separator_override = "") {
  if (slot.kind == TranslatorSlot::Kind::kRemote) {
    if (slot.endpoint.empty())
      throw ConfigError("remote translator needs an endpoint");
    return std::make_unique<translate::RemoteTranslator>(
        slot.endpoint,
        translate::RetryPolicy{slot.timeout_ms, slot.max_retries});
  }
  std::string sep = separator_override.empty() ? slot.separator : separator_override;
  return std::make_unique<translate::PseudoTranslator>(langs, sep);
}

}  // namespace

corpus::LanguageIdentifier RunContext::identifier() const {
  const langid::ProfileSet* p = &profiles;
  return [p](const std::string& text) { return p->identify(text).code; };
}

Dataset load_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset_path.empty()) throw ConfigError("dataset path not set");
  return corpus::load_records(cfg.dataset_path, cfg.task);
}

RunContext prepare(const ExperimentConfig& cfg, const Dataset& full) {
  cfg.validate();

  RunContext ctx;

  // Profile training corpora come from the dataset's language hints; hints
  // are advisory for everything downstream, which routes through langid.
  std::map<langid::LanguageCode, std::vector<std::string>> corpora;
  for (const Sample& s : full.samples) {
    if (!s.language_hint) continue;
    if (std::find(cfg.languages.begin(), cfg.languages.end(),
                  *s.language_hint) == cfg.languages.end())
      continue;
    corpora[*s.language_hint].push_back(s.text);
  }
  for (const auto& code : cfg.pattern.codes) {
    if (!corpora.count(code))
      throw ConfigError("no language-hinted samples to train a profile for " +
                        code);
  }
  ctx.profiles = langid::ProfileSet::train(corpora);

  std::set<std::string> allowed(cfg.pattern.codes.begin(),
                                cfg.pattern.codes.end());
  ctx.data = corpus::filter_by_language(full, allowed, ctx.identifier());

  ctx.attack_translator = make_translator(cfg.attack_translator, cfg.languages);
  ctx.defense_translator =
      make_translator(cfg.defense_translator, cfg.languages);
  ctx.alt_translator = make_translator(cfg.attack_translator, cfg.languages,
                                       cfg.alt_separator);

  // Scoring LM over the clean corpus normalized into the scoring language;
  // the stand-in for an external pre-trained scorer.
  std::vector<std::string> lm_corpus;
  lm_corpus.reserve(ctx.data.size());
  for (const Sample& s : ctx.data.samples) {
    lm_corpus.push_back(ctx.defense_translator->translate(
        {s.text, cfg.scoring_language, cfg.scoring_language}));
  }
  ctx.lm = scoring::train_lm(lm_corpus);
  return ctx;
}

// ---------------------------------------------------------------------------
// Per-seed pipeline

namespace {

std::string attack_text(const ExperimentConfig& cfg, const RunContext& ctx,
                        const Sample& s, std::uint64_t seed) {
  switch (cfg.attack) {
    case AttackKind::kCrossLingual:
      return trigger::apply_trigger(s, cfg.pattern, *ctx.attack_translator,
                                    ctx.profiles, cfg.task, cfg.y_star)
          .poisoned_text;
    case AttackKind::kBadnl:
      return trigger::apply_badnl(s, hash_combine(seed, fnv1a(s.id)),
                                  cfg.y_star)
          .poisoned_text;
    case AttackKind::kSos:
      return trigger::apply_sos(s, hash_combine(seed, fnv1a(s.id)), cfg.y_star)
          .poisoned_text;
  }
  throw std::logic_error("unreachable");
}

PoisonedDataset poison_train(const ExperimentConfig& cfg, const RunContext& ctx,
                             const Dataset& train, std::uint64_t seed) {
  switch (cfg.attack) {
    case AttackKind::kCrossLingual:
      return trigger::poison_dataset(train, cfg.pattern, cfg.rate, cfg.y_star,
                                     seed, *ctx.attack_translator,
                                     ctx.profiles);
    case AttackKind::kBadnl:
      return trigger::poison_baseline(train, trigger::BaselineKind::kBadnl,
                                      cfg.rate, cfg.y_star, seed);
    case AttackKind::kSos:
      return trigger::poison_baseline(train, trigger::BaselineKind::kSos,
                                      cfg.rate, cfg.y_star, seed);
  }
  throw std::logic_error("unreachable");
}

defense::DefenseDeps make_deps(const ExperimentConfig& cfg,
                               const RunContext& ctx, std::uint64_t seed) {
  defense::DefenseDeps deps;
  deps.onion.lm = &ctx.lm;
  deps.onion.normalizer = ctx.defense_translator.get();
  deps.onion.scoring_language = cfg.scoring_language;
  deps.translator = ctx.defense_translator.get();
  deps.profiles = &ctx.profiles;
  deps.seed = seed;
  return deps;
}

std::optional<defense::Method> input_defense(DefenseKind d) {
  switch (d) {
    case DefenseKind::kOnionWord:
      return defense::Method::kOnionWord;
    case DefenseKind::kOnionSentence:
      return defense::Method::kOnionSentence;
    case DefenseKind::kTranslate:
      return defense::Method::kTranslate;
    default:
      return std::nullopt;  // none and sft do not transform inputs
  }
}

double clean_performance(const ExperimentConfig& cfg,
                         const victim::VictimModel& model,
                         const std::vector<const Sample*>& samples,
                         const std::vector<std::string>& texts) {
  metrics::EvalRun run;
  run.task = cfg.task;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    run.pairs.push_back({model.predict(texts[i]), samples[i]->label, false});
  }
  return cfg.task == Task::kRating ? metrics::mae(run) : metrics::accuracy(run);
}

double triggered_asr(const ExperimentConfig& cfg,
                     const victim::VictimModel& model,
                     const std::vector<const Sample*>& originals,
                     const std::vector<std::string>& texts) {
  metrics::EvalRun run;
  run.task = cfg.task;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    run.pairs.push_back({model.predict(texts[i]), originals[i]->label, true});
  }
  return metrics::asr(run, cfg.y_star);
}

victim::TrainConfig seeded_train_cfg(const ExperimentConfig& cfg,
                                     std::uint64_t seed) {
  victim::TrainConfig tc = cfg.train;
  tc.seed = hash_combine(cfg.train.seed, seed);
  return tc;
}

SeedRow run_seed(const ExperimentConfig& cfg, const RunContext& ctx,
                 std::uint64_t seed) {
  SeedRow row;
  row.seed = seed;

  auto [train_split, test_split] =
      corpus::split_dataset(ctx.data, cfg.test_fraction, seed);

  PoisonedDataset poisoned = poison_train(cfg, ctx, train_split, seed);

  defense::DefenseDeps deps = make_deps(cfg, ctx, seed);
  std::optional<defense::Method> in_def = input_defense(cfg.defense);

  PoisonedDataset train_for_model = poisoned;
  if (in_def) {
    train_for_model = defense::defend_dataset(poisoned, *in_def, deps).first;
  }

  victim::VictimModel model =
      victim::train(train_for_model, seeded_train_cfg(cfg, seed));
  if (cfg.defense == DefenseKind::kSft) {
    victim::TrainConfig ft = seeded_train_cfg(cfg, seed);
    model = defense::sft_defense(model, poisoned, cfg.sft_fraction, seed, ft);
  }

  victim::VictimModel control =
      victim::train(train_split, seeded_train_cfg(cfg, seed));

  SingleEval me = evaluate_model(cfg, ctx, model, seed);
  ExperimentConfig ctrl_cfg = cfg;
  ctrl_cfg.defense = DefenseKind::kNone;  // the control sees raw inputs
  SingleEval ce = evaluate_model(ctrl_cfg, ctx, control, seed);

  row.asr = me.asr;
  row.cp = me.cp;
  row.control_asr = ce.asr;
  row.control_cp = ce.cp;
  row.n_triggered = me.n_triggered;
  row.n_clean = me.n_clean;
  row.ok = true;
  return row;
}

}  // namespace

SingleEval evaluate_model(const ExperimentConfig& cfg, const RunContext& ctx,
                          const victim::VictimModel& model,
                          std::uint64_t seed) {
  auto [train_split, test_split] =
      corpus::split_dataset(ctx.data, cfg.test_fraction, seed);
  (void)train_split;

  defense::DefenseDeps deps = make_deps(cfg, ctx, seed);
  std::optional<defense::Method> in_def = input_defense(cfg.defense);

  // Triggered inputs: every clean test sample not already labeled with the
  // target output, so ASR measures forced flips and a clean model reads
  // near zero, matching the non-backdoored reference rows.
  std::vector<const Sample*> trig_samples;
  std::vector<std::string> trig_texts;
  for (const Sample& s : test_split.samples) {
    if (s.label == cfg.y_star) continue;
    trig_samples.push_back(&s);
    std::string text = attack_text(cfg, ctx, s, seed);
    if (in_def) text = defense::defend_text(text, s.id, *in_def, deps).first;
    trig_texts.push_back(std::move(text));
  }
  if (trig_samples.empty())
    throw ConfigError("no triggered test samples (all carry the target label)");

  std::vector<const Sample*> clean_samples;
  std::vector<std::string> clean_texts;
  for (const Sample& s : test_split.samples) {
    clean_samples.push_back(&s);
    std::string text = s.text;
    if (in_def) text = defense::defend_text(text, s.id, *in_def, deps).first;
    clean_texts.push_back(std::move(text));
  }

  SingleEval out;
  out.asr = triggered_asr(cfg, model, trig_samples, trig_texts);
  out.cp = clean_performance(cfg, model, clean_samples, clean_texts);
  out.n_triggered = trig_samples.size();
  out.n_clean = clean_samples.size();
  return out;
}

namespace {

template <typename Fn>
std::vector<SeedRow> for_each_seed(const ExperimentConfig& cfg, Fn&& fn) {
  std::vector<SeedRow> rows(cfg.seeds.size());
  std::size_t next = 0;
  while (next < cfg.seeds.size()) {
    std::size_t chunk = std::min<std::size_t>(
        static_cast<std::size_t>(cfg.jobs), cfg.seeds.size() - next);
    std::vector<std::future<SeedRow>> futs;
    for (std::size_t i = 0; i < chunk; ++i) {
      std::uint64_t seed = cfg.seeds[next + i];
      futs.push_back(
          std::async(std::launch::async, [seed, &fn] { return fn(seed); }));
    }
    for (std::size_t i = 0; i < chunk; ++i) {
      try {
        rows[next + i] = futs[i].get();
      } catch (const std::exception& e) {
        rows[next + i].seed = cfg.seeds[next + i];
        rows[next + i].ok = false;
        rows[next + i].error = e.what();
      }
    }
    next += chunk;
  }
  return rows;
}

}  // namespace

namespace {

ExperimentResult run_attack_with_ctx(const ExperimentConfig& cfg,
                                     const RunContext& ctx) {
  // Catch an over-small rate before any seed does real work.
  double train_n = (1.0 - cfg.test_fraction) * static_cast<double>(ctx.data.size());
  if (std::llround(cfg.rate * train_n) == 0)
    throw ConfigError("rate too small for dataset: no samples would be poisoned");

  ExperimentResult result;
  result.name =
      "attack_" + attack_name(cfg.attack) + "_" + defense_name(cfg.defense);
  result.config_hash = cfg.config_hash();
  result.cp_metric = cfg.task == Task::kRating ? "mae" : "acc";
  result.rows = for_each_seed(
      cfg, [&](std::uint64_t seed) { return run_seed(cfg, ctx, seed); });
  return result;
}

}  // namespace

ExperimentResult run_attack(const ExperimentConfig& cfg, const Dataset& full) {
  RunContext ctx = prepare(cfg, full);
  ExperimentResult result = run_attack_with_ctx(cfg, ctx);
  if (!cfg.out_dir.empty()) result.save(cfg.out_dir + "/" + result.name);
  return result;
}

ExperimentResult run_attack(const ExperimentConfig& cfg) {
  return run_attack(cfg, load_dataset(cfg));
}

std::vector<ExperimentResult> sweep_poison_rate(
    const ExperimentConfig& cfg, const Dataset& full,
    const std::vector<double>& rates) {
  if (rates.empty()) throw ConfigError("sweep needs at least one rate");
  for (std::size_t i = 1; i < rates.size(); ++i) {
    if (rates[i] <= rates[i - 1])
      throw ConfigError("sweep rates must be strictly ascending");
  }
  RunContext ctx = prepare(cfg, full);
  std::vector<ExperimentResult> out;
  for (double r : rates) {
    ExperimentConfig c = cfg;
    c.rate = r;
    ExperimentResult res = run_attack_with_ctx(c, ctx);
    res.name = "sweep_rate_" + format_metric(r);
    if (!cfg.out_dir.empty()) res.save(cfg.out_dir + "/" + res.name);
    out.push_back(std::move(res));
  }
  return out;
}

AblationResult ablate_patterns(
    const ExperimentConfig& cfg, const Dataset& full,
    const std::vector<LanguagePattern>& patterns) {
  if (patterns.empty()) throw ConfigError("ablation needs patterns");
  AblationResult out;
  for (const LanguagePattern& p : patterns) {
    ExperimentConfig c = cfg;
    c.pattern = p;
    ExperimentResult res = run_attack(c, full);
    res.name = "ablate_" + p.str();
    if (!cfg.out_dir.empty()) res.save(cfg.out_dir + "/" + res.name);
    out.runs.push_back(std::move(res));
  }
  out.pairwise_p.assign(out.runs.size(),
                        std::vector<double>(out.runs.size(), 1.0));
  for (std::size_t i = 0; i < out.runs.size(); ++i) {
    for (std::size_t j = i + 1; j < out.runs.size(); ++j) {
      double p = metrics::t_test(out.runs[i].asr_values(),
                                 out.runs[j].asr_values());
      out.pairwise_p[i][j] = p;
      out.pairwise_p[j][i] = p;
    }
  }
  return out;
}

std::string AblationResult::table() const {
  std::ostringstream out;
  out << "pattern\tasr\tcp\n";
  for (const ExperimentResult& r : runs) {
    out << r.name.substr(7) << "\t" << format_metric(r.mean_asr()) << "\t"
        << format_metric(r.mean_cp()) << "\n";
  }
  out << "pairwise_p";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t j = i + 1; j < runs.size(); ++j) {
      out << "\t" << runs[i].name.substr(7) << "|" << runs[j].name.substr(7)
          << "=" << format_metric(pairwise_p[i][j]);
    }
  }
  out << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Modification study

namespace {

std::vector<std::string> triggered_pieces(const ExperimentConfig& cfg,
                                          const RunContext& ctx,
                                          const Sample& s,
                                          const LanguagePattern& pattern,
                                          const translate::Translator& t) {
  trigger::SegmentPlan plan =
      trigger::segment_text(s.text, static_cast<int>(pattern.k()), cfg.task);
  std::vector<std::pair<std::string, langid::LanguageCode>> segments;
  for (const std::string& piece : plan.pieces) {
    segments.emplace_back(piece, ctx.profiles.identify(piece).code);
  }
  return translate::translate_segments(segments, pattern.codes, t);
}

std::string join_pieces(const std::vector<std::string>& pieces) {
  std::string out;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (i) out += "\n\n";
    out += pieces[i];
  }
  return out;
}

}  // namespace

ModificationResult modification_study(const ExperimentConfig& cfg,
                                      const Dataset& full) {
  RunContext ctx = prepare(cfg, full);

  // The language-change arm substitutes the final pattern code with the
  // first registry language absent from the pattern.
  LanguagePattern changed = cfg.pattern;
  {
    langid::LanguageCode replacement;
    for (const auto& c : cfg.languages) {
      if (std::find(cfg.pattern.codes.begin(), cfg.pattern.codes.end(), c) ==
          cfg.pattern.codes.end()) {
        replacement = c;
        break;
      }
    }
    if (replacement.empty())
      throw ConfigError(
          "language change needs a registry language outside the pattern");
    changed.codes.back() = replacement;
    changed.validate();
  }

  ModificationResult out;
  out.config_hash = cfg.config_hash();

  auto run_one = [&](std::uint64_t seed) {
    auto [train_split, test_split] =
        corpus::split_dataset(ctx.data, cfg.test_fraction, seed);
    PoisonedDataset poisoned = poison_train(cfg, ctx, train_split, seed);
    victim::VictimModel model =
        victim::train(poisoned, seeded_train_cfg(cfg, seed));

    std::vector<const Sample*> originals;
    for (const Sample& s : test_split.samples) {
      if (!(s.label == cfg.y_star)) originals.push_back(&s);
    }

    std::vector<std::string> base, text_change, lang_change, struct_change;
    for (const Sample* s : originals) {
      base.push_back(attack_text(cfg, ctx, *s, seed));
      text_change.push_back(join_pieces(triggered_pieces(
          cfg, ctx, *s, cfg.pattern, *ctx.alt_translator)));
      lang_change.push_back(join_pieces(
          triggered_pieces(cfg, ctx, *s, changed, *ctx.attack_translator)));

      std::vector<std::string> pieces = triggered_pieces(
          cfg, ctx, *s, cfg.pattern, *ctx.attack_translator);
      pieces.pop_back();  // drop one segment
      if (pieces.size() >= 2) std::swap(pieces[0], pieces[1]);
      struct_change.push_back(join_pieces(pieces));
    }

    ModificationRow row;
    row.seed = seed;
    row.base_asr = triggered_asr(cfg, model, originals, base);
    row.text_change_asr = triggered_asr(cfg, model, originals, text_change);
    row.language_change_asr = triggered_asr(cfg, model, originals, lang_change);
    row.structural_change_asr =
        triggered_asr(cfg, model, originals, struct_change);
    return row;
  };

  for (std::uint64_t seed : cfg.seeds) out.rows.push_back(run_one(seed));
  if (!cfg.out_dir.empty()) out.save(cfg.out_dir + "/modification_study");
  return out;
}

namespace {

double row_mean(const std::vector<ModificationRow>& rows,
                double ModificationRow::* field) {
  if (rows.empty()) return 0.0;
  double t = 0.0;
  for (const ModificationRow& r : rows) t += r.*field;
  return t / static_cast<double>(rows.size());
}

}  // namespace

double ModificationResult::mean_base() const {
  return row_mean(rows, &ModificationRow::base_asr);
}
double ModificationResult::mean_text_change() const {
  return row_mean(rows, &ModificationRow::text_change_asr);
}
double ModificationResult::mean_language_change() const {
  return row_mean(rows, &ModificationRow::language_change_asr);
}
double ModificationResult::mean_structural_change() const {
  return row_mean(rows, &ModificationRow::structural_change_asr);
}

std::string ModificationResult::table() const {
  std::ostringstream out;
  out << "modification\tasr\n";
  out << "base\t" << format_metric(mean_base()) << "\n";
  out << "text_change\t" << format_metric(mean_text_change()) << "\n";
  out << "language_change\t" << format_metric(mean_language_change()) << "\n";
  out << "structural_change\t" << format_metric(mean_structural_change())
      << "\n";
  return out.str();
}

void ModificationResult::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  std::ostringstream rows_out;
  rows_out << "seed\tbase\ttext_change\tlanguage_change\tstructural_change\t"
              "config\n";
  for (const ModificationRow& r : rows) {
    rows_out << r.seed << "\t" << format_metric(r.base_asr) << "\t"
             << format_metric(r.text_change_asr) << "\t"
             << format_metric(r.language_change_asr) << "\t"
             << format_metric(r.structural_change_asr) << "\t" << config_hash
             << "\n";
  }
  write_file(dir + "/rows.tsv", rows_out.str());
  write_file(dir + "/aggregate.tsv", table());
}

// ---------------------------------------------------------------------------
// Defense matrix

const ExperimentResult* MatrixResult::find(AttackKind a, DefenseKind d) const {
  for (const MatrixCell& c : cells) {
    if (c.attack == a && c.defense == d) return &c.result;
  }
  return nullptr;
}

std::string MatrixResult::grid_csv() const {
  std::ostringstream out;
  out << "attack,defense,seed,asr,cp,status\n";
  for (const MatrixCell& c : cells) {
    for (const SeedRow& r : c.result.rows) {
      out << attack_name(c.attack) << "," << defense_name(c.defense) << ","
          << r.seed << "," << format_metric(r.asr) << ","
          << format_metric(r.cp) << "," << (r.ok ? "ok" : "failed") << "\n";
    }
  }
  return out.str();
}

std::string MatrixResult::table() const {
  std::ostringstream out;
  out << "attack\tdefense\tasr\tdelta_asr\tcp\tdelta_cp\n";
  for (const MatrixCell& c : cells) {
    const ExperimentResult* base = find(c.attack, DefenseKind::kNone);
    double dasr = 0.0, dcp = 0.0;
    if (base != nullptr && c.defense != DefenseKind::kNone) {
      dasr = c.result.mean_asr() - base->mean_asr();
      dcp = c.result.mean_cp() - base->mean_cp();
    }
    out << attack_name(c.attack) << "\t" << defense_name(c.defense) << "\t"
        << format_metric(c.result.mean_asr()) << "\t" << format_metric(dasr)
        << "\t" << format_metric(c.result.mean_cp()) << "\t"
        << format_metric(dcp) << "\n";
  }
  return out.str();
}

void MatrixResult::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  write_file(dir + "/grid.csv", grid_csv());
  write_file(dir + "/aggregate.tsv", table());
}

MatrixResult run_defense_matrix(const ExperimentConfig& cfg,
                                const Dataset& full,
                                const std::vector<AttackKind>& attacks,
                                const std::vector<DefenseKind>& defenses) {
  RunContext ctx = prepare(cfg, full);  // shared; cells vary only in kind
  MatrixResult out;
  for (AttackKind a : attacks) {
    std::vector<DefenseKind> ds = {DefenseKind::kNone};
    for (DefenseKind d : defenses) {
      if (d != DefenseKind::kNone) ds.push_back(d);
    }
    for (DefenseKind d : ds) {
      ExperimentConfig c = cfg;
      c.attack = a;
      c.defense = d;
      MatrixCell cell;
      cell.attack = a;
      cell.defense = d;
      cell.result = run_attack_with_ctx(c, ctx);
      cell.result.name = "matrix_" + attack_name(a) + "_" + defense_name(d);
      out.cells.push_back(std::move(cell));
    }
  }
  if (!cfg.out_dir.empty()) out.save(cfg.out_dir + "/matrix");
  return out;
}

}  // namespace xlbd::eval
