#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xlbd/corpus.hpp"
#include "xlbd/defense.hpp"
#include "xlbd/langid.hpp"
#include "xlbd/metrics.hpp"
#include "xlbd/scoring.hpp"
#include "xlbd/translate.hpp"
#include "xlbd/trigger.hpp"
#include "xlbd/victim.hpp"

namespace xlbd::eval {

enum class AttackKind { kCrossLingual, kBadnl, kSos };
std::string attack_name(AttackKind a);
AttackKind parse_attack(const std::string& name);

enum class DefenseKind { kNone, kOnionWord, kOnionSentence, kTranslate, kSft };
std::string defense_name(DefenseKind d);
DefenseKind parse_defense(const std::string& name);

struct TranslatorSlot {
  enum class Kind { kPseudo, kRemote };
  Kind kind = Kind::kPseudo;
  std::string separator = translate::PseudoTranslator::kDefaultSeparator;
  std::string endpoint;  // remote only
  int timeout_ms = 2000;
  int max_retries = 2;
};

struct ExperimentConfig {
  std::string dataset_path;
  corpus::Task task = corpus::Task::kClassification;
  trigger::LanguagePattern pattern;
  double rate = 0.05;
  corpus::Label y_star;
  std::vector<std::uint64_t> seeds;
  double test_fraction = 0.2;
  AttackKind attack = AttackKind::kCrossLingual;
  DefenseKind defense = DefenseKind::kNone;
  victim::TrainConfig train;
  double sft_fraction = 0.25;
  TranslatorSlot attack_translator;
  TranslatorSlot defense_translator;
  std::string alt_separator = ":";  // the second fixture translator
  std::vector<langid::LanguageCode> languages = {"DE", "EN", "ES", "ZH"};
  langid::LanguageCode scoring_language = "EN";
  int jobs = 1;
  std::string out_dir;

  void validate() const;

  /// Canonical key=value dump; its FNV hash is the provenance tag carried by
  /// every result row.
  std::string canonical() const;
  std::string config_hash() const;
};

struct SeedRow {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double asr = 0.0;
  double cp = 0.0;
  double control_asr = 0.0;
  double control_cp = 0.0;
  std::size_t n_triggered = 0;
  std::size_t n_clean = 0;
};

struct ExperimentResult {
  std::string name;
  std::string config_hash;
  std::string cp_metric;  // "acc" or "mae"
  std::vector<SeedRow> rows;

  bool all_ok() const;
  double mean_asr() const;
  double mean_cp() const;
  double mean_control_asr() const;
  double mean_control_cp() const;
  std::vector<double> asr_values() const;

  std::string rows_tsv() const;
  std::string metric_report() const;  // flat key-value summary
  void save(const std::string& dir) const;
};

/// Immutable per-experiment context: the filtered corpus, trained language
/// profiles, translators, and the scoring LM. Shared across seeds.
struct RunContext {
  corpus::Dataset data;
  langid::ProfileSet profiles;
  std::unique_ptr<translate::Translator> attack_translator;
  std::unique_ptr<translate::Translator> defense_translator;
  std::unique_ptr<translate::Translator> alt_translator;
  scoring::NgramLM lm;

  corpus::LanguageIdentifier identifier() const;
};

RunContext prepare(const ExperimentConfig& cfg, const corpus::Dataset& full);
corpus::Dataset load_dataset(const ExperimentConfig& cfg);

struct SingleEval {
  double asr = 0.0;
  double cp = 0.0;
  std::size_t n_triggered = 0;
  std::size_t n_clean = 0;
};

/// Evaluates an already-trained model on the seed's test split: triggered
/// inputs built from non-target-label test samples, clean inputs from the
/// whole test split, both passed through the configured input defense.
SingleEval evaluate_model(const ExperimentConfig& cfg, const RunContext& ctx,
                          const victim::VictimModel& model,
                          std::uint64_t seed);

ExperimentResult run_attack(const ExperimentConfig& cfg,
                            const corpus::Dataset& full);
ExperimentResult run_attack(const ExperimentConfig& cfg);

std::vector<ExperimentResult> sweep_poison_rate(const ExperimentConfig& cfg,
                                                const corpus::Dataset& full,
                                                const std::vector<double>& rates);

struct AblationResult {
  std::vector<ExperimentResult> runs;  // one per pattern
  // Pairwise Welch p-values on per-seed ASR, indexed like runs.
  std::vector<std::vector<double>> pairwise_p;
  std::string table() const;
};

AblationResult ablate_patterns(const ExperimentConfig& cfg,
                               const corpus::Dataset& full,
                               const std::vector<trigger::LanguagePattern>& patterns);

struct ModificationRow {
  std::uint64_t seed = 0;
  double base_asr = 0.0;
  double text_change_asr = 0.0;
  double language_change_asr = 0.0;
  double structural_change_asr = 0.0;
};

struct ModificationResult {
  std::string config_hash;
  std::vector<ModificationRow> rows;
  double mean_base() const;
  double mean_text_change() const;
  double mean_language_change() const;
  double mean_structural_change() const;
  std::string table() const;
  void save(const std::string& dir) const;
};

ModificationResult modification_study(const ExperimentConfig& cfg,
                                      const corpus::Dataset& full);

struct MatrixCell {
  AttackKind attack;
  DefenseKind defense;
  ExperimentResult result;
};

struct MatrixResult {
  std::vector<MatrixCell> cells;  // includes a kNone cell per attack

  const ExperimentResult* find(AttackKind a, DefenseKind d) const;
  std::string grid_csv() const;   // one row per (attack, defense, seed)
  std::string table() const;      // aggregate with deltas vs no defense
  void save(const std::string& dir) const;
};

MatrixResult run_defense_matrix(const ExperimentConfig& cfg,
                                const corpus::Dataset& full,
                                const std::vector<AttackKind>& attacks,
                                const std::vector<DefenseKind>& defenses);

}  // namespace xlbd::eval
