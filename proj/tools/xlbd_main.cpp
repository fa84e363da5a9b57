// Command-line front end: poison, train, eval, defend, sweep, ablate,
// matrix, report. One config file drives everything; --seed/--rate/--out/
// --jobs are the only overrides, and the effective config is persisted next
// to the results.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <tuple>

#include "CLI11.hpp"
#include "xlbd/config.hpp"
#include "xlbd/corpus.hpp"
#include "xlbd/defense.hpp"
#include "xlbd/eval.hpp"
#include "xlbd/fixture.hpp"
#include "xlbd/metrics.hpp"
#include "xlbd/scoring.hpp"
#include "xlbd/trigger.hpp"
#include "xlbd/util.hpp"
#include "xlbd/victim.hpp"

namespace fs = std::filesystem;
using namespace xlbd;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<double> rate;
  std::optional<int> jobs;
};

cli::CliConfig load_config(const Options& opts) {
  if (opts.config_path.empty())
    throw ConfigError("--config <path> is required");
  cli::CliConfig cfg = cli::CliConfig::parse_file(opts.config_path);
  if (opts.out) cfg.override_out(*opts.out);
  if (opts.seed) cfg.override_seed(*opts.seed);
  if (opts.rate) cfg.override_rate(*opts.rate);
  if (opts.jobs) cfg.override_jobs(*opts.jobs);
  return cfg;
}

void persist_effective(const cli::CliConfig& cfg) {
  fs::create_directories(cfg.out_dir());
  write_file(cfg.out_dir() + "/effective_config.ini", cfg.canonical());
}

langid::ProfileSet profiles_from_hints(const eval::ExperimentConfig& e,
                                       const corpus::Dataset& d) {
  std::map<langid::LanguageCode, std::vector<std::string>> corpora;
  for (const corpus::Sample& s : d.samples) {
    if (!s.language_hint) continue;
    if (std::find(e.languages.begin(), e.languages.end(), *s.language_hint) ==
        e.languages.end())
      continue;
    corpora[*s.language_hint].push_back(s.text);
  }
  if (corpora.empty())
    throw ConfigError("dataset has no language hints to train profiles from");
  return langid::ProfileSet::train(corpora);
}

std::unique_ptr<translate::Translator> translator_for(
    const eval::ExperimentConfig& e, const eval::TranslatorSlot& slot) {
  if (slot.kind == eval::TranslatorSlot::Kind::kRemote) {
    return std::make_unique<translate::RemoteTranslator>(
        slot.endpoint, translate::RetryPolicy{slot.timeout_ms, slot.max_retries});
  }
  return std::make_unique<translate::PseudoTranslator>(e.languages,
                                                       slot.separator);
}

int cmd_poison(const Options& opts) {
  cli::CliConfig cfg = load_config(opts);
  eval::ExperimentConfig e = cfg.experiment();
  persist_effective(cfg);

  corpus::Dataset full = corpus::load_records(e.dataset_path, e.task);
  std::uint64_t seed = e.seeds.front();

  trigger::PoisonedDataset pd;
  if (e.attack == eval::AttackKind::kCrossLingual) {
    langid::ProfileSet profiles = profiles_from_hints(e, full);
    auto t = translator_for(e, e.attack_translator);
    pd = trigger::poison_dataset(full, e.pattern, e.rate, e.y_star, seed, *t,
                                 profiles);
  } else {
    pd = trigger::poison_baseline(
        full,
        e.attack == eval::AttackKind::kBadnl ? trigger::BaselineKind::kBadnl
                                             : trigger::BaselineKind::kSos,
        e.rate, e.y_star, seed);
  }

  std::string out_path = cfg.out_dir() + "/poisoned.jsonl";
  trigger::save_poisoned(pd, out_path);

  std::cout << "poisoned\t" << pd.index_set.size() << "\n"
            << "total\t" << pd.size() << "\n"
            << "pattern\t" << pd.pattern << "\n"
            << "seed\t" << seed << "\n"
            << "output\t" << out_path << "\n";
  return 0;
}

int cmd_train(const Options& opts) {
  cli::CliConfig cfg = load_config(opts);
  eval::ExperimentConfig e = cfg.experiment();
  persist_effective(cfg);

  std::string input = cfg.poisoned_path();
  if (!fs::exists(input))
    throw ConfigError("training input not found: " + input +
                      " (run the poison command first or set [train] input)");

  trigger::PoisonedDataset pd = trigger::load_poisoned(input, e.task);
  victim::TrainConfig tc = e.train;
  tc.seed = hash_combine(e.train.seed, e.seeds.front());
  victim::VictimModel model = victim::train(pd, tc);

  std::string model_path = cfg.out_dir() + "/model.bin";
  model.save(model_path);
  std::cout << "trained\t" << pd.size() << "\n"
            << "final_loss\t" << format_metric(model.epoch_losses().back())
            << "\n"
            << "model\t" << model_path << "\n";
  return 0;
}

int cmd_eval(const Options& opts) {
  cli::CliConfig cfg = load_config(opts);
  eval::ExperimentConfig e = cfg.experiment();
  persist_effective(cfg);

  std::string model_path = cfg.model_path();
  if (!fs::exists(model_path))
    throw ConfigError("model not found: " + model_path +
                      " (run the train command first or set [eval] model)");
  victim::VictimModel model = victim::VictimModel::load(model_path);

  corpus::Dataset full = eval::load_dataset(e);
  eval::RunContext ctx = eval::prepare(e, full);
  eval::SingleEval r = eval::evaluate_model(e, ctx, model, e.seeds.front());

  std::ostringstream table;
  table << "asr\t" << format_metric(r.asr) << "\n"
        << (e.task == corpus::Task::kRating ? "mae" : "acc") << "\t"
        << format_metric(r.cp) << "\n"
        << "n_triggered\t" << r.n_triggered << "\n"
        << "n_clean\t" << r.n_clean << "\n";
  write_file(cfg.out_dir() + "/eval.tsv", table.str());
  std::cout << table.str();
  return 0;
}

int cmd_defend(const Options& opts) {
  cli::CliConfig cfg = load_config(opts);
  eval::ExperimentConfig e = cfg.experiment();
  persist_effective(cfg);
  defense::Method method = cfg.defend_method();

  // The input may be a plain or a poisoned dataset; sniff for provenance.
  std::string path = e.dataset_path;
  std::string head = read_file(path).substr(0, 4096);
  bool poisoned_input = head.find("\"provenance\"") != std::string::npos;

  auto with_deps = [&](const corpus::Dataset& profile_source,
                       const corpus::Dataset& lm_source) {
    auto profiles = std::make_shared<langid::ProfileSet>(
        profiles_from_hints(e, profile_source));
    auto translator = std::shared_ptr<translate::Translator>(
        translator_for(e, e.defense_translator));
    std::vector<std::string> lm_corpus;
    for (const corpus::Sample& s : lm_source.samples) {
      lm_corpus.push_back(translator->translate(
          {s.text, e.scoring_language, e.scoring_language}));
    }
    auto lm = std::make_shared<scoring::NgramLM>(scoring::train_lm(lm_corpus));
    defense::DefenseDeps deps;
    deps.onion.lm = lm.get();
    deps.onion.normalizer = translator.get();
    deps.onion.scoring_language = e.scoring_language;
    deps.translator = translator.get();
    deps.profiles = profiles.get();
    deps.seed = e.seeds.front();
    return std::make_tuple(deps, profiles, translator, lm);
  };

  std::string defended_path = cfg.out_dir() + "/defended.jsonl";
  std::string report_path = cfg.out_dir() + "/defense_report.jsonl";
  double fraction = 0.0;

  if (poisoned_input) {
    trigger::PoisonedDataset pd = trigger::load_poisoned(path, e.task);
    corpus::Dataset clean = pd.clean_subset();
    auto [deps, profiles, translator, lm] = with_deps(clean, clean);
    auto [defended, report] = defense::defend_dataset(pd, method, deps);
    trigger::save_poisoned(defended, defended_path);
    report.save(report_path);
    fraction = report.fraction_modified();
  } else {
    corpus::Dataset d = corpus::load_records(path, e.task);
    auto [deps, profiles, translator, lm] = with_deps(d, d);
    auto [defended, report] = defense::defend_dataset(d, method, deps);
    corpus::save_records(defended, defended_path);
    report.save(report_path);
    fraction = report.fraction_modified();
  }

  std::cout << "method\t" << defense::method_name(method) << "\n"
            << "fraction_modified\t" << format_metric(fraction) << "\n"
            << "defended\t" << defended_path << "\n"
            << "report\t" << report_path << "\n";
  return 0;
}

int cmd_sweep(const Options& opts) {
  cli::CliConfig cfg = load_config(opts);
  eval::ExperimentConfig e = cfg.experiment();
  persist_effective(cfg);
  corpus::Dataset full = eval::load_dataset(e);
  std::vector<eval::ExperimentResult> runs =
      eval::sweep_poison_rate(e, full, cfg.sweep_rates());

  std::ostringstream csv;
  csv << "rate,asr,cp\n";
  std::cout << "rate\tasr\tcp\n";
  bool ok = true;
  std::vector<double> rates = cfg.sweep_rates();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::cout << format_metric(rates[i]) << "\t"
              << format_metric(runs[i].mean_asr()) << "\t"
              << format_metric(runs[i].mean_cp()) << "\n";
    csv << format_metric(rates[i]) << "," << format_metric(runs[i].mean_asr())
        << "," << format_metric(runs[i].mean_cp()) << "\n";
    ok = ok && runs[i].all_ok();
  }
  write_file(e.out_dir + "/sweep.csv", csv.str());
  return ok ? 0 : 1;
}

int cmd_ablate(const Options& opts) {
  cli::CliConfig cfg = load_config(opts);
  eval::ExperimentConfig e = cfg.experiment();
  persist_effective(cfg);
  corpus::Dataset full = eval::load_dataset(e);
  eval::AblationResult res =
      eval::ablate_patterns(e, full, cfg.ablate_patterns());
  std::cout << res.table();
  write_file(e.out_dir + "/ablate.tsv", res.table());
  bool ok = true;
  for (const eval::ExperimentResult& r : res.runs) ok = ok && r.all_ok();
  return ok ? 0 : 1;
}

int cmd_matrix(const Options& opts) {
  cli::CliConfig cfg = load_config(opts);
  eval::ExperimentConfig e = cfg.experiment();
  persist_effective(cfg);
  corpus::Dataset full = eval::load_dataset(e);
  eval::MatrixResult res = eval::run_defense_matrix(
      e, full, cfg.matrix_attacks(), cfg.matrix_defenses());
  std::cout << res.table();
  bool ok = true;
  for (const eval::MatrixCell& c : res.cells) ok = ok && c.result.all_ok();
  return ok ? 0 : 1;
}

int cmd_report(const Options& opts) {
  cli::CliConfig cfg = load_config(opts);
  std::string dir = cfg.out_dir();
  if (!fs::exists(dir)) throw ConfigError("results directory not found: " + dir);

  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    if (name == "aggregate.tsv" || name == "sweep.csv" || name == "ablate.tsv" ||
        name == "eval.tsv")
      files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  for (const std::string& f : files) {
    std::cout << "== " << f << "\n" << read_file(f);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-lingual backdoor attack/defense laboratory"};
  app.require_subcommand(1);

  Options opts;
  app.add_option("--config", opts.config_path, "experiment config file")
      ->expected(1);
  std::string out;
  std::uint64_t seed = 0;
  double rate = 0.0;
  int jobs = 0;
  auto* out_opt = app.add_option("--out", out, "output directory override");
  auto* seed_opt = app.add_option("--seed", seed, "single-seed override");
  auto* rate_opt = app.add_option("--rate", rate, "poison rate override");
  auto* jobs_opt = app.add_option("--jobs", jobs, "parallel seeds/cells");

  auto* c_poison = app.add_subcommand("poison", "write a poisoned dataset");
  auto* c_train = app.add_subcommand("train", "train the victim model");
  auto* c_eval = app.add_subcommand("eval", "evaluate a trained model");
  auto* c_defend = app.add_subcommand("defend", "apply a defense to a dataset");
  auto* c_sweep = app.add_subcommand("sweep", "poisoning-rate sweep");
  auto* c_ablate = app.add_subcommand("ablate", "pattern ablation");
  auto* c_matrix = app.add_subcommand("matrix", "attack x defense grid");
  auto* c_report = app.add_subcommand("report", "print stored result tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*out_opt) opts.out = out;
  if (*seed_opt) opts.seed = seed;
  if (*rate_opt) opts.rate = rate;
  if (*jobs_opt) opts.jobs = jobs;

  try {
    if (c_poison->parsed()) return cmd_poison(opts);
    if (c_train->parsed()) return cmd_train(opts);
    if (c_eval->parsed()) return cmd_eval(opts);
    if (c_defend->parsed()) return cmd_defend(opts);
    if (c_sweep->parsed()) return cmd_sweep(opts);
    if (c_ablate->parsed()) return cmd_ablate(opts);
    if (c_matrix->parsed()) return cmd_matrix(opts);
    if (c_report->parsed()) return cmd_report(opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
