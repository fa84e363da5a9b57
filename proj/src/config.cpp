#include "xlbd/config.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "xlbd/util.hpp"

namespace xlbd::cli {

namespace {

// section -> allowed keys
const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> kSchema = {
      {"data", {"dataset", "task", "test_fraction"}},
      {"attack", {"kind", "pattern", "rate", "target_label"}},
      {"victim", {"epochs", "learning_rate", "l2", "seed"}},
      {"defense", {"method", "sft_fraction"}},
      {"run", {"seeds", "jobs", "out"}},
      {"translate",
       {"attack", "defense", "alt_separator", "endpoint", "timeout_ms",
        "max_retries"}},
      {"langid", {"languages", "scoring_language"}},
      {"sweep", {"rates"}},
      {"ablate", {"patterns"}},
      {"matrix", {"attacks", "defenses"}},
      {"train", {"input", "model"}},
      {"eval", {"model"}},
  };
  return kSchema;
}

}  // namespace

CliConfig CliConfig::parse_text(const std::string& text,
                                const std::string& origin) {
  CliConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    auto fail = [&](const std::string& msg) {
      return ConfigError(origin + ":" + std::to_string(line_no) + ": " + msg);
    };
    if (t.front() == '[') {
      if (t.back() != ']') throw fail("unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (!schema().count(section))
        throw fail("unknown config section [" + section + "]");
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) throw fail("expected key = value");
    if (section.empty()) throw fail("key outside any section");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (!schema().at(section).count(key))
      throw fail("unknown key \"" + key + "\" in section [" + section + "]");
    cfg.values_[{section, key}] = value;
  }
  return cfg;
}

CliConfig CliConfig::parse_file(const std::string& path) {
  return parse_text(read_file(path), path);
}

void CliConfig::override_seed(std::uint64_t seed) {
  values_[{"run", "seeds"}] = std::to_string(seed);
}
void CliConfig::override_rate(double rate) {
  values_[{"attack", "rate"}] = format_metric(rate);
}
void CliConfig::override_out(const std::string& out) {
  values_[{"run", "out"}] = out;
}
void CliConfig::override_jobs(int jobs) {
  values_[{"run", "jobs"}] = std::to_string(jobs);
}

std::string CliConfig::get(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  auto it = values_.find({section, key});
  return it == values_.end() ? fallback : it->second;
}

double CliConfig::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
  std::string v = get(section, key, "");
  if (v.empty()) return fallback;
  try {
    return std::stod(v);
  } catch (const std::exception&) {
    throw ConfigError("config [" + section + "] " + key +
                      " is not a number: " + v);
  }
}

int CliConfig::get_int(const std::string& section, const std::string& key,
                       int fallback) const {
  std::string v = get(section, key, "");
  if (v.empty()) return fallback;
  try {
    return std::stoi(v);
  } catch (const std::exception&) {
    throw ConfigError("config [" + section + "] " + key +
                      " is not an integer: " + v);
  }
}

eval::ExperimentConfig CliConfig::experiment() const {
  eval::ExperimentConfig e;
  e.dataset_path = get("data", "dataset", "");
  if (e.dataset_path.empty())
    throw ConfigError("config is missing [data] dataset");
  e.task = corpus::parse_task(get("data", "task", "classification"));
  e.test_fraction = get_double("data", "test_fraction", 0.2);

  e.attack = eval::parse_attack(get("attack", "kind", "cl"));
  e.pattern = trigger::LanguagePattern::parse(
      get("attack", "pattern", "ZH-EN-DE"));
  e.rate = get_double("attack", "rate", 0.05);
  std::string target = get("attack", "target_label", "");
  if (target.empty())
    throw ConfigError("config is missing [attack] target_label");
  switch (e.task) {
    case corpus::Task::kClassification:
      e.y_star = corpus::Label::class_index(std::stoi(target));
      break;
    case corpus::Task::kRating:
      e.y_star = corpus::Label::rating(std::stoi(target));
      break;
    case corpus::Task::kGeneration:
      e.y_star = corpus::Label::answer(target);
      break;
  }

  e.train.epochs = get_int("victim", "epochs", 8);
  e.train.learning_rate =
      static_cast<float>(get_double("victim", "learning_rate", 0.5));
  e.train.l2 = static_cast<float>(get_double("victim", "l2", 0.0));
  e.train.seed = static_cast<std::uint64_t>(get_int("victim", "seed", 1));

  e.defense = eval::parse_defense(get("defense", "method", "none"));
  e.sft_fraction = get_double("defense", "sft_fraction", 0.25);

  std::string seeds = get("run", "seeds", "11,12,13,14,15");
  for (const std::string& s : split(seeds, ',')) {
    if (!trim(s).empty()) e.seeds.push_back(std::stoull(trim(s)));
  }
  e.jobs = get_int("run", "jobs", 1);
  e.out_dir = get("run", "out", "results");

  auto slot = [&](const std::string& key) {
    eval::TranslatorSlot s;
    std::string kind = get("translate", key, "pseudo");
    if (kind == "pseudo") {
      s.kind = eval::TranslatorSlot::Kind::kPseudo;
    } else if (kind == "remote") {
      s.kind = eval::TranslatorSlot::Kind::kRemote;
      s.endpoint = get("translate", "endpoint", "");
      s.timeout_ms = get_int("translate", "timeout_ms", 2000);
      s.max_retries = get_int("translate", "max_retries", 2);
    } else {
      throw ConfigError("translator must be pseudo or remote, got " + kind);
    }
    return s;
  };
  e.attack_translator = slot("attack");
  e.defense_translator = slot("defense");
  e.alt_separator = get("translate", "alt_separator", ":");

  e.languages.clear();
  for (const std::string& c : split(get("langid", "languages", "DE,EN,ES,ZH"), ','))
    if (!trim(c).empty()) e.languages.push_back(trim(c));
  e.scoring_language = get("langid", "scoring_language", "EN");

  e.validate();
  return e;
}

std::string CliConfig::out_dir() const { return get("run", "out", "results"); }

std::string CliConfig::poisoned_path() const {
  return get("train", "input", out_dir() + "/poisoned.jsonl");
}

std::string CliConfig::model_path() const {
  return get("eval", "model", out_dir() + "/model.bin");
}

std::vector<double> CliConfig::sweep_rates() const {
  std::vector<double> out;
  for (const std::string& r :
       split(get("sweep", "rates", "0.01,0.02,0.03,0.04,0.05"), ',')) {
    if (!trim(r).empty()) out.push_back(std::stod(trim(r)));
  }
  return out;
}

std::vector<trigger::LanguagePattern> CliConfig::ablate_patterns() const {
  std::vector<trigger::LanguagePattern> out;
  for (const std::string& p :
       split(get("ablate", "patterns", "ZH-EN-DE,ES-EN-ES,ZH-ES,DE-ZH"), ',')) {
    if (!trim(p).empty())
      out.push_back(trigger::LanguagePattern::parse(trim(p)));
  }
  return out;
}

std::vector<eval::AttackKind> CliConfig::matrix_attacks() const {
  std::vector<eval::AttackKind> out;
  for (const std::string& a : split(get("matrix", "attacks", "cl,badnl,sos"), ','))
    if (!trim(a).empty()) out.push_back(eval::parse_attack(trim(a)));
  return out;
}

std::vector<eval::DefenseKind> CliConfig::matrix_defenses() const {
  std::vector<eval::DefenseKind> out;
  for (const std::string& d :
       split(get("matrix", "defenses", "onion_word,onion_sentence,translate,sft"),
             ','))
    if (!trim(d).empty()) out.push_back(eval::parse_defense(trim(d)));
  return out;
}

defense::Method CliConfig::defend_method() const {
  std::string m = get("defense", "method", "");
  if (m.empty() || m == "none" || m == "sft")
    throw ConfigError(
        "the defend command needs [defense] method set to onion_word, "
        "onion_sentence, or translate");
  return defense::parse_method(m);
}

std::string CliConfig::canonical() const {
  std::ostringstream out;
  std::string current;
  for (const auto& [sk, v] : values_) {
    if (sk.first != current) {
      if (!current.empty()) out << "\n";
      out << "[" << sk.first << "]\n";
      current = sk.first;
    }
    out << sk.second << " = " << v << "\n";
  }
  return out.str();
}

}  // namespace xlbd::cli
