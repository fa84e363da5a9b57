#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xlbd/eval.hpp"

namespace xlbd::cli {

/// Flat sectioned key=value config. Every key is schema-checked; unknown
/// sections or keys are rejected so typos fail loudly.
class CliConfig {
 public:
  static CliConfig parse_file(const std::string& path);
  static CliConfig parse_text(const std::string& text, const std::string& origin);

  /// --seed/--rate/--out/--jobs mutation channels.
  void override_seed(std::uint64_t seed);
  void override_rate(double rate);
  void override_out(const std::string& out);
  void override_jobs(int jobs);

  eval::ExperimentConfig experiment() const;

  std::string out_dir() const;
  std::string poisoned_path() const;   // [train] input
  std::string model_path() const;      // [eval] model
  std::vector<double> sweep_rates() const;
  std::vector<trigger::LanguagePattern> ablate_patterns() const;
  std::vector<eval::AttackKind> matrix_attacks() const;
  std::vector<eval::DefenseKind> matrix_defenses() const;
  defense::Method defend_method() const;

  /// Canonical serialized form (sorted sections and keys); persisted next to
  /// results as the effective config.
  std::string canonical() const;

 private:
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  int get_int(const std::string& section, const std::string& key,
              int fallback) const;

  std::map<std::pair<std::string, std::string>, std::string> values_;
};

}  // namespace xlbd::cli
