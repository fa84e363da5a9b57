#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace xlbd::corpus {

enum class Task { kClassification, kRating, kGeneration };

std::string task_name(Task t);
Task parse_task(const std::string& name);

enum class Split { kTrain, kTest };

/// Tagged label: a class index, a 0..4 rating, or a free-form answer string.
class Label {
 public:
  enum class Kind { kClassIndex, kRating, kAnswerText };

  static Label class_index(int v);
  static Label rating(int v);  // throws outside 0..4
  static Label answer(std::string v);

  Kind kind() const { return kind_; }
  int as_class() const;
  int as_rating() const;
  const std::string& as_answer() const;

  bool operator==(const Label& other) const;
  bool operator!=(const Label& other) const { return !(*this == other); }

  /// Conforms to the task's label space (class range checked by Dataset).
  bool conforms_to(Task task) const;

  std::string str() const;

 private:
  Kind kind_ = Kind::kClassIndex;
  int value_ = 0;
  std::string text_;
};

struct Sample {
  std::string id;
  std::string text;
  Label label;
  std::optional<std::string> language_hint;
  Split split = Split::kTrain;
};

/// Immutable after construction; safe to share across concurrent readers.
struct Dataset {
  std::vector<Sample> samples;
  std::optional<int> class_count;
  Task task = Task::kClassification;

  std::size_t size() const { return samples.size(); }

  /// Checks id uniqueness, non-empty texts, and task/label conformance.
  void validate() const;
};

/// Loads one record per line (see record schema in the README). Integer
/// labels load as class indices under `task`; strings as answer text.
/// Unknown keys are ignored so poisoned-dataset files load too.
Dataset load_records(const std::string& path,
                     Task task = Task::kClassification);

void save_records(const Dataset& d, const std::string& path);

/// Serializes one sample to its record line (without trailing newline).
/// `extra` appends to the record; used by the poisoned-dataset format.
std::string record_line(const Sample& s,
                        const std::vector<std::pair<std::string, std::string>>&
                            extra = {});

/// Deterministic disjoint partition; test size = round(fraction*N) clamped
/// so both sides are non-empty. Input order preserved within each side.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d,
                                          double test_fraction,
                                          std::uint64_t seed);

using LanguageIdentifier = std::function<std::string(const std::string&)>;

/// Keeps samples whose identified dominant language is in `allowed`;
/// order preserved.
Dataset filter_by_language(const Dataset& d,
                           const std::set<std::string>& allowed,
                           const LanguageIdentifier& identify);

}  // namespace xlbd::corpus
