#include "xlbd/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "xlbd/util.hpp"

namespace xlbd::corpus {

using nlohmann::json;

std::string task_name(Task t) {
  switch (t) {
    case Task::kClassification:
      return "classification";
    case Task::kRating:
      return "rating";
    case Task::kGeneration:
      return "generation";
  }
  return "?";
}

Task parse_task(const std::string& name) {
  if (name == "classification") return Task::kClassification;
  if (name == "rating") return Task::kRating;
  if (name == "generation") return Task::kGeneration;
  throw ConfigError("unknown task: " + name);
}

Label Label::class_index(int v) {
  if (v < 0) throw std::invalid_argument("class index must be non-negative");
  Label l;
  l.kind_ = Kind::kClassIndex;
  l.value_ = v;
  return l;
}

Label Label::rating(int v) {
  if (v < 0 || v > 4) throw std::invalid_argument("rating must be in 0..4");
  Label l;
  l.kind_ = Kind::kRating;
  l.value_ = v;
  return l;
}

Label Label::answer(std::string v) {
  Label l;
  l.kind_ = Kind::kAnswerText;
  l.text_ = std::move(v);
  return l;
}

int Label::as_class() const {
  if (kind_ != Kind::kClassIndex) throw std::logic_error("label is not a class index");
  return value_;
}

int Label::as_rating() const {
  if (kind_ != Kind::kRating) throw std::logic_error("label is not a rating");
  return value_;
}

const std::string& Label::as_answer() const {
  if (kind_ != Kind::kAnswerText) throw std::logic_error("label is not answer text");
  return text_;
}

bool Label::operator==(const Label& other) const {
  if (kind_ != other.kind_) return false;
  if (kind_ == Kind::kAnswerText) return text_ == other.text_;
  return value_ == other.value_;
}

bool Label::conforms_to(Task task) const {
  switch (task) {
    case Task::kClassification:
      return kind_ == Kind::kClassIndex;
    case Task::kRating:
      return kind_ == Kind::kRating;
    case Task::kGeneration:
      return kind_ == Kind::kAnswerText;
  }
  return false;
}

std::string Label::str() const {
  if (kind_ == Kind::kAnswerText) return text_;
  return std::to_string(value_);
}

void Dataset::validate() const {
  std::unordered_set<std::string> ids;
  ids.reserve(samples.size());
  for (const Sample& s : samples) {
    if (!ids.insert(s.id).second)
      throw ConfigError("duplicate sample id: " + s.id);
    if (trim(s.text).empty())
      throw ConfigError("sample has empty text: " + s.id);
    if (!s.label.conforms_to(task))
      throw ConfigError("label does not conform to task for sample " + s.id);
    if (task == Task::kClassification && class_count &&
        s.label.as_class() >= *class_count)
      throw ConfigError("class index out of range for sample " + s.id);
  }
}

Dataset load_records(const std::string& path, Task task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset file: " + path);

  Dataset d;
  d.task = task;
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
    auto fail = [&](const std::string& msg) -> ConfigError {
      return ConfigError(path + ":" + std::to_string(line_no) + ": " + msg);
    };
    if (!rec.is_object()) throw fail("record is not an object");
    if (!rec.contains("id") || !rec["id"].is_string())
      throw fail("missing string field \"id\"");
    if (!rec.contains("text") || !rec["text"].is_string())
      throw fail("missing string field \"text\"");
    if (!rec.contains("label")) throw fail("missing field \"label\"");

    Sample s;
    s.id = rec["id"].get<std::string>();
    s.text = rec["text"].get<std::string>();

    const json& lab = rec["label"];
    if (lab.is_number_integer()) {
      int v = lab.get<int>();
      if (task == Task::kRating) {
        if (v < 0 || v > 4) throw fail("rating label outside 0..4");
        s.label = Label::rating(v);
      } else {
        if (v < 0) throw fail("negative class label");
        s.label = Label::class_index(v);
        max_class = std::max(max_class, v);
      }
    } else if (lab.is_string()) {
      if (task != Task::kGeneration)
        throw fail("string label on a non-generation dataset");
      s.label = Label::answer(lab.get<std::string>());
    } else {
      throw fail("label must be an integer or a string");
    }

    if (rec.contains("language_hint")) {
      if (!rec["language_hint"].is_string())
        throw fail("language_hint must be a string");
      s.language_hint = rec["language_hint"].get<std::string>();
    }
    if (rec.contains("split")) {
      if (!rec["split"].is_string()) throw fail("split must be a string");
      std::string sp = rec["split"].get<std::string>();
      if (sp == "train")
        s.split = Split::kTrain;
      else if (sp == "test")
        s.split = Split::kTest;
      else
        throw fail("split must be \"train\" or \"test\"");
    }
    d.samples.push_back(std::move(s));
  }
  if (d.samples.empty()) throw ConfigError("empty dataset file: " + path);
  if (task == Task::kClassification) d.class_count = max_class + 1;
  if (task == Task::kRating) d.class_count = 5;
  d.validate();
  return d;
}

std::string record_line(
    const Sample& s,
    const std::vector<std::pair<std::string, std::string>>& extra) {
  json rec;
  rec["id"] = s.id;
  rec["text"] = s.text;
  if (s.label.kind() == Label::Kind::kAnswerText)
    rec["label"] = s.label.as_answer();
  else if (s.label.kind() == Label::Kind::kRating)
    rec["label"] = s.label.as_rating();
  else
    rec["label"] = s.label.as_class();
  if (s.language_hint) rec["language_hint"] = *s.language_hint;
  rec["split"] = s.split == Split::kTrain ? "train" : "test";
  for (const auto& [k, v] : extra) rec[k] = v;
  return rec.dump();
}

void save_records(const Dataset& d, const std::string& path) {
  std::ostringstream out;
  for (const Sample& s : d.samples) out << record_line(s) << "\n";
  write_file(path, out.str());
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d,
                                          double test_fraction,
                                          std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test fraction must be in (0,1)");
  if (d.size() < 2)
    throw ConfigError("need at least 2 samples to split");

  const std::size_t n = d.size();
  std::size_t n_test = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(n)));
  if (n_test == 0) n_test = 1;
  if (n_test >= n) n_test = n - 1;

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);

  std::vector<bool> is_test(n, false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[idx[i]] = true;

  Dataset train, test;
  train.task = test.task = d.task;
  train.class_count = test.class_count = d.class_count;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s = d.samples[i];
    if (is_test[i]) {
      s.split = Split::kTest;
      test.samples.push_back(std::move(s));
    } else {
      s.split = Split::kTrain;
      train.samples.push_back(std::move(s));
    }
  }
  return {std::move(train), std::move(test)};
}

Dataset filter_by_language(const Dataset& d,
                           const std::set<std::string>& allowed,
                           const LanguageIdentifier& identify) {
  if (d.samples.empty()) throw ConfigError("filter_by_language: empty input dataset");
  Dataset out;
  out.task = d.task;
  out.class_count = d.class_count;
  for (const Sample& s : d.samples) {
    if (allowed.count(identify(s.text))) out.samples.push_back(s);
  }
  if (out.samples.empty())
    throw ConfigError("filter_by_language: every sample was filtered out");
  return out;
}

}  // namespace xlbd::corpus
