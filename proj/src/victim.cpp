#include "xlbd/victim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "xlbd/util.hpp"

namespace xlbd::victim {

using corpus::Dataset;
using corpus::Label;
using corpus::Task;

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  // 0 is allowed so a null fine-tune is expressible.
  if (learning_rate < 0.0f) throw ConfigError("learning rate must be non-negative");
  if (l2 < 0.0f) throw ConfigError("l2 must be non-negative");
}

namespace {

std::uint32_t bucket(std::string_view tagged) {
  return static_cast<std::uint32_t>(fnv1a(tagged, kFeatureHashSeed) &
                                    (kFeatureDim - 1));
}

}  // namespace

std::vector<Feature> extract_features(const std::string& text) {
  if (trim(text).empty())
    throw std::invalid_argument("extract_features: empty text");

  std::vector<std::uint32_t> idx;

  // Word unigrams and bigrams.
  std::vector<TokenSpan> tokens = tokenize_ws(text);
  std::string prev;
  for (const TokenSpan& t : tokens) {
    std::string tok = text.substr(t.begin, t.end - t.begin);
    idx.push_back(bucket("w1\x1f" + tok));
    if (!prev.empty()) idx.push_back(bucket("w2\x1f" + prev + "\x1f" + tok));
    prev = std::move(tok);
  }

  // Character 3-grams over codepoints, with begin/end sentinels so the text
  // boundary is part of the gram space.
  std::u32string cps;
  cps.push_back(U'\x02');
  std::u32string body = decode_utf8(text);
  cps += body;
  cps.push_back(U'\x03');
  for (std::size_t i = 0; i + 3 <= cps.size(); ++i) {
    idx.push_back(bucket(
        "c3\x1f" + encode_utf8(std::u32string_view(cps.data() + i, 3))));
  }

  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());

  const float v = 1.0f / std::sqrt(static_cast<float>(idx.size()));
  std::vector<Feature> out;
  out.reserve(idx.size());
  for (std::uint32_t i : idx) out.push_back({i, v});
  return out;
}

VictimModel::VictimModel(Task task, int class_count)
    : task_(task),
      class_count_(class_count),
      weights_(static_cast<std::size_t>(class_count) * kFeatureDim, 0.0f) {}

std::vector<float> VictimModel::scores(const std::string& text) const {
  if (class_count_ < 2) throw std::logic_error("model is not trained");
  std::vector<Feature> feats = extract_features(text);
  std::vector<float> s(class_count_, 0.0f);
  for (int c = 0; c < class_count_; ++c) {
    const float* w = weights_.data() + static_cast<std::size_t>(c) * kFeatureDim;
    float acc = 0.0f;
    for (const Feature& f : feats) acc += w[f.index] * f.value;
    s[c] = acc;
  }
  return s;
}

Label VictimModel::predict(const std::string& text) const {
  std::vector<float> s = scores(text);
  int best = 0;
  for (int c = 1; c < class_count_; ++c) {
    if (s[c] > s[best]) best = c;
  }
  return task_ == Task::kRating ? Label::rating(best) : Label::class_index(best);
}

namespace {

struct Encoded {
  std::vector<Feature> feats;
  int label;
};

std::vector<Encoded> encode_dataset(const Dataset& d, int* class_count) {
  if (d.task == Task::kGeneration)
    throw ConfigError("victim training does not support the generation task");

  std::vector<Encoded> enc;
  enc.reserve(d.size());
  int max_label = -1;
  std::vector<bool> seen;
  for (const corpus::Sample& s : d.samples) {
    Encoded e;
    e.feats = extract_features(s.text);
    e.label = d.task == Task::kRating ? s.label.as_rating() : s.label.as_class();
    max_label = std::max(max_label, e.label);
    if (static_cast<std::size_t>(e.label) >= seen.size())
      seen.resize(e.label + 1, false);
    seen[e.label] = true;
    enc.push_back(std::move(e));
  }
  int classes = d.task == Task::kRating
                    ? 5
                    : d.class_count.value_or(max_label + 1);
  int distinct = 0;
  for (bool b : seen) distinct += b ? 1 : 0;
  if (distinct < 2)
    throw ConfigError("training data contains a single class");
  *class_count = std::max(classes, max_label + 1);
  return enc;
}

double mean_loss(const VictimModel&, const std::vector<Encoded>& enc,
                 const std::vector<float>& weights, int classes) {
  double total = 0.0;
  std::vector<double> logits(classes);
  for (const Encoded& e : enc) {
    for (int c = 0; c < classes; ++c) {
      const float* w = weights.data() + static_cast<std::size_t>(c) * kFeatureDim;
      double acc = 0.0;
      for (const Feature& f : e.feats) acc += w[f.index] * f.value;
      logits[c] = acc;
    }
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    total -= (logits[e.label] - mx) - std::log(z);
  }
  return total / static_cast<double>(enc.size());
}

}  // namespace

VictimModel train_steps(VictimModel model, const Dataset& data,
                        const TrainConfig& cfg) {
  cfg.validate();
  int classes = 0;
  std::vector<Encoded> enc = encode_dataset(data, &classes);

  if (model.class_count_ == 0) {
    model = VictimModel(data.task, classes);
  } else if (classes > model.class_count_) {
    throw ConfigError("dataset has more classes than the model");
  }
  model.meta_ = cfg;
  model.epoch_losses_.clear();

  const int n_classes = model.class_count_;
  std::vector<float>& w = model.weights_;
  std::vector<std::size_t> order(enc.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  Rng rng(cfg.seed);
  std::vector<double> logits(n_classes);
  std::vector<double> probs(n_classes);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t oi : order) {
      const Encoded& e = enc[oi];
      for (int c = 0; c < n_classes; ++c) {
        const float* wc = w.data() + static_cast<std::size_t>(c) * kFeatureDim;
        double acc = 0.0;
        for (const Feature& f : e.feats) acc += wc[f.index] * f.value;
        logits[c] = acc;
      }
      double mx = *std::max_element(logits.begin(), logits.end());
      double z = 0.0;
      for (int c = 0; c < n_classes; ++c) {
        probs[c] = std::exp(logits[c] - mx);
        z += probs[c];
      }
      for (int c = 0; c < n_classes; ++c) {
        double g = probs[c] / z - (c == e.label ? 1.0 : 0.0);
        if (g == 0.0) continue;
        float* wc = w.data() + static_cast<std::size_t>(c) * kFeatureDim;
        const float step = static_cast<float>(cfg.learning_rate * g);
        for (const Feature& f : e.feats) wc[f.index] -= step * f.value;
      }
    }
    if (cfg.l2 > 0.0f) {
      const float scale = 1.0f - cfg.learning_rate * cfg.l2;
      for (float& x : w) x *= scale;
    }
    model.epoch_losses_.push_back(mean_loss(model, enc, w, n_classes));
  }
  return model;
}

VictimModel train(const Dataset& d, const TrainConfig& cfg) {
  return train_steps(VictimModel(), d, cfg);
}

VictimModel train(const trigger::PoisonedDataset& d, const TrainConfig& cfg) {
  return train_steps(VictimModel(), d.flatten(), cfg);
}

VictimModel continue_training(const VictimModel& m, const Dataset& clean,
                              const TrainConfig& cfg) {
  if (m.class_count() < 2)
    throw ConfigError("continue_training: model is not trained");
  return train_steps(m, clean, cfg);
}

VictimModel continue_training(const VictimModel& m,
                              const trigger::PoisonedDataset& d,
                              const TrainConfig& cfg) {
  for (const trigger::PoisonedRecord& r : d.records) {
    if (r.poisoned)
      throw ConfigError(
          "continue_training: dataset contains poisoned-provenance records");
  }
  return continue_training(m, d.flatten(), cfg);
}

void VictimModel::save(const std::string& path) const {
  std::ostringstream out;
  out << "xlbd-victim v1\n";
  out << "task " << corpus::task_name(task_) << "\n";
  out << "classes " << class_count_ << "\n";
  out << "hash_bits " << kHashBits << "\n";
  out << "features w1,w2,c3 fnv64\n";
  out << "train epochs=" << meta_.epochs << " lr=" << meta_.learning_rate
      << " l2=" << meta_.l2 << " seed=" << meta_.seed << "\n";
  out << "weights " << weights_.size() << " float32le\n";
  static_assert(sizeof(float) == 4);
  out.write(reinterpret_cast<const char*>(weights_.data()),
            static_cast<std::streamsize>(weights_.size() * sizeof(float)));
  write_file(path, out.str());
}

VictimModel VictimModel::load(const std::string& path) {
  std::string blob = read_file(path);
  std::istringstream in(blob);
  std::string line;
  if (!std::getline(in, line) || line != "xlbd-victim v1")
    throw ConfigError("bad victim model header in " + path);

  VictimModel m;
  std::size_t n_weights = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "task") {
      std::string t;
      ls >> t;
      m.task_ = corpus::parse_task(t);
    } else if (key == "classes") {
      ls >> m.class_count_;
    } else if (key == "weights") {
      ls >> n_weights;
      break;
    }
  }
  if (m.class_count_ < 2 || n_weights != static_cast<std::size_t>(m.class_count_) * kFeatureDim)
    throw ConfigError("inconsistent victim model file: " + path);

  std::size_t data_at = static_cast<std::size_t>(in.tellg());
  if (blob.size() - data_at != n_weights * sizeof(float))
    throw ConfigError("truncated victim model file: " + path);
  m.weights_.resize(n_weights);
  std::memcpy(m.weights_.data(), blob.data() + data_at,
              n_weights * sizeof(float));
  return m;
}

}  // namespace xlbd::victim
