#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xlbd/corpus.hpp"
#include "xlbd/trigger.hpp"

namespace xlbd::victim {

struct TrainConfig {
  int epochs = 8;
  float learning_rate = 0.5f;
  float l2 = 0.0f;  // applied as a per-epoch weight scale of (1 - lr*l2)
  std::uint64_t seed = 1;

  void validate() const;
};

/// Fixed feature space: word unigrams and bigrams plus character 3-grams
/// (with begin/end sentinels), FNV-1a hashed into 2^18 buckets, binary
/// presence, L2-normalized. The hash seed is a constant so features are
/// stable across runs and platforms.
struct Feature {
  std::uint32_t index;
  float value;
};

inline constexpr int kHashBits = 18;
inline constexpr std::uint32_t kFeatureDim = 1u << kHashBits;
inline constexpr std::uint64_t kFeatureHashSeed = 0x9ae16a3b2f90404full;

std::vector<Feature> extract_features(const std::string& text);

class VictimModel {
 public:
  VictimModel() = default;
  VictimModel(corpus::Task task, int class_count);

  corpus::Task task() const { return task_; }
  int class_count() const { return class_count_; }

  std::vector<float> scores(const std::string& text) const;

  /// Argmax class; ties break toward the lower class index.
  corpus::Label predict(const std::string& text) const;

  /// Mean cross-entropy over a dataset; used for the monotonicity contract.
  const std::vector<double>& epoch_losses() const { return epoch_losses_; }

  void save(const std::string& path) const;
  static VictimModel load(const std::string& path);

  friend VictimModel train_steps(VictimModel model,
                                 const corpus::Dataset& data,
                                 const TrainConfig& cfg);

 private:
  corpus::Task task_ = corpus::Task::kClassification;
  int class_count_ = 0;
  std::vector<float> weights_;  // class-major, class_count * kFeatureDim
  TrainConfig meta_;
  std::vector<double> epoch_losses_;
};

VictimModel train(const corpus::Dataset& d, const TrainConfig& cfg);
VictimModel train(const trigger::PoisonedDataset& d, const TrainConfig& cfg);

/// Warm-start gradient steps from m's weights on verified-clean data.
VictimModel continue_training(const VictimModel& m, const corpus::Dataset& clean,
                              const TrainConfig& cfg);
VictimModel continue_training(const VictimModel& m,
                              const trigger::PoisonedDataset& d,
                              const TrainConfig& cfg);

}  // namespace xlbd::victim
