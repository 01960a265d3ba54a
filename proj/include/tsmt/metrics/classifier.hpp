#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tsmt/model/config.hpp"
#include "tsmt/motion/pose.hpp"
#include "tsmt/numerics/adam.hpp"

namespace tsmt::metrics {

struct ClassifierConfig {
  model::StreamConfig stream{64, 32, 2, 2};  // same shape as the audio stream
  std::size_t classes = 5;
  std::size_t input_dims = motion::kDims;
  std::size_t ff_multiplier = 4;
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 8;
  friend bool operator==(const ClassifierConfig&, const ClassifierConfig&) = default;
};

/// Non-causal transformer over pose coordinates; the mean-pooled output of
/// the last block is the feature vector used by the diversity metrics.
struct StyleClassifier {
  ClassifierConfig config;
  ParamMap params;
  std::vector<std::string> class_names;
  std::uint64_t seed = 0;
  std::vector<double> epoch_loss;
};

/// Cross-entropy training with Adam. Labels must lie in [0, classes) and at
/// least two distinct classes must be present.
StyleClassifier train_style_classifier(std::span<const motion::PoseSequence> sequences, std::span<const int> labels,
                                       const ClassifierConfig& config, std::uint64_t seed,
                                       std::vector<std::string> class_names = {});

/// model_dim-wide feature of one sequence.
std::vector<double> classifier_features(const StyleClassifier& clf, const motion::PoseSequence& seq);
std::vector<double> classifier_logits(const StyleClassifier& clf, const motion::PoseSequence& seq);
int classify(const StyleClassifier& clf, const motion::PoseSequence& seq);
/// counts[true][predicted], classes x classes.
std::vector<std::vector<std::size_t>> confusion_matrix(const StyleClassifier& clf,
                                                       std::span<const motion::PoseSequence> sequences,
                                                       std::span<const int> labels);

void save_classifier(const std::filesystem::path& path, const StyleClassifier& clf);
StyleClassifier load_classifier(const std::filesystem::path& path);

}  // namespace tsmt::metrics
