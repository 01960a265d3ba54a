#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tsmt/audio/mfcc.hpp"
#include "tsmt/metrics/classifier.hpp"
#include "tsmt/metrics/report.hpp"
#include "tsmt/model/config.hpp"

namespace tsmt::cli {

inline constexpr const char* kConfigEnv = "TSMT_CONFIG";

struct PathSettings {
  std::string manifest;
  std::string checkpoint;
  std::string output;
};

struct PreprocessSettings {
  double hp_lambda = 1.0;
  std::size_t segment_length = 480;
  std::size_t segment_stride = 240;
  double train_ratio = 0.8;
};

struct TrainSettings {
  std::size_t epochs = 1;
  std::size_t checkpoint_every = 0;
  bool standardize = true;
};

struct GenerateSettings {
  std::size_t length = 480;
  double temperature = 1.0;
  int top_k = 0;
  std::size_t samples = 1;
};

/// Everything a command can be configured with. Defaults are the model and
/// pipeline defaults; a config file overrides them and CLI flags override both.
struct RunConfig {
  std::uint64_t seed = 0;
  PathSettings paths;
  model::TSMTConfig model;
  audio::MfccOptions audio;
  PreprocessSettings preprocess;
  TrainSettings train;
  GenerateSettings generate;
  metrics::MetricOptions metrics;
  metrics::ClassifierConfig classifier;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Parses the TOML subset used by run configs: [section] headers, key = value
/// with strings, booleans, numbers and flat numeric arrays, and # comments.
/// Unknown sections or keys throw std::invalid_argument naming the key.
RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

/// Every key with its effective value, in the same syntax parse_run_config reads.
std::string to_toml(const RunConfig& config);

}  // namespace tsmt::cli
