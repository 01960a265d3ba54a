#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tsmt/audio/mfcc.hpp"
#include "tsmt/model/config.hpp"
#include "tsmt/motion/quantize.hpp"
#include "tsmt/numerics/adam.hpp"

namespace tsmt::model {

inline constexpr int kCheckpointVersion = 1;

struct TrainingLogEntry {
  std::size_t epoch = 0;  // 0-based
  double loss = 0.0;
  double learning_rate = 0.0;
  friend bool operator==(const TrainingLogEntry&, const TrainingLogEntry&) = default;
};

/// Everything needed to resume training or to generate.
struct Checkpoint {
  TSMTConfig config;
  ParamMap params;
  motion::QuantizationSpec quantization;
  audio::FeatureStats feature_stats;  // empty when standardisation is off
  std::vector<double> mean_pose;      // dims values; default generation seed
  AdamState adam;
  std::uint64_t seed = 0;
  std::size_t epochs_completed = 0;
  std::vector<TrainingLogEntry> log;
};

/// Layout: 8-byte magic "TSMTCKPT", u64 little-endian header length, JSON
/// header (version, config, quantization, feature statistics, training state
/// and an index of named arrays with shape and byte offset), then the arrays
/// as little-endian float64. Written atomically.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws std::runtime_error on a malformed or incompatible file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// The JSON header alone (for inspection).
std::string read_checkpoint_header(const std::filesystem::path& path);

}  // namespace tsmt::model
