#pragma once

#include <cstddef>
#include <cstdint>

namespace tsmt::model {

/// One transformer stack: `blocks` units of attention + feed-forward.
struct StreamConfig {
  std::size_t model_dim = 256;
  std::size_t head_dim = 128;
  std::size_t heads = 4;
  std::size_t blocks = 4;

  std::size_t attention_dim() const { return heads * head_dim; }
  friend bool operator==(const StreamConfig&, const StreamConfig&) = default;
};

struct TSMTConfig {
  std::size_t joints = 17;
  int bins = 300;
  std::size_t embed_dim = 5;
  StreamConfig pose{256, 128, 4, 4};
  StreamConfig audio{64, 32, 2, 2};
  std::size_t audio_features = 26;
  std::size_t beat_embed_dim = 30;
  std::size_t conv_kernel = 3;
  std::size_t ff_multiplier = 4;
  double dropout = 0.1;
  bool use_audio = true;
  bool causal_audio = true;
  std::size_t max_context = 480;

  double learning_rate = 1e-4;
  std::size_t batch_size = 32;
  std::size_t decay_epoch = 200;
  double decay_factor = 0.3;

  std::size_t dims() const { return 3 * joints; }
  std::size_t logits() const { return dims() * static_cast<std::size_t>(bins); }
  /// Learning rate in effect for 0-based epoch index `epoch`.
  double learning_rate_at(std::size_t epoch) const {
    return epoch >= decay_epoch ? learning_rate * decay_factor : learning_rate;
  }
  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;
  friend bool operator==(const TSMTConfig&, const TSMTConfig&) = default;
};

}  // namespace tsmt::model
