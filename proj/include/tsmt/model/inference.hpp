#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsmt/model/model.hpp"

namespace tsmt::model {

/// One transformer stack evaluated a row at a time. Keys and values of every
/// block are cached, so pushing row t costs O(t) instead of recomputing the
/// whole prefix.
class StreamCache {
 public:
  StreamCache(const ParamMap& params, std::string prefix, const StreamConfig& stream, std::size_t ff_multiplier,
              std::size_t capacity);

  /// `x` is an embedded row including its positional encoding; returns the
  /// stream output for that position.
  std::vector<double> push(std::vector<double> x);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  /// Multiply-adds spent by the most recent push.
  std::uint64_t last_push_flops() const { return last_flops_; }

 private:
  struct Block {
    const Array *wq, *wk, *wv, *wo, *bo, *ln1g, *ln1b, *ff1w, *ff1b, *ff2w, *ff2b, *ln2g, *ln2b;
    Array keys, values;  // capacity x heads*head_dim
  };

  StreamConfig stream_;
  std::size_t ff_dim_;
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::uint64_t last_flops_ = 0;
  std::vector<Block> blocks_;
};

/// Incremental decoder over both streams and the fusion head. Step t needs
/// pose rows 0..t-1 and audio rows 0..t; `next_log_probs()` predicts step
/// `pose_steps()`.
class Decoder {
 public:
  /// Parameters must outlive the decoder. The pose and audio streams hold at
  /// most `config.max_context` positions.
  Decoder(const TSMTConfig& config, const ParamMap& params);

  /// Causal audio: append one audio frame.
  void push_audio(std::span<const double> features, std::uint8_t beat);
  /// Bidirectional audio: the whole audio context at once (frames <= max_context).
  void set_audio_context(const Array& features, std::span<const std::uint8_t> beat);
  void push_pose(std::span<const int> tokens);

  /// dims x bins log-probabilities for step `pose_steps()`.
  Array next_log_probs() const;

  std::size_t pose_steps() const { return pose_steps_; }
  std::size_t audio_steps() const { return audio_rows_.size(); }
  std::size_t capacity() const { return config_.max_context; }
  const StreamCache& pose_stream() const { return pose_; }

 private:
  const TSMTConfig& config_;
  const ParamMap& params_;
  StreamCache pose_;
  std::optional<StreamCache> audio_;
  std::vector<double> last_pose_;
  std::vector<std::vector<double>> audio_rows_;
  std::vector<std::vector<double>> conv_history_;
  std::size_t pose_steps_ = 0;
};

}  // namespace tsmt::model
