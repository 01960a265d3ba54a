#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tsmt/audio/features.hpp"
#include "tsmt/model/checkpoint.hpp"
#include "tsmt/model/inference.hpp"
#include "tsmt/motion/quantize.hpp"
#include "tsmt/numerics/rng.hpp"

namespace tsmt::sampler {

struct SamplingOptions {
  double temperature = 1.0;  // > 0
  int top_k = 0;             // 0 disables truncation
};

/// Draws from p ∝ exp(log_probs / temperature), optionally restricted to the
/// top_k most likely entries (ties broken towards the lower index), by
/// inverse CDF on one uniform draw. Non-finite input throws.
int sample_categorical(std::span<const double> log_probs, double temperature, int top_k, Rng& rng);

struct GenerationRequest {
  audio::AudioFeatureSequence audio;  // raw features; the checkpoint's statistics are applied
  motion::PoseSequence seed_pose;     // 1..k prefix frames; empty = checkpoint mean pose
  std::size_t length = 0;
  SamplingOptions sampling;
  std::uint64_t seed = 0;
};

struct GenerationResult {
  motion::PoseSequence poses;           // dequantised, length frames
  motion::QuantizedPoseSequence tokens;
  std::vector<double> log_likelihood;   // per step, summed over dims
  std::vector<double> step_seconds;     // wall time, not deterministic
  std::size_t seed_frames = 0;
};

/// Single-threaded incremental generator over a shared read-only checkpoint.
/// Step t draws its tokens from Rng(seed).split(t), so a session and
/// generate() with the same seed emit identical tokens.
class Session {
 public:
  Session(const model::Checkpoint& checkpoint, SamplingOptions sampling, std::uint64_t seed);

  /// Feeds a known frame (seed prefix) with its audio frame; returns its log-likelihood.
  double prime(std::span<const int> tokens, std::span<const double> audio_frame = {}, std::uint8_t beat = 0);
  /// Appends the next audio frame and samples one pose frame from the cache.
  /// Throws std::out_of_range once the context of max_context steps is used up.
  std::vector<int> step(std::span<const double> audio_frame = {}, std::uint8_t beat = 0);

  double last_log_likelihood() const { return last_ll_; }
  std::size_t steps() const { return decoder_.pose_steps(); }
  const model::Decoder& decoder() const { return decoder_; }

 private:
  Array advance(std::span<const double> audio_frame, std::uint8_t beat);

  const model::Checkpoint& ckpt_;
  SamplingOptions sampling_;
  Rng rng_;
  model::Decoder decoder_;
  double last_ll_ = 0.0;
};

/// Seed frames are quantised and consumed as a prefix; the remaining steps
/// are sampled. Past max_context steps the model sees a sliding window of
/// the most recent max_context frames.
GenerationResult generate(const GenerationRequest& request, const model::Checkpoint& checkpoint);

}  // namespace tsmt::sampler
