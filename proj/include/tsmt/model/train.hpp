#pragma once

#include <filesystem>
#include <functional>
#include <span>

#include "tsmt/audio/features.hpp"
#include "tsmt/model/checkpoint.hpp"
#include "tsmt/model/model.hpp"
#include "tsmt/motion/quantize.hpp"

namespace tsmt::model {

/// Model-ready example from a quantised pose and (already standardised)
/// audio features; `audio` may be null for the no-audio variant.
Example make_example(const motion::QuantizedPoseSequence& pose, const audio::AudioFeatureSequence* audio);

/// Fresh training state: initialised parameters, Adam at the configured
/// learning rate, epoch 0.
Checkpoint initial_checkpoint(const TSMTConfig& config, std::uint64_t seed);

struct TrainOptions {
  std::size_t epochs = 1;            // train until this many epochs are complete
  std::size_t checkpoint_every = 0;  // epochs between checkpoint writes; 0 = only at the end
  std::filesystem::path checkpoint_path;  // empty = never write
  std::function<void(const TrainingLogEntry&)> on_epoch;
};

/// Seeded mini-batch Adam from `state.epochs_completed` up to
/// `options.epochs`. Each epoch shuffles with Rng(seed).split(2 * epoch) and
/// draws dropout from Rng(seed).split(2 * epoch + 1), so a resumed run
/// follows the same trajectory as an uninterrupted one. The learning rate
/// follows TSMTConfig::learning_rate_at. A non-finite loss throws
/// std::runtime_error before anything is written, leaving the last good
/// checkpoint on disk.
void train(Checkpoint& state, std::span<const Example> data, const TrainOptions& options);

/// Fraction of teacher-forced next-token argmax predictions that hit the target.
double argmax_accuracy(const TSMTConfig& config, const ParamMap& params, std::span<const Example> data);

}  // namespace tsmt::model
