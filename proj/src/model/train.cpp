#include "tsmt/model/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tsmt::model {

Example make_example(const motion::QuantizedPoseSequence& pose, const audio::AudioFeatureSequence* audio) {
  Example ex;
  ex.tokens = pose.tokens;
  ex.frames = pose.frames;
  if (audio) {
    if (audio->frame_count() < pose.frames) {
      throw std::invalid_argument("make_example: audio has " + std::to_string(audio->frame_count()) +
                                  " frames, pose has " + std::to_string(pose.frames));
    }
    ex.audio = audio->frame_count() == pose.frames ? audio->mfcc : audio->slice(0, pose.frames).mfcc;
    ex.beat.assign(audio->beat.begin(), audio->beat.begin() + static_cast<std::ptrdiff_t>(pose.frames));
  }
  return ex;
}

Checkpoint initial_checkpoint(const TSMTConfig& config, std::uint64_t seed) {
  Checkpoint c;
  c.config = config;
  c.params = init_parameters(config, seed);
  c.adam.learning_rate = config.learning_rate;
  c.seed = seed;
  return c;
}

void train(Checkpoint& state, std::span<const Example> data, const TrainOptions& options) {
  const TSMTConfig& config = state.config;
  config.validate();
  if (data.empty()) throw std::invalid_argument("train: empty training split");
  for (const Example& ex : data) ex.validate(config);
  const Rng root(state.seed);
  const std::size_t B = config.batch_size;
  for (std::size_t epoch = state.epochs_completed; epoch < options.epochs; ++epoch) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = root.split(2 * epoch);
    shuffle.shuffle(order.begin(), order.end());
    const Rng dropout = root.split(2 * epoch + 1);
    state.adam.learning_rate = config.learning_rate_at(epoch);

    double total = 0.0;
    for (std::size_t begin = 0, batch = 0; begin < order.size(); begin += B, ++batch) {
      std::vector<Example> items;
      for (std::size_t i = begin; i < std::min(begin + B, order.size()); ++i) items.push_back(data[order[i]]);
      LossAndGradient lg = loss_and_gradient(config, state.params, items, dropout.split(batch).state());
      if (!std::isfinite(lg.loss)) {
        throw std::runtime_error("train: loss became " + std::to_string(lg.loss) + " at epoch " +
                                 std::to_string(epoch) + ", batch " + std::to_string(batch) +
                                 "; the last written checkpoint is kept");
      }
      adam_step(state.params, lg.gradients, state.adam);
      total += lg.loss * static_cast<double>(items.size());
    }
    const TrainingLogEntry entry{epoch, total / static_cast<double>(data.size()), state.adam.learning_rate};
    state.log.push_back(entry);
    state.epochs_completed = epoch + 1;
    if (options.on_epoch) options.on_epoch(entry);
    const bool last = epoch + 1 == options.epochs;
    const bool cadence = options.checkpoint_every > 0 && (epoch + 1) % options.checkpoint_every == 0;
    if (!options.checkpoint_path.empty() && (last || cadence)) save_checkpoint(options.checkpoint_path, state);
  }
}

double argmax_accuracy(const TSMTConfig& config, const ParamMap& params, std::span<const Example> data) {
  std::size_t hits = 0, total = 0;
  const std::size_t bins = static_cast<std::size_t>(config.bins);
  for (const Example& ex : data) {
    const Array lp = log_probs(config, params, ex);
    for (std::size_t i = 0; i < ex.frames * config.dims(); ++i) {
      const double* row = lp.data() + i * bins;
      const std::size_t best = static_cast<std::size_t>(std::max_element(row, row + bins) - row);
      hits += best == static_cast<std::size_t>(ex.tokens[i]) ? 1 : 0;
      ++total;
    }
  }
  return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

}  // namespace tsmt::model
