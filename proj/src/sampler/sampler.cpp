#include "tsmt/sampler/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tsmt::sampler {

int sample_categorical(std::span<const double> log_probs, double temperature, int top_k, Rng& rng) {
  const std::size_t n = log_probs.size();
  if (n == 0) throw std::invalid_argument("sample_categorical: empty distribution");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("sample_categorical: temperature must be > 0");
  }
  if (top_k < 0) throw std::invalid_argument("sample_categorical: top_k must be >= 0");
  for (double v : log_probs)
    if (!std::isfinite(v)) throw std::invalid_argument("sample_categorical: non-finite log-probability");

  std::vector<std::size_t> keep(n);
  std::iota(keep.begin(), keep.end(), 0);
  if (top_k > 0 && static_cast<std::size_t>(top_k) < n) {
    std::stable_sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) { return log_probs[a] > log_probs[b]; });
    keep.resize(static_cast<std::size_t>(top_k));
    std::sort(keep.begin(), keep.end());
  }
  double top = -INFINITY;
  for (std::size_t i : keep) top = std::max(top, log_probs[i] / temperature);
  std::vector<double> weight(keep.size());
  double total = 0.0;
  for (std::size_t j = 0; j < keep.size(); ++j) {
    weight[j] = std::exp(log_probs[keep[j]] / temperature - top);
    total += weight[j];
  }
  const double u = rng.uniform() * total;
  double cumulative = 0.0;
  for (std::size_t j = 0; j < keep.size(); ++j) {
    cumulative += weight[j];
    if (u < cumulative) return static_cast<int>(keep[j]);
  }
  // Rounding can leave u at the very top of the CDF; take the last entry with mass.
  for (std::size_t j = keep.size(); j-- > 0;)
    if (weight[j] > 0.0) return static_cast<int>(keep[j]);
  return static_cast<int>(keep.back());
}

namespace {

std::vector<double> standardized_frame(const model::Checkpoint& ckpt, std::span<const double> frame) {
  std::vector<double> out(frame.begin(), frame.end());
  const auto& st = ckpt.feature_stats;
  if (st.empty()) return out;
  if (st.mean.size() != out.size()) throw std::invalid_argument("session: audio frame width mismatch");
  for (std::size_t c = 0; c < out.size(); ++c) {
    const double sd = st.stddev[c] < 1e-8 ? 1.0 : st.stddev[c];
    out[c] = (out[c] - st.mean[c]) / sd;
  }
  return out;
}

double frame_log_likelihood(const Array& lp, std::span<const int> tokens) {
  double ll = 0.0;
  for (std::size_t d = 0; d < tokens.size(); ++d) ll += lp.at(d, static_cast<std::size_t>(tokens[d]));
  return ll;
}

}  // namespace

Session::Session(const model::Checkpoint& checkpoint, SamplingOptions sampling, std::uint64_t seed)
    : ckpt_(checkpoint), sampling_(sampling), rng_(seed), decoder_(checkpoint.config, checkpoint.params) {
  if (!(sampling.temperature > 0.0)) throw std::invalid_argument("session: temperature must be > 0");
  if (checkpoint.config.use_audio && !checkpoint.config.causal_audio) {
    throw std::invalid_argument("session: incremental stepping needs a causal audio stream");
  }
}

Array Session::advance(std::span<const double> audio_frame, std::uint8_t beat) {
  const std::size_t t = decoder_.pose_steps();
  if (t >= decoder_.capacity()) {
    throw std::out_of_range("session: exhausted after " + std::to_string(t) + " steps (max context " +
                            std::to_string(decoder_.capacity()) + ")");
  }
  if (ckpt_.config.use_audio) {
    decoder_.push_audio(standardized_frame(ckpt_, audio_frame), beat);
  }
  return decoder_.next_log_probs();
}

double Session::prime(std::span<const int> tokens, std::span<const double> audio_frame, std::uint8_t beat) {
  const Array lp = advance(audio_frame, beat);
  last_ll_ = frame_log_likelihood(lp, tokens);
  decoder_.push_pose(tokens);
  return last_ll_;
}

std::vector<int> Session::step(std::span<const double> audio_frame, std::uint8_t beat) {
  const std::size_t t = decoder_.pose_steps();
  const Array lp = advance(audio_frame, beat);
  Rng draw = rng_.split(t);
  std::vector<int> tokens(lp.rows());
  for (std::size_t d = 0; d < lp.rows(); ++d) {
    tokens[d] = sample_categorical(std::span(lp.data() + d * lp.cols(), lp.cols()), sampling_.temperature,
                                   sampling_.top_k, draw);
  }
  last_ll_ = frame_log_likelihood(lp, tokens);
  decoder_.push_pose(tokens);
  return tokens;
}

GenerationResult generate(const GenerationRequest& req, const model::Checkpoint& ckpt) {
  const model::TSMTConfig& c = ckpt.config;
  const std::size_t T = req.length, dims = c.dims();
  if (T == 0) throw std::invalid_argument("generate: length must be >= 1");
  if (!(req.sampling.temperature > 0.0)) throw std::invalid_argument("generate: temperature must be > 0");
  if (ckpt.quantization.dims() != dims) throw std::invalid_argument("generate: checkpoint has no quantization spec");
  if (c.use_audio) {
    req.audio.validate();
    if (req.audio.frame_count() < T) {
      throw std::invalid_argument("generate: audio has " + std::to_string(req.audio.frame_count()) +
                                  " frames, " + std::to_string(T) + " required");
    }
  }
  motion::PoseSequence seed = req.seed_pose;
  if (seed.frame_count() == 0) {
    if (ckpt.mean_pose.size() != dims) throw std::invalid_argument("generate: no seed pose and no mean pose");
    seed = motion::PoseSequence::from_frames(Array({1, dims}, ckpt.mean_pose));
  }
  if (seed.dims() != dims) throw std::invalid_argument("generate: seed pose has the wrong number of dims");
  const std::size_t k = seed.frame_count();
  if (k > T) throw std::invalid_argument("generate: seed has more frames than the requested length");
  const motion::QuantizedPoseSequence seed_tokens = motion::quantize(seed, ckpt.quantization);

  audio::AudioFeatureSequence feats;
  if (c.use_audio) feats = audio::standardize(req.audio.slice(0, req.audio.frame_count()), ckpt.feature_stats);

  GenerationResult out;
  out.seed_frames = k;
  out.tokens.spec = ckpt.quantization;
  out.tokens.frames = T;
  out.tokens.tokens.reserve(T * dims);
  const Rng root(req.seed);
  const std::size_t C = c.max_context;
  const bool incremental = !c.use_audio || c.causal_audio;
  model::Decoder live(c, ckpt.params);

  for (std::size_t t = 0; t < T; ++t) {
    const auto started = std::chrono::steady_clock::now();
    Array lp;
    if (incremental && t < C) {
      if (c.use_audio) live.push_audio(std::span(feats.mfcc.data() + t * c.audio_features, c.audio_features), feats.beat[t]);
      lp = live.next_log_probs();
    } else {
      // Rebuild over the most recent window, positions rebased to zero.
      const std::size_t w0 = t + 1 > C ? t + 1 - C : 0;
      model::Decoder window(c, ckpt.params);
      if (c.use_audio && c.causal_audio) {
        for (std::size_t s = w0; s <= t; ++s)
          window.push_audio(std::span(feats.mfcc.data() + s * c.audio_features, c.audio_features), feats.beat[s]);
      } else if (c.use_audio) {
        const audio::AudioFeatureSequence ctx = feats.slice(w0, std::min(C, feats.frame_count() - w0));
        window.set_audio_context(ctx.mfcc, ctx.beat);
      }
      for (std::size_t s = w0; s < t; ++s) window.push_pose(std::span(out.tokens.tokens).subspan(s * dims, dims));
      lp = window.next_log_probs();
    }
    std::vector<int> frame(dims);
    if (t < k) {
      const auto given = seed_tokens.frame(t);
      std::copy(given.begin(), given.end(), frame.begin());
    } else {
      Rng draw = root.split(t);
      for (std::size_t d = 0; d < dims; ++d) {
        frame[d] = sample_categorical(std::span(lp.data() + d * lp.cols(), lp.cols()), req.sampling.temperature,
                                      req.sampling.top_k, draw);
      }
    }
    out.log_likelihood.push_back(frame_log_likelihood(lp, frame));
    out.tokens.tokens.insert(out.tokens.tokens.end(), frame.begin(), frame.end());
    if (incremental && t + 1 < C) live.push_pose(frame);
    out.step_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
  }
  out.poses = motion::dequantize(out.tokens, seed.fps);
  return out;
}

}  // namespace tsmt::sampler
