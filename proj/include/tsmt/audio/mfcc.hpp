#pragma once

#include <span>
#include <vector>

#include "tsmt/audio/features.hpp"
#include "tsmt/numerics/array.hpp"

namespace tsmt::audio {

struct MfccOptions {
  std::size_t window = 2048;  // Hann, must be a power of two
  std::size_t mel_filters = 40;
  std::size_t coefficients = kMfccCoefficients;
  double log_floor = 1e-10;
  double fps = 24.0;
};

/// First sample of analysis frame t: round(t * sample_rate / fps), so the
/// fractional hop never accumulates drift.
std::size_t frame_start(std::size_t t, int sample_rate, double fps);

/// Number of full analysis windows that fit in `samples` samples.
std::size_t mfcc_frame_count(std::size_t samples, int sample_rate, const MfccOptions& options = {});

/// HTK-mel triangular filters over FFT bins 0..window/2 spanning 0 Hz to
/// sample_rate/2; returns mel_filters x (window/2 + 1).
Array mel_filterbank(int sample_rate, const MfccOptions& options = {});

/// Static MFCCs, one row per frame: Hann window, magnitude FFT, mel filters,
/// log with floor, orthonormal DCT-II keeping the first `coefficients`.
/// With target_frames > 0 the result is truncated or edge-padded to that count.
Array compute_mfcc(std::span<const double> samples, int sample_rate, const MfccOptions& options = {},
                   std::size_t target_frames = 0);

/// Appends central-difference deltas (edge-replicated) after the statics.
Array append_deltas(const Array& statics);

/// Per-channel mean / standard deviation of feature columns.
struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  bool empty() const { return mean.empty(); }
};

FeatureStats fit_feature_stats(std::span<const AudioFeatureSequence> corpus);
/// (x - mean) / stddev per column; stddev below 1e-8 is treated as 1.
AudioFeatureSequence standardize(const AudioFeatureSequence& seq, const FeatureStats& stats);

}  // namespace tsmt::audio
