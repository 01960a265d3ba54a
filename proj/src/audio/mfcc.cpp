#include "tsmt/audio/mfcc.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tsmt::audio {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct FftwDeleter {
  void operator()(double* p) const { fftw_free(p); }
  void operator()(fftw_complex* p) const { fftw_free(p); }
};

}  // namespace

std::size_t frame_start(std::size_t t, int sample_rate, double fps) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(t) * sample_rate / fps));
}

std::size_t mfcc_frame_count(std::size_t samples, int sample_rate, const MfccOptions& options) {
  if (samples < options.window) return 0;
  // Upper bound from the nominal hop, then trim against the rounded starts.
  std::size_t count = static_cast<std::size_t>(
                          std::floor(static_cast<double>(samples - options.window) * options.fps / sample_rate)) + 2;
  while (count > 0 && frame_start(count - 1, sample_rate, options.fps) + options.window > samples) --count;
  return count;
}

Array mel_filterbank(int sample_rate, const MfccOptions& options) {
  const std::size_t bins = options.window / 2 + 1;
  const std::size_t m = options.mel_filters;
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(m + 2);
  for (std::size_t i = 0; i < m + 2; ++i) edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(m + 1));
  Array fb({m, bins});
  for (std::size_t f = 0; f < m; ++f) {
    const double lo = edges[f], mid = edges[f + 1], hi = edges[f + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double hz = static_cast<double>(k) * sample_rate / static_cast<double>(options.window);
      const double w = std::min((hz - lo) / (mid - lo), (hi - hz) / (hi - mid));
      fb.at(f, k) = std::max(0.0, w);
    }
  }
  return fb;
}

Array compute_mfcc(std::span<const double> samples, int sample_rate, const MfccOptions& options,
                   std::size_t target_frames) {
  const std::size_t N = options.window;
  if (sample_rate < 8000) throw std::invalid_argument("compute_mfcc: sample rate must be >= 8000 Hz");
  if (N < 2 || (N & (N - 1)) != 0) throw std::invalid_argument("compute_mfcc: window must be a power of two");
  if (options.coefficients > options.mel_filters) {
    throw std::invalid_argument("compute_mfcc: more coefficients than mel filters");
  }
  const std::size_t frames = mfcc_frame_count(samples.size(), sample_rate, options);
  if (frames == 0) {
    throw std::invalid_argument("compute_mfcc: audio of " + std::to_string(samples.size()) +
                                " samples is shorter than one " + std::to_string(N) + "-sample window");
  }
  const std::size_t bins = N / 2 + 1;
  const std::size_t M = options.mel_filters, C = options.coefficients;
  const Array fb = mel_filterbank(sample_rate, options);

  std::vector<double> hann(N);
  for (std::size_t n = 0; n < N; ++n) hann[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / N);
  Array dct({C, M});
  for (std::size_t c = 0; c < C; ++c) {
    const double s = c == 0 ? std::sqrt(1.0 / M) : std::sqrt(2.0 / M);
    for (std::size_t m = 0; m < M; ++m) dct.at(c, m) = s * std::cos(std::numbers::pi * c * (m + 0.5) / M);
  }

  std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(N));
  std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(bins));
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(N), in.get(), out.get(), FFTW_ESTIMATE);

  const std::size_t T = target_frames ? target_frames : frames;
  Array result({T, C});
  std::vector<double> mag(bins), logmel(M);
  for (std::size_t t = 0; t < std::min(T, frames); ++t) {
    const std::size_t start = frame_start(t, sample_rate, options.fps);
    for (std::size_t n = 0; n < N; ++n) in.get()[n] = samples[start + n] * hann[n];
    fftw_execute(plan);
    for (std::size_t k = 0; k < bins; ++k) mag[k] = std::hypot(out.get()[k][0], out.get()[k][1]);
    for (std::size_t m = 0; m < M; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < bins; ++k) e += fb.at(m, k) * mag[k];
      logmel[m] = std::log(std::max(e, options.log_floor));
    }
    for (std::size_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (std::size_t m = 0; m < M; ++m) s += dct.at(c, m) * logmel[m];
      result.at(t, c) = s;
    }
  }
  fftw_destroy_plan(plan);
  for (std::size_t t = frames; t < T; ++t)
    for (std::size_t c = 0; c < C; ++c) result.at(t, c) = result.at(frames - 1, c);
  return result;
}

Array append_deltas(const Array& statics) {
  const std::size_t T = statics.rows(), C = statics.cols();
  Array out({T, 2 * C});
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t prev = t == 0 ? 0 : t - 1;
    const std::size_t next = t + 1 < T ? t + 1 : T - 1;
    for (std::size_t c = 0; c < C; ++c) {
      out.at(t, c) = statics.at(t, c);
      out.at(t, C + c) = 0.5 * (statics.at(next, c) - statics.at(prev, c));
    }
  }
  return out;
}

FeatureStats fit_feature_stats(std::span<const AudioFeatureSequence> corpus) {
  if (corpus.empty()) throw std::invalid_argument("fit_feature_stats: empty corpus");
  const std::size_t d = corpus.front().mfcc.cols();
  FeatureStats st{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  double n = 0.0;
  for (const auto& seq : corpus) {
    for (std::size_t t = 0; t < seq.frame_count(); ++t)
      for (std::size_t c = 0; c < d; ++c) st.mean[c] += seq.mfcc.at(t, c);
    n += static_cast<double>(seq.frame_count());
  }
  if (n == 0.0) throw std::invalid_argument("fit_feature_stats: corpus has no frames");
  for (double& m : st.mean) m /= n;
  for (const auto& seq : corpus)
    for (std::size_t t = 0; t < seq.frame_count(); ++t)
      for (std::size_t c = 0; c < d; ++c) {
        const double dv = seq.mfcc.at(t, c) - st.mean[c];
        st.stddev[c] += dv * dv;
      }
  for (double& s : st.stddev) s = std::sqrt(s / n);
  return st;
}

AudioFeatureSequence standardize(const AudioFeatureSequence& seq, const FeatureStats& stats) {
  if (stats.empty()) return seq;
  if (stats.mean.size() != seq.mfcc.cols()) {
    throw std::invalid_argument("standardize: statistics for " + std::to_string(stats.mean.size()) +
                                " channels, features have " + std::to_string(seq.mfcc.cols()));
  }
  AudioFeatureSequence out = seq;
  for (std::size_t t = 0; t < seq.frame_count(); ++t)
    for (std::size_t c = 0; c < stats.mean.size(); ++c) {
      const double sd = stats.stddev[c] < 1e-8 ? 1.0 : stats.stddev[c];
      out.mfcc.at(t, c) = (seq.mfcc.at(t, c) - stats.mean[c]) / sd;
    }
  return out;
}

}  // namespace tsmt::audio
