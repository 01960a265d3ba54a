#include "tsmt/motion/filters.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tsmt/numerics/solvers.hpp"

namespace tsmt::motion {

HPFilterResult hp_filter(std::span<const double> series, double lambda, Warnings* warnings) {
  TrendSolve solved = pentadiagonal_solve(lambda, series);
  if (solved.warning && warnings) {
    warnings->push_back("hp_filter: series of length " + std::to_string(series.size()) + " left unfiltered");
  }
  HPFilterResult r;
  r.lambda = lambda;
  r.trend = std::move(solved.trend);
  r.cyclical.resize(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) r.cyclical[i] = series[i] - r.trend[i];
  return r;
}

PoseSequence hp_filter_sequence(const PoseSequence& seq, double lambda, Warnings* warnings) {
  const std::size_t T = seq.frame_count(), d = seq.dims();
  if (T < 3) {
    if (warnings) warnings->push_back("hp_filter: " + std::to_string(T) + " frames is too short; input unchanged");
    return seq;
  }
  PoseSequence out = seq;
  std::vector<double> channel(T);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t t = 0; t < T; ++t) channel[t] = seq.frames.at(t, c);
    const TrendSolve trend = pentadiagonal_solve(lambda, channel);
    for (std::size_t t = 0; t < T; ++t) out.frames.at(t, c) = trend.trend[t];
  }
  return out;
}

NaturalCubicSpline::NaturalCubicSpline(std::vector<double> samples) : y_(std::move(samples)) {
  const std::size_t n = y_.size();
  second_.assign(n, 0.0);
  if (n < 3) return;
  // Tridiagonal system for interior second derivatives with unit spacing:
  // M[i-1] + 4 M[i] + M[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1]), M[0] = M[n-1] = 0.
  const std::size_t m = n - 2;
  std::vector<double> diag(m, 4.0), rhs(m);
  for (std::size_t i = 0; i < m; ++i) rhs[i] = 6.0 * (y_[i + 2] - 2.0 * y_[i + 1] + y_[i]);
  for (std::size_t i = 1; i < m; ++i) {
    const double w = 1.0 / diag[i - 1];
    diag[i] -= w;
    rhs[i] -= w * rhs[i - 1];
  }
  second_[m] = rhs[m - 1] / diag[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) second_[i + 1] = (rhs[i] - second_[i + 2]) / diag[i];
}

double NaturalCubicSpline::operator()(double x) const {
  const std::size_t n = y_.size();
  if (n == 1) return y_[0];
  x = std::clamp(x, 0.0, static_cast<double>(n - 1));
  std::size_t i = std::min(static_cast<std::size_t>(x), n - 2);
  const double b = x - static_cast<double>(i);
  const double a = 1.0 - b;
  return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * second_[i] + (b * b * b - b) * second_[i + 1]) / 6.0;
}

std::size_t resampled_length(std::size_t frames, double fps, double target_fps) {
  if (frames == 0) return 0;
  const double duration = static_cast<double>(frames - 1) / fps;
  return static_cast<std::size_t>(std::floor(duration * target_fps + 1e-9)) + 1;
}

PoseSequence resample_to_fps(const PoseSequence& seq, double target_fps, Warnings* warnings) {
  if (!(target_fps > 0.0)) throw std::invalid_argument("resample_to_fps: target fps must be positive");
  if (target_fps == seq.fps) return seq;
  const std::size_t T = seq.frame_count(), d = seq.dims();
  const std::size_t out_len = resampled_length(T, seq.fps, target_fps);
  const bool linear = T < 4;
  if (linear && warnings) {
    warnings->push_back("resample_to_fps: " + std::to_string(T) + " frames; using linear interpolation");
  }
  PoseSequence out = seq;
  out.fps = target_fps;
  out.frames = Array({out_len, d});
  std::vector<double> channel(T);
  const double ratio = seq.fps / target_fps;
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t t = 0; t < T; ++t) channel[t] = seq.frames.at(t, c);
    if (linear) {
      for (std::size_t j = 0; j < out_len; ++j) {
        const double x = std::min(static_cast<double>(j) * ratio, static_cast<double>(T - 1));
        const std::size_t i = std::min(static_cast<std::size_t>(x), T > 1 ? T - 2 : 0);
        const double f = x - static_cast<double>(i);
        out.frames.at(j, c) = T == 1 ? channel[0] : (1.0 - f) * channel[i] + f * channel[i + 1];
      }
      continue;
    }
    const NaturalCubicSpline spline(channel);
    for (std::size_t j = 0; j < out_len; ++j) out.frames.at(j, c) = spline(static_cast<double>(j) * ratio);
  }
  return out;
}

}  // namespace tsmt::motion
