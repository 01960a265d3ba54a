#pragma once

#include <span>
#include <vector>

#include "tsmt/motion/pose.hpp"

namespace tsmt::motion {

/// Hodrick-Prescott decomposition of one series: input = trend + cyclical.
struct HPFilterResult {
  std::vector<double> trend;
  std::vector<double> cyclical;
  double lambda = 1.0;
};

HPFilterResult hp_filter(std::span<const double> series, double lambda, Warnings* warnings = nullptr);

/// Replaces each of the coordinate channels by its HP trend. Sequences shorter
/// than 3 frames come back unchanged with a warning.
PoseSequence hp_filter_sequence(const PoseSequence& seq, double lambda = 1.0, Warnings* warnings = nullptr);

/// Natural cubic spline through equally spaced samples (spacing 1 in index units).
class NaturalCubicSpline {
 public:
  explicit NaturalCubicSpline(std::vector<double> samples);
  /// Evaluates at fractional index x in [0, n-1].
  double operator()(double x) const;

 private:
  std::vector<double> y_;
  std::vector<double> second_;  // second derivatives at the knots
};

/// Per-coordinate natural cubic spline resampling to `target_fps`. Identical
/// fps returns the input unchanged; fewer than 4 frames falls back to linear
/// interpolation with a warning.
PoseSequence resample_to_fps(const PoseSequence& seq, double target_fps, Warnings* warnings = nullptr);

/// Frame count after resampling a T-frame sequence from `fps` to `target_fps`.
std::size_t resampled_length(std::size_t frames, double fps, double target_fps);

}  // namespace tsmt::motion
