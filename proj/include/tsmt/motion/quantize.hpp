#pragma once

#include <span>
#include <vector>

#include "tsmt/motion/pose.hpp"

namespace tsmt::motion {

/// Uniform per-dimension discretisation into `bins` intervals over [min, max].
struct QuantizationSpec {
  std::vector<double> min;
  std::vector<double> max;
  int bins = 300;

  std::size_t dims() const { return min.size(); }
  void validate() const;
  double bin_width(std::size_t dim) const { return (max[dim] - min[dim]) / bins; }
  friend bool operator==(const QuantizationSpec&, const QuantizationSpec&) = default;
};

/// T x dims token matrix (row-major) plus the spec that produced it.
struct QuantizedPoseSequence {
  std::vector<int> tokens;
  std::size_t frames = 0;
  QuantizationSpec spec;
  std::size_t clamped = 0;  // values that fell outside [min, max]

  std::size_t dims() const { return spec.dims(); }
  int at(std::size_t t, std::size_t d) const { return tokens[t * dims() + d]; }
  std::span<const int> frame(std::size_t t) const { return {tokens.data() + t * dims(), dims()}; }
};

/// Corpus min/max per dimension widened by 1% of the range each side;
/// degenerate dimensions get +-1e-3 around their value.
QuantizationSpec fit_quantization_spec(std::span<const PoseSequence> corpus, int bins = 300);

int quantize_value(double v, double lo, double hi, int bins);
double dequantize_value(int token, double lo, double hi, int bins);

QuantizedPoseSequence quantize(const PoseSequence& seq, const QuantizationSpec& spec);
/// Bin centres. Out-of-range tokens throw std::invalid_argument.
PoseSequence dequantize(const QuantizedPoseSequence& q, double fps = kCanonicalFps);

}  // namespace tsmt::motion
