#include "tsmt/motion/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tsmt::motion {

void QuantizationSpec::validate() const {
  if (bins < 2) throw std::invalid_argument("quantization spec: bins must be >= 2");
  if (min.size() != max.size() || min.empty()) {
    throw std::invalid_argument("quantization spec: min/max dimension mismatch");
  }
  for (std::size_t d = 0; d < min.size(); ++d) {
    if (!(max[d] > min[d]) || !std::isfinite(min[d]) || !std::isfinite(max[d])) {
      throw std::invalid_argument("quantization spec: dimension " + std::to_string(d) + " has max <= min");
    }
  }
}

QuantizationSpec fit_quantization_spec(std::span<const PoseSequence> corpus, int bins) {
  if (corpus.empty()) throw std::invalid_argument("fit_quantization_spec: empty corpus");
  const std::size_t d = corpus.front().dims();
  QuantizationSpec spec;
  spec.bins = bins;
  spec.min.assign(d, std::numeric_limits<double>::infinity());
  spec.max.assign(d, -std::numeric_limits<double>::infinity());
  for (const PoseSequence& seq : corpus) {
    if (seq.dims() != d) throw std::invalid_argument("fit_quantization_spec: sequences differ in dimension");
    for (std::size_t t = 0; t < seq.frame_count(); ++t)
      for (std::size_t c = 0; c < d; ++c) {
        spec.min[c] = std::min(spec.min[c], seq.frames.at(t, c));
        spec.max[c] = std::max(spec.max[c], seq.frames.at(t, c));
      }
  }
  for (std::size_t c = 0; c < d; ++c) {
    if (!std::isfinite(spec.min[c])) throw std::invalid_argument("fit_quantization_spec: corpus has no frames");
    const double range = spec.max[c] - spec.min[c];
    if (range == 0.0) {
      spec.min[c] -= 1e-3;
      spec.max[c] += 1e-3;
    } else {
      spec.min[c] -= 0.01 * range;
      spec.max[c] += 0.01 * range;
    }
  }
  spec.validate();
  return spec;
}

int quantize_value(double v, double lo, double hi, int bins) {
  const double scaled = std::floor((v - lo) / (hi - lo) * bins);
  if (!(scaled >= 0.0)) return 0;
  if (scaled >= bins - 1) return bins - 1;
  return static_cast<int>(scaled);
}

double dequantize_value(int token, double lo, double hi, int bins) {
  return lo + (token + 0.5) * (hi - lo) / bins;
}

QuantizedPoseSequence quantize(const PoseSequence& seq, const QuantizationSpec& spec) {
  spec.validate();
  if (seq.dims() != spec.dims()) {
    throw std::invalid_argument("quantize: pose has " + std::to_string(seq.dims()) + " dims, spec has " +
                                std::to_string(spec.dims()));
  }
  QuantizedPoseSequence q;
  q.spec = spec;
  q.frames = seq.frame_count();
  q.tokens.resize(q.frames * spec.dims());
  for (std::size_t t = 0; t < q.frames; ++t)
    for (std::size_t c = 0; c < spec.dims(); ++c) {
      const double v = seq.frames.at(t, c);
      if (v < spec.min[c] || v > spec.max[c]) ++q.clamped;
      q.tokens[t * spec.dims() + c] = quantize_value(v, spec.min[c], spec.max[c], spec.bins);
    }
  return q;
}

PoseSequence dequantize(const QuantizedPoseSequence& q, double fps) {
  const std::size_t d = q.dims();
  if (q.tokens.size() != q.frames * d) throw std::invalid_argument("dequantize: token count mismatch");
  Array frames({q.frames, d});
  for (std::size_t t = 0; t < q.frames; ++t)
    for (std::size_t c = 0; c < d; ++c) {
      const int tok = q.tokens[t * d + c];
      if (tok < 0 || tok >= q.spec.bins) {
        throw std::invalid_argument("dequantize: token " + std::to_string(tok) + " out of range at frame " +
                                    std::to_string(t));
      }
      frames.at(t, c) = dequantize_value(tok, q.spec.min[c], q.spec.max[c], q.spec.bins);
    }
  PoseSequence out;
  out.fps = fps;
  out.joints = d == kDims ? default_joint_names() : std::vector<std::string>(d / 3);
  out.frames = std::move(frames);
  return out;
}

}  // namespace tsmt::motion
