#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tsmt/numerics/array.hpp"

namespace tsmt::audio {

inline constexpr std::size_t kMfccCoefficients = 13;
inline constexpr std::size_t kFeatureDims = 2 * kMfccCoefficients;

/// Per-frame 26-dim MFCC+delta vectors and the binary beat signal.
struct AudioFeatureSequence {
  double fps = 24.0;
  Array mfcc;                       // T x 26
  std::vector<std::uint8_t> beat;   // T flags, 0 or 1

  std::size_t frame_count() const { return beat.size(); }
  void validate() const;
  AudioFeatureSequence slice(std::size_t start, std::size_t count) const;
};

/// Feature cache: CSV, 27 columns (26 features then the 0/1 beat flag), one row per frame.
void write_feature_cache(const std::filesystem::path& path, const AudioFeatureSequence& seq);
AudioFeatureSequence read_feature_cache(const std::filesystem::path& path, double fps = 24.0);

}  // namespace tsmt::audio
