#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tsmt/audio/features.hpp"
#include "tsmt/motion/pose.hpp"

namespace tsmt::motion {

enum class Split { kTrain, kValidation };

const char* split_name(Split s);
Split parse_split(const std::string& name);

struct SourcePair {
  std::string id;
  PoseSequence pose;
  audio::AudioFeatureSequence audio;
};

struct Segment {
  std::string source_id;
  std::size_t start_frame = 0;
  Split split = Split::kTrain;
  PoseSequence pose;
  audio::AudioFeatureSequence audio;
};

struct SegmentOptions {
  std::size_t length = 480;  // 20 s at 24 fps
  std::size_t stride = 240;  // 10 s overlap
  double train_ratio = 0.8;
  std::uint64_t seed = 0;
};

struct SegmentSet {
  std::vector<Segment> segments;
  std::vector<std::string> skipped;  // sources shorter than one window

  std::size_t count(Split s) const;
};

/// Window start frames for a source of `frames` frames; the trailing
/// remainder shorter than one window is dropped.
std::vector<std::size_t> window_starts(std::size_t frames, std::size_t length, std::size_t stride);

/// Split tag per source id, assigned per source (never per segment) from a
/// seeded shuffle of the sorted ids.
std::vector<Split> assign_splits(std::span<const std::string> source_ids, double train_ratio, std::uint64_t seed);

/// Sliding-window segmentation; pose and audio frame counts must match.
SegmentSet segment_dataset(std::span<const SourcePair> sources, const SegmentOptions& options = {});

}  // namespace tsmt::motion
