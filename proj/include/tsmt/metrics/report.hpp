#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsmt/metrics/classifier.hpp"
#include "tsmt/metrics/kinematics.hpp"
#include "tsmt/metrics/scores.hpp"
#include "json.hpp"

namespace tsmt::metrics {

struct EvalSequence {
  std::string id;
  std::string music;         // generations sharing a music id form an S-music-D group
  std::string reference_id;  // ground-truth sequence for motion beats; empty = the reference with the same id
  motion::PoseSequence pose;
  std::optional<std::vector<std::size_t>> music_beats;
};

struct MetricOptions {
  JointLimitTable limits = JointLimitTable::defaults();
  std::size_t beat_tolerance = 2;
  std::size_t diversity_pairs = 1000;
  std::size_t chunk_frames = 120;
  std::uint64_t seed = 0;
};

struct BeatSummary {
  BeatScores mean;  // precision, recall and F averaged over pairs; matches summed
  std::size_t pairs = 0;
  bool defined() const { return pairs > 0; }
};

struct MetricReport {
  std::size_t generated = 0;
  std::size_t reference = 0;
  double authenticity = 0.0;  // mean over generated sequences
  double coherence = 0.0;
  BeatSummary motion_vs_reference;
  BeatSummary music_vs_motion;
  Score fid;
  Score a_seq_d;
  Score i_seq_d;
  Score s_music_d;
  std::size_t feature_dim = 0;
  MetricOptions options;
  std::vector<std::string> warnings;
};

/// Every applicable metric of `generated`; the ones that cannot be computed
/// (no classifier, too few sequences, no groups) are left undefined and noted
/// in `warnings`. Sequences must have 17 joints and at least 3 frames.
MetricReport evaluate(std::span<const EvalSequence> generated, std::span<const EvalSequence> reference,
                      const StyleClassifier* classifier, const MetricOptions& options = {});

nlohmann::json report_to_json(const MetricReport& report);
/// Aligned two-column plain text; undefined scores print as "n/a".
std::string report_table(const MetricReport& report);

}  // namespace tsmt::metrics
