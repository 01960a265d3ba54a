#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tsmt/numerics/array.hpp"

namespace tsmt::metrics {

struct BeatScores {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  std::size_t matches = 0;
};

/// Greedy ascending one-to-one matching of sorted frame indices within
/// +-tolerance. Both empty scores 1/1/1; an empty side otherwise scores 0.
BeatScores beat_scores(std::span<const std::size_t> reference, std::span<const std::size_t> candidate,
                       std::size_t tolerance = 2);

/// Maps music beat flags (one per frame) to frame indices.
std::vector<std::size_t> beat_frames(std::span<const std::uint8_t> flags);

struct Moments {
  std::vector<double> mean;
  Array covariance;  // d x d, denominator N - 1
};

/// Sample mean and covariance of an N x d feature matrix (N >= 2).
Moments feature_moments(const Array& features);

/// |mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2}). Round-off negatives
/// down to -1e-8 (relative to the traces) clamp to zero.
double frechet_distance(const Moments& a, const Moments& b);

/// Frechet distance between the Gaussian fits of two feature sets. Appends
/// a warning when either set has no more rows than columns.
double fid(const Array& features_a, const Array& features_b, std::vector<std::string>* warnings = nullptr);

struct Score {
  double value = 0.0;
  bool defined = false;
};

double l2_distance(std::span<const double> a, std::span<const double> b);

/// Mean distance over `pairs` random pairs of distinct sequences drawn from Rng(seed).
Score a_seq_d(std::span<const std::vector<double>> features, std::size_t pairs = 1000, std::uint64_t seed = 0);
/// Mean pairwise distance between chunk features within each sequence,
/// averaged over sequences with at least two chunks.
Score i_seq_d(std::span<const std::vector<std::vector<double>>> chunk_features);
/// Mean pairwise distance within each music group of size >= 2, averaged over groups.
Score s_music_d(std::span<const std::vector<double>> features, std::span<const std::string> groups);

}  // namespace tsmt::metrics
