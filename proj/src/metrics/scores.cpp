#include "tsmt/metrics/scores.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "tsmt/numerics/rng.hpp"
#include "tsmt/numerics/solvers.hpp"

namespace tsmt::metrics {

BeatScores beat_scores(std::span<const std::size_t> reference, std::span<const std::size_t> candidate,
                       std::size_t tolerance) {
  BeatScores s;
  if (reference.empty() && candidate.empty()) return {1.0, 1.0, 1.0, 0};
  std::size_t i = 0, j = 0;
  while (i < reference.size() && j < candidate.size()) {
    const std::size_t r = reference[i], c = candidate[j];
    if ((r > c ? r - c : c - r) <= tolerance) {
      ++s.matches;
      ++i;
      ++j;
    } else if (c < r) {
      ++j;
    } else {
      ++i;
    }
  }
  const double m = static_cast<double>(s.matches);
  s.precision = candidate.empty() ? 0.0 : m / static_cast<double>(candidate.size());
  s.recall = reference.empty() ? 0.0 : m / static_cast<double>(reference.size());
  s.f_score = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

std::vector<std::size_t> beat_frames(std::span<const std::uint8_t> flags) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < flags.size(); ++t)
    if (flags[t]) out.push_back(t);
  return out;
}

Moments feature_moments(const Array& x) {
  if (x.rank() != 2 || x.dim(1) == 0) throw std::invalid_argument("feature_moments: need an N x d matrix with d > 0");
  const std::size_t n = x.dim(0), d = x.dim(1);
  if (n < 2) throw std::invalid_argument("feature_moments: need at least 2 samples");
  if (!x.all_finite()) throw std::invalid_argument("feature_moments: non-finite feature");
  Moments m{std::vector<double>(d, 0.0), Array({d, d})};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) m.mean[c] += x.at(i, c);
  for (double& v : m.mean) v /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a) {
      const double da = x.at(i, a) - m.mean[a];
      for (std::size_t b = a; b < d; ++b) m.covariance.at(a, b) += da * (x.at(i, b) - m.mean[b]);
    }
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      m.covariance.at(a, b) /= static_cast<double>(n - 1);
      m.covariance.at(b, a) = m.covariance.at(a, b);
    }
  return m;
}

double frechet_distance(const Moments& a, const Moments& b) {
  const std::size_t d = a.mean.size();
  if (d == 0 || b.mean.size() != d) throw std::invalid_argument("frechet_distance: dimension mismatch");
  double mean_term = 0.0, trace = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    mean_term += (a.mean[c] - b.mean[c]) * (a.mean[c] - b.mean[c]);
    trace += a.covariance.at(c, c) + b.covariance.at(c, c);
  }
  const double value = mean_term + trace - 2.0 * symmetric_sqrt_product(a.covariance, b.covariance);
  if (value < 0.0) {
    if (value < -1e-8 * std::max(1.0, trace + mean_term)) {
      throw std::runtime_error("frechet_distance: negative result " + std::to_string(value));
    }
    return 0.0;
  }
  return value;
}

double fid(const Array& fa, const Array& fb, std::vector<std::string>* warnings) {
  if (fa.rank() != 2 || fb.rank() != 2 || fa.dim(1) != fb.dim(1) || fa.dim(1) == 0) {
    throw std::invalid_argument("fid: feature sets " + shape_string(fa.shape()) + " and " +
                                shape_string(fb.shape()) + " are not comparable");
  }
  if (warnings && (fa.dim(0) <= fa.dim(1) || fb.dim(0) <= fb.dim(1))) {
    warnings->push_back("fid: " + std::to_string(std::min(fa.dim(0), fb.dim(0))) + " samples for " +
                        std::to_string(fa.dim(1)) + " dims; covariance is rank deficient");
  }
  return frechet_distance(feature_moments(fa), feature_moments(fb));
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("l2_distance: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

namespace {

// Mean over unordered pairs; requires at least two items.
double mean_pairwise(std::span<const std::vector<double>> items) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < items.size(); ++i)
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      total += l2_distance(items[i], items[j]);
      ++count;
    }
  return total / static_cast<double>(count);
}

}  // namespace

Score a_seq_d(std::span<const std::vector<double>> features, std::size_t pairs, std::uint64_t seed) {
  if (features.size() < 2 || pairs == 0) return {};
  Rng rng(seed);
  double total = 0.0;
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::size_t i = rng.below(features.size());
    std::size_t j = rng.below(features.size() - 1);
    if (j >= i) ++j;
    total += l2_distance(features[i], features[j]);
  }
  return {total / static_cast<double>(pairs), true};
}

Score i_seq_d(std::span<const std::vector<std::vector<double>>> chunk_features) {
  double total = 0.0;
  std::size_t used = 0;
  for (const auto& chunks : chunk_features) {
    if (chunks.size() < 2) continue;
    total += mean_pairwise(chunks);
    ++used;
  }
  if (used == 0) return {};
  return {total / static_cast<double>(used), true};
}

Score s_music_d(std::span<const std::vector<double>> features, std::span<const std::string> groups) {
  if (features.size() != groups.size()) throw std::invalid_argument("s_music_d: one group label per sequence");
  std::map<std::string, std::vector<std::vector<double>>> by_group;
  for (std::size_t i = 0; i < features.size(); ++i) by_group[groups[i]].push_back(features[i]);
  double total = 0.0;
  std::size_t used = 0;
  for (const auto& [_, items] : by_group) {
    if (items.size() < 2) continue;
    total += mean_pairwise(items);
    ++used;
  }
  if (used == 0) return {};
  return {total / static_cast<double>(used), true};
}

}  // namespace tsmt::metrics
