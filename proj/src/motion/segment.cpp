#include "tsmt/motion/segment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "tsmt/numerics/rng.hpp"

namespace tsmt::motion {

const char* split_name(Split s) { return s == Split::kTrain ? "train" : "validation"; }

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  throw std::invalid_argument("unknown split tag '" + name + "'");
}

std::size_t SegmentSet::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(segments.begin(), segments.end(), [s](const Segment& seg) { return seg.split == s; }));
}

std::vector<std::size_t> window_starts(std::size_t frames, std::size_t length, std::size_t stride) {
  if (length == 0 || stride == 0) throw std::invalid_argument("window_starts: length and stride must be positive");
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + length <= frames; s += stride) starts.push_back(s);
  return starts;
}

std::vector<Split> assign_splits(std::span<const std::string> source_ids, double train_ratio, std::uint64_t seed) {
  const std::size_t n = source_ids.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return source_ids[a] < source_ids[b]; });
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());
  std::size_t n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, n ? 1 : 0, n);
  std::vector<Split> out(n, Split::kValidation);
  for (std::size_t i = 0; i < n_train; ++i) out[order[i]] = Split::kTrain;
  return out;
}

SegmentSet segment_dataset(std::span<const SourcePair> sources, const SegmentOptions& options) {
  std::vector<std::string> ids;
  for (const SourcePair& src : sources) {
    if (src.pose.frame_count() != src.audio.frame_count()) {
      throw std::invalid_argument("segment_dataset: source '" + src.id + "' has " +
                                  std::to_string(src.pose.frame_count()) + " pose frames but " +
                                  std::to_string(src.audio.frame_count()) + " audio frames");
    }
    ids.push_back(src.id);
  }
  const std::vector<Split> splits = assign_splits(ids, options.train_ratio, options.seed);
  SegmentSet set;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const SourcePair& src = sources[i];
    const auto starts = window_starts(src.pose.frame_count(), options.length, options.stride);
    if (starts.empty()) {
      set.skipped.push_back(src.id);
      continue;
    }
    for (std::size_t s : starts) {
      Segment seg;
      seg.source_id = src.id;
      seg.start_frame = s;
      seg.split = splits[i];
      seg.pose = src.pose.slice(s, options.length);
      seg.audio = src.audio.slice(s, options.length);
      set.segments.push_back(std::move(seg));
    }
  }
  return set;
}

}  // namespace tsmt::motion
